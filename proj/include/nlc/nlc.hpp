#pragma once

#include "nlc/config.hpp"
#include "nlc/decay.hpp"
#include "nlc/fft.hpp"
#include "nlc/field.hpp"
#include "nlc/function_spaces.hpp"
#include "nlc/grid.hpp"
#include "nlc/heat.hpp"
#include "nlc/initial_data.hpp"
#include "nlc/io.hpp"
#include "nlc/littlewood_paley.hpp"
#include "nlc/parallel.hpp"
#include "nlc/solver.hpp"
#include "nlc/trajectory.hpp"
#include "nlc/verify.hpp"
