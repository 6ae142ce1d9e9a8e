#include <gtest/gtest.h>

#include <cmath>

#include "nlc/field.hpp"
#include "test_support.hpp"

using namespace nlc;
using nlc::testing::max_abs_diff;
using nlc::testing::random_field;

namespace {

const Grid kGrid{};

double x_of(const Grid& g, std::size_t p, int a) { return grid_coordinate(g, p, a); }

}  // namespace

TEST(Grid, RejectsBadPointCount) {
  EXPECT_THROW(Grid::make(2, 24, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid::make(2, 8, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid::make(4, 32, 1.0), std::invalid_argument);
  try {
    Grid::make(2, 24, 1.0);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("points_per_dim"), std::string::npos);
  }
}

TEST(Grid, WavenumbersFollowPeriod) {
  auto lat = lattice(kGrid);
  const std::size_t p = flat_index(kGrid, {3, -5, 0});
  EXPECT_DOUBLE_EQ(lat->xi[0][p], kTwoPi * 3 / kGrid.period);
  EXPECT_DOUBLE_EQ(lat->xi[1][p], kTwoPi * -5 / kGrid.period);
  EXPECT_EQ(lat->mirror[lat->mirror[p]], p);
}

TEST(Transform, ZeroFieldIsZero) {
  SpectralField f(kGrid, 2);
  for (double v : to_physical(f).values) EXPECT_EQ(v, 0.0);
}

TEST(Transform, UnitCosineMode) {
  SpectralField f(kGrid, 1);
  add_cosine_mode(f, 0, {1, 0, 0}, 1.0);
  const auto p = to_physical(f);
  for (std::size_t i = 0; i < p.values.size(); ++i)
    EXPECT_NEAR(p.values[i], std::cos(kTwoPi * x_of(kGrid, i, 0) / kGrid.period), 1e-14);
}

TEST(Transform, RoundTripRandom) {
  for (const Grid& g : {kGrid, Grid::make(3, 16, 5.0)}) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(-1, 1);
    PhysicalField p(g, 3);
    for (auto& v : p.values) v = ud(rng);
    const auto back = to_physical(to_spectral(p));
    double scale = 0.0;
    for (double v : p.values) scale = std::max(scale, std::abs(v));
    EXPECT_LT(max_abs_diff(back, p) / scale, 1e-12);
  }
}

TEST(Transform, NonFiniteRejected) {
  SpectralField f(kGrid, 1);
  f.component(0)[3] = std::nan("");
  EXPECT_THROW(to_physical(f), std::domain_error);
}

TEST(Derivative, ConstantGivesZero) {
  SpectralField f(kGrid, 1);
  f.component(0)[0] = 2.5;
  for (double v : to_physical(derivative(f, 1)).values) EXPECT_EQ(v, 0.0);
}

TEST(Derivative, SineToCosine) {
  SpectralField f(kGrid, 1);
  add_cosine_mode(f, 0, {1, 0, 0}, 1.0, -std::numbers::pi / 2);  // sin
  const auto p = to_physical(derivative(f, 0, 1));
  const double k = kTwoPi / kGrid.period;
  for (std::size_t i = 0; i < p.values.size(); ++i)
    EXPECT_NEAR(p.values[i], k * std::cos(k * x_of(kGrid, i, 0)), 1e-14);
}

TEST(Derivative, SecondOrderEqualsTwiceFirst) {
  const auto f = random_field(kGrid, 2, 11, 31);
  for (int a = 0; a < 2; ++a) {
    const auto once = derivative(derivative(f, a), a);
    const auto direct = derivative(f, a, 2);
    EXPECT_EQ(max_abs_diff(once, direct), 0.0);
    EXPECT_LT(hermitian_defect(direct), 1e-15);
  }
  EXPECT_THROW(derivative(f, 2), std::invalid_argument);
}

TEST(StressTensor, ConstantDirectorGivesZero) {
  SpectralField d(kGrid, 3);
  d.component(2)[0] = 1.0;
  EXPECT_EQ(stress_tensor(d).max_coefficient(), 0.0);
}

TEST(StressTensor, PlanarRotationOracle) {
  // d = (cos th, sin th, 0), th = sin(k x1): (grad d (.) grad d)_11 = (th')^2.
  const double k = kTwoPi / kGrid.period;
  PhysicalField p(kGrid, 3);
  for (std::size_t i = 0; i < kGrid.size(); ++i) {
    const double th = std::sin(k * x_of(kGrid, i, 0));
    p.component(0)[i] = std::cos(th);
    p.component(1)[i] = std::sin(th);
  }
  const auto T = to_physical(stress_tensor(to_spectral(p)));
  for (std::size_t i = 0; i < kGrid.size(); ++i) {
    const double dth = k * std::cos(k * x_of(kGrid, i, 0));
    EXPECT_NEAR(T.component(0)[i], dth * dth, 1e-12);
    EXPECT_NEAR(T.component(1)[i], 0.0, 1e-12);
    EXPECT_NEAR(T.component(3)[i], 0.0, 1e-12);
  }
}

TEST(StressTensor, SymmetricPositiveSemidefinite) {
  const auto d = random_field(kGrid, 3, 5, 10);
  const auto T = to_physical(stress_tensor(d));
  std::mt19937 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, kGrid.size() - 1);
  for (int s = 0; s < 100; ++s) {
    const std::size_t i = pick(rng);
    const double a = T.component(0)[i], b = T.component(1)[i], c = T.component(2)[i], e = T.component(3)[i];
    EXPECT_EQ(b, c);
    EXPECT_GE(a, -1e-14);
    EXPECT_GE(e, -1e-14);
    EXPECT_GE(a * e - b * c, -1e-12 * std::max(1.0, a * e));
  }
}
