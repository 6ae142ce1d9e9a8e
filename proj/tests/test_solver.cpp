#include <gtest/gtest.h>

#include <cmath>

#include "nlc/initial_data.hpp"
#include "nlc/solver.hpp"
#include "test_support.hpp"

using namespace nlc;
using nlc::testing::max_abs_diff;
using nlc::testing::random_field;

namespace {

const Grid kGrid{};
const Grid kSmall = Grid::make(2, 32, kTwoPi * 4);

SpectralField constant_director(const Grid& g) {
  SpectralField d(g, 3);
  d.component(2)[0] = 1.0;
  return d;
}

SpectralField solenoidal(const Grid& g, unsigned seed, int kmax, double amp) {
  SpectralField u = leray_project(random_field(g, 2, seed, kmax));
  return (amp / to_physical(u).max_abs()) * u;
}

SpectralField unit_director(const Grid& g, unsigned seed, int kmax, double amp) {
  SpectralField w = random_field(g, 3, seed, kmax);
  PhysicalField p = to_physical((amp / to_physical(w).max_abs()) * w);
  for (auto& v : p.component(2)) v += 1.0;
  const auto m = p.magnitude();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < m.size(); ++i) p.component(c)[i] /= m[i];
  return to_spectral(p);
}

// Independent vorticity-streamfunction integrator for 2D Navier-Stokes with the same
// integrating-factor RK4 and 2/3-rule masking.
struct VorticityOracle {
  Grid g;
  std::shared_ptr<const LatticeTables> lat;
  explicit VorticityOracle(const Grid& grid) : g(grid), lat(lattice(grid)) {}

  std::vector<cplx> mask(std::vector<cplx> w) const {
    for (std::size_t p = 0; p < w.size(); ++p)
      if (!lat->dealias[p]) w[p] = 0.0;
    return w;
  }
  std::vector<double> phys(const std::vector<cplx>& c) const {
    std::vector<cplx> b = c;
    fft_plan(g).backward(b);
    std::vector<double> r(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = b[i].real();
    return r;
  }
  std::vector<cplx> spec(const std::vector<double>& r) const {
    std::vector<cplx> b(r.begin(), r.end());
    fft_plan(g).forward(b);
    for (auto& v : b) v /= static_cast<double>(b.size());
    return b;
  }
  std::vector<cplx> rhs(const std::vector<cplx>& w_in) const {
    const auto w = mask(w_in);
    std::vector<cplx> u0(w.size()), u1(w.size()), wx(w.size()), wy(w.size());
    for (std::size_t p = 1; p < w.size(); ++p) {
      const cplx psi = w[p] / lat->norm2[p];
      u0[p] = cplx(0, lat->xi[1][p]) * psi;
      u1[p] = -cplx(0, lat->xi[0][p]) * psi;
      wx[p] = cplx(0, lat->xi[0][p]) * w[p];
      wy[p] = cplx(0, lat->xi[1][p]) * w[p];
    }
    const auto a = phys(u0), b = phys(u1), c = phys(wx), d = phys(wy);
    std::vector<double> adv(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) adv[i] = -(a[i] * c[i] + b[i] * d[i]);
    return mask(spec(adv));
  }
  std::vector<cplx> step(const std::vector<cplx>& w, double dt) const {
    const std::size_t n = w.size();
    std::vector<double> E(n), E2(n);
    for (std::size_t p = 0; p < n; ++p) {
      E[p] = std::exp(-lat->norm2[p] * dt);
      E2[p] = std::exp(-lat->norm2[p] * dt / 2);
    }
    const auto a = rhs(w);
    std::vector<cplx> t(n);
    for (std::size_t p = 0; p < n; ++p) t[p] = E2[p] * (w[p] + dt / 2 * a[p]);
    const auto b = rhs(t);
    for (std::size_t p = 0; p < n; ++p) t[p] = E2[p] * w[p] + dt / 2 * b[p];
    const auto c = rhs(t);
    for (std::size_t p = 0; p < n; ++p) t[p] = E[p] * w[p] + dt * E2[p] * c[p];
    const auto d = rhs(t);
    std::vector<cplx> out(n);
    for (std::size_t p = 0; p < n; ++p)
      out[p] = E[p] * w[p] + dt / 6 * (E[p] * a[p] + 2.0 * E2[p] * (b[p] + c[p]) + d[p]);
    return out;
  }
};

}  // namespace

TEST(Leray, KillsGradientsKeepsSolenoidal) {
  const auto phi = random_field(kGrid, 1, 1, 20);
  EXPECT_LT(leray_project(gradient(phi)).max_coefficient(), 1e-15);
  const auto u = solenoidal(kGrid, 2, 20, 1.0);
  EXPECT_LT(max_abs_diff(leray_project(u), u), 1e-15);
  const auto v = random_field(kGrid, 2, 3, 31);
  const auto pv = leray_project(v);
  EXPECT_LT(divergence_defect(pv), 1e-14);
  EXPECT_LT(max_abs_diff(leray_project(pv), pv), 1e-15);
}

TEST(Leray, SymbolOnAxisMode) {
  SpectralField e1(kGrid, 2), e2(kGrid, 2);
  add_cosine_mode(e1, 0, {0, 1, 0}, 1.0);
  add_cosine_mode(e2, 1, {0, 1, 0}, 1.0);
  EXPECT_EQ(max_abs_diff(leray_project(e1), e1), 0.0);
  EXPECT_EQ(leray_project(e2).max_coefficient(), 0.0);
  EXPECT_THROW(leray_project(SpectralField(kGrid, 3)), std::invalid_argument);
}

TEST(MomentumRhs, VanishesAtRest) {
  EXPECT_EQ(momentum_rhs(SpectralField(kGrid, 2), constant_director(kGrid)).max_coefficient(), 0.0);
}

TEST(MomentumRhs, MatchesAdvectiveFormForConstantDirector) {
  // -P[(u . grad) u] computed in advective form with a hand-written projection.
  const auto u = solenoidal(kGrid, 5, 10, 1.0);
  const auto got = momentum_rhs(u, constant_director(kGrid));
  const auto up = to_physical(u);
  const auto du0 = to_physical(derivative(u, 0)), du1 = to_physical(derivative(u, 1));
  PhysicalField adv(kGrid, 2);
  for (int i = 0; i < 2; ++i)
    for (std::size_t p = 0; p < kGrid.size(); ++p)
      adv.component(i)[p] = up.component(0)[p] * du0.component(i)[p] + up.component(1)[p] * du1.component(i)[p];
  SpectralField a = to_spectral(adv);
  auto lat = lattice(kGrid);
  SpectralField expect(kGrid, 2);
  for (std::size_t p = 1; p < kGrid.size(); ++p) {
    if (!lat->dealias[p]) continue;
    const double x0 = lat->xi[0][p], x1 = lat->xi[1][p], r2 = lat->norm2[p];
    const cplx a0 = a.component(0)[p], a1 = a.component(1)[p];
    expect.component(0)[p] = -((1 - x0 * x0 / r2) * a0 - x0 * x1 / r2 * a1);
    expect.component(1)[p] = -(-x0 * x1 / r2 * a0 + (1 - x1 * x1 / r2) * a1);
  }
  EXPECT_LT(max_abs_diff(got, expect), 1e-10 * got.max_coefficient());
  EXPECT_LT(divergence_defect(got), 1e-10);
}

TEST(DirectorRhs, VanishesForConstantDirector) {
  EXPECT_EQ(director_rhs(SpectralField(kGrid, 2), constant_director(kGrid)).max_coefficient(), 0.0);
}

TEST(DirectorRhs, PlanarWindingClosedForm) {
  // d = (cos(a x1), sin(a x1), 0): |grad d|^2 = a^2, forcing = a^2 d.
  const int k = 3;
  const double a = k * kGrid.fundamental();
  SpectralField d(kGrid, 3);
  add_cosine_mode(d, 0, {k, 0, 0}, 1.0);
  add_cosine_mode(d, 1, {k, 0, 0}, 1.0, -std::numbers::pi / 2);
  const auto f = director_rhs(SpectralField(kGrid, 2), d);
  EXPECT_LT(max_abs_diff(f, a * a * d), 1e-14);
}

TEST(DirectorRhs, TangentialPartOrthogonalToDirector) {
  // For |d| = 1 with d . d_i d = 0 exactly: forcing . d = |grad d|^2 pointwise.
  const double a = 2 * kGrid.fundamental(), b = 1 * kGrid.fundamental();
  PhysicalField dp(kGrid, 3);
  for (std::size_t p = 0; p < kGrid.size(); ++p) {
    const double th = a * grid_coordinate(kGrid, p, 0) + b * grid_coordinate(kGrid, p, 1);
    dp.component(0)[p] = std::cos(th);
    dp.component(1)[p] = std::sin(th);
  }
  const auto d = to_spectral(dp);
  const auto u = solenoidal(kGrid, 8, 6, 0.5);
  const auto f = to_physical(director_rhs(u, d, false));
  double worst = 0.0;
  for (std::size_t p = 0; p < kGrid.size(); ++p) {
    double dot = 0.0;
    for (int c = 0; c < 3; ++c) dot += f.component(c)[p] * dp.component(c)[p];
    worst = std::max(worst, std::abs(dot - (a * a + b * b)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Step, ZeroDataStaysZero) {
  auto s = make_state(SpectralField(kGrid, 2), constant_director(kGrid));
  SolverConfig cfg;
  for (int i = 0; i < 5; ++i) s = step(s, cfg);
  EXPECT_EQ(s.u.max_coefficient(), 0.0);
  EXPECT_EQ(max_abs_diff(s.d, constant_director(kGrid)), 0.0);
}

TEST(Step, LinearRegimeSingleMode) {
  SpectralField u(kGrid, 2);
  add_cosine_mode(u, 0, {0, 5, 0}, 1e-8);
  auto s = make_state(u, constant_director(kGrid));
  SolverConfig cfg;
  s = advance_to(s, cfg, 2.0);
  const std::size_t p = flat_index(kGrid, {0, 5, 0});
  const double expect = 0.5e-8 * std::exp(-25 * std::pow(kGrid.fundamental(), 2) * 2.0);
  EXPECT_NEAR(s.u.component(0)[p].real() / expect, 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(s.t, 2.0);
}

TEST(Step, ConfigValidation) {
  SolverConfig cfg;
  cfg.cfl_safety = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epsilon_target = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Step, NonFiniteHaltsWithLastGoodState) {
  auto s = make_state(solenoidal(kSmall, 1, 4, 1.0), constant_director(kSmall));
  SolverConfig cfg;
  s = step_fixed(s, cfg, 0.01);
  SolverState bad = s;
  bad.u.component(0)[1] = std::nan("");
  try {
    step_fixed(bad, cfg, 0.01);
    FAIL() << "expected halt";
  } catch (const SolverHalt& h) {
    EXPECT_EQ(h.last_good().step_count, 1);
  } catch (const std::domain_error&) {
    SUCCEED();
  }
}

TEST(Step, IfRk4SelfConvergenceOrder) {
  SolverConfig cfg;
  cfg.renormalize_director = false;
  const auto u0 = solenoidal(kSmall, 11, 5, 1.5);
  const auto d0 = unit_director(kSmall, 12, 5, 0.8);
  auto run = [&](double dt) {
    auto s = make_state(u0, d0);
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < n; ++i) s = step_fixed(s, cfg, dt);
    return s;
  };
  const double dt = 0.2;
  const auto ref = run(dt / 8);
  const auto a = run(dt), b = run(dt / 2);
  const double ea = max_abs_diff(a.u, ref.u) + max_abs_diff(a.d, ref.d);
  const double eb = max_abs_diff(b.u, ref.u) + max_abs_diff(b.d, ref.d);
  const double order = std::log2(ea / eb);
  EXPECT_GT(ea, 1e-10);
  EXPECT_GE(order, 3.5) << "errors " << ea << " " << eb;
}

TEST(Step, ReducesToNavierStokesForConstantDirector) {
  const auto u0 = solenoidal(kGrid, 21, 10, 1.0);
  SolverConfig cfg;
  auto s = make_state(u0, constant_director(kGrid));
  VorticityOracle oracle(kGrid);
  std::vector<cplx> w(kGrid.size());
  {
    const auto d0 = derivative(slice_components(u0, 1, 1), 0), d1 = derivative(slice_components(u0, 0, 1), 1);
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = d0.component(0)[p] - d1.component(0)[p];
  }
  for (int i = 0; i < 100; ++i) {
    const double dt = choose_dt(s, cfg);
    s = step_fixed(s, cfg, dt);
    w = oracle.step(w, dt);
    ASSERT_LT(s.diagnostics.max_divergence, 1e-10);
  }
  auto lat = lattice(kGrid);
  double err = 0.0, scale = 0.0;
  for (std::size_t p = 1; p < w.size(); ++p) {
    const cplx psi = w[p] / lat->norm2[p];
    const cplx v0 = cplx(0, lat->xi[1][p]) * psi, v1 = -cplx(0, lat->xi[0][p]) * psi;
    err = std::max({err, std::abs(v0 - s.u.component(0)[p]), std::abs(v1 - s.u.component(1)[p])});
    scale = std::max({scale, std::abs(v0), std::abs(v1)});
  }
  EXPECT_LT(err / scale, 1e-8);
  EXPECT_EQ(max_abs_diff(s.d, constant_director(kGrid)), 0.0);
}

TEST(Step, SphereDriftWithoutRenormalization) {
  SolverConfig cfg;
  cfg.renormalize_director = false;
  auto s = make_state(solenoidal(kGrid, 31, 6, 0.05), unit_director(kGrid, 32, 6, 0.05));
  const double start = s.diagnostics.sphere_deviation;
  s = advance_to(s, cfg, 8.0);
  EXPECT_LT(s.diagnostics.sphere_deviation, 1e-4);
  EXPECT_LT(start, 1e-12);
}

TEST(Step, RenormalizationKeepsUnitLength) {
  SolverConfig cfg;
  auto s = make_state(solenoidal(kGrid, 33, 6, 0.2), unit_director(kGrid, 34, 6, 0.3));
  s = advance_to(s, cfg, 1.0);
  EXPECT_LT(s.diagnostics.sphere_deviation, cfg.sphere_tol);
}

TEST(Step, ScalingConsistency) {
  // (u, d)(x, t) -> (2 u(2x, 4t), d(2x, 4t)): the dilated run to T/4 matches the dilated base run at T.
  const Grid g = kGrid;
  const auto u0 = solenoidal(g, 41, 5, 0.05);
  const auto d0 = unit_director(g, 42, 5, 0.05);
  auto dilate = [&](const SpectralField& f, double amp) {
    SpectralField out(g, f.components());
    auto lat = lattice(g);
    for (int c = 0; c < f.components(); ++c)
      for (std::size_t p = 0; p < g.size(); ++p) {
        const int k0 = lat->k[0][p], k1 = lat->k[1][p];
        if (std::abs(2 * k0) >= g.points / 2 || std::abs(2 * k1) >= g.points / 2) continue;
        out.component(c)[flat_index(g, {2 * k0, 2 * k1, 0})] = amp * f.component(c)[p];
      }
    return out;
  };
  SolverConfig cfg;
  cfg.dealias = false;
  auto base = make_state(u0, d0);
  auto scaled = make_state(dilate(u0, 2.0), dilate(d0, 1.0));
  const double dt = 0.05, T = 2.0;
  for (int i = 0; i < static_cast<int>(T / dt); ++i) {
    base = step_fixed(base, cfg, dt);
    scaled = step_fixed(scaled, cfg, dt / 4);
  }
  const auto P = build_partition(g);
  const BesovIndex idx{-1.0, Lebesgue::inf, Lebesgue::inf};
  const SpectralField expect_u = dilate(base.u, 2.0);
  const double rel = besov_norm(scaled.u - expect_u, P, idx) / besov_norm(expect_u, P, idx);
  EXPECT_LT(rel, 1e-3);
}

TEST(TimeDerivative, HeatFlowFirstOrderIsLaplacian) {
  SolverConfig cfg;
  cfg.nonlinearity = false;
  auto s = make_state(solenoidal(kGrid, 51, 10, 0.1), unit_director(kGrid, 52, 10, 0.1));
  EXPECT_EQ(max_abs_diff(time_derivative(s, cfg, 1, 0, DerivedField::velocity), laplacian(s.u)), 0.0);
  EXPECT_THROW(time_derivative(s, cfg, 3, 0, DerivedField::velocity), std::invalid_argument);
}

TEST(TimeDerivative, MatchesCentredDifferences) {
  SolverConfig cfg;
  cfg.renormalize_director = false;
  auto s0 = make_state(solenoidal(kSmall, 61, 5, 1.0), unit_director(kSmall, 62, 5, 0.6));
  s0 = advance_to(s0, cfg, 0.5);
  for (int k = 1; k <= 2; ++k) {
    std::vector<double> errs;
    for (double h : {0.02, 0.01}) {
      // Centred differences about plus = s0 + h, all states from the same integrator.
      const auto plus = step_fixed(s0, cfg, h);
      const auto plus2 = step_fixed(plus, cfg, h);
      const auto exact = time_derivative(plus, cfg, k, 0, DerivedField::velocity);
      SpectralField fd;
      if (k == 1) {
        fd = (1.0 / (2 * h)) * (plus2.u - s0.u);
      } else {
        fd = (1.0 / (h * h)) * (plus2.u - 2.0 * plus.u + s0.u);
      }
      errs.push_back(max_abs_diff(fd, exact) / exact.max_coefficient());
      const auto exact_g = time_derivative(plus, cfg, k, 1, DerivedField::director_gradient);
      SpectralField fdg = k == 1 ? (1.0 / (2 * h)) * (gradient(gradient(plus2.d)) - gradient(gradient(s0.d)))
                                 : (1.0 / (h * h)) * (gradient(gradient(plus2.d)) - 2.0 * gradient(gradient(plus.d)) +
                                                      gradient(gradient(s0.d)));
      EXPECT_LT(max_abs_diff(fdg, exact_g) / exact_g.max_coefficient(), 1e-2);
    }
    EXPECT_LT(errs[1], 1e-3) << "k = " << k;
    EXPECT_GT(errs[0] / errs[1], 3.0) << "k = " << k;
  }
}

TEST(Picard, ZeroDataGivesZeroIterates) {
  SolverConfig cfg;
  const auto rep = picard_solve(SpectralField(kSmall, 2), SpectralField(kSmall, 3), 1.0, 3, cfg, 8);
  for (double d : rep.distances) EXPECT_EQ(d, 0.0);
  EXPECT_FALSE(rep.aborted);
}

TEST(Picard, FirstIterateIsHeatFlow) {
  SolverConfig cfg;
  const auto u0 = solenoidal(kSmall, 71, 5, 0.3);
  const auto d0 = unit_director(kSmall, 72, 5, 0.2);
  const auto rep = picard_solve(u0, d0, 1.0, 1, cfg, 8);
  ASSERT_EQ(rep.series.size(), 9u);
  for (const auto& s : rep.series) {
    EXPECT_LT(max_abs_diff(s.u, heat_semigroup(u0, s.t)), 1e-15);
    EXPECT_LT(max_abs_diff(s.d, heat_semigroup(d0, s.t)), 1e-15);
  }
}

TEST(Picard, SmallDataContracts) {
  SolverConfig cfg;
  const auto cc = CarlesonConfig::standard(kGrid, 4);
  const auto data = make_initial_data(kGrid, {}, 0.02, 7, cc);
  const auto rep = picard_solve(data.u0, data.d0, 4.0, 6, cfg, 40);
  ASSERT_FALSE(rep.aborted);
  ASSERT_GE(rep.ratios.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(rep.ratios[i], 0.5) << "iterate " << i + 2;
}

TEST(Picard, ConvergesToSteppedSolution) {
  SolverConfig cfg;
  cfg.renormalize_director = false;
  const auto u0 = solenoidal(kSmall, 81, 4, 0.2);
  const auto d0 = unit_director(kSmall, 82, 4, 0.2);
  const auto rep = picard_solve(u0, d0, 1.0, 12, cfg, 200);
  auto s = make_state(u0, d0);
  for (int i = 0; i < 200; ++i) s = step_fixed(s, cfg, 0.005);
  EXPECT_LT(max_abs_diff(rep.series.back().u, s.u) / s.u.max_coefficient(), 1e-4);
}

TEST(InitialData, ScaledToTargetNorms) {
  const auto cc = CarlesonConfig::standard(kGrid, 4);
  for (auto kind : {InitialKind::gaussian, InitialKind::critical}) {
    InitialDataConfig cfg;
    cfg.kind = kind;
    const double eps = 0.04;
    const auto data = make_initial_data(kGrid, cfg, eps, 3, cc);
    EXPECT_NEAR(bmo_minus1_norm(data.u0, cc), eps / 2, 1e-9) << to_string(kind);
    EXPECT_NEAR(bmo_seminorm(data.d0, cc), eps / 2, 1e-6) << to_string(kind);
    EXPECT_LT(divergence_defect(data.u0), 1e-14);
    EXPECT_LT(sphere_deviation(data.d0), 1e-12);
    EXPECT_GT(data.delta, 0.0);
  }
}

TEST(InitialData, DeterministicInSeed) {
  const auto cc = CarlesonConfig::standard(kSmall, 2);
  InitialDataConfig cfg;
  const auto a = make_initial_data(kSmall, cfg, 0.02, 9, cc), b = make_initial_data(kSmall, cfg, 0.02, 9, cc);
  const auto c = make_initial_data(kSmall, cfg, 0.02, 10, cc);
  EXPECT_EQ(max_abs_diff(a.u0, b.u0), 0.0);
  EXPECT_EQ(max_abs_diff(a.d0, b.d0), 0.0);
  EXPECT_GT(max_abs_diff(a.u0, c.u0), 0.0);
  cfg.sources = 0;
  EXPECT_THROW(make_initial_data(kSmall, cfg, 0.02, 9, cc), std::invalid_argument);
  EXPECT_THROW(make_initial_data(kSmall, {}, 0.0, 9, cc), std::invalid_argument);
}
