#pragma once

// Property suite behind `nlc verify`: each property returns a measured value,
// the threshold it is held to and a pass flag.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "nlc/function_spaces.hpp"
#include "nlc/heat.hpp"
#include "nlc/initial_data.hpp"
#include "nlc/littlewood_paley.hpp"
#include "nlc/parallel.hpp"
#include "nlc/solver.hpp"
#include "nlc/trajectory.hpp"

namespace nlc {

struct PropertyResult {
  std::string name;
  std::string area;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<", "<=", ">=", "=="
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  Grid grid;
  Grid kernel_grid = Grid::make(2, 256, kTwoPi * 16);
  bool renormalize_partition = true;  // false injects the unnormalized-partition fault
  int threads = 1;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool pass = false;
};

namespace detail {

inline PropertyResult judge(std::string name, std::string area, double value, std::string rel, double thr,
                            std::string detail = {}) {
  bool ok = false;
  if (rel == "<") ok = value < thr;
  else if (rel == "<=") ok = value <= thr;
  else if (rel == ">=") ok = value >= thr;
  else if (rel == "==") ok = value == thr;
  return {std::move(name), std::move(area), value, thr, std::move(rel), ok, std::move(detail)};
}

/// Gaussian noise restricted to |k_a| <= kmax, mean removed.
inline SpectralField band_noise(const Grid& g, int comps, std::uint64_t seed, int kmax) {
  std::mt19937_64 rng(seed);
  SpectralField f = white_noise(g, comps, rng);
  auto lat = lattice(g);
  for (int c = 0; c < comps; ++c) {
    auto comp = f.component(c);
    for (std::size_t p = 0; p < comp.size(); ++p) {
      bool keep = p != 0;
      for (int a = 0; a < g.n_dims; ++a) keep = keep && std::abs(lat->k[a][p]) <= kmax;
      if (!keep) comp[p] = 0.0;
    }
  }
  return f;
}

inline SpectralField solenoidal_noise(const Grid& g, std::uint64_t seed, int kmax, double amp) {
  SpectralField u = leray_project(band_noise(g, g.n_dims, seed, kmax));
  return (amp / to_physical(u).max_abs()) * u;
}

inline SpectralField unit_director_noise(const Grid& g, std::uint64_t seed, int kmax, double amp) {
  SpectralField w = band_noise(g, 3, seed, kmax);
  PhysicalField p = to_physical((amp / to_physical(w).max_abs()) * w);
  for (auto& v : p.component(2)) v += 1.0;
  const auto m = p.magnitude();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < m.size(); ++i) p.component(c)[i] /= m[i];
  return to_spectral(p);
}

inline SpectralField vertical_director(const Grid& g) {
  SpectralField d(g, 3);
  d.component(2)[0] = 1.0;
  return d;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0.0 ? *hi / *lo : INFINITY;
}

// --- harmonic analysis --------------------------------------------------

inline PropertyResult partition_of_unity(const DyadicPartition& P) {
  const Grid& g = P.grid;
  auto lat = lattice(g);
  const double lo = std::ldexp(0.75, P.j_min), hi = std::ldexp(8.0 / 3.0, P.j_max);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = lat->norm[i];
    if (r == 0.0 || r < lo || r > hi) continue;
    double s = 0.0;
    for (int j = P.j_min; j <= P.j_max; ++j) s += P.shell(j)[i];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return judge("partition_of_unity", "littlewood_paley", worst, "<", 1e-10, "max |sum_j phi_j - 1| on the covered band");
}

inline PropertyResult block_orthogonality(const DyadicPartition& P) {
  const auto f = band_noise(P.grid, 1, 2, P.grid.points / 2);
  double worst = 0.0;
  for (int j = P.j_min; j <= P.j_max; ++j)
    for (int k = P.j_min; k <= P.j_max; ++k)
      if (std::abs(j - k) >= 2) worst = std::max(worst, block(block(f, P, j), P, k).max_coefficient());
  return judge("block_orthogonality", "littlewood_paley", worst, "==", 0.0, "max |Delta_j Delta_k f|, |j-k| >= 2");
}

inline PropertyResult bernstein_stability(const DyadicPartition& P) {
  const auto f = band_noise(P.grid, 1, 9, P.grid.points / 2);
  std::vector<double> ratios;
  for (int j = P.j_min; j <= P.j_max; ++j) {
    const auto b = block(f, P, j);
    ratios.push_back(lebesgue_norm(to_physical(gradient(b)), Lebesgue::inf) /
                     (std::ldexp(1.0, j) * lebesgue_norm(to_physical(b), Lebesgue::inf)));
  }
  return judge("bernstein_stability", "littlewood_paley", spread(ratios), "<=", 2.0,
               "max/min over shells of ||grad Delta_j f|| / (2^j ||Delta_j f||)");
}

inline PropertyResult block_heat_decay(const DyadicPartition& P) {
  const auto f = band_noise(P.grid, 1, 77, P.grid.points / 2);
  std::vector<double> cs;
  for (int j = P.j_min + 1; j <= P.j_max - 1; ++j) cs.push_back(fit_block_heat_decay(f, P, j).c);
  return judge("block_heat_decay", "heat", spread(cs) - 1.0, "<=", 0.1,
               "relative spread of rate / 4^j over mid shells");
}

inline PropertyResult kernel_bound(const DyadicPartition& P, KernelVariant v) {
  std::vector<KernelSpec> specs;
  switch (v) {
    case KernelVariant::g: specs = {{KernelVariant::g, 0, 1, 0, 1, 0}}; break;
    case KernelVariant::g1: specs = {{KernelVariant::g1, 0, 1, 0, 0}}; break;
    case KernelVariant::g2: specs = {{KernelVariant::g2}}; break;
    case KernelVariant::g3:
      specs = {{KernelVariant::g3, 0, 1, 0, 0, 0, {0, 0, 0}},
               {KernelVariant::g3, 0, 1, 0, 0, 0, {1, 0, 0}},
               {KernelVariant::g3, 0, 1, 0, 0, 0, {1, 1, 0}}};
      break;
  }
  double worst = 0.0;
  bool all = true;
  std::string detail = "max over q of C / min over q of C";
  for (const auto& s : specs) {
    const auto rep = verify_kernel_bound(s, P);
    worst = std::max(worst, rep.stability);
    all = all && rep.pass;
    if (v == KernelVariant::g3) detail += "; m=" + std::to_string(s.order()) + ": " + std::to_string(rep.stability);
  }
  auto r = judge("kernel_bound_" + to_string(v), "heat", worst, "<=", 4.0, detail);
  r.pass = r.pass && all;
  return r;
}

/// C_m = sup_t t^{m/2} ||grad^m e^{t Lap} u0||_{B^-1} / ||u0||_{BMO^-1} over 20 random data.
inline PropertyResult linear_estimate(const DyadicPartition& P) {
  const Grid& g = P.grid;
  const auto cc = CarlesonConfig::standard(g, 4);
  std::vector<double> times;
  for (int i = -8; i <= 12; ++i) times.push_back(std::exp2(0.5 * i));
  std::vector<std::vector<double>> C(3);
  const double xi0s[] = {0.125, 0.25, 0.5};
  for (int s = 0; s < 20; ++s) {
    std::mt19937_64 rng(500 + s);
    SpectralField u0 = leray_project(shaped_noise(g, g.n_dims, xi0s[s % 3], rng));
    u0 = (0.01 / to_physical(u0).max_abs()) * u0;
    const double bmo = bmo_minus1_norm(u0, cc);
    for (int m = 0; m <= 2; ++m) C[m].push_back(weighted_heat_besov_sup(u0, P, m, times) / bmo);
  }
  double worst = 0.0;
  std::string detail = "max/min of C_m over 20 samples:";
  for (int m = 0; m <= 2; ++m) {
    worst = std::max(worst, spread(C[m]));
    detail += " m=" + std::to_string(m) + " " + std::to_string(spread(C[m]));
  }
  return judge("linear_estimate_stability", "function_spaces", worst, "<=", 4.0, detail);
}

// --- solver -------------------------------------------------------------

inline PropertyResult leray_projection(const Grid& g) {
  const auto f = band_noise(g, g.n_dims, 3, g.points / 3);
  const auto p = leray_project(f);
  const double defect = divergence_defect(p);
  const double idem = max_abs_diff(leray_project(p), p) / p.max_coefficient();
  return judge("leray_projection", "solver", std::max(defect, idem), "<", 1e-12,
               "max of divergence defect and |P P f - P f|");
}

/// Taylor-Green vortex: an exact decaying solution of the constant-director reduction
/// whose advection term is a pure gradient.
inline PropertyResult navier_stokes_reduction(const Grid& g) {
  const int k = 4;
  const double h = -std::numbers::pi / 2;  // cos(a + h) = sin(a)
  SpectralField u(g, 2);
  add_cosine_mode(u, 0, {k, k, 0}, 0.5, h);
  add_cosine_mode(u, 0, {k, -k, 0}, 0.5, h);
  add_cosine_mode(u, 1, {k, k, 0}, -0.5, h);
  add_cosine_mode(u, 1, {k, -k, 0}, 0.5, h);
  SolverConfig cfg;
  auto s = make_state(u, vertical_director(g));
  for (int i = 0; i < 100; ++i) s = step_fixed(s, cfg, choose_dt(s, cfg));
  const double decay = std::exp(-2.0 * std::pow(k * g.fundamental(), 2) * s.t);
  const double err = max_abs_diff(s.u, decay * u) / (decay * u.max_coefficient());
  return judge("navier_stokes_reduction", "solver", err, "<=", 1e-8,
               "relative error vs exact Taylor-Green decay after 100 steps, t = " + std::to_string(s.t));
}

inline PropertyResult divergence_every_step(const Grid& g) {
  const auto cc = CarlesonConfig::standard(g, 4);
  InitialDataConfig ic;
  ic.kind = InitialKind::critical;
  const auto data = make_initial_data(g, ic, 0.05, 3, cc);
  SolverConfig cfg;
  auto s = make_state(data.u0, data.d0);
  double worst = s.diagnostics.max_divergence;
  for (int i = 0; i < 100; ++i) {
    s = step_fixed(s, cfg, choose_dt(s, cfg));
    worst = std::max(worst, s.diagnostics.max_divergence);
  }
  return judge("divergence_free", "solver", worst, "<", 1e-10, "max over 100 coupled steps");
}

inline PropertyResult rk4_order() {
  const Grid g = Grid::make(2, 32, kTwoPi * 4);
  SolverConfig cfg;
  cfg.renormalize_director = false;
  const auto u0 = solenoidal_noise(g, 11, 5, 1.5);
  const auto d0 = unit_director_noise(g, 12, 5, 0.8);
  auto run = [&](double dt) {
    auto s = make_state(u0, d0);
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < n; ++i) s = step_fixed(s, cfg, dt);
    return s;
  };
  const auto ref = run(0.025);
  const auto a = run(0.2), b = run(0.1);
  const double ea = max_abs_diff(a.u, ref.u) + max_abs_diff(a.d, ref.d);
  const double eb = max_abs_diff(b.u, ref.u) + max_abs_diff(b.d, ref.d);
  return judge("if_rk4_order", "solver", std::log2(ea / eb), ">=", 3.5, "log2 of error ratio, dt = 0.2 vs 0.1");
}

inline PropertyResult sphere_drift(const Grid& g) {
  SolverConfig cfg;
  cfg.renormalize_director = false;
  auto s = make_state(solenoidal_noise(g, 31, 6, 0.05), unit_director_noise(g, 32, 6, 0.05));
  s = advance_to(s, cfg, 8.0);
  return judge("sphere_drift_unrenormalized", "solver", s.diagnostics.sphere_deviation, "<", 1e-4,
               "max ||d|^2 - 1| at t = 8 with renormalization off");
}

inline PropertyResult picard_contraction(const Grid& g) {
  const auto cc = CarlesonConfig::standard(g, 4);
  const auto data = make_initial_data(g, {}, 0.02, 7, cc);
  const auto rep = picard_solve(data.u0, data.d0, 4.0, 6, SolverConfig{}, 40);
  double worst = INFINITY;
  if (!rep.aborted && rep.ratios.size() >= 4) worst = *std::max_element(rep.ratios.begin(), rep.ratios.begin() + 4);
  return judge("picard_contraction", "solver", worst, "<", 0.5, "max ratio over 4 consecutive iterates, eps = 0.02");
}

// --- trajectory ---------------------------------------------------------

inline PropertyResult frozen_flow_controls(const Grid& g) {
  auto set = make_pair_seeds(g, {});
  const double w = 0.2, cx = g.period / 2, cy = g.period / 2;
  auto rot = [&](const Point& x, double) { return Point{-w * (x[1] - cy), w * (x[0] - cx), 0}; };
  auto shift = [](const Point&, double) { return Point{0.7, 0.1, 0}; };
  auto zero = [](const Point&, double) { return Point{0, 0, 0}; };
  std::vector<TrajectorySet> runs{integrate_flow(zero, set.seeds, 2, 4.0, 0.1),
                                  integrate_flow(shift, set.seeds, 2, 4.0, 0.1),
                                  integrate_flow(rot, set.seeds, 2, 4.0, 0.01)};
  double worst = 0.0;
  for (auto& tr : runs) {
    tr.pairs = set.pairs;
    worst = std::max(worst, std::abs(holder_exponent(tr, 4.0, g.period / 4).alpha - 1.0));
  }
  return judge("frozen_flow_controls", "trajectory", worst, "<=", 1e-3, "max |alpha - 1| for zero, translation, rotation");
}

inline PropertyResult flow_group_property(const Grid& g) {
  auto v = [](const Point& x, double t) {
    return Point{std::sin(0.3 * x[1]) * (1 + 0.1 * t), std::cos(0.2 * x[0]), 0};
  };
  const auto set = make_pair_seeds(g, {2, 8, 4, 3});
  const double dt = 0.05;
  const auto direct = integrate_flow(v, set.seeds, 2, 2.0, dt);
  const auto first = integrate_flow(v, set.seeds, 2, 1.0, dt);
  std::vector<Point> mid;
  for (const auto& p : first.paths) mid.push_back(p.back());
  const auto second = integrate_flow(v, mid, 2, 2.0, dt, 1.0);
  double err = 0.0;
  for (std::size_t s = 0; s < mid.size(); ++s)
    err = std::max(err, separation(direct.paths[s].back(), second.paths[s].back(), 2));
  return judge("flow_group_property", "trajectory", err, "<", 1e-12, "restart at t = 1 vs direct integration to t = 2");
}

}  // namespace detail

inline VerifyReport run_verify(const VerifyOptions& o) {
  const auto P = build_partition(o.grid, o.renormalize_partition);
  const auto PK = build_partition(o.kernel_grid, o.renormalize_partition);
  std::vector<std::function<PropertyResult()>> jobs{
      [&] { return detail::partition_of_unity(P); },
      [&] { return detail::block_orthogonality(P); },
      [&] { return detail::bernstein_stability(P); },
      [&] { return detail::block_heat_decay(P); },
      [&] { return detail::kernel_bound(PK, KernelVariant::g); },
      [&] { return detail::kernel_bound(PK, KernelVariant::g1); },
      [&] { return detail::kernel_bound(PK, KernelVariant::g2); },
      [&] { return detail::kernel_bound(PK, KernelVariant::g3); },
      [&] { return detail::linear_estimate(P); },
      [&] { return detail::leray_projection(o.grid); },
      [&] { return detail::navier_stokes_reduction(o.grid); },
      [&] { return detail::divergence_every_step(o.grid); },
      [&] { return detail::rk4_order(); },
      [&] { return detail::sphere_drift(o.grid); },
      [&] { return detail::picard_contraction(o.grid); },
      [&] { return detail::frozen_flow_controls(o.grid); },
      [&] { return detail::flow_group_property(o.grid); },
  };
  VerifyReport rep;
  rep.properties.resize(jobs.size());
  parallel_for(jobs.size(), o.threads, [&](std::size_t i) {
    try {
      rep.properties[i] = jobs[i]();
    } catch (const std::exception& e) {
      rep.properties[i] = {"property_" + std::to_string(i), "error", NAN, NAN, "", false, e.what()};
    }
  });
  rep.pass = std::all_of(rep.properties.begin(), rep.properties.end(), [](const auto& p) { return p.pass; });
  return rep;
}

inline nlohmann::json to_json(const VerifyReport& rep) {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& p : rep.properties)
    props.push_back({{"name", p.name}, {"area", p.area},
                     {"value", std::isfinite(p.value) ? nlohmann::json(p.value) : nlohmann::json(nullptr)},
                     {"relation", p.relation}, {"threshold", p.threshold}, {"pass", p.pass}, {"detail", p.detail}});
  return {{"schema", "nlc.verify_report"}, {"schema_version", 1}, {"pass", rep.pass}, {"properties", props}};
}

}  // namespace nlc
