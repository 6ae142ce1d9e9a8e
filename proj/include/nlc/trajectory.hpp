#pragma once

// Flow map gamma(x, t) of the velocity field: off-grid spectral evaluation,
// snapshot interpolation in time, RK4 particle integration and Hoelder
// regression of pair separations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlc/field.hpp"
#include "nlc/heat.hpp"
#include "nlc/initial_data.hpp"
#include "nlc/parallel.hpp"
#include "nlc/solver.hpp"

namespace nlc {

using Point = std::array<double, 3>;

namespace detail {

/// e^{i xi_k x} for the N lattice indices of one axis, in FFT order.
inline std::vector<cplx> axis_phases(const Grid& g, double x) {
  const int N = g.points;
  std::vector<cplx> out(static_cast<std::size_t>(N));
  const double k0 = g.fundamental();
  for (int i = 0; i < N; ++i) {
    const int k = i < N / 2 ? i : i - N;
    out[static_cast<std::size_t>(i)] = std::polar(1.0, k0 * k * x);
  }
  return out;
}

}  // namespace detail

/// Exact trigonometric evaluation sum_xi f^(xi) e^{i xi.x} of every component at x.
/// Positions outside the box are fine: the sum is periodic.
inline std::vector<double> interpolate_field(const SpectralField& f, const Point& x) {
  const Grid& g = f.grid();
  const int N = g.points;
  std::array<std::vector<cplx>, 3> ph;
  for (int a = 0; a < g.n_dims; ++a) ph[a] = detail::axis_phases(g, x[a]);
  std::vector<double> out(static_cast<std::size_t>(f.components()), 0.0);
  const std::size_t NN = static_cast<std::size_t>(N);
  for (int c = 0; c < f.components(); ++c) {
    auto coef = f.component(c);
    cplx total{0.0, 0.0};
    if (g.n_dims == 2) {
      for (std::size_t i0 = 0; i0 < NN; ++i0) {
        cplx row{0.0, 0.0};
        const cplx* r = coef.data() + i0 * NN;
        for (std::size_t i1 = 0; i1 < NN; ++i1) row += r[i1] * ph[1][i1];
        total += row * ph[0][i0];
      }
    } else {
      for (std::size_t i0 = 0; i0 < NN; ++i0) {
        cplx plane{0.0, 0.0};
        for (std::size_t i1 = 0; i1 < NN; ++i1) {
          cplx row{0.0, 0.0};
          const cplx* r = coef.data() + (i0 * NN + i1) * NN;
          for (std::size_t i2 = 0; i2 < NN; ++i2) row += r[i2] * ph[2][i2];
          plane += row * ph[1][i1];
        }
        total += plane * ph[0][i0];
      }
    }
    out[static_cast<std::size_t>(c)] = total.real();
  }
  return out;
}

/// Optional extra drift beta * sum_a c_a d_i d^a (nonstandard, exploratory only).
struct DriftConfig {
  bool enabled = false;
  double beta = 0.0;
  std::array<double, 3> contraction{0.0, 0.0, 1.0};
};

/// Solver snapshots at increasing times.
struct SnapshotSeries {
  std::vector<double> times;
  std::vector<SpectralField> u;
  std::vector<SpectralField> d;

  void push(const SolverState& s) {
    if (!times.empty() && !(s.t > times.back())) throw std::invalid_argument("snapshots: times must increase");
    times.push_back(s.t);
    u.push_back(s.u);
    d.push_back(s.d);
  }
  double min_spacing() const {
    double m = INFINITY;
    for (std::size_t i = 1; i < times.size(); ++i) m = std::min(m, times[i] - times[i - 1]);
    return m;
  }
};

/// Evolves (u0, d0) and keeps a snapshot every `spacing` up to T (t = 0 included).
inline SnapshotSeries record_snapshots(const SolverState& start, const SolverConfig& cfg, double T, double spacing) {
  if (!(spacing > 0.0) || !(T > 0.0)) throw std::invalid_argument("record_snapshots: need T > 0 and spacing > 0");
  SnapshotSeries out;
  SolverState s = start;
  out.push(s);
  const int n = static_cast<int>(std::ceil(T / spacing - 1e-9));
  for (int i = 1; i <= n; ++i) {
    s = advance_to(std::move(s), cfg, std::min(T, start.t + i * spacing));
    out.push(s);
  }
  return out;
}

/// v(x, t) from snapshots: coefficients linear in t between neighbours, then exact spatial evaluation.
class SnapshotVelocity {
 public:
  SnapshotVelocity(const SnapshotSeries& s, DriftConfig drift = {}) : s_(s), drift_(drift) {
    if (s_.times.size() < 2) throw std::invalid_argument("velocity: need at least two snapshots");
    if (drift_.enabled)
      for (const auto& d : s_.d) grad_d_.push_back(gradient(d));
  }

  double t_begin() const { return s_.times.front(); }
  double t_end() const { return s_.times.back(); }

  Point operator()(const Point& x, double t) const {
    blend(t);
    const int n = s_.u.front().grid().n_dims;
    const auto v = interpolate_field(u_cache_, x);
    Point out{0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) out[i] = v[i];
    if (drift_.enabled) {
      const auto gd = interpolate_field(gd_cache_, x);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) out[i] += drift_.beta * drift_.contraction[a] * gd[a * n + i];
    }
    return out;
  }

 private:
  // The blend is cached per time, so all seeds of one RK stage share it.
  void blend(double t) const {
    if (t == cached_t_) return;
    if (t < t_begin() - 1e-12 || t > t_end() + 1e-12) throw std::out_of_range("velocity: t outside snapshot series");
    std::size_t hi = 1;
    while (hi + 1 < s_.times.size() && s_.times[hi] < t) ++hi;
    const double w = std::clamp((t - s_.times[hi - 1]) / (s_.times[hi] - s_.times[hi - 1]), 0.0, 1.0);
    u_cache_ = (1.0 - w) * s_.u[hi - 1];
    u_cache_ += w * s_.u[hi];
    if (drift_.enabled) {
      gd_cache_ = (1.0 - w) * grad_d_[hi - 1];
      gd_cache_ += w * grad_d_[hi];
    }
    cached_t_ = t;
  }

  const SnapshotSeries& s_;
  DriftConfig drift_;
  std::vector<SpectralField> grad_d_;
  mutable double cached_t_ = NAN;
  mutable SpectralField u_cache_, gd_cache_;
};

struct TrajectorySet {
  int n_dims = 2;
  std::vector<Point> seeds;
  std::vector<double> times;                 // shared by all seeds
  std::vector<std::vector<Point>> paths;     // paths[seed][time], unwrapped
  std::vector<std::pair<int, int>> pairs;    // seed index pairs for the Hoelder fit

  std::size_t time_index(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    throw std::invalid_argument("trajectory: time " + std::to_string(t) + " was not recorded");
  }
};

/// Classical RK4 for d gamma / dt = v(gamma, t) from t = 0 to T with step dt,
/// recording every step. V is any callable Point(const Point&, double).
/// Seeds are advanced stage by stage together so a shared time cache is reused.
template <class V>
TrajectorySet integrate_flow(const V& v, const std::vector<Point>& seeds, int n_dims, double T, double dt,
                             double t_start = 0.0) {
  if (!(dt > 0.0) || !(T >= t_start)) throw std::invalid_argument("integrate_flow: need dt > 0 and T >= t_start");
  TrajectorySet out;
  out.n_dims = n_dims;
  out.seeds = seeds;
  out.paths.assign(seeds.size(), {});
  std::vector<Point> x = seeds;
  out.times.push_back(t_start);
  for (std::size_t s = 0; s < seeds.size(); ++s) out.paths[s].push_back(x[s]);
  const int steps = static_cast<int>(std::ceil((T - t_start) / dt - 1e-9));
  auto axpy = [n_dims](const Point& a, double h, const Point& b) {
    Point r = a;
    for (int i = 0; i < n_dims; ++i) r[i] += h * b[i];
    return r;
  };
  double t = t_start;
  std::vector<Point> k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size());
  for (int n = 0; n < steps; ++n) {
    const double h = n == steps - 1 ? T - t : dt;
    for (std::size_t s = 0; s < x.size(); ++s) k1[s] = v(x[s], t);
    for (std::size_t s = 0; s < x.size(); ++s) k2[s] = v(axpy(x[s], h / 2, k1[s]), t + h / 2);
    for (std::size_t s = 0; s < x.size(); ++s) k3[s] = v(axpy(x[s], h / 2, k2[s]), t + h / 2);
    for (std::size_t s = 0; s < x.size(); ++s) k4[s] = v(axpy(x[s], h, k3[s]), t + h);
    for (std::size_t s = 0; s < x.size(); ++s)
      for (int i = 0; i < n_dims; ++i) x[s][i] += h / 6 * (k1[s][i] + 2 * k2[s][i] + 2 * k3[s][i] + k4[s][i]);
    t = n == steps - 1 ? T : t + h;
    out.times.push_back(t);
    for (std::size_t s = 0; s < x.size(); ++s) out.paths[s].push_back(x[s]);
  }
  return out;
}

/// Snapshot-driven flow; dt must not exceed the snapshot spacing.
inline TrajectorySet integrate_flow(const SnapshotSeries& snaps, const std::vector<Point>& seeds, double T,
                                    double dt, DriftConfig drift = {}) {
  if (dt > snaps.min_spacing() * (1.0 + 1e-12))
    throw std::invalid_argument("integrate_flow: dt_traj exceeds snapshot spacing");
  if (T > snaps.times.back() + 1e-12) throw std::invalid_argument("integrate_flow: T beyond last snapshot");
  const SnapshotVelocity v(snaps, drift);
  return integrate_flow(v, seeds, snaps.u.front().grid().n_dims, T, dt, snaps.times.front());
}

/// Base points with partners at separations 2^-e for e = min_exp .. max_exp (absolute
/// length units), one random direction per base shared by its partners.
struct PairLayout {
  int bases = 8;
  int finest_exp = 8;
  int coarsest_exp = 4;
  std::uint64_t seed = 1;

  void validate() const {
    if (bases < 1) throw std::invalid_argument("trajectory.bases must be >= 1");
    if (coarsest_exp < 0) throw std::invalid_argument("trajectory.coarsest_exp must be >= 0 (separations <= 1)");
    if (finest_exp - coarsest_exp < 3)
      throw std::invalid_argument("trajectory: separations must span at least 4 dyadic scales");
  }
};

inline TrajectorySet make_pair_seeds(const Grid& g, const PairLayout& layout) {
  layout.validate();
  std::mt19937_64 rng(layout.seed);
  std::uniform_real_distribution<double> pos(0.0, g.period);
  std::normal_distribution<double> nd;
  TrajectorySet set;
  set.n_dims = g.n_dims;
  for (int b = 0; b < layout.bases; ++b) {
    Point base{0, 0, 0}, dir{0, 0, 0};
    for (int a = 0; a < g.n_dims; ++a) base[a] = pos(rng);
    double norm = 0.0;
    while (norm < 1e-8) {
      norm = 0.0;
      for (int a = 0; a < g.n_dims; ++a) {
        dir[a] = nd(rng);
        norm += dir[a] * dir[a];
      }
      norm = std::sqrt(norm);
    }
    const int bi = static_cast<int>(set.seeds.size());
    set.seeds.push_back(base);
    for (int e = layout.finest_exp; e >= layout.coarsest_exp; --e) {
      Point p = base;
      for (int a = 0; a < g.n_dims; ++a) p[a] += std::ldexp(1.0, -e) * dir[a] / norm;
      set.pairs.emplace_back(bi, static_cast<int>(set.seeds.size()));
      set.seeds.push_back(p);
    }
  }
  return set;
}

inline double separation(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct HolderFit {
  double alpha = 0.0;
  double C = 0.0;  // exp(intercept)
  double residual = 0.0;
  int pairs_used = 0;
  int pairs_excluded = 0;
};

/// Regression of log |gamma(x1,t) - gamma(x2,t)| against log |x1 - x2| over the pair list.
/// Pairs further apart than `exclude_beyond` at time t are dropped and counted.
inline HolderFit holder_exponent(const TrajectorySet& traj, double t, double exclude_beyond) {
  const std::size_t it = traj.time_index(t);
  std::vector<double> x, y;
  HolderFit out;
  double lo = INFINITY, hi = 0.0;
  for (const auto& [a, b] : traj.pairs) {
    const double r0 = separation(traj.paths[a][0], traj.paths[b][0], traj.n_dims);
    lo = std::min(lo, r0);
    hi = std::max(hi, r0);
  }
  if (!(hi >= 8.0 * lo * (1.0 - 1e-9)))
    throw std::invalid_argument("holder_exponent: separations span fewer than 4 dyadic scales");
  for (const auto& [a, b] : traj.pairs) {
    const double r0 = separation(traj.paths[a][0], traj.paths[b][0], traj.n_dims);
    const double rt = separation(traj.paths[a][it], traj.paths[b][it], traj.n_dims);
    if (!(rt <= exclude_beyond) || !(r0 > 0.0) || !(rt > 0.0)) {
      ++out.pairs_excluded;
      continue;
    }
    x.push_back(std::log(r0));
    y.push_back(std::log(rt));
  }
  out.pairs_used = static_cast<int>(x.size());
  if (x.size() < 2) throw std::invalid_argument("holder_exponent: fewer than 2 usable pairs");
  const LineFit lf = fit_line(x, y);
  out.alpha = lf.slope;
  out.C = std::exp(lf.intercept);
  out.residual = lf.rms;
  return out;
}

// ---------------------------------------------------------------------------
// Campaign over epsilon

struct TrajectoryCampaignConfig {
  std::vector<double> epsilons{0.01, 0.02, 0.05};
  double T = 16.0;
  double dt = 0.125;
  double snapshot_spacing = 0.25;
  double exclude_fraction = 0.25;  // pairs further apart than this fraction of L at T are dropped
  double holder_floor = 0.95;      // required alpha at the smallest epsilon
  PairLayout layout;
  DriftConfig drift;
  InitialDataConfig initial;
  std::uint64_t seed = 1;
  int carleson_stride = 4;
  int carleson_per_octave = 8;
  int threads = 1;

  void validate() const {
    if (epsilons.empty()) throw std::invalid_argument("trajectory.epsilons must not be empty");
    for (double e : epsilons)
      if (!(e > 0.0)) throw std::invalid_argument("trajectory.epsilons entries must be > 0");
    if (!(T > 0.0)) throw std::invalid_argument("trajectory.T must be > 0");
    if (!(snapshot_spacing > 0.0)) throw std::invalid_argument("trajectory.snapshot_spacing must be > 0");
    if (!(dt > 0.0) || dt > snapshot_spacing)
      throw std::invalid_argument("trajectory.dt must lie in (0, snapshot_spacing]");
    if (!(exclude_fraction > 0.0)) throw std::invalid_argument("trajectory.exclude_fraction must be > 0");
    if (threads < 1) throw std::invalid_argument("trajectory.threads must be >= 1");
    layout.validate();
    initial.validate();
  }
};

struct HolderRun {
  double epsilon = 0.0;
  bool complete = false;
  std::string message;
  HolderFit fit;
  TrajectorySet paths;
};

struct HolderReport {
  std::vector<HolderRun> runs;
  double kappa = 0.0;  // smallest kappa with alpha >= 1 - kappa eps at every epsilon
  bool complete = false;
  bool floor_pass = false;
  bool pass = false;
};

inline HolderRun run_holder_epsilon(const Grid& g, const TrajectoryCampaignConfig& c, const SolverConfig& scfg,
                                    double eps) {
  HolderRun run;
  run.epsilon = eps;
  try {
    const auto cc = CarlesonConfig::standard(g, c.carleson_stride, c.carleson_per_octave);
    const auto data = make_initial_data(g, c.initial, eps, c.seed, cc);
    const auto snaps = record_snapshots(make_state(data.u0, data.d0), scfg, c.T, c.snapshot_spacing);
    const auto set = make_pair_seeds(g, c.layout);
    run.paths = integrate_flow(snaps, set.seeds, c.T, c.dt, c.drift);
    run.paths.pairs = set.pairs;
    run.fit = holder_exponent(run.paths, run.paths.times.back(), c.exclude_fraction * g.period);
    run.complete = true;
  } catch (const SolverHalt& h) {
    run.message = h.what();
  } catch (const std::domain_error& e) {
    run.message = e.what();
  }
  return run;
}

/// Hoelder exponent at t = T for every epsilon; kappa is the envelope constant and
/// the verdict requires alpha >= floor at the smallest epsilon and a bound
/// 1 - kappa eps that stays positive over the sweep.
inline HolderReport run_trajectory_campaign(const Grid& g, const TrajectoryCampaignConfig& c,
                                            const SolverConfig& scfg) {
  c.validate();
  scfg.validate();
  HolderReport rep;
  rep.runs.resize(c.epsilons.size());
  parallel_for(c.epsilons.size(), c.threads,
               [&](std::size_t i) { rep.runs[i] = run_holder_epsilon(g, c, scfg, c.epsilons[i]); });
  rep.complete = std::all_of(rep.runs.begin(), rep.runs.end(), [](const HolderRun& r) { return r.complete; });
  if (!rep.complete) return rep;
  double eps_max = 0.0;
  const HolderRun* smallest = &rep.runs.front();
  for (const auto& r : rep.runs) {
    rep.kappa = std::max(rep.kappa, (1.0 - r.fit.alpha) / r.epsilon);
    eps_max = std::max(eps_max, r.epsilon);
    if (r.epsilon < smallest->epsilon) smallest = &r;
  }
  rep.floor_pass = smallest->fit.alpha >= c.holder_floor;
  rep.pass = rep.floor_pass && rep.kappa * eps_max < 1.0;
  return rep;
}

}  // namespace nlc
