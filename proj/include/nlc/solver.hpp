#pragma once

// Mild-form evolution of the simplified nematic system (unit coefficients):
//   u_t - Lap u = -P div(u (x) u + grad d (.) grad d),   div u = 0,
//   d_t - Lap d = |grad d|^2 d - (u . grad) d,          |d| = 1.
// Time stepping treats the heat part exactly through an integrating factor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlc/field.hpp"
#include "nlc/heat.hpp"
#include "nlc/littlewood_paley.hpp"

namespace nlc {

enum class Scheme { if_rk4, if_euler };

inline std::string to_string(Scheme s) { return s == Scheme::if_rk4 ? "if_rk4" : "if_euler"; }

struct SolverConfig {
  double dt_max = 0.05;
  double cfl_safety = 0.5;
  bool renormalize_director = true;
  bool dealias = true;
  bool nonlinearity = true;  // false: pure heat flow
  Scheme scheme = Scheme::if_rk4;
  double epsilon_target = 0.02;
  std::uint64_t seed = 1;
  double sphere_tol = 1e-6;

  void validate() const {
    if (!(dt_max > 0.0) || !std::isfinite(dt_max)) throw std::invalid_argument("solver.dt_max must be > 0");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw std::invalid_argument("solver.cfl_safety must lie in (0, 1]");
    if (!(epsilon_target > 0.0)) throw std::invalid_argument("solver.epsilon_target must be > 0");
    if (!(sphere_tol > 0.0)) throw std::invalid_argument("solver.sphere_tol must be > 0");
  }
};

struct Diagnostics {
  double max_divergence = 0.0;    // max |xi . u_hat| / max |u_hat|
  double sphere_deviation = 0.0;  // max | |d|^2 - 1 |
  double dt_used = 0.0;
};

struct SolverState {
  double t = 0.0;
  SpectralField u;
  SpectralField d;
  long step_count = 0;
  Diagnostics diagnostics;
};

/// Thrown when a step produces non-finite values; carries the last good state.
class SolverHalt : public std::runtime_error {
 public:
  SolverHalt(const std::string& what, SolverState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const SolverState& last_good() const { return last_good_; }

 private:
  SolverState last_good_;
};

namespace detail {

/// Wavenumber per axis with the Nyquist plane removed, matching derivative().
inline double effective_xi(const Grid& g, const LatticeTables& lat, int a, std::size_t p) {
  return lat.k[a][p] == -g.points / 2 ? 0.0 : lat.xi[a][p];
}

}  // namespace detail

/// Helmholtz-Weyl projection delta_ij - xi_i xi_j / |xi|^2; the zero mode passes through.
inline SpectralField leray_project(const SpectralField& f) {
  const Grid& g = f.grid();
  const int n = g.n_dims;
  if (f.components() != n) throw std::invalid_argument("leray_project: need n components");
  auto lat = lattice(g);
  SpectralField out = f;
  for (std::size_t p = 0; p < f.points(); ++p) {
    double xi[3] = {0, 0, 0};
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      xi[a] = detail::effective_xi(g, *lat, a, p);
      r2 += xi[a] * xi[a];
    }
    if (r2 == 0.0) continue;
    cplx dot{0.0, 0.0};
    for (int a = 0; a < n; ++a) dot += xi[a] * f.component(a)[p];
    for (int a = 0; a < n; ++a) out.component(a)[p] -= xi[a] * dot / r2;
  }
  return out;
}

/// max |xi . u_hat| relative to max |u_hat| (0 for the zero field).
inline double divergence_defect(const SpectralField& u) {
  const Grid& g = u.grid();
  auto lat = lattice(g);
  const double scale = u.max_coefficient();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t p = 0; p < u.points(); ++p) {
    cplx dot{0.0, 0.0};
    for (int a = 0; a < g.n_dims; ++a) dot += detail::effective_xi(g, *lat, a, p) * u.component(a)[p];
    worst = std::max(worst, std::abs(dot));
  }
  return worst / scale;
}

inline double sphere_deviation(const SpectralField& d) {
  double worst = 0.0;
  for (double m : to_physical(d).magnitude()) worst = std::max(worst, std::abs(m * m - 1.0));
  return worst;
}

/// Physical samples of u, d and grad d (component a*n + i = d_i d^a).
struct PhysicalState {
  PhysicalField u;
  PhysicalField d;
  PhysicalField grad_d;
};

inline PhysicalState physical_state(const SpectralField& u, const SpectralField& d, bool dealias) {
  if (!dealias) return {to_physical(u), to_physical(d), to_physical(gradient(d))};
  SpectralField um = u, dm = d;
  apply_dealias(um);
  apply_dealias(dm);
  return {to_physical(um), to_physical(dm), to_physical(gradient(dm))};
}

/// -P div(a.u (x) b.u + grad a.d (.) grad b.d), entry (i,j) = a.u_i b.u_j + sum_c d_i a.d^c d_j b.d^c.
inline SpectralField momentum_bilinear(const PhysicalState& a, const PhysicalState& b, bool dealias) {
  const Grid& g = a.u.grid;
  const int n = g.n_dims;
  const std::size_t np = g.size();
  PhysicalField flux(g, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      auto dst = flux.component(i * n + j);
      auto ui = a.u.component(i);
      auto uj = b.u.component(j);
      for (std::size_t p = 0; p < np; ++p) dst[p] = ui[p] * uj[p];
      for (int c = 0; c < 3; ++c) {
        auto gi = a.grad_d.component(c * n + i);
        auto gj = b.grad_d.component(c * n + j);
        for (std::size_t p = 0; p < np; ++p) dst[p] += gi[p] * gj[p];
      }
    }
  }
  SpectralField fs = to_spectral(flux);
  if (dealias) apply_dealias(fs);
  // (div T)_i = sum_j d_j T_ij
  auto lat = lattice(g);
  SpectralField div(g, n);
  for (int i = 0; i < n; ++i) {
    auto dst = div.component(i);
    for (int j = 0; j < n; ++j) {
      auto src = fs.component(i * n + j);
      for (std::size_t p = 0; p < np; ++p)
        dst[p] -= cplx{0.0, detail::effective_xi(g, *lat, j, p)} * src[p];
    }
  }
  return leray_project(div);
}

/// out += coef (grad a.d : grad b.d) c.d, pointwise.
inline void director_accumulate(PhysicalField& out, double coef, const PhysicalState& a, const PhysicalState& b,
                                const PhysicalState& c) {
  const Grid& g = out.grid;
  const int n = g.n_dims;
  const std::size_t np = g.size();
  std::vector<double> contraction(np, 0.0);
  for (int k = 0; k < 3 * n; ++k) {
    auto ga = a.grad_d.component(k);
    auto gb = b.grad_d.component(k);
    for (std::size_t p = 0; p < np; ++p) contraction[p] += ga[p] * gb[p];
  }
  for (int k = 0; k < 3; ++k) {
    auto dst = out.component(k);
    auto dc = c.d.component(k);
    for (std::size_t p = 0; p < np; ++p) dst[p] += coef * contraction[p] * dc[p];
  }
}

/// out -= coef (w.u . grad) v.d, pointwise.
inline void advection_accumulate(PhysicalField& out, double coef, const PhysicalState& w, const PhysicalState& v) {
  const Grid& g = out.grid;
  const int n = g.n_dims;
  const std::size_t np = g.size();
  for (int k = 0; k < 3; ++k) {
    auto dst = out.component(k);
    for (int i = 0; i < n; ++i) {
      auto ui = w.u.component(i);
      auto gk = v.grad_d.component(k * n + i);
      for (std::size_t p = 0; p < np; ++p) dst[p] -= coef * ui[p] * gk[p];
    }
  }
}

inline SpectralField director_forcing(const PhysicalState& s, bool dealias) {
  PhysicalField out(s.u.grid, 3);
  director_accumulate(out, 1.0, s, s, s);
  advection_accumulate(out, 1.0, s, s);
  SpectralField f = to_spectral(out);
  if (dealias) apply_dealias(f);
  return f;
}

inline SpectralField momentum_rhs(const SpectralField& u, const SpectralField& d, bool dealias = true) {
  const auto s = physical_state(u, d, dealias);
  return momentum_bilinear(s, s, dealias);
}

inline SpectralField director_rhs(const SpectralField& u, const SpectralField& d, bool dealias = true) {
  return director_forcing(physical_state(u, d, dealias), dealias);
}

struct FieldPair {
  SpectralField u;
  SpectralField d;
};

inline FieldPair nonlinear_terms(const SpectralField& u, const SpectralField& d, const SolverConfig& cfg) {
  if (!cfg.nonlinearity) return {SpectralField(u.grid(), u.components()), SpectralField(d.grid(), d.components())};
  const auto s = physical_state(u, d, cfg.dealias);
  return {momentum_bilinear(s, s, cfg.dealias), director_forcing(s, cfg.dealias)};
}

namespace detail {

inline FieldPair apply_factor(const FieldPair& x, const std::vector<double>& e) {
  return {apply_multiplier(x.u, e), apply_multiplier(x.d, e)};
}

inline FieldPair lincomb(const FieldPair& a, double s, const FieldPair& b) {
  FieldPair r = a;
  r.u.axpy(s, b.u);
  r.d.axpy(s, b.d);
  return r;
}

inline std::vector<double> heat_factor(const Grid& g, double t) {
  auto lat = lattice(g);
  std::vector<double> e(g.size());
  for (std::size_t p = 0; p < e.size(); ++p) e[p] = std::exp(-lat->norm2[p] * t);
  return e;
}

inline void renormalize(SpectralField& d) {
  PhysicalField p = to_physical(d);
  const auto mag = p.magnitude();
  for (int c = 0; c < 3; ++c) {
    auto v = p.component(c);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (mag[i] > 0.0) v[i] /= mag[i];
  }
  d = to_spectral(p);
}

}  // namespace detail

inline Diagnostics compute_diagnostics(const SolverState& s, double dt) {
  return {divergence_defect(s.u), sphere_deviation(s.d), dt};
}

inline SolverState make_state(SpectralField u, SpectralField d) {
  if (u.components() != u.grid().n_dims) throw std::invalid_argument("state: u needs n components");
  if (d.components() != 3) throw std::invalid_argument("state: d needs 3 components");
  if (!(u.grid() == d.grid())) throw std::invalid_argument("state: u and d on different grids");
  SolverState s{0.0, std::move(u), std::move(d), 0, {}};
  s.diagnostics = compute_diagnostics(s, 0.0);
  return s;
}

/// dt = min(dt_max, cfl * dx / max(1, max|u|, max|grad d|)).
inline double choose_dt(const SolverState& s, const SolverConfig& cfg) {
  const double vu = to_physical(s.u).max_abs();
  const PhysicalField gd = to_physical(gradient(s.d));
  double vg = 0.0;
  for (const double v : gd.values) vg = std::max(vg, std::abs(v));
  const double speed = std::max({1.0, vu, vg});
  return std::min(cfg.dt_max, cfg.cfl_safety * s.u.grid().spacing() / speed);
}

/// One step of fixed size dt.
inline SolverState step_fixed(const SolverState& s, const SolverConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  const Grid& g = s.u.grid();
  const auto E = detail::heat_factor(g, dt);
  const FieldPair x{s.u, s.d};
  auto N = [&](const FieldPair& y) { return nonlinear_terms(y.u, y.d, cfg); };
  FieldPair next;
  if (cfg.scheme == Scheme::if_euler) {
    next = detail::apply_factor(detail::lincomb(x, dt, N(x)), E);
  } else {
    const auto E2 = detail::heat_factor(g, 0.5 * dt);
    const FieldPair a = N(x);
    const FieldPair ex = detail::apply_factor(x, E);
    const FieldPair e2x = detail::apply_factor(x, E2);
    const FieldPair b = N(detail::apply_factor(detail::lincomb(x, 0.5 * dt, a), E2));
    const FieldPair c = N(detail::lincomb(e2x, 0.5 * dt, b));
    const FieldPair dd = N(detail::lincomb(ex, dt, detail::apply_factor(c, E2)));
    // E a + 2 E2 (b + c) + dd
    FieldPair acc = detail::apply_factor(a, E);
    FieldPair bc = detail::lincomb(b, 1.0, c);
    acc = detail::lincomb(acc, 2.0, detail::apply_factor(bc, E2));
    acc = detail::lincomb(acc, 1.0, dd);
    next = detail::lincomb(ex, dt / 6.0, acc);
  }
  if (!next.u.all_finite() || !next.d.all_finite())
    throw SolverHalt("solver: non-finite values at t = " + std::to_string(s.t + dt), s);
  if (cfg.renormalize_director) detail::renormalize(next.d);
  SolverState out{s.t + dt, std::move(next.u), std::move(next.d), s.step_count + 1, {}};
  out.diagnostics = compute_diagnostics(out, dt);
  return out;
}

/// One adaptive step; `t_cap` (if finite) keeps the step from overshooting.
inline SolverState step(const SolverState& s, const SolverConfig& cfg,
                        double t_cap = std::numeric_limits<double>::infinity()) {
  double dt = choose_dt(s, cfg);
  if (s.t + dt > t_cap) dt = t_cap - s.t;
  return step_fixed(s, cfg, dt);
}

/// Steps until t_end exactly (the final step is shortened to land on it).
template <class Observer>
SolverState advance_to(SolverState s, const SolverConfig& cfg, double t_end, Observer&& observe) {
  while (s.t < t_end * (1.0 - 1e-14)) {
    s = step(s, cfg, t_end);
    if (t_end - s.t < 1e-12 * std::max(1.0, t_end)) s.t = t_end;
    observe(s);
  }
  return s;
}

inline SolverState advance_to(SolverState s, const SolverConfig& cfg, double t_end) {
  return advance_to(std::move(s), cfg, t_end, [](const SolverState&) {});
}

// ---------------------------------------------------------------------------
// Time derivatives from spatial operators (no differencing in t).

enum class DerivedField { velocity, director_gradient };

struct TimeDerivatives {
  FieldPair order1;  // (u_t, d_t)
  FieldPair order2;  // (u_tt, d_tt)
};

inline TimeDerivatives time_derivatives(const SolverState& s, const SolverConfig& cfg, int k_max) {
  TimeDerivatives td;
  const bool da = cfg.dealias;
  const auto ps = physical_state(s.u, s.d, da);
  FieldPair F = nonlinear_terms(s.u, s.d, cfg);
  td.order1 = {laplacian(s.u) + F.u, laplacian(s.d) + F.d};
  if (k_max < 2) return td;
  FieldPair dF{SpectralField(s.u.grid(), s.u.components()), SpectralField(s.d.grid(), 3)};
  if (cfg.nonlinearity) {
    const auto pt = physical_state(td.order1.u, td.order1.d, da);
    dF.u = momentum_bilinear(pt, ps, da) + momentum_bilinear(ps, pt, da);
    PhysicalField fd(s.u.grid(), 3);
    director_accumulate(fd, 2.0, ps, pt, ps);  // 2 (grad d : grad d_t) d
    director_accumulate(fd, 1.0, ps, ps, pt);  // |grad d|^2 d_t
    advection_accumulate(fd, 1.0, pt, ps);     // -(u_t . grad) d
    advection_accumulate(fd, 1.0, ps, pt);     // -(u . grad) d_t
    dF.d = to_spectral(fd);
    if (da) apply_dealias(dF.d);
  }
  td.order2 = {laplacian(td.order1.u) + dF.u, laplacian(td.order1.d) + dF.d};
  return td;
}

/// d_t^k grad^m of u, or of grad d, for k in {0, 1, 2}.
inline SpectralField time_derivative(const SolverState& s, const SolverConfig& cfg, int k, int m,
                                     DerivedField which) {
  if (k < 0 || k > 2) throw std::invalid_argument("time_derivative: k must be 0, 1 or 2");
  if (m < 0) throw std::invalid_argument("time_derivative: m must be >= 0");
  SpectralField base;
  if (k == 0) {
    base = which == DerivedField::velocity ? s.u : s.d;
  } else {
    const auto td = time_derivatives(s, cfg, k);
    const FieldPair& fp = k == 1 ? td.order1 : td.order2;
    base = which == DerivedField::velocity ? fp.u : fp.d;
  }
  if (which == DerivedField::director_gradient) base = gradient(base);
  return gradient_power(base, m);
}

// ---------------------------------------------------------------------------
// Picard iteration on the Duhamel system.

struct PicardReport {
  std::vector<double> distances;  // distance between iterates k and k-1, k = 1, 2, ...
  std::vector<double> ratios;     // distances[k] / distances[k-1]
  bool aborted = false;
  std::string message;
  std::vector<SolverState> series;  // final iterate on the time slices
};

namespace detail {

/// (1 - e^{-z}) / z and (z - 1 + e^{-z}) / z^2, stable for small z.
inline std::pair<double, double> exp_weights(double z) {
  if (z < 1e-4) return {1.0 - z / 2.0 + z * z / 6.0, 0.5 - z / 6.0 + z * z / 24.0};
  const double em = std::exp(-z);
  return {(1.0 - em) / z, (z - 1.0 + em) / (z * z)};
}

}  // namespace detail

/// Iterates (u, d)_{k+1} = heat flow of data + Duhamel integral of the
/// nonlinearity of (u, d)_k, starting from zero, on `slices` uniform time
/// slices of [0, T]. The Duhamel integral is exact per mode for a nonlinearity
/// that is linear in t on each slice. Distance: sup over slices of
/// ||du||_{B^-1_inf,inf} + ||dd||_{B^0_inf,inf}.
inline PicardReport picard_solve(const SpectralField& u0, const SpectralField& d0, double T, int n_iters,
                                 const SolverConfig& cfg, int slices = 64) {
  if (!(T > 0.0)) throw std::invalid_argument("picard_solve: T must be > 0");
  if (n_iters < 1 || slices < 1) throw std::invalid_argument("picard_solve: need n_iters, slices >= 1");
  const Grid& g = u0.grid();
  const DyadicPartition P = build_partition(g);
  auto lat = lattice(g);
  const double h = T / slices;
  const std::size_t np = g.size();
  std::vector<double> decay(np), w1(np), w2(np);
  for (std::size_t p = 0; p < np; ++p) {
    const double z = lat->norm2[p] * h;
    const auto [a, b] = detail::exp_weights(z);
    decay[p] = std::exp(-z);
    w1[p] = a * h;
    w2[p] = b * h;
  }

  std::vector<FieldPair> linear;
  for (int i = 0; i <= slices; ++i) linear.push_back({heat_semigroup(u0, i * h), heat_semigroup(d0, i * h)});
  std::vector<FieldPair> cur(static_cast<std::size_t>(slices) + 1,
                             FieldPair{SpectralField(g, u0.components()), SpectralField(g, 3)});

  PicardReport rep;
  int growth = 0;
  for (int it = 0; it < n_iters; ++it) {
    std::vector<FieldPair> N;
    N.reserve(cur.size());
    for (const auto& x : cur) N.push_back(nonlinear_terms(x.u, x.d, cfg));
    std::vector<FieldPair> next = linear;
    FieldPair I{SpectralField(g, u0.components()), SpectralField(g, 3)};
    for (int i = 1; i <= slices; ++i) {
      auto update = [&](SpectralField& acc, const SpectralField& prev, const SpectralField& now) {
        for (int c = 0; c < acc.components(); ++c) {
          auto a = acc.component(c);
          auto n0 = prev.component(c);
          auto n1 = now.component(c);
          for (std::size_t p = 0; p < np; ++p)
            a[p] = decay[p] * a[p] + w1[p] * n0[p] + w2[p] * (n1[p] - n0[p]);
        }
      };
      update(I.u, N[i - 1].u, N[i].u);
      update(I.d, N[i - 1].d, N[i].d);
      next[i].u += I.u;
      next[i].d += I.d;
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double du = besov_norm(next[i].u - cur[i].u, P, {-1.0, Lebesgue::inf, Lebesgue::inf});
      const double dd = besov_norm(next[i].d - cur[i].d, P, {0.0, Lebesgue::inf, Lebesgue::inf});
      dist = std::max(dist, du + dd);
    }
    if (!std::isfinite(dist)) {
      rep.aborted = true;
      rep.message = "non-finite iterate distance";
      break;
    }
    if (!rep.distances.empty()) {
      rep.ratios.push_back(rep.distances.back() > 0.0 ? dist / rep.distances.back() : 0.0);
      growth = dist > rep.distances.back() ? growth + 1 : 0;
    }
    rep.distances.push_back(dist);
    cur = std::move(next);
    if (growth >= 3) {
      rep.aborted = true;
      rep.message = "iterate distances grew over 3 consecutive iterations";
      break;
    }
  }
  for (int i = 0; i <= slices; ++i) {
    SolverState s{i * h, cur[i].u, cur[i].d, i, {}};
    s.diagnostics = compute_diagnostics(s, h);
    rep.series.push_back(std::move(s));
  }
  return rep;
}

}  // namespace nlc
