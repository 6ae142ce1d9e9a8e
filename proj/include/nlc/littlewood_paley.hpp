#pragma once

// Dyadic frequency decomposition on the discrete lattice and the Besov /
// Chemin-Lerner norms built on it. All norms here are band-limited: only the
// shells j_min..j_max resolvable on the grid participate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlc/field.hpp"

namespace nlc {

namespace cutoff {

/// C-infinity step: 1 for s <= 0, 0 for s >= 1.
inline double smooth_step_down(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - s));
  const double b = std::exp(-1.0 / s);
  return a / (a + b);
}

inline constexpr double kInner = 3.0 / 4.0;
inline constexpr double kOuter = 8.0 / 3.0;
inline constexpr double kWideInner = 3.0 / 8.0;
inline constexpr double kWideOuter = 10.0 / 3.0;

/// Radial low-pass profile: 1 on [0, 3/4], 0 beyond 4/3.
inline double chi(double r) { return smooth_step_down((r - kInner) / (4.0 / 3.0 - kInner)); }

/// Annular cutoff supported in 3/4 <= r <= 8/3; its dyadic dilates telescope to 1.
inline double phi(double r) { return chi(0.5 * r) - chi(r); }

/// Enlarged cutoff supported in 3/8 <= r <= 10/3 and identically 1 on the
/// support of phi.
inline double phi_wide(double r) {
  const double rise = 1.0 - smooth_step_down((r - kWideInner) / (kInner - kWideInner));
  const double fall = smooth_step_down((r - kOuter) / (kWideOuter - kOuter));
  return rise * fall;
}

}  // namespace cutoff

enum class Lebesgue { one, two, inf };

inline std::string to_string(Lebesgue p) {
  switch (p) {
    case Lebesgue::one: return "1";
    case Lebesgue::two: return "2";
    default: return "inf";
  }
}

inline double reciprocal(Lebesgue p) {
  switch (p) {
    case Lebesgue::one: return 1.0;
    case Lebesgue::two: return 0.5;
    default: return 0.0;
  }
}

struct BesovIndex {
  double s = -1.0;
  Lebesgue p = Lebesgue::inf;
  Lebesgue r = Lebesgue::inf;
};

/// Realized partition phi(2^-j xi) on the lattice for j in [j_min, j_max].
struct DyadicPartition {
  Grid grid;
  int j_min = 0;
  int j_max = 0;
  std::vector<std::vector<double>> weights;  // [j - j_min][flat]

  int shells() const { return j_max - j_min + 1; }
  bool contains(int j) const { return j >= j_min && j <= j_max; }
  const std::vector<double>& shell(int j) const {
    if (!contains(j))
      throw std::out_of_range("partition: shell " + std::to_string(j) + " outside [" +
                              std::to_string(j_min) + ", " + std::to_string(j_max) + "]");
    return weights[static_cast<std::size_t>(j - j_min)];
  }
};

/// `renormalize` divides each lattice point by the sum of realized shell
/// weights so the identity sum_j phi_j = 1 holds to rounding on the covered
/// band. Turning it off exists only to exercise the verification suite.
inline DyadicPartition build_partition(const Grid& g, bool renormalize = true) {
  g.validate();
  auto lat = lattice(g);
  const double xi_min = g.fundamental();
  const double xi_cut = g.fundamental() * g.dealias_limit();

  DyadicPartition P;
  P.grid = g;
  // Smallest j whose annulus holds a lattice point: 3/4 < 2^-j |xi| < 8/3.
  int jlo = static_cast<int>(std::floor(std::log2(xi_min))) - 3;
  while (!(cutoff::phi(std::ldexp(xi_min, -jlo)) > 0.0)) ++jlo;
  P.j_min = jlo;
  P.j_max = static_cast<int>(std::floor(std::log2(xi_cut)));
  if (P.shells() < 4)
    throw std::invalid_argument("build_partition: grid too coarse, only " +
                                std::to_string(std::max(P.shells(), 0)) +
                                " dyadic shells resolvable (need >= 4)");

  const std::size_t total = g.size();
  P.weights.assign(static_cast<std::size_t>(P.shells()), std::vector<double>(total, 0.0));
  std::vector<double> sum(total, 0.0);
  for (int j = P.j_min; j <= P.j_max; ++j) {
    auto& w = P.weights[static_cast<std::size_t>(j - P.j_min)];
    for (std::size_t i = 0; i < total; ++i) {
      const double r = lat->norm[i];
      if (r == 0.0) continue;
      w[i] = cutoff::phi(std::ldexp(r, -j));
      sum[i] += w[i];
    }
  }
  if (renormalize) {
    for (auto& w : P.weights)
      for (std::size_t i = 0; i < total; ++i)
        if (sum[i] > 0.0) w[i] /= sum[i];
  }
  return P;
}

inline SpectralField apply_multiplier(const SpectralField& f, const std::vector<double>& m) {
  SpectralField out = f;
  for (int c = 0; c < f.components(); ++c) {
    auto comp = out.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= m[i];
  }
  return out;
}

/// Delta_j f.
inline SpectralField block(const SpectralField& f, const DyadicPartition& P, int j) {
  if (!(f.grid() == P.grid)) throw std::invalid_argument("block: grid mismatch");
  return apply_multiplier(f, P.shell(j));
}

/// S_j f = mean mode + sum_{k <= j-1} Delta_k f. Above j_max every frequency
/// is retained.
inline SpectralField low_pass(const SpectralField& f, const DyadicPartition& P, int j) {
  if (!(f.grid() == P.grid)) throw std::invalid_argument("low_pass: grid mismatch");
  if (j > P.j_max) return f;
  std::vector<double> m(f.points(), 0.0);
  m[0] = 1.0;
  for (int k = P.j_min; k <= std::min(j - 1, P.j_max); ++k) {
    const auto& w = P.shell(k);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += w[i];
  }
  return apply_multiplier(f, m);
}

/// L^p norm of the pointwise Euclidean magnitude, Riemann-sum quadrature.
inline double lebesgue_norm(const PhysicalField& v, Lebesgue p) {
  const auto mag = v.magnitude();
  switch (p) {
    case Lebesgue::inf: {
      double m = 0.0;
      for (double x : mag) m = std::max(m, x);
      return m;
    }
    case Lebesgue::one: {
      double s = 0.0;
      for (double x : mag) s += x;
      return s * v.grid.cell_volume();
    }
    case Lebesgue::two: {
      double s = 0.0;
      for (double x : mag) s += x * x;
      return std::sqrt(s * v.grid.cell_volume());
    }
  }
  return 0.0;
}

/// ||Delta_j f||_{L^p} for every resolvable shell, indexed j - j_min.
inline std::vector<double> block_norms(const SpectralField& f, const DyadicPartition& P,
                                       Lebesgue p) {
  std::vector<double> out(static_cast<std::size_t>(P.shells()));
  for (int j = P.j_min; j <= P.j_max; ++j)
    out[static_cast<std::size_t>(j - P.j_min)] = lebesgue_norm(to_physical(block(f, P, j)), p);
  return out;
}

/// Combines per-shell norms with weights 2^{js} in l^r (fixed summation order).
inline double combine_shells(const std::vector<double>& norms, int j_min, double s, Lebesgue r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const double v = std::pow(2.0, s * (j_min + static_cast<int>(i))) * norms[i];
    switch (r) {
      case Lebesgue::inf: acc = std::max(acc, v); break;
      case Lebesgue::one: acc += v; break;
      case Lebesgue::two: acc += v * v; break;
    }
  }
  return r == Lebesgue::two ? std::sqrt(acc) : acc;
}

inline double besov_norm(const SpectralField& f, const DyadicPartition& P, const BesovIndex& idx) {
  return combine_shells(block_norms(f, P, idx.p), P.j_min, idx.s, idx.r);
}

enum class TimeNorm { one, inf };

struct TimedField {
  double t = 0.0;
  SpectralField field;
};

/// Chemin-Lerner norm from per-time block norms (per_time[i][j] = ||Delta_j f(times[i])||_p):
/// time L^rho per shell first, then the weighted l^r sum. rho = 1 uses trapezoidal quadrature.
inline double chemin_lerner_from_blocks(const std::vector<double>& times,
                                        const std::vector<std::vector<double>>& per_time, int j_min, double s,
                                        Lebesgue r, TimeNorm rho, double horizon) {
  if (times.empty() || times.size() != per_time.size())
    throw std::invalid_argument("chemin_lerner_norm: empty series or size mismatch");
  if (rho == TimeNorm::one && times.size() < 2)
    throw std::invalid_argument("chemin_lerner_norm: rho = 1 needs at least 2 samples");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > horizon)
      throw std::invalid_argument("chemin_lerner_norm: sample time outside [0, T]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("chemin_lerner_norm: times must increase strictly");
    if (per_time[i].size() != per_time[0].size())
      throw std::invalid_argument("chemin_lerner_norm: ragged block table");
  }
  std::vector<double> per_shell(per_time[0].size(), 0.0);
  for (std::size_t j = 0; j < per_shell.size(); ++j) {
    if (rho == TimeNorm::inf) {
      for (const auto& v : per_time) per_shell[j] = std::max(per_shell[j], v[j]);
    } else {
      double acc = 0.0;
      for (std::size_t i = 1; i < times.size(); ++i)
        acc += 0.5 * (times[i] - times[i - 1]) * (per_time[i][j] + per_time[i - 1][j]);
      per_shell[j] = acc;
    }
  }
  return combine_shells(per_shell, j_min, s, r);
}

inline double chemin_lerner_norm(const std::vector<TimedField>& series, const DyadicPartition& P,
                                 const BesovIndex& idx, TimeNorm rho, double horizon) {
  if (series.empty()) throw std::invalid_argument("chemin_lerner_norm: empty series");
  std::vector<double> times;
  std::vector<std::vector<double>> per_time;
  for (const auto& s : series) {
    times.push_back(s.t);
    per_time.push_back(block_norms(s.field, P, idx.p));
  }
  return chemin_lerner_from_blocks(times, per_time, P.j_min, idx.s, idx.r, rho, horizon);
}

/// Pointwise product of two fields with equal component counts (or one scalar).
inline SpectralField pointwise_product(const SpectralField& f, const SpectralField& g) {
  const int cf = f.components(), cg = g.components();
  if (cf != cg && cf != 1 && cg != 1)
    throw std::invalid_argument("pointwise_product: component counts incompatible");
  const PhysicalField pf = to_physical(f), pg = to_physical(g);
  const int c = std::max(cf, cg);
  PhysicalField out(f.grid(), c);
  for (int k = 0; k < c; ++k) {
    auto a = pf.component(cf == 1 ? 0 : k);
    auto b = pg.component(cg == 1 ? 0 : k);
    auto o = out.component(k);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
  }
  return to_spectral(out);
}

/// Target index of the product law for (idx_f, idx_g): p = max(p_f, p_g),
/// 1/r = 1/r_f + 1/r_g, s = s_f + s_g - n(1/p_f + 1/p_g - 1/p).
inline BesovIndex product_target_index(const BesovIndex& a, const BesovIndex& b, int n_dims) {
  const Lebesgue p = reciprocal(a.p) < reciprocal(b.p) ? a.p : b.p;  // larger exponent
  const double inv_r = reciprocal(a.r) + reciprocal(b.r);
  if (inv_r > 1.0) throw std::invalid_argument("product_estimate: 1/r_f + 1/r_g must be <= 1");
  Lebesgue r = Lebesgue::inf;
  if (inv_r == 1.0) r = Lebesgue::one;
  else if (inv_r == 0.5) r = Lebesgue::two;
  else if (inv_r != 0.0)
    throw std::invalid_argument("product_estimate: summation index outside {1, 2, inf}");
  const double s = a.s + b.s - n_dims * (reciprocal(a.p) + reciprocal(b.p) - reciprocal(p));
  return {s, p, r};
}

/// ||fg|| / (||f|| ||g||) in the product law's target space. Diagnostic only.
inline double product_estimate_ratio(const SpectralField& f, const SpectralField& g,
                                     const DyadicPartition& P, const BesovIndex& idx_f,
                                     const BesovIndex& idx_g) {
  if (!(idx_f.s + idx_g.s > 0.0))
    throw std::invalid_argument("product_estimate_ratio: requires s_f + s_g > 0");
  const double nf = besov_norm(f, P, idx_f);
  const double ng = besov_norm(g, P, idx_g);
  if (nf == 0.0 || ng == 0.0)
    throw std::domain_error("product_estimate_ratio: zero factor norm, ratio undefined");
  SpectralField fg = pointwise_product(f, g);
  apply_dealias(fg);
  const BesovIndex target = product_target_index(idx_f, idx_g, f.grid().n_dims);
  return besov_norm(fg, P, target) / (nf * ng);
}

enum class NormKind { besov_sup, chemin_lerner_l1, x_norm, z_norm };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::besov_sup: return "besov_m1_inf";
    case NormKind::chemin_lerner_l1: return "cl_l1_b1_inf";
    case NormKind::x_norm: return "x";
    case NormKind::z_norm: return "z";
  }
  return "?";
}

/// Time-stamped norm evaluations for one (k, m, kind) triple and one field.
struct NormSeries {
  int k = 0;
  int m = 0;
  NormKind kind = NormKind::besov_sup;
  std::string field = "u";
  bool weighted = false;
  std::vector<std::pair<double, double>> samples;

  void push(double t, double v) {
    if (!samples.empty() && !(t > samples.back().first))
      throw std::invalid_argument("NormSeries: times must increase strictly");
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("NormSeries: bad value");
    samples.emplace_back(t, v);
  }
};

}  // namespace nlc
