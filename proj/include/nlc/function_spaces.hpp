#pragma once

// Carleson-cylinder norms built from the heat extension W(t) = e^{t Lap} f:
// BMO, BMO^-1, and the mixed sup / Carleson norms X (director) and Z (velocity).
//
// Every supremum is discretized: radii are dyadic fractions of the box, centres
// run over a strided sub-lattice, and time integrals use trapezoidal
// quadrature. For the heat-extension norms the time nodes are absolute
// (2^{i/q}, anchored to the grid spacing), so the integral for a given radius
// does not depend on which other radii are in the configuration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nlc/heat.hpp"
#include "nlc/littlewood_paley.hpp"

namespace nlc {

struct CarlesonConfig {
  std::vector<double> radii;    // each L / 2^k, k >= 1, and >= 2 dx
  int center_stride = 1;        // centres on every stride-th grid point per axis
  int samples_per_octave = 8;   // heat-time nodes per doubling of t

  /// L/2, L/4, ... down to the smallest radius >= 2 dx.
  static CarlesonConfig standard(const Grid& g, int stride = 1, int per_octave = 8) {
    CarlesonConfig c;
    c.center_stride = stride;
    c.samples_per_octave = per_octave;
    for (double r = 0.5 * g.period; r >= 2.0 * g.spacing() * (1.0 - 1e-12); r *= 0.5) c.radii.push_back(r);
    return c;
  }

  void validate(const Grid& g) const {
    if (radii.empty()) throw std::invalid_argument("carleson: radii list is empty");
    if (center_stride < 1 || g.points % center_stride != 0)
      throw std::invalid_argument("carleson: center_stride must divide points_per_dim");
    if (samples_per_octave < 1) throw std::invalid_argument("carleson: samples_per_octave must be >= 1");
    for (double r : radii) {
      if (r < 2.0 * g.spacing() * (1.0 - 1e-12))
        throw std::invalid_argument("carleson: radius below two grid spacings");
      const double k = std::log2(g.period / r);
      if (k < 1.0 - 1e-9 || std::abs(k - std::round(k)) > 1e-9)
        throw std::invalid_argument("carleson: radii must be L/2^k with k >= 1");
    }
  }
};

namespace detail {

/// Spectrum of the indicator of the periodic ball |y| < r, scaled by L^n so
/// that to_physical(fhat * ball) is the ball sum  sum_{|y-x|<r} f(y) dx^n.
inline std::vector<cplx> ball_spectrum(const Grid& g, double r) {
  PhysicalField ind(g, 1);
  auto v = ind.component(0);
  const auto dist = distance_from_origin(g);
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = dist[p] < r ? 1.0 : 0.0;
  SpectralField s = to_spectral(ind);
  const double vol = std::pow(g.period, g.n_dims);
  std::vector<cplx> out(s.points());
  auto c = s.component(0);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = c[p] * vol;
  return out;
}

inline bool is_center(const Grid& g, std::size_t flat, int stride) {
  if (stride == 1) return true;
  for (int a = g.n_dims - 1; a >= 0; --a) {
    if ((flat % static_cast<std::size_t>(g.points)) % static_cast<std::size_t>(stride) != 0) return false;
    flat /= static_cast<std::size_t>(g.points);
  }
  return true;
}

/// max over centres of the ball average r^-n * int_{B(x,r)} I.
inline double ball_sup(const Grid& g, const std::vector<double>& integral, double r, int stride) {
  PhysicalField pf(g, 1);
  std::copy(integral.begin(), integral.end(), pf.values.begin());
  SpectralField s = to_spectral(pf);
  const auto ball = ball_spectrum(g, r);
  auto c = s.component(0);
  for (std::size_t p = 0; p < c.size(); ++p) c[p] *= ball[p];
  const PhysicalField conv = to_physical(s);
  double best = 0.0;
  for (std::size_t p = 0; p < conv.values.size(); ++p)
    if (is_center(g, p, stride)) best = std::max(best, conv.values[p]);
  return std::max(best, 0.0) / std::pow(r, g.n_dims);
}

using DensityAtNode = std::function<std::vector<double>(std::size_t)>;
using DensityAt = std::function<std::vector<double>(double)>;

/// sup over configured radii and centres of (r^-n int_{t_0}^{r^2} int_B density)^{1/2}.
/// `nodes` ascending; radii with r^2 beyond the last node or at/below the
/// first one are skipped. Returns 0 when no radius qualifies.
inline double carleson_sup(const Grid& g, const CarlesonConfig& cfg, const std::vector<double>& nodes,
                           const DensityAtNode& at_node, const DensityAt& at_time, int* radii_used = nullptr) {
  std::vector<double> radii = cfg.radii;
  std::sort(radii.begin(), radii.end());
  std::vector<double> cum(g.size(), 0.0);
  std::vector<double> prev = at_node(0);
  std::size_t ri = 0;
  while (ri < radii.size() && radii[ri] * radii[ri] <= nodes.front()) ++ri;
  double best = 0.0;
  int used = 0;
  for (std::size_t i = 1; i < nodes.size() && ri < radii.size(); ++i) {
    // Close off every radius whose r^2 falls in (nodes[i-1], nodes[i]].
    while (ri < radii.size() && radii[ri] * radii[ri] <= nodes[i]) {
      const double r2 = radii[ri] * radii[ri];
      const double h = r2 - nodes[i - 1];
      std::vector<double> part = cum;
      if (h > 0.0) {
        const auto end = at_time(r2);
        for (std::size_t p = 0; p < part.size(); ++p) part[p] += 0.5 * h * (prev[p] + end[p]);
      }
      best = std::max(best, ball_sup(g, part, radii[ri], cfg.center_stride));
      ++used;
      ++ri;
    }
    if (ri >= radii.size()) break;
    const auto cur = at_node(i);
    const double h = nodes[i] - nodes[i - 1];
    for (std::size_t p = 0; p < cum.size(); ++p) cum[p] += 0.5 * h * (prev[p] + cur[p]);
    prev = cur;
  }
  if (radii_used) *radii_used = used;
  return std::sqrt(best);
}

/// Heat-time nodes: 0, then 2^{i/q} from about (2 dx)^2 / 1024 up to the
/// first node >= r_max^2.
inline std::vector<double> heat_nodes(const Grid& g, const CarlesonConfig& cfg) {
  const double q = cfg.samples_per_octave;
  const double t_lo = std::pow(2.0 * g.spacing(), 2) / 1024.0;
  const double r_max = *std::max_element(cfg.radii.begin(), cfg.radii.end());
  std::vector<double> nodes{0.0};
  for (long i = static_cast<long>(std::ceil(q * std::log2(t_lo)));; ++i) {
    const double t = std::exp2(static_cast<double>(i) / q);
    nodes.push_back(t);
    if (t >= r_max * r_max) break;
  }
  return nodes;
}

/// Sum over components of |e^{t Lap} f_c|^2 at each grid point.
inline std::vector<double> heat_density(const SpectralField& f, double t) {
  const PhysicalField w = to_physical(heat_semigroup(f, t));
  std::vector<double> out(f.points(), 0.0);
  for (int c = 0; c < w.components; ++c) {
    auto v = w.component(c);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += v[p] * v[p];
  }
  return out;
}

inline double heat_carleson(const SpectralField& f, const CarlesonConfig& cfg) {
  const Grid& g = f.grid();
  const auto nodes = heat_nodes(g, cfg);
  return carleson_sup(
      g, cfg, nodes, [&](std::size_t i) { return heat_density(f, nodes[i]); },
      [&](double t) { return heat_density(f, t); });
}

}  // namespace detail

/// [f]_BMO: Carleson norm of |grad W|^2. Vector input: max over components.
inline double bmo_seminorm(const SpectralField& f, const CarlesonConfig& cfg) {
  cfg.validate(f.grid());
  double best = 0.0;
  for (int c = 0; c < f.components(); ++c)
    best = std::max(best, detail::heat_carleson(gradient(slice_components(f, c, 1)), cfg));
  return best;
}

/// ||f||_{BMO^-1}: Carleson norm of |W|^2. Vector input: max over components.
inline double bmo_minus1_norm(const SpectralField& f, const CarlesonConfig& cfg) {
  cfg.validate(f.grid());
  double best = 0.0;
  for (int c = 0; c < f.components(); ++c)
    best = std::max(best, detail::heat_carleson(slice_components(f, c, 1), cfg));
  return best;
}

struct MixedNormParts {
  double sup_part = 0.0;       // sup_t sqrt(t) ||g(t)||_inf
  double carleson_part = 0.0;  // sup_{x,r} (r^-n int_0^{r^2} int_B |g|^2)^{1/2}
  int radii_used = 0;          // radii whose cylinder lies inside the sampled time range
  double total() const { return sup_part + carleson_part; }
};

/// Z-type norm of a time series g, piecewise linear in t between samples.
/// The Carleson time integral starts at the first sample.
inline MixedNormParts z_norm_parts(const std::vector<TimedField>& series, const CarlesonConfig& cfg) {
  if (series.empty()) throw std::invalid_argument("z_norm: empty series");
  const Grid& g = series.front().field.grid();
  cfg.validate(g);
  for (std::size_t i = 1; i < series.size(); ++i)
    if (!(series[i].t > series[i - 1].t)) throw std::invalid_argument("z_norm: times must increase strictly");

  std::vector<PhysicalField> phys;
  phys.reserve(series.size());
  MixedNormParts out;
  std::vector<double> nodes;
  for (const auto& s : series) {
    phys.push_back(to_physical(s.field));
    nodes.push_back(s.t);
    if (s.t > 0.0) out.sup_part = std::max(out.sup_part, std::sqrt(s.t) * phys.back().max_abs());
  }
  auto density = [](const PhysicalField& a, const PhysicalField* b, double w) {
    std::vector<double> d(a.grid.size(), 0.0);
    for (int c = 0; c < a.components; ++c) {
      auto va = a.component(c);
      for (std::size_t p = 0; p < d.size(); ++p) {
        const double v = b ? (1.0 - w) * va[p] + w * b->component(c)[p] : va[p];
        d[p] += v * v;
      }
    }
    return d;
  };
  if (series.size() >= 2) {
    out.carleson_part = detail::carleson_sup(
        g, cfg, nodes, [&](std::size_t i) { return density(phys[i], nullptr, 0.0); },
        [&](double t) {
          const auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
          const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - nodes.begin()), nodes.size() - 1);
          const std::size_t lo = hi - 1;
          const double w = (t - nodes[lo]) / (nodes[hi] - nodes[lo]);
          return density(phys[lo], &phys[hi], std::clamp(w, 0.0, 1.0));
        },
        &out.radii_used);
  }
  return out;
}

inline double z_norm(const std::vector<TimedField>& series, const CarlesonConfig& cfg) {
  return z_norm_parts(series, cfg).total();
}

inline std::vector<TimedField> gradient_series(const std::vector<TimedField>& series) {
  std::vector<TimedField> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back({s.t, gradient(s.field)});
  return out;
}

/// X norm of a director series: the Z construction applied to grad d.
inline MixedNormParts x_norm_parts(const std::vector<TimedField>& d_series, const CarlesonConfig& cfg) {
  if (d_series.empty()) throw std::invalid_argument("x_norm: empty series");
  return z_norm_parts(gradient_series(d_series), cfg);
}

inline double x_norm(const std::vector<TimedField>& d_series, const CarlesonConfig& cfg) {
  return x_norm_parts(d_series, cfg).total();
}

/// |||d|||_X = sup_t ||d||_inf + ||d||_X.
inline double x_norm_full(const std::vector<TimedField>& d_series, const CarlesonConfig& cfg) {
  double sup = 0.0;
  for (const auto& s : d_series) sup = std::max(sup, to_physical(s.field).max_abs());
  return sup + x_norm(d_series, cfg);
}

}  // namespace nlc
