#pragma once

// Small initial data (u0, d0) scaled so that ||u0||_{BMO^-1} = eps/2 and
// [d0]_BMO = eps/2 as measured by the discretized Carleson norms.
//
// gaussian: divergence-free random velocity with energy profile |xi|^4 e^{-|xi|^2/xi0^2};
//           d0 = normalize(e3 + delta w) with w drawn from the same profile.
// critical: band-limited point sources whose spectra decay like
//           |xi|^{1-n} (velocity) and |xi|^{-n} (director perturbation), so every
//           dyadic shell carries a comparable share of the scale-invariant norms.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "nlc/function_spaces.hpp"
#include "nlc/solver.hpp"

namespace nlc {

enum class InitialKind { gaussian, critical };

inline std::string to_string(InitialKind k) { return k == InitialKind::gaussian ? "gaussian" : "critical"; }

struct InitialDataConfig {
  InitialKind kind = InitialKind::gaussian;
  double xi0 = 0.25;         // gaussian: spectral peak sits at sqrt(2) xi0
  int sources = 1;           // critical: number of point sources
  double taper_fraction = 0.5;  // critical: spectrum tapered from taper_fraction * (3/4) of the band edge
  double amplitude_scale = 1.0;  // multiplies both perturbations after scaling to eps

  void validate() const {
    if (!(xi0 > 0.0)) throw std::invalid_argument("initial_data.xi0 must be > 0");
    if (sources < 1) throw std::invalid_argument("initial_data.sources must be >= 1");
    if (!(taper_fraction > 0.0 && taper_fraction <= 1.0))
      throw std::invalid_argument("initial_data.taper_fraction must lie in (0, 1]");
    if (!(amplitude_scale > 0.0)) throw std::invalid_argument("initial_data.amplitude_scale must be > 0");
  }
};

struct InitialData {
  SpectralField u0;
  SpectralField d0;
  double u_bmo_minus1 = 0.0;  // measured after scaling
  double d_bmo = 0.0;
  double delta = 0.0;         // director perturbation amplitude
};

namespace detail {

inline SpectralField white_noise(const Grid& g, int comps, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  PhysicalField p(g, comps);
  for (auto& v : p.values) v = nd(rng);
  return to_spectral(p);
}

inline SpectralField shaped_noise(const Grid& g, int comps, double xi0, std::mt19937_64& rng) {
  SpectralField f = white_noise(g, comps, rng);
  auto lat = lattice(g);
  std::vector<double> amp(g.size(), 0.0);
  for (std::size_t p = 1; p < amp.size(); ++p)
    if (lat->dealias[p]) amp[p] = lat->norm2[p] * std::exp(-0.5 * lat->norm2[p] / (xi0 * xi0));
  return apply_multiplier(f, amp);
}

/// sum_v a_v e^{-i xi.x_v} |xi|^{-power} taper(|xi|) for random positions x_v and
/// random vectors a_v (first `active` components nonzero).
inline SpectralField point_sources(const Grid& g, int comps, int active, int count, double power,
                                   double taper_fraction, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, g.period);
  std::normal_distribution<double> nd;
  auto lat = lattice(g);
  const double edge = g.fundamental() * g.dealias_limit();
  SpectralField f(g, comps);
  for (int v = 0; v < count; ++v) {
    double x[3] = {0, 0, 0};
    for (int a = 0; a < g.n_dims; ++a) x[a] = pos(rng);
    double w[3] = {0, 0, 0};
    for (int c = 0; c < active; ++c) w[c] = nd(rng);
    for (std::size_t p = 1; p < g.size(); ++p) {
      if (!lat->dealias[p]) continue;
      const double taper = cutoff::chi(lat->norm[p] / (taper_fraction * edge));
      if (taper == 0.0) continue;
      double phase = 0.0;
      for (int a = 0; a < g.n_dims; ++a) phase -= lat->xi[a][p] * x[a];
      const cplx e = std::polar(taper * std::pow(lat->norm[p], -power), phase);
      for (int c = 0; c < active; ++c) f.component(c)[p] += w[c] * e;
    }
  }
  return f;
}

inline SpectralField director_from(const SpectralField& w, double delta) {
  PhysicalField p = to_physical(delta * w);
  auto z = p.component(2);
  for (auto& v : z) v += 1.0;
  const auto mag = p.magnitude();
  for (int c = 0; c < 3; ++c) {
    auto v = p.component(c);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] /= mag[i];
  }
  return to_spectral(p);
}

}  // namespace detail

inline InitialData make_initial_data(const Grid& g, const InitialDataConfig& cfg, double epsilon, std::uint64_t seed,
                                     const CarlesonConfig& carleson) {
  cfg.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("initial data: epsilon must be > 0");
  std::mt19937_64 rng(seed);
  const int n = g.n_dims;
  SpectralField u_raw, w_raw;
  if (cfg.kind == InitialKind::gaussian) {
    u_raw = leray_project(detail::shaped_noise(g, n, cfg.xi0, rng));
    w_raw = detail::shaped_noise(g, 3, cfg.xi0, rng);
    for (auto& c : w_raw.component(2)) c = 0.0;
  } else {
    u_raw = leray_project(detail::point_sources(g, n, n, cfg.sources, n - 1.0, cfg.taper_fraction, rng));
    w_raw = detail::point_sources(g, 3, 2, cfg.sources, static_cast<double>(n), cfg.taper_fraction, rng);
  }

  InitialData out;
  const double target = 0.5 * epsilon;
  out.u0 = (cfg.amplitude_scale * target / bmo_minus1_norm(u_raw, carleson)) * u_raw;
  out.u_bmo_minus1 = bmo_minus1_norm(out.u0, carleson);

  // Secant iteration on delta for [normalize(e3 + delta w)]_BMO = amplitude_scale * eps/2.
  const double goal = cfg.amplitude_scale * target;
  auto residual = [&](double delta) { return bmo_seminorm(detail::director_from(w_raw, delta), carleson) - goal; };
  double x0 = goal / bmo_seminorm(w_raw, carleson);
  double f0 = residual(x0);
  double x1 = x0 * (1.0 - f0 / (f0 + goal));
  double f1 = residual(x1);
  for (int it = 0; it < 8 && std::abs(f1) > 1e-9 * goal && f1 != f0; ++it) {
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = residual(x1);
  }
  out.delta = x1;
  out.d0 = detail::director_from(w_raw, x1);
  out.d_bmo = f1 + goal;
  return out;
}

}  // namespace nlc
