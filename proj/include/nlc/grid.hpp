#pragma once

// Periodic box [0,L)^n sampled by N points per axis, and the frequency
// lattice tables shared by every spectral operation.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace nlc {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Grid {
  int n_dims = 2;
  int points = 64;
  double period = kTwoPi * 16.0;

  static Grid make(int n_dims, int points, double period) {
    Grid g{n_dims, points, period};
    g.validate();
    return g;
  }

  void validate() const {
    if (n_dims != 2 && n_dims != 3)
      throw std::invalid_argument("grid: n_dims must be 2 or 3, got " + std::to_string(n_dims));
    if (points < 16 || (points & (points - 1)) != 0)
      throw std::invalid_argument("grid: points_per_dim must be a power of two >= 16, got " +
                                  std::to_string(points));
    if (!(period > 0.0) || !std::isfinite(period))
      throw std::invalid_argument("grid: period must be positive and finite");
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < n_dims; ++a) s *= static_cast<std::size_t>(points);
    return s;
  }

  double spacing() const { return period / points; }
  double cell_volume() const { return std::pow(spacing(), n_dims); }
  double fundamental() const { return kTwoPi / period; }

  /// Signed lattice index of storage position i along one axis (FFT order).
  int signed_index(int i) const { return i < points / 2 ? i : i - points; }

  /// Largest |k_a| retained by the 2/3 rule.
  int dealias_limit() const { return points / 3; }

  bool operator==(const Grid& o) const {
    return n_dims == o.n_dims && points == o.points && period == o.period;
  }
};

/// Precomputed per-point lattice data. Flat index is row-major with axis 0
/// outermost: flat = ((i0 * N) + i1) * N + i2.
struct LatticeTables {
  std::array<std::vector<double>, 3> xi;  // physical wavenumber per axis
  std::array<std::vector<int>, 3> k;      // signed lattice index per axis
  std::vector<double> norm2;              // |xi|^2
  std::vector<double> norm;               // |xi|
  std::vector<unsigned char> dealias;     // 1 where all |k_a| <= N/3
  std::vector<unsigned char> nyquist;     // 1 where some k_a == -N/2
  std::vector<std::size_t> mirror;        // flat index of -k
};

namespace detail {

inline std::shared_ptr<const LatticeTables> build_tables(const Grid& g) {
  auto t = std::make_shared<LatticeTables>();
  const std::size_t total = g.size();
  const int n = g.points;
  for (int a = 0; a < g.n_dims; ++a) {
    t->xi[a].resize(total);
    t->k[a].resize(total);
  }
  t->norm2.resize(total);
  t->norm.resize(total);
  t->dealias.resize(total);
  t->nyquist.resize(total);
  t->mirror.resize(total);
  const int kc = g.dealias_limit();
  const double k0 = g.fundamental();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    std::array<int, 3> idx{0, 0, 0};
    for (int a = g.n_dims - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    double s2 = 0.0;
    bool keep = true;
    bool nyq = false;
    std::size_t mir = 0;
    for (int a = 0; a < g.n_dims; ++a) {
      const int ks = g.signed_index(idx[a]);
      t->k[a][flat] = ks;
      const double x = k0 * ks;
      t->xi[a][flat] = x;
      s2 += x * x;
      keep = keep && std::abs(ks) <= kc;
      nyq = nyq || ks == -n / 2;
      mir = mir * n + static_cast<std::size_t>((n - idx[a]) % n);
    }
    t->norm2[flat] = s2;
    t->norm[flat] = std::sqrt(s2);
    t->dealias[flat] = keep ? 1 : 0;
    t->nyquist[flat] = nyq ? 1 : 0;
    t->mirror[flat] = mir;
  }
  return t;
}

}  // namespace detail

/// Shared, immutable lattice tables for a grid (built once per grid shape).
inline std::shared_ptr<const LatticeTables> lattice(const Grid& g) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const LatticeTables>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_tuple(g.n_dims, g.points, g.period);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = detail::build_tables(g);
  cache.emplace(key, t);
  return t;
}

/// Physical coordinate of grid point `flat` along `axis`.
inline double grid_coordinate(const Grid& g, std::size_t flat, int axis) {
  std::size_t stride = 1;
  for (int a = g.n_dims - 1; a > axis; --a) stride *= static_cast<std::size_t>(g.points);
  return static_cast<double>((flat / stride) % static_cast<std::size_t>(g.points)) * g.spacing();
}

inline std::size_t flat_index(const Grid& g, const std::array<int, 3>& idx) {
  std::size_t flat = 0;
  for (int a = 0; a < g.n_dims; ++a) {
    const int i = ((idx[a] % g.points) + g.points) % g.points;
    flat = flat * g.points + static_cast<std::size_t>(i);
  }
  return flat;
}

/// Minimal-image distance vector component on the torus.
inline double periodic_offset(double d, double period) {
  return d - period * std::round(d / period);
}

}  // namespace nlc
