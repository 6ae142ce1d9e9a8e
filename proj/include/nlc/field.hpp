#pragma once

// Multi-component fields stored as Fourier coefficients on the periodic grid.
//
// Convention: f(x) = sum_k fhat(k) exp(i xi_k . x), so the coefficient of a
// real cosine of amplitude A is A/2 at +k and at -k. Components are stored
// one after another (component-major); inside a component the lattice is
// row-major in FFT order.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlc/fft.hpp"
#include "nlc/grid.hpp"

namespace nlc {

using cplx = std::complex<double>;

/// Real samples on the grid, component-major.
struct PhysicalField {
  Grid grid;
  int components = 1;
  std::vector<double> values;

  PhysicalField() = default;
  PhysicalField(const Grid& g, int c) : grid(g), components(c), values(g.size() * c, 0.0) {}

  std::span<double> component(int c) { return {values.data() + c * grid.size(), grid.size()}; }
  std::span<const double> component(int c) const {
    return {values.data() + c * grid.size(), grid.size()};
  }

  /// Euclidean magnitude over components at each grid point.
  std::vector<double> magnitude() const {
    const std::size_t n = grid.size();
    std::vector<double> m(n, 0.0);
    for (int c = 0; c < components; ++c) {
      const double* v = values.data() + c * n;
      for (std::size_t i = 0; i < n; ++i) m[i] += v[i] * v[i];
    }
    for (auto& x : m) x = std::sqrt(x);
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : magnitude()) m = std::max(m, v);
    return m;
  }
};

class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const Grid& g, int components) : grid_(g), components_(components) {
    if (components < 1) throw std::invalid_argument("field: component count must be >= 1");
    g.validate();
    coef_.assign(g.size() * static_cast<std::size_t>(components), cplx{0.0, 0.0});
  }

  const Grid& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t points() const { return grid_.size(); }

  std::span<cplx> component(int c) { return {coef_.data() + c * points(), points()}; }
  std::span<const cplx> component(int c) const {
    return {coef_.data() + c * points(), points()};
  }
  std::span<cplx> data() { return coef_; }
  std::span<const cplx> data() const { return coef_; }

  SpectralField& operator+=(const SpectralField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += o.coef_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] -= o.coef_[i];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& c : coef_) c *= a;
    return *this;
  }
  /// this += a * o
  void axpy(double a, const SpectralField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += a * o.coef_[i];
  }

  bool all_finite() const {
    return std::all_of(coef_.begin(), coef_.end(), [](const cplx& c) {
      return std::isfinite(c.real()) && std::isfinite(c.imag());
    });
  }

  double max_coefficient() const {
    double m = 0.0;
    for (const auto& c : coef_) m = std::max(m, std::abs(c));
    return m;
  }

  void check_compatible(const SpectralField& o) const {
    if (!(grid_ == o.grid_) || components_ != o.components_)
      throw std::invalid_argument("field: incompatible grid or component count");
  }

 private:
  Grid grid_;
  int components_ = 0;
  std::vector<cplx> coef_;
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(double s, SpectralField a) { return a *= s; }

inline PhysicalField to_physical(const SpectralField& f) {
  if (!f.all_finite()) throw std::domain_error("to_physical: non-finite spectral coefficient");
  const Grid& g = f.grid();
  PhysicalField out(g, f.components());
  const auto& plan = fft_plan(g);
  std::vector<cplx> buf(g.size());
  for (int c = 0; c < f.components(); ++c) {
    auto src = f.component(c);
    std::copy(src.begin(), src.end(), buf.begin());
    plan.backward(buf);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = buf[i].real();
  }
  return out;
}

inline SpectralField to_spectral(const PhysicalField& p) {
  const Grid& g = p.grid;
  SpectralField out(g, p.components);
  const auto& plan = fft_plan(g);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (int c = 0; c < p.components; ++c) {
    auto src = p.component(c);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = cplx{src[i], 0.0};
    plan.forward(dst);
    for (auto& v : dst) v *= scale;
  }
  return out;
}

/// Sets a real cosine A cos(xi_k . x + phase) in component c (adds to any
/// existing content at +-k).
inline void add_cosine_mode(SpectralField& f, int c, const std::array<int, 3>& k, double amplitude,
                            double phase = 0.0) {
  const Grid& g = f.grid();
  auto comp = f.component(c);
  std::array<int, 3> mk{-k[0], -k[1], -k[2]};
  const std::size_t p = flat_index(g, k);
  const std::size_t m = flat_index(g, mk);
  const cplx half = 0.5 * amplitude * std::polar(1.0, phase);
  if (p == m) {
    comp[p] += cplx{amplitude * std::cos(phase), 0.0};
  } else {
    comp[p] += half;
    comp[m] += std::conj(half);
  }
}

/// Largest violation of fhat(-k) = conj(fhat(k)).
inline double hermitian_defect(const SpectralField& f) {
  auto lat = lattice(f.grid());
  double worst = 0.0;
  for (int c = 0; c < f.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i)
      worst = std::max(worst, std::abs(comp[lat->mirror[i]] - std::conj(comp[i])));
  }
  return worst;
}

/// m-th derivative along one axis: repeated multiplication by i xi_axis.
/// The Nyquist plane carries no resolvable derivative and is zeroed.
inline SpectralField derivative(const SpectralField& f, int axis, int order = 1) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.n_dims) throw std::invalid_argument("derivative: axis out of range");
  if (order < 1) throw std::invalid_argument("derivative: order must be >= 1");
  auto lat = lattice(g);
  SpectralField out = f;
  const auto& xi = lat->xi[axis];
  const auto& kk = lat->k[axis];
  for (int c = 0; c < f.components(); ++c) {
    auto comp = out.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) {
      if (kk[i] == -g.points / 2) {
        comp[i] = 0.0;
        continue;
      }
      const cplx ik{0.0, xi[i]};
      for (int m = 0; m < order; ++m) comp[i] *= ik;
    }
  }
  return out;
}

/// Component c*n + a holds d f_c / d x_a.
inline SpectralField gradient(const SpectralField& f) {
  const Grid& g = f.grid();
  const int n = g.n_dims;
  SpectralField out(g, f.components() * n);
  auto lat = lattice(g);
  for (int c = 0; c < f.components(); ++c) {
    auto src = f.component(c);
    for (int a = 0; a < n; ++a) {
      auto dst = out.component(c * n + a);
      const auto& xi = lat->xi[a];
      const auto& kk = lat->k[a];
      for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = kk[i] == -g.points / 2 ? cplx{0.0, 0.0} : cplx{0.0, xi[i]} * src[i];
    }
  }
  return out;
}

/// All m-th order partial derivatives (ordered index tuples, axis-fastest),
/// so the pointwise Euclidean norm of the result is |nabla^m f|.
inline SpectralField gradient_power(const SpectralField& f, int m) {
  SpectralField out = f;
  for (int i = 0; i < m; ++i) out = gradient(out);
  return out;
}

inline SpectralField laplacian(const SpectralField& f) {
  auto lat = lattice(f.grid());
  SpectralField out = f;
  for (int c = 0; c < f.components(); ++c) {
    auto comp = out.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= -lat->norm2[i];
  }
  return out;
}

inline SpectralField divergence(const SpectralField& v) {
  const Grid& g = v.grid();
  if (v.components() != g.n_dims) throw std::invalid_argument("divergence: need n components");
  auto lat = lattice(g);
  SpectralField out(g, 1);
  auto dst = out.component(0);
  for (int a = 0; a < g.n_dims; ++a) {
    auto src = v.component(a);
    for (std::size_t i = 0; i < src.size(); ++i)
      if (lat->k[a][i] != -g.points / 2) dst[i] += cplx{0.0, lat->xi[a][i]} * src[i];
  }
  return out;
}

/// Zeroes modes outside the 2/3-rule band.
inline void apply_dealias(SpectralField& f) {
  auto lat = lattice(f.grid());
  for (int c = 0; c < f.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i)
      if (!lat->dealias[i]) comp[i] = 0.0;
  }
}

/// Copies components [first, first+count).
inline SpectralField slice_components(const SpectralField& f, int first, int count) {
  SpectralField out(f.grid(), count);
  for (int c = 0; c < count; ++c) {
    auto s = f.component(first + c);
    std::copy(s.begin(), s.end(), out.component(c).begin());
  }
  return out;
}

/// (nabla d (.) nabla d)_{ij} = sum_a d_i d^a d_j d^a, component i*n + j.
/// Products are taken pointwise on the grid; no dealiasing is applied here.
inline SpectralField stress_tensor(const SpectralField& d) {
  if (d.components() != 3) throw std::invalid_argument("stress_tensor: director needs 3 components");
  const Grid& g = d.grid();
  const int n = g.n_dims;
  const PhysicalField grad = to_physical(gradient(d));
  PhysicalField out(g, n * n);
  const std::size_t np = g.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      auto dst = out.component(i * n + j);
      for (int a = 0; a < 3; ++a) {
        auto di = grad.component(a * n + i);
        auto dj = grad.component(a * n + j);
        for (std::size_t p = 0; p < np; ++p) dst[p] += di[p] * dj[p];
      }
      if (i != j) {
        auto mirror = out.component(j * n + i);
        std::copy(dst.begin(), dst.end(), mirror.begin());
      }
    }
  }
  return to_spectral(out);
}

}  // namespace nlc
