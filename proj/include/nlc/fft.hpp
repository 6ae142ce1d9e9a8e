#pragma once

// Thin cached wrapper around FFTW complex transforms on the periodic grid.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nlc/grid.hpp"

namespace nlc {

class FftPlan {
 public:
  FftPlan(int n_dims, int points) : n_dims_(n_dims), points_(points) {
    std::vector<int> dims(static_cast<std::size_t>(n_dims), points);
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    std::vector<std::complex<double>> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    // FFTW_ESTIMATE plans are deterministic and never touch the buffer.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(n_dims, dims.data(), buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(n_dims, dims.data(), buf, buf, FFTW_BACKWARD, flags);
    if (!forward_ || !backward_) throw std::runtime_error("fft: plan creation failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  /// Unnormalized exp(-i k x) sum, in place.
  void forward(std::span<std::complex<double>> data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(forward_, p, p);
  }

  /// Unnormalized exp(+i k x) sum, in place.
  void backward(std::span<std::complex<double>> data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(backward_, p, p);
  }

 private:
  int n_dims_;
  int points_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Plans are created under a lock (FFTW planning is not thread-safe);
/// execution on distinct buffers is.
inline const FftPlan& fft_plan(const Grid& g) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_pair(g.n_dims, g.points);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<FftPlan>(g.n_dims, g.points)).first;
  return *it->second;
}

}  // namespace nlc
