#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "exdyn/grid.hpp"

namespace exdyn {

enum class ConvolutionMethod { Auto, Direct, Fft };

namespace detail {

// FFTW's planner is not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct FftwPlanDestroy {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

// Smallest m >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::size_t fft_friendly_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

}  // namespace detail

/// Discrete convolution with a radially symmetric kernel on a Grid.
///
/// Kernel samples are taken at node offsets within `radius` and rescaled to
/// unit discrete mass, so a convolution never creates or destroys mass
/// except across the grid edge. The direct and FFT paths compute the same
/// sum; the FFT path zero-pads so no wrap-around reaches the grid and
/// zeroes outputs below 1e-13 of its peak, which round-off cannot resolve.
template <int D>
class Convolver {
 public:
  Convolver(const Grid<D>& grid, const std::function<double(double)>& radial, double radius,
            ConvolutionMethod method = ConvolutionMethod::Auto)
      : grid_(grid) {
    if (!(radius > 0)) throw ContractViolation("Convolver: radius must be > 0");
    std::size_t taps = 1;
    for (int k = 0; k < D; ++k) {
      reach_[k] = static_cast<std::size_t>(std::ceil(radius / grid.spacing(k)));
      reach_[k] = std::min(reach_[k], grid.n[k] - 1);
      span_[k] = 2 * reach_[k] + 1;
      taps *= span_[k];
    }
    weights_.assign(taps, 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      const auto off = tap_offset(t);
      double r2 = 0.0;
      for (int k = 0; k < D; ++k) r2 += std::pow(off[k] * grid.spacing(k), 2);
      const double r = std::sqrt(r2);
      if (r <= radius * (1 + 1e-12)) weights_[t] = radial(r);
      total += weights_[t];
    }
    if (!(total > 0)) throw ContractViolation("Convolver: kernel has no mass on this grid");
    for (double& w : weights_) w /= total;
    center_weight_ = weights_[taps / 2];

    if (method == ConvolutionMethod::Auto)
      method = taps > 64 ? ConvolutionMethod::Fft : ConvolutionMethod::Direct;
    method_ = method;
    if (method_ == ConvolutionMethod::Fft) build_fft();
  }

  ConvolutionMethod method() const { return method_; }
  // Weight the kernel gives a node's own value, i.e. K(0) * cell volume.
  double center_weight() const { return center_weight_; }

  void apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != grid_.size() || out.size() != grid_.size())
      throw ContractViolation("Convolver: field size does not match grid");
    if (method_ == ConvolutionMethod::Fft)
      apply_fft(in, out);
    else
      apply_direct(in, out);
  }

  std::vector<double> operator()(std::span<const double> in) const {
    std::vector<double> out(in.size());
    apply(in, out);
    return out;
  }

 private:
  std::array<long, D> tap_offset(std::size_t t) const {
    std::array<long, D> off{};
    if constexpr (D == 1) {
      off[0] = static_cast<long>(t) - static_cast<long>(reach_[0]);
    } else {
      off[0] = static_cast<long>(t / span_[1]) - static_cast<long>(reach_[0]);
      off[1] = static_cast<long>(t % span_[1]) - static_cast<long>(reach_[1]);
    }
    return off;
  }

  void apply_direct(std::span<const double> in, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if constexpr (D == 1) {
      const long n = static_cast<long>(grid_.n[0]);
      const long r = static_cast<long>(reach_[0]);
      for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        const long jlo = std::max(0L, i - r);
        const long jhi = std::min(n - 1, i + r);
        for (long j = jlo; j <= jhi; ++j) acc += weights_[i - j + r] * in[j];
        out[i] = acc;
      }
    } else {
      const long n0 = static_cast<long>(grid_.n[0]);
      const long n1 = static_cast<long>(grid_.n[1]);
      const long r0 = static_cast<long>(reach_[0]);
      const long r1 = static_cast<long>(reach_[1]);
      const long s1 = static_cast<long>(span_[1]);
      for (long i = 0; i < n0; ++i) {
        for (long j = 0; j < n1; ++j) {
          double acc = 0.0;
          for (long a = std::max(0L, i - r0); a <= std::min(n0 - 1, i + r0); ++a) {
            const double* wrow = &weights_[(i - a + r0) * s1 + r1];
            const double* irow = &in[a * n1];
            for (long b = std::max(0L, j - r1); b <= std::min(n1 - 1, j + r1); ++b)
              acc += wrow[j - b] * irow[b];
          }
          out[i * n1 + j] = acc;
        }
      }
    }
  }

  void build_fft() {
    for (int k = 0; k < D; ++k) padded_[k] = detail::fft_friendly_size(grid_.n[k] + reach_[k]);
    real_count_ = 1;
    for (int k = 0; k < D; ++k) real_count_ *= padded_[k];
    complex_count_ = real_count_ / padded_[D - 1] * (padded_[D - 1] / 2 + 1);
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * real_count_)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * complex_count_)));
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      if constexpr (D == 1) {
        const int n0 = static_cast<int>(padded_[0]);
        forward_.reset(fftw_plan_dft_r2c_1d(n0, real_.get(), spec_.get(), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft_c2r_1d(n0, spec_.get(), real_.get(), FFTW_ESTIMATE));
      } else {
        const int n0 = static_cast<int>(padded_[0]);
        const int n1 = static_cast<int>(padded_[1]);
        forward_.reset(fftw_plan_dft_r2c_2d(n0, n1, real_.get(), spec_.get(), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft_c2r_2d(n0, n1, spec_.get(), real_.get(), FFTW_ESTIMATE));
      }
    }
    // Kernel laid out circularly so offset 0 sits at index 0.
    std::fill(real_.get(), real_.get() + real_count_, 0.0);
    for (std::size_t t = 0; t < weights_.size(); ++t) {
      const auto off = tap_offset(t);
      std::size_t idx = 0;
      for (int k = 0; k < D; ++k) {
        const long L = static_cast<long>(padded_[k]);
        idx = idx * padded_[k] + static_cast<std::size_t>(((off[k] % L) + L) % L);
      }
      real_.get()[idx] = weights_[t];
    }
    fftw_execute(forward_.get());
    kernel_spectrum_.resize(complex_count_);
    const double scale = 1.0 / static_cast<double>(real_count_);
    for (std::size_t i = 0; i < complex_count_; ++i)
      kernel_spectrum_[i] = std::complex<double>(spec_.get()[i][0], spec_.get()[i][1]) * scale;
  }

  void apply_fft(std::span<const double> in, std::span<double> out) const {
    double* buf = real_.get();
    std::fill(buf, buf + real_count_, 0.0);
    const std::size_t rows = D == 1 ? 1 : grid_.n[0];
    const std::size_t cols = grid_.n[D - 1];
    const std::size_t stride = padded_[D - 1];
    for (std::size_t i = 0; i < rows; ++i)
      std::copy_n(in.data() + i * cols, cols, buf + i * stride);
    fftw_execute_dft_r2c(forward_.get(), buf, spec_.get());
    fftw_complex* s = spec_.get();
    for (std::size_t i = 0; i < complex_count_; ++i) {
      const std::complex<double> v = std::complex<double>(s[i][0], s[i][1]) * kernel_spectrum_[i];
      s[i][0] = v.real();
      s[i][1] = v.imag();
    }
    fftw_execute_dft_c2r(backward_.get(), spec_.get(), buf);
    for (std::size_t i = 0; i < rows; ++i)
      std::copy_n(buf + i * stride, cols, out.data() + i * cols);
    // Round-off spreads about 1e-16 of the peak over every node. Left in,
    // it decides competition in far tails where the exact values are far
    // smaller still, so values under the floor are zeroed.
    double peak = 0.0;
    for (double v : out) peak = std::max(peak, std::abs(v));
    const double floor = kFftNoiseFloor * peak;
    for (double& v : out)
      if (std::abs(v) < floor) v = 0.0;
  }

  static constexpr double kFftNoiseFloor = 1e-13;

  Grid<D> grid_;
  std::array<std::size_t, D> reach_{};
  std::array<std::size_t, D> span_{};
  std::vector<double> weights_;
  double center_weight_ = 0.0;
  ConvolutionMethod method_ = ConvolutionMethod::Direct;

  std::array<std::size_t, D> padded_{};
  std::size_t real_count_ = 0;
  std::size_t complex_count_ = 0;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_;
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
  std::vector<std::complex<double>> kernel_spectrum_;
};

}  // namespace exdyn
