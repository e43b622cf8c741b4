#pragma once

// Thin RAII layer over FFTW. Planning is serialized behind a mutex because the
// FFTW planner is not re-entrant; executing a plan is.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dipf::detail {

using Complex = std::complex<double>;

/// Real 2-D transform pair for a fixed width x height. The spectrum holds
/// height rows of (width / 2 + 1) coefficients.
class RealFft2d {
 public:
  RealFft2d(int width, int height);
  ~RealFft2d();
  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int spectrum_width() const noexcept { return width_ / 2 + 1; }
  std::size_t spectrum_size() const noexcept;

  std::vector<Complex> forward(std::span<const double> real);
  /// Unnormalized inverse; divide by width * height for a round trip.
  std::vector<double> inverse(std::span<const Complex> spectrum);

 private:
  int width_;
  int height_;
  double* real_ = nullptr;
  void* spec_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

/// 2-D DCT-II / DCT-III pair (FFTW REDFT10 / REDFT01). The inverse is
/// unnormalized; the round trip scales by 4 * width * height.
class Dct2d {
 public:
  Dct2d(int width, int height);
  ~Dct2d();
  Dct2d(const Dct2d&) = delete;
  Dct2d& operator=(const Dct2d&) = delete;

  void forward(std::span<const double> in, std::span<double> out);
  void inverse(std::span<const double> in, std::span<double> out);

 private:
  int width_;
  int height_;
  double* buf_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

/// Frequency (cycles / pixel) of FFT index k on an axis of length n.
inline double fft_frequency(int k, int n) {
  return static_cast<double>(k <= n / 2 ? k : k - n) / static_cast<double>(n);
}

}  // namespace dipf::detail
