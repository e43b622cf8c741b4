#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <new>

namespace dipf::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft2d::RealFft2d(int width, int height) : width_(width), height_(height) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  real_ = fftw_alloc_real(n);
  spec_ = fftw_alloc_complex(spectrum_size());
  if (real_ == nullptr || spec_ == nullptr) throw std::bad_alloc();
  std::lock_guard lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft_r2c_2d(height, width, real_, static_cast<fftw_complex*>(spec_),
                                   FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_2d(height, width, static_cast<fftw_complex*>(spec_), real_,
                                   FFTW_ESTIMATE);
}

RealFft2d::~RealFft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_);
  fftw_free(spec_);
}

std::size_t RealFft2d::spectrum_size() const noexcept {
  return static_cast<std::size_t>(height_) * static_cast<std::size_t>(spectrum_width());
}

std::vector<Complex> RealFft2d::forward(std::span<const double> real) {
  std::copy(real.begin(), real.end(), real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const auto* spec = reinterpret_cast<const Complex*>(spec_);
  return std::vector<Complex>(spec, spec + spectrum_size());
}

std::vector<double> RealFft2d::inverse(std::span<const Complex> spectrum) {
  std::copy(spectrum.begin(), spectrum.end(), reinterpret_cast<Complex*>(spec_));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  return std::vector<double>(real_, real_ + n);
}

Dct2d::Dct2d(int width, int height) : width_(width), height_(height) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  buf_ = fftw_alloc_real(n);
  if (buf_ == nullptr) throw std::bad_alloc();
  std::lock_guard lock(planner_mutex());
  plan_fwd_ = fftw_plan_r2r_2d(height, width, buf_, buf_, FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_r2r_2d(height, width, buf_, buf_, FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
}

Dct2d::~Dct2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(buf_);
}

void Dct2d::forward(std::span<const double> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), buf_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::copy(buf_, buf_ + out.size(), out.begin());
}

void Dct2d::inverse(std::span<const double> in, std::span<double> out) {
  std::copy(in.begin(), in.end(), buf_);
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  std::copy(buf_, buf_ + out.size(), out.begin());
}

}  // namespace dipf::detail
