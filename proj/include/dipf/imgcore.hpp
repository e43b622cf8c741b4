#pragma once

// Image containers and the low-level filters and estimators shared by every
// stage of the fusion pipeline. Intensities live in [0,1]; anything written on
// the 0-255 scale (noise levels) converts at the call site.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dipf {

/// Error raised by a pipeline stage. `stage()` names the failing step so the
/// CLI can report where a run broke.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Row-major single-channel image of doubles.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  double operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  /// Replicate-padded read: coordinates outside the grid clamp to the border.
  double clamped(int x, int y) const noexcept;

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }

  bool same_shape(const GrayImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Three co-sized planes (R, G, B).
struct RgbImage {
  GrayImage r;
  GrayImage g;
  GrayImage b;

  RgbImage() = default;
  RgbImage(GrayImage red, GrayImage green, GrayImage blue);
  RgbImage(int width, int height, double fill = 0.0);

  static RgbImage from_gray(const GrayImage& gray);

  int width() const noexcept { return r.width(); }
  int height() const noexcept { return r.height(); }
  std::array<const GrayImage*, 3> planes() const { return {&r, &g, &b}; }
  std::array<GrayImage*, 3> planes() { return {&r, &g, &b}; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Colour-difference planes kept aside while the luminance is fused.
struct Chroma {
  GrayImage cb;
  GrayImage cr;
};

struct LumaChroma {
  GrayImage luma;
  Chroma chroma;
};

/// 256-bin probability mass function.
struct Pmf256 {
  std::array<double, 256> bins{};

  double total() const noexcept;
};

/// Noise standard deviation expressed on the 0-255 intensity scale.
struct NoiseLevel {
  double sigma = 0.0;
};

inline constexpr double kIntensityScale = 255.0;

// -- colour ---------------------------------------------------------------

/// BT.601 luminance plus Cb/Cr planes.
LumaChroma to_luminance(const RgbImage& img);

/// Inverse of to_luminance; the result is clamped to [0,1].
RgbImage recolor(const GrayImage& luma, const Chroma& chroma);

GrayImage min_channel(const RgbImage& img);

// -- filters --------------------------------------------------------------

GrayImage min_filter(const GrayImage& img, int radius);
GrayImage max_filter(const GrayImage& img, int radius);
GrayImage box_mean(const GrayImage& img, int radius);

/// |response| of the 3x3 Sobel kernel rotated in 45 degree steps. Index D
/// corresponds to 45*D degrees; D = 0 responds to horizontal intensity change
/// (vertical edges), D = 2 to vertical change.
std::array<GrayImage, 8> sobel_8dir(const GrayImage& img);

/// Forward-difference gradient magnitude with replicate borders.
GrayImage gradient_magnitude(const GrayImage& img);

/// Direct 2-D convolution with an odd-sized kernel, replicate borders.
GrayImage convolve(const GrayImage& img, const GrayImage& kernel);

// -- statistics -----------------------------------------------------------

/// Additive-Gaussian noise estimate: MAD of the finest diagonal Haar band,
/// restricted to the half of 16x16 blocks with the least gradient energy.
NoiseLevel estimate_noise_level(const GrayImage& img);

/// Normalized histogram with 256 equal bins over [0,1].
Pmf256 histogram_pmf(const GrayImage& img);

/// Histogram over an explicit range [lo, hi]; values outside are clamped.
Pmf256 histogram_pmf(const GrayImage& img, double lo, double hi);

/// Shannon entropy in bits.
double entropy(const Pmf256& p);

double mean(const GrayImage& img);
double variance(const GrayImage& img);
double min_value(const GrayImage& img);
double max_value(const GrayImage& img);

/// Anisotropic total variation: sum of |forward differences|.
double total_variation(const GrayImage& img);

// -- elementwise ----------------------------------------------------------

GrayImage clamp(const GrayImage& img, double lo, double hi);
GrayImage add(const GrayImage& a, const GrayImage& b);
GrayImage subtract(const GrayImage& a, const GrayImage& b);
GrayImage scale(const GrayImage& img, double factor);

void require_same_shape(const GrayImage& a, const GrayImage& b,
                        const std::string& stage);

/// Images below 3x3 cannot host the 3x3 kernels used throughout.
void require_min_size(int width, int height, const std::string& stage);

}  // namespace dipf
