#pragma once

// Seeded synthetic corruptions used to build stress-test pairs: Gaussian
// noise, forward haze composition, over-exposure, rain streaks, snow flakes
// and lens blur. Every output stays in [0,1] and zero-strength parameters are
// exact identities.

#include <cstdint>
#include <string>
#include <string_view>

#include "dipf/imgcore.hpp"
#include "json.hpp"

namespace dipf {

enum class DegradeKind { gaussian_noise, haze, rain, snow, overexposure, blur };

std::string to_string(DegradeKind kind);
/// Throws StageError("degrade", ...) for unknown names.
DegradeKind parse_degrade_kind(std::string_view name);

enum class HazePattern { constant, ramp, radial };

std::string to_string(HazePattern p);
HazePattern parse_haze_pattern(std::string_view name);

struct RainParams {
  double density = 2.0;      // streaks per 1000 px
  double length = 18.0;      // px
  double min_angle = 70.0;   // degrees from the x axis
  double max_angle = 110.0;
  double intensity = 0.6;
  double width = 0.8;        // Gaussian cross-section std, px
};

struct SnowParams {
  double density = 1.0;  // flakes per 1000 px
  double min_radius = 0.8;
  double max_radius = 2.5;
  double intensity = 0.9;
};

struct DegradeSpec {
  DegradeKind kind = DegradeKind::gaussian_noise;
  double sigma = 20.0;  // 0-255 scale
  double atmo = 0.9;    // A
  HazePattern pattern = HazePattern::radial;
  double t_level = 0.4;  // constant pattern value / lower end of ramp and radial
  RainParams rain;
  SnowParams snow;
  double gain = 2.0;
  double gamma = 1.0;
  int blur_radius = 3;
  std::uint64_t seed = 0;

  /// Throws StageError("degrade", ...) for out-of-range values.
  void validate() const;
};

nlohmann::json to_json(const DegradeSpec& spec);

GrayImage add_gaussian_noise(const GrayImage& img, double sigma255, std::uint64_t seed);
/// Independent noise per channel (channel streams derived from `seed`).
RgbImage add_gaussian_noise(const RgbImage& img, double sigma255, std::uint64_t seed);

/// I = J t + A (1 - t) per channel.
RgbImage synth_haze(const RgbImage& img, const GrayImage& t_field, double atmo);

/// Ground-truth transmission: constant `level`, a left-to-right ramp from
/// `level` to 1, or a radial field equal to 1 at the centre and `level` at
/// the corners.
GrayImage haze_t_field(int width, int height, HazePattern pattern, double level);

struct Overexposed {
  RgbImage image;
  double saturated_fraction = 0.0;  // share of samples clipped at 1
};

Overexposed overexpose(const RgbImage& img, double gain, double gamma);

RgbImage add_rain(const RgbImage& img, const RainParams& p, std::uint64_t seed);
RgbImage add_snow(const RgbImage& img, const SnowParams& p, std::uint64_t seed);

/// Normalized disc kernel, replicate borders.
RgbImage add_blur(const RgbImage& img, int radius);
GrayImage disc_kernel(int radius);

/// Dispatches on spec.kind.
RgbImage apply_degradation(const RgbImage& img, const DegradeSpec& spec);

/// Stable per-file seed: base mixed with the FNV-1a hash of `name`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view name);

}  // namespace dipf
