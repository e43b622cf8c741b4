#include "dipf/degrade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace dipf {

namespace {

constexpr std::array<std::pair<DegradeKind, const char*>, 6> kKindNames = {{
    {DegradeKind::gaussian_noise, "gaussian_noise"},
    {DegradeKind::haze, "haze"},
    {DegradeKind::rain, "rain"},
    {DegradeKind::snow, "snow"},
    {DegradeKind::overexposure, "overexposure"},
    {DegradeKind::blur, "blur"},
}};

constexpr std::array<std::pair<HazePattern, const char*>, 3> kPatternNames = {{
    {HazePattern::constant, "constant"},
    {HazePattern::ramp, "ramp"},
    {HazePattern::radial, "radial"},
}};

[[noreturn]] void fail(const std::string& what) { throw StageError("degrade", what); }

// Screen blend of a bright layer in [0,1] onto every channel.
RgbImage screen(const RgbImage& img, const GrayImage& layer) {
  RgbImage out = img;
  for (GrayImage* plane : out.planes()) {
    for (std::size_t i = 0; i < plane->size(); ++i) {
      const double l = std::clamp(layer[i], 0.0, 1.0);
      (*plane)[i] = 1.0 - (1.0 - (*plane)[i]) * (1.0 - l);
    }
  }
  return out;
}

std::size_t feature_count(double per_thousand, const GrayImage& img) {
  return static_cast<std::size_t>(std::llround(per_thousand * static_cast<double>(img.size()) / 1000.0));
}

}  // namespace

std::string to_string(DegradeKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

DegradeKind parse_degrade_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  if (name == "noise") return DegradeKind::gaussian_noise;
  fail("unknown kind '" + std::string(name) + "'");
}

std::string to_string(HazePattern p) {
  for (const auto& [k, name] : kPatternNames) {
    if (k == p) return name;
  }
  return "unknown";
}

HazePattern parse_haze_pattern(std::string_view name) {
  for (const auto& [k, n] : kPatternNames) {
    if (name == n) return k;
  }
  fail("unknown haze pattern '" + std::string(name) + "'");
}

void DegradeSpec::validate() const {
  if (!(sigma >= 0.0)) fail("sigma must be >= 0");
  if (!(atmo > 0.0 && atmo <= 1.0)) fail("A must be in (0, 1]");
  if (!(t_level >= 0.0 && t_level <= 1.0)) fail("t level must be in [0, 1]");
  if (!(gain >= 1.0)) fail("gain must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (blur_radius < 0) fail("blur radius must be >= 0");
  if (!(rain.density >= 0.0) || !(rain.length > 0.0) || !(rain.width > 0.0) ||
      !(rain.intensity >= 0.0 && rain.intensity <= 1.0) || !(rain.min_angle <= rain.max_angle)) {
    fail("invalid rain parameters");
  }
  if (!(snow.density >= 0.0) || !(snow.min_radius > 0.0) || !(snow.min_radius <= snow.max_radius) ||
      !(snow.intensity >= 0.0 && snow.intensity <= 1.0)) {
    fail("invalid snow parameters");
  }
}

nlohmann::json to_json(const DegradeSpec& s) {
  nlohmann::json j = {{"kind", to_string(s.kind)}, {"seed", s.seed}};
  switch (s.kind) {
    case DegradeKind::gaussian_noise:
      j["sigma"] = s.sigma;
      break;
    case DegradeKind::haze:
      j["A"] = s.atmo;
      j["pattern"] = to_string(s.pattern);
      j["t_level"] = s.t_level;
      break;
    case DegradeKind::rain:
      j["rain"] = {{"density", s.rain.density},   {"length", s.rain.length},
                   {"min_angle", s.rain.min_angle}, {"max_angle", s.rain.max_angle},
                   {"intensity", s.rain.intensity}, {"width", s.rain.width}};
      break;
    case DegradeKind::snow:
      j["snow"] = {{"density", s.snow.density},
                   {"min_radius", s.snow.min_radius},
                   {"max_radius", s.snow.max_radius},
                   {"intensity", s.snow.intensity}};
      break;
    case DegradeKind::overexposure:
      j["gain"] = s.gain;
      j["gamma"] = s.gamma;
      break;
    case DegradeKind::blur:
      j["radius"] = s.blur_radius;
      break;
  }
  return j;
}

GrayImage add_gaussian_noise(const GrayImage& img, double sigma255, std::uint64_t seed) {
  if (!(sigma255 >= 0.0)) fail("sigma must be >= 0");
  if (sigma255 == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma255 / kIntensityScale);
  GrayImage out = img;
  for (double& v : out.pixels()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

RgbImage add_gaussian_noise(const RgbImage& img, double sigma255, std::uint64_t seed) {
  RgbImage out;
  std::array<std::uint64_t, 3> streams{};
  std::mt19937_64 root(seed);
  for (auto& s : streams) s = root();
  out.r = add_gaussian_noise(img.r, sigma255, streams[0]);
  out.g = add_gaussian_noise(img.g, sigma255, streams[1]);
  out.b = add_gaussian_noise(img.b, sigma255, streams[2]);
  return out;
}

RgbImage synth_haze(const RgbImage& img, const GrayImage& t_field, double atmo) {
  require_same_shape(img.r, t_field, "degrade");
  if (!(atmo > 0.0 && atmo <= 1.0)) fail("A must be in (0, 1]");
  RgbImage out = img;
  for (GrayImage* plane : out.planes()) {
    for (std::size_t i = 0; i < plane->size(); ++i) {
      const double t = std::clamp(t_field[i], 0.0, 1.0);
      (*plane)[i] = std::clamp((*plane)[i] * t + atmo * (1.0 - t), 0.0, 1.0);
    }
  }
  return out;
}

GrayImage haze_t_field(int width, int height, HazePattern pattern, double level) {
  GrayImage t(width, height, level);
  if (pattern == HazePattern::constant) return t;
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double corner = std::hypot(cx, cy);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = 0.0;  // 0 -> level, 1 -> clear
      if (pattern == HazePattern::ramp) {
        s = width > 1 ? static_cast<double>(x) / (width - 1) : 1.0;
      } else {
        s = corner > 0.0 ? 1.0 - std::hypot(x - cx, y - cy) / corner : 1.0;
      }
      t(x, y) = level + (1.0 - level) * s;
    }
  }
  return t;
}

Overexposed overexpose(const RgbImage& img, double gain, double gamma) {
  if (!(gain >= 1.0)) fail("gain must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  Overexposed out{img, 0.0};
  if (gain == 1.0 && gamma == 1.0) {
    for (const GrayImage* plane : img.planes()) {
      for (double v : plane->pixels()) out.saturated_fraction += v >= 1.0 ? 1.0 : 0.0;
    }
    out.saturated_fraction /= 3.0 * static_cast<double>(img.r.size());
    return out;
  }
  std::size_t saturated = 0;
  for (GrayImage* plane : out.image.planes()) {
    for (double& v : plane->pixels()) {
      const double raw = std::pow(gain * std::max(v, 0.0), gamma);
      if (raw >= 1.0) ++saturated;
      v = std::min(raw, 1.0);
    }
  }
  out.saturated_fraction =
      static_cast<double>(saturated) / (3.0 * static_cast<double>(img.r.size()));
  return out;
}

RgbImage add_rain(const RgbImage& img, const RainParams& p, std::uint64_t seed) {
  const std::size_t n = feature_count(p.density, img.r);
  if (n == 0 || p.intensity == 0.0) return img;
  const int w = img.width();
  const int h = img.height();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  std::uniform_real_distribution<double> angle(p.min_angle, p.max_angle);
  std::uniform_real_distribution<double> len(0.6 * p.length, 1.4 * p.length);
  std::uniform_real_distribution<double> bright(0.5 * p.intensity, p.intensity);

  GrayImage layer(w, h);
  const int reach = static_cast<int>(std::ceil(3.0 * p.width));
  for (std::size_t s = 0; s < n; ++s) {
    const double x0 = ux(rng);
    const double y0 = uy(rng);
    const double th = angle(rng) * std::numbers::pi / 180.0;
    const double l = len(rng);
    const double peak = bright(rng);
    const double dx = std::cos(th);
    const double dy = std::sin(th);
    const double x1 = x0 + l * dx;
    const double y1 = y0 + l * dy;
    const int xa = std::max(0, static_cast<int>(std::floor(std::min(x0, x1))) - reach);
    const int xb = std::min(w - 1, static_cast<int>(std::ceil(std::max(x0, x1))) + reach);
    const int ya = std::max(0, static_cast<int>(std::floor(std::min(y0, y1))) - reach);
    const int yb = std::min(h - 1, static_cast<int>(std::ceil(std::max(y0, y1))) + reach);
    for (int y = ya; y <= yb; ++y) {
      for (int x = xa; x <= xb; ++x) {
        // Distance to the segment; brightness fades along the streak.
        const double px = x - x0;
        const double py = y - y0;
        const double along = std::clamp(px * dx + py * dy, 0.0, l);
        const double d = std::hypot(px - along * dx, py - along * dy);
        const double v = peak * (0.4 + 0.6 * along / l) * std::exp(-d * d / (2.0 * p.width * p.width));
        layer(x, y) = std::max(layer(x, y), v);
      }
    }
  }
  return screen(img, layer);
}

RgbImage add_snow(const RgbImage& img, const SnowParams& p, std::uint64_t seed) {
  const std::size_t n = feature_count(p.density, img.r);
  if (n == 0 || p.intensity == 0.0) return img;
  const int w = img.width();
  const int h = img.height();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  std::uniform_real_distribution<double> radius(p.min_radius, p.max_radius);
  std::uniform_real_distribution<double> bright(0.6 * p.intensity, p.intensity);

  GrayImage layer(w, h);
  for (std::size_t s = 0; s < n; ++s) {
    const double cx = ux(rng);
    const double cy = uy(rng);
    const double r = radius(rng);
    const double peak = bright(rng);
    const int reach = static_cast<int>(std::ceil(3.0 * r));
    const int xc = static_cast<int>(cx);
    const int yc = static_cast<int>(cy);
    for (int y = std::max(0, yc - reach); y <= std::min(h - 1, yc + reach); ++y) {
      for (int x = std::max(0, xc - reach); x <= std::min(w - 1, xc + reach); ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        layer(x, y) = std::max(layer(x, y), peak * std::exp(-d2 / (2.0 * r * r)));
      }
    }
  }
  return screen(img, layer);
}

GrayImage disc_kernel(int radius) {
  if (radius < 0) fail("blur radius must be >= 0");
  const int size = 2 * radius + 1;
  GrayImage k(size, size);
  double sum = 0.0;
  const double r2 = (radius + 0.5) * (radius + 0.5);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - radius;
      const double dy = y - radius;
      if (dx * dx + dy * dy <= r2) {
        k(x, y) = 1.0;
        sum += 1.0;
      }
    }
  }
  for (double& v : k.pixels()) v /= sum;
  return k;
}

RgbImage add_blur(const RgbImage& img, int radius) {
  if (radius < 0) fail("blur radius must be >= 0");
  if (radius == 0) return img;
  const GrayImage k = disc_kernel(radius);
  RgbImage out;
  out.r = clamp(convolve(img.r, k), 0.0, 1.0);
  out.g = clamp(convolve(img.g, k), 0.0, 1.0);
  out.b = clamp(convolve(img.b, k), 0.0, 1.0);
  return out;
}

RgbImage apply_degradation(const RgbImage& img, const DegradeSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DegradeKind::gaussian_noise:
      return add_gaussian_noise(img, spec.sigma, spec.seed);
    case DegradeKind::haze:
      return synth_haze(img, haze_t_field(img.width(), img.height(), spec.pattern, spec.t_level),
                        spec.atmo);
    case DegradeKind::rain:
      return add_rain(img, spec.rain, spec.seed);
    case DegradeKind::snow:
      return add_snow(img, spec.snow, spec.seed);
    case DegradeKind::overexposure:
      return overexpose(img, spec.gain, spec.gamma).image;
    case DegradeKind::blur:
      return add_blur(img, spec.blur_radius);
  }
  fail("unknown kind");
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer so nearby bases do not give correlated streams
  std::uint64_t z = base ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dipf
