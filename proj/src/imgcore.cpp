#include "dipf/imgcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dipf {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GrayImage: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GrayImage: dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("GrayImage: data length != width * height");
  }
}

double GrayImage::clamped(int x, int y) const noexcept {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return data_[index(x, y)];
}

RgbImage::RgbImage(GrayImage red, GrayImage green, GrayImage blue)
    : r(std::move(red)), g(std::move(green)), b(std::move(blue)) {
  if (!r.same_shape(g) || !r.same_shape(b)) {
    throw std::invalid_argument("RgbImage: planes differ in size");
  }
}

RgbImage::RgbImage(int width, int height, double fill)
    : r(width, height, fill), g(width, height, fill), b(width, height, fill) {}

RgbImage RgbImage::from_gray(const GrayImage& gray) { return RgbImage(gray, gray, gray); }

double Pmf256::total() const noexcept {
  return std::accumulate(bins.begin(), bins.end(), 0.0);
}

// -- colour ---------------------------------------------------------------

namespace {
constexpr double kWr = 0.299;
constexpr double kWg = 0.587;
constexpr double kWb = 0.114;
constexpr double kCbScale = 2.0 * (1.0 - kWb);  // 1.772
constexpr double kCrScale = 2.0 * (1.0 - kWr);  // 1.402
}  // namespace

LumaChroma to_luminance(const RgbImage& img) {
  const int w = img.width();
  const int h = img.height();
  LumaChroma out{GrayImage(w, h), Chroma{GrayImage(w, h), GrayImage(w, h)}};
  for (std::size_t i = 0; i < img.r.size(); ++i) {
    const double y = kWr * img.r[i] + kWg * img.g[i] + kWb * img.b[i];
    out.luma[i] = y;
    out.chroma.cb[i] = (img.b[i] - y) / kCbScale;
    out.chroma.cr[i] = (img.r[i] - y) / kCrScale;
  }
  return out;
}

RgbImage recolor(const GrayImage& luma, const Chroma& chroma) {
  require_same_shape(luma, chroma.cb, "recolor");
  require_same_shape(luma, chroma.cr, "recolor");
  RgbImage out(luma.width(), luma.height());
  for (std::size_t i = 0; i < luma.size(); ++i) {
    const double y = luma[i];
    const double r = y + kCrScale * chroma.cr[i];
    const double b = y + kCbScale * chroma.cb[i];
    const double g = (y - kWr * r - kWb * b) / kWg;
    out.r[i] = std::clamp(r, 0.0, 1.0);
    out.g[i] = std::clamp(g, 0.0, 1.0);
    out.b[i] = std::clamp(b, 0.0, 1.0);
  }
  return out;
}

GrayImage min_channel(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min({img.r[i], img.g[i], img.b[i]});
  }
  return out;
}

// -- filters --------------------------------------------------------------

namespace {

// Separable sliding-window reduction with replicate borders.
template <typename Reduce>
GrayImage separable_window(const GrayImage& img, int radius, Reduce reduce) {
  if (radius < 0) throw std::invalid_argument("window radius must be >= 0");
  if (radius == 0) return img;
  const int w = img.width();
  const int h = img.height();
  GrayImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = img.clamped(x - radius, y);
      for (int k = -radius + 1; k <= radius; ++k) acc = reduce(acc, img.clamped(x + k, y));
      tmp(x, y) = acc;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = tmp.clamped(x, y - radius);
      for (int k = -radius + 1; k <= radius; ++k) acc = reduce(acc, tmp.clamped(x, y + k));
      out(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

GrayImage min_filter(const GrayImage& img, int radius) {
  return separable_window(img, radius, [](double a, double b) { return std::min(a, b); });
}

GrayImage max_filter(const GrayImage& img, int radius) {
  return separable_window(img, radius, [](double a, double b) { return std::max(a, b); });
}

GrayImage box_mean(const GrayImage& img, int radius) {
  GrayImage sum = separable_window(img, radius, [](double a, double b) { return a + b; });
  const double n = static_cast<double>((2 * radius + 1) * (2 * radius + 1));
  for (double& v : sum.pixels()) v /= n;
  return sum;
}

std::array<GrayImage, 8> sobel_8dir(const GrayImage& img) {
  // Outer ring of the 3x3 window, clockwise from the top-left corner.
  static constexpr std::array<std::array<int, 2>, 8> kRing = {
      {{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};
  // Ring values of the 0 degree kernel [-1 0 1; -2 0 2; -1 0 1].
  static constexpr std::array<double, 8> kBase = {-1, 0, 1, 2, 1, 0, -1, -2};

  const int w = img.width();
  const int h = img.height();
  std::array<GrayImage, 8> maps;
  for (int dir = 0; dir < 8; ++dir) {
    std::array<double, 8> coeff{};
    for (int k = 0; k < 8; ++k) coeff[k] = kBase[(k - dir + 8) % 8];
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Opposite ring positions carry opposite weights; pairing them keeps
        // flat neighbourhoods at exactly zero.
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          if (coeff[k] == 0.0) continue;
          acc += coeff[k] * (img.clamped(x + kRing[k][0], y + kRing[k][1]) -
                             img.clamped(x + kRing[k + 4][0], y + kRing[k + 4][1]));
        }
        out(x, y) = std::abs(acc);
      }
    }
    maps[dir] = std::move(out);
  }
  return maps;
}

GrayImage gradient_magnitude(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = img.clamped(x + 1, y) - img(x, y);
      const double dy = img.clamped(x, y + 1) - img(x, y);
      out(x, y) = std::sqrt(dx * dx + dy * dy);
    }
  }
  return out;
}

GrayImage convolve(const GrayImage& img, const GrayImage& kernel) {
  if (kernel.width() % 2 == 0 || kernel.height() % 2 == 0) {
    throw std::invalid_argument("convolve: kernel dimensions must be odd");
  }
  const int rx = kernel.width() / 2;
  const int ry = kernel.height() / 2;
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int ky = -ry; ky <= ry; ++ky) {
        for (int kx = -rx; kx <= rx; ++kx) {
          acc += kernel(rx - kx, ry - ky) * img.clamped(x + kx, y + ky);
        }
      }
      out(x, y) = acc;
    }
  }
  return out;
}

// -- statistics -----------------------------------------------------------

NoiseLevel estimate_noise_level(const GrayImage& img) {
  constexpr int kBlock = 16;
  constexpr double kMadToSigma = 0.6745;
  const int w = img.width();
  const int h = img.height();
  if (w < 2 || h < 2) return {0.0};

  const int bx = w / kBlock;
  const int by = h / kBlock;
  std::vector<double> coeffs;

  auto collect = [&](int x0, int y0, int x1, int y1) {
    for (int y = y0; y + 1 < y1; y += 2) {
      for (int x = x0; x + 1 < x1; x += 2) {
        const double d = (img(x, y) - img(x + 1, y) - img(x, y + 1) + img(x + 1, y + 1)) / 2.0;
        coeffs.push_back(std::abs(d));
      }
    }
  };

  if (bx * by < 2) {
    collect(0, 0, w, h);
  } else {
    std::vector<std::pair<double, int>> energy;
    energy.reserve(static_cast<std::size_t>(bx * by));
    for (int j = 0; j < by; ++j) {
      for (int i = 0; i < bx; ++i) {
        double e = 0.0;
        for (int y = j * kBlock; y < (j + 1) * kBlock; ++y) {
          for (int x = i * kBlock; x < (i + 1) * kBlock; ++x) {
            const double dx = img.clamped(x + 1, y) - img(x, y);
            const double dy = img.clamped(x, y + 1) - img(x, y);
            e += dx * dx + dy * dy;
          }
        }
        energy.emplace_back(e, j * bx + i);
      }
    }
    std::sort(energy.begin(), energy.end());
    const std::size_t keep = (energy.size() + 1) / 2;
    for (std::size_t k = 0; k < keep; ++k) {
      const int i = energy[k].second % bx;
      const int j = energy[k].second / bx;
      collect(i * kBlock, j * kBlock, (i + 1) * kBlock, (j + 1) * kBlock);
    }
  }
  if (coeffs.empty()) return {0.0};

  const std::size_t mid = coeffs.size() / 2;
  std::nth_element(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(mid), coeffs.end());
  double median = coeffs[mid];
  if (coeffs.size() % 2 == 0) {
    const double lower = *std::max_element(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return {median / kMadToSigma * kIntensityScale};
}

Pmf256 histogram_pmf(const GrayImage& img) { return histogram_pmf(img, 0.0, 1.0); }

Pmf256 histogram_pmf(const GrayImage& img, double lo, double hi) {
  constexpr double kSmoothing = 1e-12;
  Pmf256 pmf;
  const double span = hi - lo;
  for (double v : img.pixels()) {
    int bin = 0;
    if (span > 0.0) {
      const double pos = std::floor((v - lo) / span * 256.0);
      bin = static_cast<int>(std::clamp(pos, 0.0, 255.0));
    }
    pmf.bins[static_cast<std::size_t>(bin)] += 1.0;
  }
  double total = 0.0;
  for (double& c : pmf.bins) {
    c += kSmoothing;
    total += c;
  }
  for (double& c : pmf.bins) c /= total;
  return pmf;
}

double entropy(const Pmf256& p) {
  double h = 0.0;
  for (double v : p.bins) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return std::max(h, 0.0);
}

double mean(const GrayImage& img) {
  const auto px = img.pixels();
  return std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
}

double variance(const GrayImage& img) {
  const double m = mean(img);
  double acc = 0.0;
  for (double v : img.pixels()) acc += (v - m) * (v - m);
  return acc / static_cast<double>(img.size());
}

double min_value(const GrayImage& img) {
  return *std::min_element(img.pixels().begin(), img.pixels().end());
}

double max_value(const GrayImage& img) {
  return *std::max_element(img.pixels().begin(), img.pixels().end());
}

double total_variation(const GrayImage& img) {
  double tv = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (x + 1 < img.width()) tv += std::abs(img(x + 1, y) - img(x, y));
      if (y + 1 < img.height()) tv += std::abs(img(x, y + 1) - img(x, y));
    }
  }
  return tv;
}

// -- elementwise ----------------------------------------------------------

GrayImage clamp(const GrayImage& img, double lo, double hi) {
  GrayImage out = img;
  for (double& v : out.pixels()) v = std::clamp(v, lo, hi);
  return out;
}

GrayImage add(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "add");
  GrayImage out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

GrayImage subtract(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "subtract");
  GrayImage out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

GrayImage scale(const GrayImage& img, double factor) {
  GrayImage out = img;
  for (double& v : out.pixels()) v *= factor;
  return out;
}

void require_same_shape(const GrayImage& a, const GrayImage& b, const std::string& stage) {
  if (!a.same_shape(b)) {
    throw StageError(stage, "dimension mismatch (" + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                "x" + std::to_string(b.height()) + ")");
  }
}

void require_min_size(int width, int height, const std::string& stage) {
  if (width < 3 || height < 3) {
    throw StageError(stage, "image must be at least 3x3");
  }
}

}  // namespace dipf
