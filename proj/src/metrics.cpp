#include "dipf/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace dipf {

namespace {

constexpr int kBins = 256;

std::vector<int> bin_indices(const GrayImage& x) {
  std::vector<int> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::isfinite(x[i]) ? x[i] : 0.0;
    out[i] = std::clamp(static_cast<int>(std::floor(v * kBins)), 0, kBins - 1);
  }
  return out;
}

double entropy_of_counts(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

struct PairInfo {
  double hx = 0.0;
  double hy = 0.0;
  double mi = 0.0;
};

PairInfo pair_info(const GrayImage& x, const GrayImage& y) {
  require_same_shape(x, y, "metrics");
  const auto bx = bin_indices(x);
  const auto by = bin_indices(y);
  std::vector<double> joint(static_cast<std::size_t>(kBins * kBins), 0.0);
  std::vector<double> mx(kBins, 0.0), my(kBins, 0.0);
  for (std::size_t i = 0; i < bx.size(); ++i) {
    joint[static_cast<std::size_t>(bx[i] * kBins + by[i])] += 1.0;
    mx[static_cast<std::size_t>(bx[i])] += 1.0;
    my[static_cast<std::size_t>(by[i])] += 1.0;
  }
  const double n = static_cast<double>(bx.size());
  PairInfo info;
  info.hx = entropy_of_counts(mx, n);
  info.hy = entropy_of_counts(my, n);
  // I = Hx + Hy - Hxy keeps I(x;x) = H(x) exact up to rounding.
  info.mi = std::max(0.0, info.hx + info.hy - entropy_of_counts(joint, n));
  return info;
}

double normalized_mi(const PairInfo& p) {
  const double denom = p.hx + p.hy;
  return denom > 0.0 ? 2.0 * p.mi / denom : 0.0;
}

// Undirected orientation difference in [0, pi/2].
double angle_gap(double a, double b) {
  double d = std::fabs(a - b);
  if (d > std::numbers::pi / 2.0) d = std::numbers::pi - d;
  return d;
}

struct EdgeField {
  GrayImage strength;
  GrayImage angle;
};

EdgeField edge_field(const GrayImage& gx, const GrayImage& gy) {
  EdgeField e{GrayImage(gx.width(), gx.height()), GrayImage(gx.width(), gx.height())};
  for (std::size_t i = 0; i < gx.size(); ++i) {
    e.strength[i] = std::hypot(gx[i], gy[i]);
    e.angle[i] = gx[i] == 0.0 ? (gy[i] == 0.0 ? 0.0 : std::numbers::pi / 2.0)
                              : std::atan(gy[i] / gx[i]);
  }
  return e;
}

EdgeField sobel_field(const GrayImage& img) {
  // Signed responses are needed for orientation; sobel_8dir only keeps magnitudes.
  GrayImage gx(img.width(), img.height()), gy(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto p = [&](int dx, int dy) { return img.clamped(x + dx, y + dy); };
      gx(x, y) = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
      gy(x, y) = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    }
  }
  return edge_field(gx, gy);
}

double sigmoid(double gamma, double k, double s, double v) {
  return gamma / (1.0 + std::exp(k * (v - s)));
}

double strength_preservation(double g) {
  static const double peak = sigmoid(0.9994, -15.0, 0.5, 1.0);
  return sigmoid(0.9994, -15.0, 0.5, g) / peak;
}

double orientation_preservation(double a) {
  static const double peak = sigmoid(0.9879, -22.0, 0.8, 1.0);
  return sigmoid(0.9879, -22.0, 0.8, a) / peak;
}

double preservation(double gs, double as, double gf, double af) {
  double g = 0.0;
  if (gs > 0.0 || gf > 0.0) g = gs > gf ? gf / gs : gs / gf;
  const double a = 1.0 - angle_gap(as, af) / (std::numbers::pi / 2.0);
  return strength_preservation(g) * orientation_preservation(a);
}

struct EdgeScore {
  double score = 0.0;
  double weight = 0.0;  // sum of source edge strengths
  double energy = 0.0;  // sum of squared source edge strengths
};

EdgeScore edge_score(const EdgeField& a, const EdgeField& b, const EdgeField& f) {
  EdgeScore out;
  double num = 0.0;
  for (std::size_t i = 0; i < a.strength.size(); ++i) {
    const double wa = a.strength[i];
    const double wb = b.strength[i];
    if (wa > 0.0) num += wa * preservation(wa, a.angle[i], f.strength[i], f.angle[i]);
    if (wb > 0.0) num += wb * preservation(wb, b.angle[i], f.strength[i], f.angle[i]);
    out.weight += wa + wb;
    out.energy += wa * wa + wb * wb;
  }
  out.score = out.weight > 0.0 ? num / out.weight : 0.0;
  return out;
}

GrayImage pad_to_multiple(const GrayImage& img, int m) {
  const int w = (img.width() + m - 1) / m * m;
  const int h = (img.height() + m - 1) / m * m;
  if (w == img.width() && h == img.height()) return img;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = img.clamped(x, y);
  }
  return out;
}

struct HaarLevel {
  GrayImage low;
  GrayImage horizontal;  // difference across columns
  GrayImage vertical;    // difference across rows
};

HaarLevel haar(const GrayImage& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  HaarLevel out{GrayImage(w, h), GrayImage(w, h), GrayImage(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = img(2 * x, 2 * y);
      const double b = img(2 * x + 1, 2 * y);
      const double c = img(2 * x, 2 * y + 1);
      const double d = img(2 * x + 1, 2 * y + 1);
      out.low(x, y) = (a + b + c + d) / 2.0;
      out.horizontal(x, y) = (b + d - a - c) / 2.0;
      out.vertical(x, y) = (c + d - a - b) / 2.0;
    }
  }
  return out;
}

}  // namespace

double entropy_bits(const GrayImage& x) {
  const auto bx = bin_indices(x);
  std::vector<double> counts(kBins, 0.0);
  for (int b : bx) counts[static_cast<std::size_t>(b)] += 1.0;
  return entropy_of_counts(counts, static_cast<double>(bx.size()));
}

double mutual_information(const GrayImage& x, const GrayImage& y) { return pair_info(x, y).mi; }

double q_mi(const GrayImage& a, const GrayImage& b, const GrayImage& f) {
  return normalized_mi(pair_info(a, f)) + normalized_mi(pair_info(b, f));
}

double q_ncie(const GrayImage& a, const GrayImage& b, const GrayImage& f) {
  const double ab = normalized_mi(pair_info(a, b));
  const double af = normalized_mi(pair_info(a, f));
  const double bf = normalized_mi(pair_info(b, f));
  Eigen::Matrix3d r;
  r << 1.0, ab, af, ab, 1.0, bf, af, bf, 1.0;
  const Eigen::Vector3d lambda = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(r).eigenvalues();
  double q = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double p = lambda[i] / 3.0;
    if (p > 1e-12) q += p * std::log(p) / std::log(256.0);
  }
  return std::clamp(q, 0.0, 1.0);
}

double q_g(const GrayImage& a, const GrayImage& b, const GrayImage& f) {
  require_same_shape(a, f, "metrics");
  require_same_shape(b, f, "metrics");
  return edge_score(sobel_field(a), sobel_field(b), sobel_field(f)).score;
}

double q_m(const GrayImage& a, const GrayImage& b, const GrayImage& f) {
  require_same_shape(a, f, "metrics");
  require_same_shape(b, f, "metrics");
  std::array<GrayImage, 3> cur = {pad_to_multiple(a, 4), pad_to_multiple(b, 4),
                                  pad_to_multiple(f, 4)};
  std::array<EdgeScore, 2> levels;
  for (auto& level : levels) {
    std::array<EdgeField, 3> fields;
    for (std::size_t k = 0; k < 3; ++k) {
      HaarLevel split = haar(cur[k]);
      fields[k] = edge_field(split.horizontal, split.vertical);
      cur[k] = std::move(split.low);
    }
    level = edge_score(fields[0], fields[1], fields[2]);
  }
  const double total = levels[0].energy + levels[1].energy;
  if (total <= 0.0) return 0.0;
  double q = 0.0;
  for (const auto& level : levels) q += 2.0 * level.energy / total * level.score;
  return q;
}

QualityReport evaluate(const GrayImage& a, const GrayImage& b, const GrayImage& f,
                       std::string pair_id) {
  return {std::move(pair_id), q_mi(a, b, f), q_ncie(a, b, f), q_g(a, b, f), q_m(a, b, f)};
}

}  // namespace dipf
