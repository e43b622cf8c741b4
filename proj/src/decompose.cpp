#include "dipf/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dipf {

std::pair<GrayImage, GrayImage> split_contrast_structure(const GrayImage& vis_luma,
                                                         const TransmissionMap& t) {
  require_same_shape(vis_luma, t.t, "split_contrast_structure");
  GrayImage cl(vis_luma.width(), vis_luma.height());
  GrayImage sl(vis_luma.width(), vis_luma.height());
  for (std::size_t i = 0; i < vis_luma.size(); ++i) {
    cl[i] = vis_luma[i] * (1.0 - t.t[i]);
    sl[i] = vis_luma[i] * t.t[i];
  }
  return {std::move(cl), std::move(sl)};
}

GrayImage noise_suppression_weight(const GrayImage& img) {
  const auto maps = sobel_8dir(img);
  GrayImage s(img.width(), img.height());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double acc = 0.0;
    for (const auto& m : maps) acc += m[i] / 8.0;
    s[i] = std::sqrt(acc);
  }
  return s;
}

SanfWeights sanf_weights(const GrayImage& previous, const SanfParams& params) {
  const int w = previous.width();
  const int h = previous.height();
  const GrayImage grad = gradient_magnitude(previous);
  const double peak = max_value(grad);
  const int window = 3 * params.scale_radius;
  const GrayImage local_mean = box_mean(grad, window);
  const GrayImage local_max = max_filter(grad, window);

  SanfWeights out{GrayImage(w, h), GrayImage(w, h), GrayImage(w, h),
                  noise_suppression_weight(previous), GrayImage(w, h)};
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = peak > 0.0 ? grad[i] / peak : 0.0;
    out.guide_gradient[i] = g;
    out.penalty[i] = 1.0 / (g + 0.1);
    out.scale_metric[i] = std::clamp(local_mean[i] / (local_max[i] + params.epsilon), 0.0, 1.0);
    const double product =
        out.penalty[i] * g * out.scale_metric[i] * out.noise_weight[i];
    out.smoothness[i] = params.kappa / (product + params.epsilon);
  }
  return out;
}

namespace {

// y = (I + L_w) x; returns x . y. Each pixel gathers its four edges so the
// product is a single pass; interior pixels take a branch-free path.
double apply_system(const std::vector<double>& x, const GrayImage& wt, std::vector<double>& y) {
  const int w = wt.width();
  const int h = wt.height();
  const std::size_t stride = static_cast<std::size_t>(w);
  const double* xs = x.data();
  const double* ws = wt.pixels().data();
  double* ys = y.data();
  double xy = 0.0;
  auto border = [&](int col, int row) {
    const std::size_t p = static_cast<std::size_t>(row) * stride + static_cast<std::size_t>(col);
    const double xp = xs[p];
    double acc = xp;
    if (col + 1 < w) acc += ws[p] * (xp - xs[p + 1]);
    if (col > 0) acc += ws[p - 1] * (xp - xs[p - 1]);
    if (row + 1 < h) acc += ws[p] * (xp - xs[p + stride]);
    if (row > 0) acc += ws[p - stride] * (xp - xs[p - stride]);
    ys[p] = acc;
    return xp * acc;
  };
  for (int row = 0; row < h; ++row) {
    if (row == 0 || row == h - 1 || w < 3) {
      for (int col = 0; col < w; ++col) xy += border(col, row);
      continue;
    }
    xy += border(0, row);
    const std::size_t base = static_cast<std::size_t>(row) * stride;
    double local = 0.0;
    for (std::size_t p = base + 1; p < base + stride - 1; ++p) {
      const double xp = xs[p];
      const double acc = xp + ws[p] * (2.0 * xp - xs[p + 1] - xs[p + stride]) +
                         ws[p - 1] * (xp - xs[p - 1]) + ws[p - stride] * (xp - xs[p - stride]);
      ys[p] = acc;
      local += xp * acc;
    }
    xy += local;
    xy += border(w - 1, row);
  }
  return xy;
}

}  // namespace

GrayImage solve_weighted_smoothing(const GrayImage& input, const GrayImage& weights,
                                   const GrayImage& initial, SolverStats* stats) {
  constexpr double kTolerance = 1e-6;
  constexpr int kMaxIterations = 500;
  require_same_shape(input, weights, "sanf");
  require_same_shape(input, initial, "sanf");
  const int w = input.width();
  const int h = input.height();
  const std::size_t n = input.size();

  std::vector<double> inv_diag(n, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      double d = 1.0;
      if (x + 1 < w) d += weights[p];
      if (x > 0) d += weights[p - 1];
      if (y + 1 < h) d += weights[p];
      if (y > 0) d += weights[p - static_cast<std::size_t>(w)];
      inv_diag[p] = 1.0 / d;
    }
  }

  std::vector<double> x(initial.pixels().begin(), initial.pixels().end());
  std::vector<double> r(n), p(n), ap(n);
  apply_system(x, weights, ap);
  double b_norm = 0.0;
  double rr = 0.0;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = input[i] - ap[i];
    b_norm += input[i] * input[i];
    rr += r[i] * r[i];
    p[i] = r[i] * inv_diag[i];
    rz += r[i] * p[i];
  }
  b_norm = std::sqrt(b_norm);
  const double target = kTolerance * (b_norm > 0.0 ? b_norm : 1.0);

  SolverStats local;
  while (std::sqrt(rr) > target && local.iterations < kMaxIterations) {
    const double alpha = rz / apply_system(p, weights, ap);
    double rz_next = 0.0;
    rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr += r[i] * r[i];
      rz_next += r[i] * r[i] * inv_diag[i];
    }
    ++local.iterations;
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] * inv_diag[i] + beta * p[i];
  }
  local.relative_residual = std::sqrt(rr) / (b_norm > 0.0 ? b_norm : 1.0);
  if (stats != nullptr) *stats = local;
  return GrayImage(w, h, std::move(x));
}

GrayImage sanf(const GrayImage& img, const SanfParams& params) {
  if (params.kappa < 0.0 || params.scale_radius < 1 || params.iterations < 1 ||
      params.epsilon <= 0.0) {
    throw StageError("sanf", "invalid parameters");
  }
  if (params.kappa == 0.0) return img;
  GrayImage current = img;
  for (int d = 0; d < params.iterations; ++d) {
    const SanfWeights weights = sanf_weights(current, params);
    current = solve_weighted_smoothing(img, weights.smoothness, current);
  }
  return current;
}

double infrared_kappa(NoiseLevel sigma) {
  if (sigma.sigma <= 1.0) return 0.0;
  return 0.01 * std::log(sigma.sigma) / std::log(5.0);
}

double band_kappa(NoiseLevel sigma) { return 0.4 / std::exp(0.03 * sigma.sigma); }

FilteredImage preprocess_infrared(const GrayImage& ir) {
  FilteredImage out{ir, estimate_noise_level(ir), 0.0, false};
  if (out.sigma.sigma <= 1.0) return out;
  out.kappa = infrared_kappa(out.sigma);
  out.image = sanf(ir, {out.kappa, 1, 3, 1e-4});
  out.filtered = true;
  return out;
}

BandSplit band_decompose(const GrayImage& layer) {
  BandSplit out;
  out.sigma = estimate_noise_level(layer);
  out.kappa = band_kappa(out.sigma);
  out.low = sanf(layer, {out.kappa, 1, 3, 1e-4});
  out.high = subtract(layer, out.low);
  return out;
}

}  // namespace dipf
