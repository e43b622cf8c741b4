#include "dipf/transmission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fft.hpp"

namespace dipf {

namespace {
constexpr double kLogGuard = 1e-3;   // ln argument never drops below 1 + kLogGuard
constexpr double kBaseGuard = 1e-4;  // floor for (minA - minI) and (minA - minJ)
constexpr double kAtmoLow = 0.7;
constexpr double kAtmoHigh = 1.0;
}  // namespace

GrayImage dark_channel(const RgbImage& img, int radius) {
  return min_filter(min_channel(img), radius);
}

AtmoLight estimate_atmo_light(const RgbImage& vis) {
  const GrayImage channel_min = min_channel(vis);
  const GrayImage dark = min_filter(channel_min, kDarkChannelRadius);
  const std::size_t n = dark.size();
  const std::size_t top = std::max<std::size_t>(1, n / 1000);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top - 1), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dark[a] != dark[b] ? dark[a] > dark[b] : a < b;
                   });
  double sum = 0.0;
  for (std::size_t k = 0; k < top; ++k) sum += channel_min[order[k]];
  return {std::clamp(sum / static_cast<double>(top), kAtmoLow, kAtmoHigh)};
}

GrayImage estimate_minJ(const GrayImage& min_i, AtmoLight a, BetaParam b) {
  const double a255 = a.min_a * kIntensityScale;
  GrayImage raw(min_i.width(), min_i.height());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double arg = std::max(a255 - min_i[i] * kIntensityScale, 1.0 + kLogGuard);
    raw[i] = std::pow(std::log(arg), -b.beta) * kIntensityScale;
  }
  const double peak = max_value(raw);
  for (double& v : raw.pixels()) v = std::clamp(v / peak, 0.0, 1.0);
  return raw;
}

TransmissionMap coarse_transmission_from_dark(const GrayImage& min_i, AtmoLight a, BetaParam b) {
  const GrayImage min_j = estimate_minJ(min_i, a, b);
  GrayImage t(min_i.width(), min_i.height());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double base = std::clamp(a.min_a - min_i[i], kBaseGuard, 1.0);
    const double exponent = a.min_a / std::clamp(a.min_a - min_j[i], kBaseGuard, 1.0);
    t[i] = std::clamp(std::pow(base, exponent), kTransmissionFloor, 1.0);
  }
  return {std::move(t)};
}

TransmissionMap coarse_transmission(const RgbImage& vis, AtmoLight a, BetaParam b) {
  return coarse_transmission_from_dark(dark_channel(vis), a, b);
}

// -- beta fit -------------------------------------------------------------

namespace {

struct BetaSample {
  GrayImage min_i;
  GrayImage min_j_observed;
  AtmoLight a;
};

double beta_objective(const std::vector<BetaSample>& samples, double beta) {
  double sse = 0.0;
  for (const auto& s : samples) {
    const GrayImage model = estimate_minJ(s.min_i, s.a, {beta});
    for (std::size_t i = 0; i < model.size(); ++i) {
      const double r = model[i] - s.min_j_observed[i];
      sse += r * r;
    }
  }
  return sse;
}

}  // namespace

BetaFit fit_beta(std::span<const std::pair<RgbImage, RgbImage>> pairs) {
  if (pairs.empty()) throw StageError("fit_beta", "no (hazy, clear) pairs supplied");
  std::vector<BetaSample> samples;
  samples.reserve(pairs.size());
  for (const auto& [hazy, clear] : pairs) {
    if (hazy.width() != clear.width() || hazy.height() != clear.height()) {
      throw StageError("fit_beta", "hazy and clear images differ in size");
    }
    samples.push_back({dark_channel(hazy), dark_channel(clear), estimate_atmo_light(hazy)});
  }

  auto f = [&](double beta) { return beta_objective(samples, beta); };

  // Coarse scan brackets the minimum and detects an unidentifiable beta.
  constexpr int kGrid = 50;
  const double step = (kBetaSearchHigh - kBetaSearchLow) / kGrid;
  std::vector<double> values(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k) values[static_cast<std::size_t>(k)] = f(kBetaSearchLow + k * step);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (*hi_it - *lo_it <= 1e-12 * std::max(1.0, *hi_it)) {
    return {{0.5 * (kBetaSearchLow + kBetaSearchHigh)}, false, *lo_it};
  }
  const int best = static_cast<int>(lo_it - values.begin());
  double lo = kBetaSearchLow + std::max(best - 1, 0) * step;
  double hi = kBetaSearchLow + std::min(best + 1, kGrid) * step;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > 1e-7) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double beta = 0.5 * (lo + hi);
  return {{beta}, true, f(beta)};
}

// -- refinement -----------------------------------------------------------

double regularizer_lambda(NoiseLevel sigma, const RegularizerConfig& cfg) {
  const double s = std::min(sigma.sigma, cfg.sigma_cap);
  return std::max(cfg.lambda_scale * std::exp(-s), cfg.lambda_floor);
}

GrayImage directional_difference(const GrayImage& t, int direction) {
  const auto [ox, oy] = kRegularizerOffsets[static_cast<std::size_t>(direction)];
  GrayImage out(t.width(), t.height());
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) out(x, y) = t.clamped(x + ox, y + oy) - t(x, y);
  }
  return out;
}

namespace {

// Adds D_j^T u into acc (adjoint of directional_difference).
void accumulate_adjoint(const GrayImage& u, int direction, GrayImage& acc) {
  const auto [ox, oy] = kRegularizerOffsets[static_cast<std::size_t>(direction)];
  const int w = u.width();
  const int h = u.height();
  for (int y = 0; y < h; ++y) {
    const int ty = std::clamp(y + oy, 0, h - 1);
    for (int x = 0; x < w; ++x) {
      const int tx = std::clamp(x + ox, 0, w - 1);
      acc(tx, ty) += u(x, y);
      acc(x, y) -= u(x, y);
    }
  }
}

}  // namespace

DirectionalWeights contextual_weights(const GrayImage& guide, double weight_sigma) {
  DirectionalWeights w;
  const double denom = 2.0 * weight_sigma * weight_sigma;
  for (int j = 0; j < 8; ++j) {
    GrayImage d = directional_difference(guide, j);
    for (double& v : d.pixels()) v = std::exp(-(v * v) / denom);
    w[static_cast<std::size_t>(j)] = std::move(d);
  }
  return w;
}

double regularizer_objective(const GrayImage& t, const GrayImage& t_hat,
                             const DirectionalWeights& weights, double lambda) {
  double data = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = t[i] - t_hat[i];
    data += r * r;
  }
  double reg = 0.0;
  for (int j = 0; j < 8; ++j) {
    const GrayImage d = directional_difference(t, j);
    const GrayImage& wj = weights[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < d.size(); ++i) reg += wj[i] * std::abs(d[i]);
  }
  return 0.5 * lambda * data + reg;
}

GrayImage regularizer_quadratic_step(const GrayImage& t_hat, const std::array<GrayImage, 8>& u,
                                     double lambda, double rho) {
  const int w = t_hat.width();
  const int h = t_hat.height();
  GrayImage rhs = scale(t_hat, lambda);
  GrayImage adj(w, h);
  for (int j = 0; j < 8; ++j) accumulate_adjoint(u[static_cast<std::size_t>(j)], j, adj);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += rho * adj[i];

  // With replicate borders sum_j D_j^T D_j is the 8-neighbour graph Laplacian
  // under half-sample symmetric extension, which the DCT-II diagonalizes.
  detail::Dct2d dct(w, h);
  std::vector<double> spec(rhs.size());
  dct.forward(rhs.pixels(), spec);
  const double pi = std::acos(-1.0);
  for (int ky = 0; ky < h; ++ky) {
    const double cy = std::cos(pi * ky / h);
    for (int kx = 0; kx < w; ++kx) {
      const double cx = std::cos(pi * kx / w);
      const double laplacian = 16.0 - 4.0 * cx - 4.0 * cy - 8.0 * cx * cy;
      spec[static_cast<std::size_t>(ky) * static_cast<std::size_t>(w) + static_cast<std::size_t>(kx)] /=
          lambda + rho * laplacian;
    }
  }
  GrayImage t(w, h);
  dct.inverse(spec, t.pixels());
  const double norm = 4.0 * w * h;
  for (double& v : t.pixels()) v /= norm;
  return t;
}

RefineResult refine_transmission(const TransmissionMap& coarse, const GrayImage& guide,
                                 NoiseLevel sigma, const RegularizerConfig& cfg) {
  const GrayImage& t_hat = coarse.t;
  require_same_shape(t_hat, guide, "refine_transmission");
  if (cfg.iterations < 1) throw StageError("refine_transmission", "iterations must be >= 1");

  RefineResult result;
  result.lambda = regularizer_lambda(sigma, cfg);
  const DirectionalWeights weights = contextual_weights(guide, cfg.weight_sigma);

  GrayImage t = t_hat;
  double objective = regularizer_objective(t, t_hat, weights, result.lambda);
  result.objective.push_back(objective);

  if (min_value(t_hat) == max_value(t_hat)) {
    result.objective.resize(static_cast<std::size_t>(cfg.iterations) + 1, objective);
    result.map.t = clamp(t_hat, kTransmissionFloor, 1.0);
    return result;
  }

  double rho = cfg.rho_initial;
  std::array<GrayImage, 8> u;
  for (int iter = 0; iter < cfg.iterations; ++iter, rho *= cfg.rho_growth) {
    for (int j = 0; j < 8; ++j) {
      GrayImage d = directional_difference(t, j);
      const GrayImage& wj = weights[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double mag = std::abs(d[i]) - wj[i] / rho;
        d[i] = mag > 0.0 ? std::copysign(mag, d[i]) : 0.0;
      }
      u[static_cast<std::size_t>(j)] = std::move(d);
    }
    GrayImage candidate = regularizer_quadratic_step(t_hat, u, result.lambda, rho);
    const double next = regularizer_objective(candidate, t_hat, weights, result.lambda);
    t = std::move(candidate);
    objective = next;
    result.objective.push_back(objective);
  }
  result.map.t = clamp(t, kTransmissionFloor, 1.0);
  return result;
}

}  // namespace dipf
