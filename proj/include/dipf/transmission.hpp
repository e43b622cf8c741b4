#pragma once

// Light-transmission estimation for the visible image: dark-channel
// atmospheric light, the beta-parameterized clear-image prior, the coarse
// transmission map, and its contextual-regularization refinement solved by
// half-quadratic splitting.

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "dipf/imgcore.hpp"

namespace dipf {

inline constexpr double kTransmissionFloor = 0.05;
inline constexpr double kDefaultBeta = 1.2778;
inline constexpr int kDarkChannelRadius = 7;

/// Per-pixel transmittance, always within [kTransmissionFloor, 1].
struct TransmissionMap {
  GrayImage t;
};

struct AtmoLight {
  double min_a = 1.0;
};

struct BetaParam {
  double beta = kDefaultBeta;
};

struct RegularizerConfig {
  double lambda_scale = 1.5;   // lambda = lambda_scale * exp(-sigma)
  double lambda_floor = 1e-3;
  double sigma_cap = 10.0;     // 0-255 scale
  double weight_sigma = 0.5;   // W_j = exp(-(D_j L)^2 / (2 weight_sigma^2))
  int iterations = 8;
  double rho_initial = 1.0;
  double rho_growth = 2.0;
};

/// Offsets (dx, dy) of the eight first-order difference operators.
inline constexpr std::array<std::array<int, 2>, 8> kRegularizerOffsets = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};

using DirectionalWeights = std::array<GrayImage, 8>;

/// min over colour channels followed by a (2r+1)^2 minimum filter.
GrayImage dark_channel(const RgbImage& img, int radius = kDarkChannelRadius);

/// Mean min-channel value over the brightest 0.1% of dark-channel pixels,
/// clamped to [0.7, 1].
AtmoLight estimate_atmo_light(const RgbImage& vis);

/// Clear-image dark channel predicted from the hazy dark channel, evaluated
/// on the 0-255 scale as ln(max(A - I, 1 + 1e-3))^(-beta) and normalized by
/// its image maximum.
GrayImage estimate_minJ(const GrayImage& min_i, AtmoLight a, BetaParam b);

TransmissionMap coarse_transmission(const RgbImage& vis, AtmoLight a, BetaParam b);

/// Same map computed from an already windowed dark channel.
TransmissionMap coarse_transmission_from_dark(const GrayImage& min_i, AtmoLight a, BetaParam b);

struct BetaFit {
  BetaParam beta;
  /// False when the least-squares objective is flat in beta; the search
  /// interval midpoint is returned in that case.
  bool identifiable = true;
  double residual = 0.0;
};

/// Least-squares fit of beta over (hazy, clear) pairs by golden-section search
/// on [0.1, 5].
BetaFit fit_beta(std::span<const std::pair<RgbImage, RgbImage>> pairs);

inline constexpr double kBetaSearchLow = 0.1;
inline constexpr double kBetaSearchHigh = 5.0;

double regularizer_lambda(NoiseLevel sigma, const RegularizerConfig& cfg = {});

/// W_j computed from the guide image (the visible luminance).
DirectionalWeights contextual_weights(const GrayImage& guide, double weight_sigma);

/// D_j t with replicate borders: t(p + offset_j) - t(p).
GrayImage directional_difference(const GrayImage& t, int direction);

/// lambda/2 ||t - t_hat||^2 + sum_j ||W_j o (D_j t)||_1.
double regularizer_objective(const GrayImage& t, const GrayImage& t_hat,
                             const DirectionalWeights& weights, double lambda);

struct RefineResult {
  TransmissionMap map;
  double lambda = 0.0;
  /// Objective before the first and after every outer iteration.
  std::vector<double> objective;
};

RefineResult refine_transmission(const TransmissionMap& coarse, const GrayImage& guide,
                                 NoiseLevel sigma, const RegularizerConfig& cfg = {});

/// Exact minimizer of lambda/2 ||t - t_hat||^2 + rho/2 sum_j ||D_j t - u_j||^2,
/// the quadratic half of the splitting. Exposed for testing.
GrayImage regularizer_quadratic_step(const GrayImage& t_hat, const std::array<GrayImage, 8>& u,
                                     double lambda, double rho);

}  // namespace dipf
