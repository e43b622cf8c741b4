#pragma once

// High-frequency fusion (adaptive denoising, K-L detail gate, monogenic phase
// congruency weights), low-frequency fusion (energy layer, Gabor directional
// variance, entropy weighting) and reconstruction.

#include <array>
#include <span>

#include "dipf/imgcore.hpp"

namespace dipf {

struct MpcParams {
  std::array<double, 3> wavelengths{4.0, 8.0, 16.0};  // log-Gabor centre wavelengths, px
  double sigma_on_f = 0.55;  // log-Gabor bandwidth: std of ln(f / f0) is |ln(sigma_on_f)|
  double noise_k = 2.0;      // k_T
  double gamma = 1.5;
  double spread_cutoff = 0.4;
  double spread_gain = 10.0;
  double amplitude_guard = 1e-4;
  int padding = 48;          // reflect margin around the band before the FFT
};

/// Monogenic phase congruency of one band, non-negative everywhere.
struct MpcMap {
  GrayImage values;
  int scales = 3;
  double noise_threshold = 0.0;  // T
};

struct GaborBank {
  std::array<GrayImage, 4> kernels;  // 0, 45, 90, 135 degrees
  double lambda_hat = 20.0;
  double tau = 0.5;
  double psi = 0.0;
  double sigma_hat = 11.2;
};

inline constexpr std::array<double, 4> kGaborAngles = {0.0, 45.0, 90.0, 135.0};
inline constexpr double kDefaultGaborSigma = 11.2;  // 0.56 * lambda_hat

struct LowFreqWeights {
  double w2 = 0.5;
  double w4 = 0.5;
};

struct DenoiseResult {
  GrayImage image;
  NoiseLevel sigma;
  double delta = 0.0;
  bool filtered = false;
};

/// SANF with kappa = coefficient * log_base(sigma_h) when sigma_h > 1 on the
/// 0-255 scale; otherwise the band passes through.
DenoiseResult adaptive_denoise_high(const GrayImage& high, double coefficient = 0.4,
                                    double log_base = 5.0);

/// sum p_i ln(p_i / q_i) with 0 ln 0 = 0; +inf when q_i = 0 < p_i.
double kl_divergence(const Pmf256& p, const Pmf256& q);

struct GateResult {
  GrayImage image;
  double kl = 0.0;
  bool kept_original = false;
};

/// Returns `high` when denoising shifted its histogram by more than
/// `threshold` nats, `denoised` otherwise. Both histograms share the joint
/// min/max range of the pair.
GateResult detail_gate(const GrayImage& high, const GrayImage& denoised, double threshold);

MpcMap mpc(const GrayImage& band, const MpcParams& params = {});

struct HighFusion {
  GrayImage fused;
  double max_saliency_sum = 0.0;
  double mean_gain = 0.0;  // mean over pixels of the summed per-band weights
};

HighFusion fuse_high(std::span<const GrayImage, 3> high, std::span<const MpcMap, 3> saliency,
                     double eta);

/// Pointwise max; ties go to L3.
GrayImage energy_layer(const GrayImage& l1, const GrayImage& l3);

GaborBank gabor_bank(double sigma_hat = kDefaultGaborSigma, double lambda_hat = 20.0,
                     double tau = 0.5, double psi = 0.0);

/// Responses of each bank kernel, replicate borders.
std::array<GrayImage, 4> gabor_responses(const GrayImage& img, const GaborBank& bank);

/// Global variance of each directional response.
std::array<double, 4> directional_variance(const GrayImage& img, const GaborBank& bank);

struct LowFreqStats {
  LowFreqWeights weights;
  double variance_l2 = 0.0;
  double variance_l4 = 0.0;
  double entropy_l2 = 0.0;
  double entropy_l4 = 0.0;
};

LowFreqStats lowfreq_weights(const GrayImage& l2, const GrayImage& l4, const GaborBank& bank);

GrayImage fuse_low(const GrayImage& l2, const GrayImage& l4, LowFreqWeights w);

/// F = FH + FL, unclamped.
GrayImage reconstruct(const GrayImage& fh, const GrayImage& fl);

}  // namespace dipf
