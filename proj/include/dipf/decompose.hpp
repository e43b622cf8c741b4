#pragma once

// Transmission-driven layer split of the visible luminance and the
// scale-and-noise-aware filter (SANF) used for every low/high band split.

#include <array>
#include <utility>

#include "dipf/imgcore.hpp"
#include "dipf/transmission.hpp"

namespace dipf {

/// Contrast layer, structure layer, and the preprocessed infrared image.
struct LayerSet {
  GrayImage cl;
  GrayImage sl;
  GrayImage ir;
};

/// Low/high bands indexed 0, 1, 2 for CL, SL and preprocessed IR.
struct BandSet {
  std::array<GrayImage, 3> low;
  std::array<GrayImage, 3> high;
};

struct SanfParams {
  double kappa = 0.4;
  int scale_radius = 1;  // r
  int iterations = 3;    // d
  double epsilon = 1e-4;
};

/// Per-pixel factors of the SANF smoothness weight for one iteration.
struct SanfWeights {
  GrayImage penalty;          // xi = 1 / (G + 0.1)
  GrayImage guide_gradient;   // G, normalized |grad O| in [0,1]
  GrayImage scale_metric;     // Q, local mean / local max of |grad O|
  GrayImage noise_weight;     // S, sqrt of the mean 8-direction Sobel magnitude
  GrayImage smoothness;       // kappa / (xi G Q S + epsilon)
};

struct SolverStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

std::pair<GrayImage, GrayImage> split_contrast_structure(const GrayImage& vis_luma,
                                                         const TransmissionMap& t);

/// S_p: zero exactly where all eight Sobel responses vanish.
GrayImage noise_suppression_weight(const GrayImage& img);

SanfWeights sanf_weights(const GrayImage& previous, const SanfParams& params);

/// Solves (I + L_w) x = input where L_w is the 4-neighbour Laplacian whose
/// forward edges out of pixel p carry weight w_p. Jacobi-preconditioned CG to a
/// relative residual of 1e-6, at most 500 iterations, warm-started at `initial`.
GrayImage solve_weighted_smoothing(const GrayImage& input, const GrayImage& weights,
                                   const GrayImage& initial, SolverStats* stats = nullptr);

GrayImage sanf(const GrayImage& img, const SanfParams& params);

struct FilteredImage {
  GrayImage image;
  NoiseLevel sigma;
  double kappa = 0.0;
  bool filtered = false;
};

/// kappa = 0.01 log5(sigma_ir); passthrough when sigma_ir <= 1.
FilteredImage preprocess_infrared(const GrayImage& ir);

struct BandSplit {
  GrayImage low;
  GrayImage high;
  NoiseLevel sigma;
  double kappa = 0.0;
};

/// kappa = 0.4 / exp(0.03 sigma); low = SANF(layer), high = layer - low.
BandSplit band_decompose(const GrayImage& layer);

double infrared_kappa(NoiseLevel sigma);
double band_kappa(NoiseLevel sigma);

}  // namespace dipf
