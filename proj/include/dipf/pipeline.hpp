#pragma once

// End-to-end infrared/visible fusion: decomposition, high/low band fusion,
// reconstruction and recolouring with the visible chroma.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dipf/decompose.hpp"
#include "dipf/fusion.hpp"
#include "dipf/imgcore.hpp"
#include "dipf/transmission.hpp"
#include "json.hpp"

namespace dipf {

struct FusionConfig {
  BetaParam beta;
  RegularizerConfig regularizer;
  double eta = 0.1;
  double kl_threshold = 0.05;
  double delta_coefficient = 0.4;
  double delta_log_base = 5.0;
  MpcParams mpc;
  double gabor_sigma = kDefaultGaborSigma;
  /// Blend the gated (denoised) high bands instead of the original ones.
  bool blend_denoised = false;

  /// Throws StageError("config", ...) for out-of-range values.
  void validate() const;
};

struct BandDiagnostics {
  double layer_sigma = 0.0;
  double band_kappa = 0.0;
  double high_sigma = 0.0;
  double delta = 0.0;
  bool denoised = false;
  double kl = 0.0;
  bool kept_original = false;
  double mpc_threshold = 0.0;
  double mpc_max = 0.0;
};

struct Diagnostics {
  int width = 0;
  int height = 0;
  double atmo_light = 0.0;
  double beta = 0.0;
  double vis_sigma = 0.0;
  double lambda = 0.0;
  std::vector<double> regularizer_objective;
  double ir_sigma = 0.0;
  double ir_kappa = 0.0;
  bool ir_filtered = false;
  std::array<BandDiagnostics, 3> bands;  // CL, SL, IR
  double eta = 0.0;
  double max_saliency_sum = 0.0;
  double high_gain = 0.0;
  bool blend_denoised = false;
  double w2 = 0.5;
  double w4 = 0.5;
  double variance_l2 = 0.0;
  double variance_l4 = 0.0;
  double entropy_l2 = 0.0;
  double entropy_l4 = 0.0;
};

struct Intermediates {
  GrayImage t_coarse;
  GrayImage t_refined;
  LayerSet layers;
  BandSet bands;
  std::array<GrayImage, 3> denoised;   // OH
  std::array<GrayImage, 3> gated;      // FOH
  std::array<GrayImage, 3> saliency;   // MH
  GrayImage energy;                    // L4
  GrayImage fused_high;                // FH
  GrayImage fused_low;                 // FL
  GrayImage fused;                     // F, unclamped
};

struct FusionResult {
  RgbImage fused;        // recoloured, clamped to [0,1]
  GrayImage fused_luma;  // F = FH + FL, unclamped
  Diagnostics diagnostics;
  std::optional<Intermediates> intermediates;
};

FusionResult fuse_pipeline(const RgbImage& vis, const GrayImage& ir, const FusionConfig& cfg = {},
                           bool keep_intermediates = false);

nlohmann::json to_json(const Diagnostics& d);

/// File names written by write_intermediates, excluding diagnostics.json.
std::vector<std::string> intermediate_file_names();

/// Writes every intermediate as 8-bit PNG plus diagnostics.json into `dir`,
/// creating it if needed. Signed bands are offset by +0.5; saliency maps are
/// normalized by their maximum.
void write_intermediates(const std::filesystem::path& dir, const Intermediates& im,
                         const Diagnostics& d);

}  // namespace dipf
