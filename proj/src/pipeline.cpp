#include "dipf/pipeline.hpp"

#include <cmath>
#include <fstream>

#include "dipf/image_io.hpp"

namespace dipf {

void FusionConfig::validate() const {
  auto fail = [](const std::string& what) { throw StageError("config", what); };
  if (!(beta.beta > 0.0)) fail("beta must be > 0");
  if (!(eta > 0.0)) fail("eta must be > 0");
  if (!(kl_threshold > 0.0)) fail("kl_threshold must be > 0");
  if (!(delta_coefficient > 0.0)) fail("delta_coefficient must be > 0");
  if (!(delta_log_base > 1.0)) fail("delta_log_base must be > 1");
  if (!(gabor_sigma > 0.0)) fail("gabor_sigma must be > 0");
  if (!(mpc.gamma > 0.0)) fail("mpc gamma must be > 0");
  if (!(mpc.noise_k >= 0.0)) fail("mpc noise_k must be >= 0");
  if (regularizer.iterations < 1) fail("regularizer iterations must be >= 1");
  if (!(regularizer.lambda_floor > 0.0)) fail("lambda floor must be > 0");
  if (!(regularizer.rho_initial > 0.0) || !(regularizer.rho_growth > 1.0)) {
    fail("penalty schedule must start positive and strictly increase");
  }
  if (!(regularizer.weight_sigma > 0.0)) fail("weight_sigma must be > 0");
}

FusionResult fuse_pipeline(const RgbImage& vis, const GrayImage& ir, const FusionConfig& cfg,
                           bool keep_intermediates) {
  cfg.validate();
  if (vis.width() != ir.width() || vis.height() != ir.height()) {
    throw StageError("co-registration",
                     "visible " + std::to_string(vis.width()) + "x" + std::to_string(vis.height()) +
                         " and infrared " + std::to_string(ir.width()) + "x" +
                         std::to_string(ir.height()) + " differ in size");
  }
  require_min_size(vis.width(), vis.height(), "input");

  FusionResult result;
  Diagnostics& diag = result.diagnostics;
  diag.width = vis.width();
  diag.height = vis.height();
  diag.beta = cfg.beta.beta;
  diag.eta = cfg.eta;
  diag.blend_denoised = cfg.blend_denoised;

  // Decomposition.
  const LumaChroma lc = to_luminance(vis);
  const AtmoLight atmo = estimate_atmo_light(vis);
  diag.atmo_light = atmo.min_a;
  const TransmissionMap coarse = coarse_transmission(vis, atmo, cfg.beta);
  const NoiseLevel vis_sigma = estimate_noise_level(lc.luma);
  diag.vis_sigma = vis_sigma.sigma;
  RefineResult refined = refine_transmission(coarse, lc.luma, vis_sigma, cfg.regularizer);
  diag.lambda = refined.lambda;
  diag.regularizer_objective = refined.objective;

  auto [cl, sl] = split_contrast_structure(lc.luma, refined.map);
  FilteredImage ir_pre = preprocess_infrared(ir);
  diag.ir_sigma = ir_pre.sigma.sigma;
  diag.ir_kappa = ir_pre.kappa;
  diag.ir_filtered = ir_pre.filtered;

  LayerSet layers{std::move(cl), std::move(sl), std::move(ir_pre.image)};
  BandSet bands;
  const std::array<const GrayImage*, 3> sources = {&layers.cl, &layers.sl, &layers.ir};
  for (std::size_t a = 0; a < 3; ++a) {
    BandSplit split = band_decompose(*sources[a]);
    diag.bands[a].layer_sigma = split.sigma.sigma;
    diag.bands[a].band_kappa = split.kappa;
    bands.low[a] = std::move(split.low);
    bands.high[a] = std::move(split.high);
  }

  // High-frequency path.
  std::array<GrayImage, 3> denoised;
  std::array<GrayImage, 3> gated;
  std::array<MpcMap, 3> saliency;
  for (std::size_t a = 0; a < 3; ++a) {
    DenoiseResult dn = adaptive_denoise_high(bands.high[a], cfg.delta_coefficient, cfg.delta_log_base);
    diag.bands[a].high_sigma = dn.sigma.sigma;
    diag.bands[a].delta = dn.delta;
    diag.bands[a].denoised = dn.filtered;
    GateResult gate = detail_gate(bands.high[a], dn.image, cfg.kl_threshold);
    diag.bands[a].kl = gate.kl;
    diag.bands[a].kept_original = gate.kept_original;
    saliency[a] = mpc(gate.image, cfg.mpc);
    diag.bands[a].mpc_threshold = saliency[a].noise_threshold;
    diag.bands[a].mpc_max = max_value(saliency[a].values);
    denoised[a] = std::move(dn.image);
    gated[a] = std::move(gate.image);
  }
  const std::array<GrayImage, 3>& blended = cfg.blend_denoised ? gated : bands.high;
  HighFusion high = fuse_high(blended, saliency, cfg.eta);
  diag.max_saliency_sum = high.max_saliency_sum;
  diag.high_gain = high.mean_gain;

  // Low-frequency path.
  GrayImage energy = energy_layer(bands.low[0], bands.low[2]);
  const GaborBank bank = gabor_bank(cfg.gabor_sigma);
  const LowFreqStats low = lowfreq_weights(bands.low[1], energy, bank);
  diag.w2 = low.weights.w2;
  diag.w4 = low.weights.w4;
  diag.variance_l2 = low.variance_l2;
  diag.variance_l4 = low.variance_l4;
  diag.entropy_l2 = low.entropy_l2;
  diag.entropy_l4 = low.entropy_l4;
  GrayImage fused_low = fuse_low(bands.low[1], energy, low.weights);

  result.fused_luma = reconstruct(high.fused, fused_low);
  result.fused = recolor(result.fused_luma, lc.chroma);

  if (keep_intermediates) {
    Intermediates im;
    im.t_coarse = coarse.t;
    im.t_refined = refined.map.t;
    im.layers = std::move(layers);
    im.bands = std::move(bands);
    im.denoised = std::move(denoised);
    im.gated = std::move(gated);
    for (std::size_t a = 0; a < 3; ++a) im.saliency[a] = std::move(saliency[a].values);
    im.energy = std::move(energy);
    im.fused_high = std::move(high.fused);
    im.fused_low = std::move(fused_low);
    im.fused = result.fused_luma;
    result.intermediates = std::move(im);
  }
  return result;
}

nlohmann::json to_json(const Diagnostics& d) {
  nlohmann::json bands = nlohmann::json::array();
  static constexpr std::array<const char*, 3> kNames = {"CL", "SL", "IRp"};
  for (std::size_t a = 0; a < 3; ++a) {
    const BandDiagnostics& b = d.bands[a];
    bands.push_back({{"layer", kNames[a]},
                     {"sigma_layer", b.layer_sigma},
                     {"kappa", b.band_kappa},
                     {"sigma_high", b.high_sigma},
                     {"delta", b.delta},
                     {"denoised", b.denoised},
                     {"kl", std::isfinite(b.kl) ? nlohmann::json(b.kl) : nlohmann::json("inf")},
                     {"gate", b.kept_original ? "H kept" : "OH kept"},
                     {"mpc_threshold", b.mpc_threshold},
                     {"mpc_max", b.mpc_max}});
  }
  return {{"width", d.width},
          {"height", d.height},
          {"transmission",
           {{"min_a", d.atmo_light},
            {"beta", d.beta},
            {"sigma_vis", d.vis_sigma},
            {"lambda", d.lambda},
            {"objective", d.regularizer_objective}}},
          {"infrared", {{"sigma", d.ir_sigma}, {"kappa", d.ir_kappa}, {"filtered", d.ir_filtered}}},
          {"bands", bands},
          {"high",
           {{"eta", d.eta},
            {"max_saliency_sum", d.max_saliency_sum},
            {"mean_gain", d.high_gain},
            {"blend_denoised", d.blend_denoised}}},
          {"low",
           {{"w2", d.w2},
            {"w4", d.w4},
            {"variance_l2", d.variance_l2},
            {"variance_l4", d.variance_l4},
            {"entropy_l2", d.entropy_l2},
            {"entropy_l4", d.entropy_l4}}}};
}

std::vector<std::string> intermediate_file_names() {
  std::vector<std::string> names = {"t_coarse.png", "t_refined.png", "CL.png", "SL.png", "IRp.png"};
  for (const char* prefix : {"L", "H", "OH", "FOH", "MH"}) {
    for (int a = 1; a <= 3; ++a) names.push_back(std::string(prefix) + std::to_string(a) + ".png");
  }
  for (const char* name : {"L4.png", "FH.png", "FL.png", "F.png"}) names.emplace_back(name);
  return names;
}

void write_intermediates(const std::filesystem::path& dir, const Intermediates& im,
                         const Diagnostics& d) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir)) {
    throw StageError("dump", "cannot create directory " + dir.string());
  }
  auto offset = [](const GrayImage& img) {
    GrayImage out = img;
    for (double& v : out.pixels()) v += 0.5;
    return out;
  };
  auto normalized = [](const GrayImage& img) {
    const double peak = max_value(img);
    return peak > 0.0 ? scale(img, 1.0 / peak) : img;
  };
  write_image(dir / "t_coarse.png", im.t_coarse);
  write_image(dir / "t_refined.png", im.t_refined);
  write_image(dir / "CL.png", im.layers.cl);
  write_image(dir / "SL.png", im.layers.sl);
  write_image(dir / "IRp.png", im.layers.ir);
  for (std::size_t a = 0; a < 3; ++a) {
    const std::string idx = std::to_string(a + 1);
    write_image(dir / ("L" + idx + ".png"), im.bands.low[a]);
    write_image(dir / ("H" + idx + ".png"), offset(im.bands.high[a]));
    write_image(dir / ("OH" + idx + ".png"), offset(im.denoised[a]));
    write_image(dir / ("FOH" + idx + ".png"), offset(im.gated[a]));
    write_image(dir / ("MH" + idx + ".png"), normalized(im.saliency[a]));
  }
  write_image(dir / "L4.png", im.energy);
  write_image(dir / "FH.png", offset(im.fused_high));
  write_image(dir / "FL.png", im.fused_low);
  write_image(dir / "F.png", im.fused);

  const std::filesystem::path json_path = dir / "diagnostics.json";
  const std::filesystem::path tmp = dir / "diagnostics.json.tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw StageError("dump", "cannot write " + json_path.string());
    os << to_json(d).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, json_path, ec);
  if (ec) throw StageError("dump", "cannot write " + json_path.string());
}

}  // namespace dipf
