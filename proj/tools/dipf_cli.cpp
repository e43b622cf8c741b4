// dipf: fuse infrared/visible pairs, synthesize degraded inputs, score
// results, and print stored diagnostics.
//
// Exit codes: 0 success, 1 internal numeric failure, 2 usage or input error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dipf/degrade.hpp"
#include "dipf/image_io.hpp"
#include "dipf/metrics.hpp"
#include "dipf/pipeline.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dipf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

const std::set<std::string> kInputStages = {"read",   "write",  "dump",  "co-registration",
                                            "config", "degrade", "input", "usage"};

int exit_code_for(const StageError& e) {
  return kInputStages.count(e.stage()) != 0 ? kExitUsage : kExitNumeric;
}

// Settings files may use bare keys for the options of the subcommand being
// run ("eta = 0.5" rather than "fuse.eta = 0.5"); root options stay global.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App* root) : root_(root) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    const auto active = root_->get_subcommands();
    if (active.empty()) return items;
    const std::string sub = active.front()->get_name();
    for (CLI::ConfigItem& item : items) {
      if (!item.parents.empty() || item.name == "++" || item.name == "--") continue;
      if (root_->get_option_no_throw("--" + item.name) != nullptr) continue;
      item.parents = {sub};
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

std::mutex g_log_mutex;

void log_error(const std::string& msg) {
  std::lock_guard lock(g_log_mutex);
  std::cerr << "dipf: " << msg << '\n';
}

// Runs `job(i)` for i in [0, n) on at most `threads` workers and returns the
// worst exit code.
int run_pool(std::size_t n, int threads, const std::function<int(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{kExitOk};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      int code = kExitOk;
      try {
        code = job(i);
      } catch (const StageError& e) {
        log_error(e.what());
        code = exit_code_for(e);
      } catch (const std::exception& e) {
        log_error(std::string("internal: ") + e.what());
        code = kExitNumeric;
      }
      int prev = worst.load();
      while (code > prev && !worst.compare_exchange_weak(prev, code)) {
      }
    }
  };
  const std::size_t count = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return worst.load();
}

bool is_image_path(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

struct ImagePair {
  std::string name;
  fs::path vis;
  fs::path ir;
};

// name_vis.* / name_ir.* in one directory, sorted by name.
std::vector<ImagePair> find_pairs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw StageError("input", "not a directory: " + dir.string());
  std::map<std::string, ImagePair> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_path(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    auto ends_with = [&](const std::string& s) {
      return stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("_vis")) {
      const std::string name = stem.substr(0, stem.size() - 4);
      found[name].name = name;
      found[name].vis = entry.path();
    } else if (ends_with("_ir")) {
      const std::string name = stem.substr(0, stem.size() - 3);
      found[name].name = name;
      found[name].ir = entry.path();
    }
  }
  std::vector<ImagePair> pairs;
  for (auto& [name, pair] : found) {
    if (pair.vis.empty() || pair.ir.empty()) {
      log_error("input: skipping unpaired '" + name + "'");
      continue;
    }
    pairs.push_back(pair);
  }
  return pairs;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw StageError("write", "cannot write " + path.string());
    os << text;
    if (!os) throw StageError("write", "cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw StageError("write", "cannot write " + path.string());
  }
}

// -- fuse -------------------------------------------------------------------

struct FuseOptions {
  std::string vis;
  std::string ir;
  std::string input_dir;
  std::string out;
  std::string dump_dir;
  int depth = 8;
  FusionConfig cfg;
};

int fuse_one(const fs::path& vis_path, const fs::path& ir_path, const fs::path& out_path,
             const std::string& dump_dir, const FuseOptions& o) {
  const RgbImage vis = read_rgb(vis_path);
  const GrayImage ir = read_gray(ir_path);
  FusionResult r = fuse_pipeline(vis, ir, o.cfg, !dump_dir.empty());
  for (const GrayImage* plane : r.fused.planes()) {
    for (double v : plane->pixels()) {
      if (!std::isfinite(v)) throw StageError("reconstruct", "non-finite fused value");
    }
  }
  write_image(out_path, r.fused, o.depth == 16 ? BitDepth::k16 : BitDepth::k8);
  if (!dump_dir.empty()) write_intermediates(dump_dir, *r.intermediates, r.diagnostics);
  return kExitOk;
}

int cmd_fuse(const FuseOptions& o, int threads) {
  if (o.depth != 8 && o.depth != 16) throw StageError("usage", "--depth must be 8 or 16");
  o.cfg.validate();
  if (o.input_dir.empty()) {
    if (o.vis.empty() || o.ir.empty()) {
      throw StageError("usage", "fuse needs --vis and --ir, or --input-dir");
    }
    return fuse_one(o.vis, o.ir, o.out, o.dump_dir, o);
  }
  const auto pairs = find_pairs(o.input_dir);
  if (pairs.empty()) throw StageError("input", "no *_vis/*_ir pairs in " + o.input_dir);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (!fs::is_directory(o.out)) throw StageError("write", "cannot create " + o.out);
  return run_pool(pairs.size(), threads, [&](std::size_t i) {
    const ImagePair& p = pairs[i];
    const std::string dump = o.dump_dir.empty() ? std::string() : (fs::path(o.dump_dir) / p.name).string();
    return fuse_one(p.vis, p.ir, fs::path(o.out) / (p.name + "_fused.png"), dump, o);
  });
}

// -- degrade ----------------------------------------------------------------

struct DegradeOptions {
  std::string in;
  std::string out;
  std::string kind = "gaussian_noise";
  std::string pattern = "radial";
  std::string modality = "all";
  std::string manifest;
  DegradeSpec spec;
};

RgbImage degrade_image(const LoadedImage& img, const DegradeSpec& spec) {
  if (img.grayscale && spec.kind == DegradeKind::gaussian_noise) {
    return RgbImage::from_gray(add_gaussian_noise(img.rgb.r, spec.sigma, spec.seed));
  }
  return apply_degradation(img.rgb, spec);
}

void write_loaded(const fs::path& path, const RgbImage& out, const LoadedImage& src) {
  if (src.grayscale) {
    write_image(path, out.r, src.depth);
  } else {
    write_image(path, out, src.depth);
  }
}

int cmd_degrade(DegradeOptions o, int threads) {
  o.spec.kind = parse_degrade_kind(o.kind);
  o.spec.pattern = parse_haze_pattern(o.pattern);
  o.spec.validate();
  if (o.in.empty() || o.out.empty()) throw StageError("usage", "degrade needs --in and --out");

  nlohmann::json manifest = {{"base_seed", o.spec.seed}, {"spec", to_json(o.spec)}};
  if (!fs::is_directory(o.in)) {
    const LoadedImage img = read_image(o.in);
    write_loaded(o.out, degrade_image(img, o.spec), img);
    if (!o.manifest.empty()) {
      manifest["files"] = nlohmann::json::array(
          {{{"input", fs::path(o.in).filename().string()}, {"output", fs::path(o.out).filename().string()},
            {"seed", o.spec.seed}}});
      write_text_atomic(o.manifest, manifest.dump(2) + "\n");
    }
    return kExitOk;
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.in)) {
    if (!entry.is_regular_file() || !is_image_path(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    auto ends_with = [&](const std::string& s) {
      return stem.size() >= s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0;
    };
    if (o.modality == "vis" && !ends_with("_vis")) continue;
    if (o.modality == "ir" && !ends_with("_ir")) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw StageError("input", "no images in " + o.in);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (!fs::is_directory(o.out)) throw StageError("write", "cannot create " + o.out);

  std::vector<nlohmann::json> entries(files.size());
  const int code = run_pool(files.size(), threads, [&](std::size_t i) {
    DegradeSpec spec = o.spec;
    const std::string name = files[i].filename().string();
    spec.seed = derive_seed(o.spec.seed, name);
    const LoadedImage img = read_image(files[i]);
    write_loaded(fs::path(o.out) / name, degrade_image(img, spec), img);
    entries[i] = {{"input", name}, {"output", name}, {"seed", spec.seed}};
    return kExitOk;
  });
  manifest["files"] = entries;
  const fs::path manifest_path = o.manifest.empty() ? fs::path(o.out) / "manifest.json" : fs::path(o.manifest);
  write_text_atomic(manifest_path, manifest.dump(2) + "\n");
  return code;
}

// -- eval -------------------------------------------------------------------

struct EvalOptions {
  std::string a;
  std::string b;
  std::string f;
  std::string input_dir;
  std::string fused_dir;
  std::string out;
};

struct Triple {
  std::string id;
  fs::path a;
  fs::path b;
  fs::path f;
};

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int cmd_eval(const EvalOptions& o, int threads) {
  std::vector<Triple> triples;
  if (!o.input_dir.empty()) {
    if (o.fused_dir.empty()) throw StageError("usage", "--input-dir needs --fused-dir");
    for (const ImagePair& p : find_pairs(o.input_dir)) {
      for (const char* suffix : {"_fused.png", "_fused.tif", "_fused.tiff", ".png"}) {
        const fs::path f = fs::path(o.fused_dir) / (p.name + suffix);
        if (fs::exists(f)) {
          triples.push_back({p.name, p.vis, p.ir, f});
          break;
        }
      }
    }
  } else if (!o.a.empty() || !o.b.empty() || !o.f.empty()) {
    if (o.a.empty() || o.b.empty() || o.f.empty()) {
      throw StageError("usage", "eval needs all of --a, --b and --f");
    }
    triples.push_back({fs::path(o.f).stem().string(), o.a, o.b, o.f});
  }
  if (triples.empty()) throw StageError("input", "nothing to evaluate");

  std::vector<std::optional<QualityReport>> reports(triples.size());
  const int code = run_pool(triples.size(), threads, [&](std::size_t i) {
    const Triple& t = triples[i];
    reports[i] = evaluate(read_gray(t.a), read_gray(t.b), read_gray(t.f), t.id);
    return kExitOk;
  });

  std::ostringstream csv;
  csv << "pair_id,q_mi,q_ncie,q_g,q_m\n";
  QualityReport sum;
  int n = 0;
  for (const auto& r : reports) {
    if (!r) continue;
    csv << r->pair_id << ',' << csv_number(r->q_mi) << ',' << csv_number(r->q_ncie) << ','
        << csv_number(r->q_g) << ',' << csv_number(r->q_m) << '\n';
    sum.q_mi += r->q_mi;
    sum.q_ncie += r->q_ncie;
    sum.q_g += r->q_g;
    sum.q_m += r->q_m;
    ++n;
  }
  if (n > 0) {
    csv << "mean," << csv_number(sum.q_mi / n) << ',' << csv_number(sum.q_ncie / n) << ','
        << csv_number(sum.q_g / n) << ',' << csv_number(sum.q_m / n) << '\n';
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text_atomic(o.out, csv.str());
  }
  return code;
}

// -- inspect ----------------------------------------------------------------

int cmd_inspect(const std::string& target) {
  fs::path path = target;
  if (fs::is_directory(path)) path /= "diagnostics.json";
  std::ifstream is(path);
  if (!is) throw StageError("read", "cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StageError("read", path.string() + ": " + e.what());
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

void add_fusion_flags(CLI::App* app, FusionConfig& cfg) {
  app->add_option("--beta", cfg.beta.beta, "clear-image prior exponent")->check(CLI::PositiveNumber);
  app->add_option("--eta", cfg.eta, "saliency regularizer in the high-band blend")->check(CLI::PositiveNumber);
  app->add_option("--kl-threshold", cfg.kl_threshold, "K-L gate threshold (nats)")->check(CLI::PositiveNumber);
  app->add_option("--delta-coefficient", cfg.delta_coefficient, "high-band denoise strength coefficient")
      ->check(CLI::PositiveNumber);
  app->add_option("--gabor-sigma", cfg.gabor_sigma, "Gabor envelope sigma (px)")->check(CLI::PositiveNumber);
  app->add_option("--mpc-noise-k", cfg.mpc.noise_k, "phase congruency noise multiplier")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--regularizer-iterations", cfg.regularizer.iterations, "transmission refinement iterations")
      ->check(CLI::Range(1, 64));
  app->add_flag("--blend-denoised", cfg.blend_denoised, "blend the gated high bands instead of the originals");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infrared/visible image fusion"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for batch runs")->check(CLI::Range(1, 256));
  app.fallthrough();
  app.set_config("--config", "", "key = value settings file; command-line flags win");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));

  FuseOptions fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse a pair or a directory of *_vis/*_ir pairs");
  fuse_cmd->add_option("--vis", fuse.vis, "visible image");
  fuse_cmd->add_option("--ir", fuse.ir, "infrared image");
  fuse_cmd->add_option("--input-dir", fuse.input_dir, "directory of name_vis/name_ir pairs");
  fuse_cmd->add_option("--out", fuse.out, "output file, or directory in batch mode")->required();
  fuse_cmd->add_option("--dump-intermediates", fuse.dump_dir, "write every intermediate and diagnostics.json");
  fuse_cmd->add_option("--depth", fuse.depth, "output bit depth (8 or 16)");
  add_fusion_flags(fuse_cmd, fuse.cfg);

  DegradeOptions deg;
  auto* deg_cmd = app.add_subcommand("degrade", "synthesize a corrupted image or directory");
  deg_cmd->add_option("--in", deg.in, "input image or directory")->required();
  deg_cmd->add_option("--out", deg.out, "output image or directory")->required();
  deg_cmd->add_option("--kind", deg.kind, "gaussian_noise|haze|rain|snow|overexposure|blur");
  deg_cmd->add_option("--sigma", deg.spec.sigma, "noise std on the 0-255 scale");
  deg_cmd->add_option("--seed", deg.spec.seed, "base seed");
  deg_cmd->add_option("--A", deg.spec.atmo, "atmospheric light for haze");
  deg_cmd->add_option("--pattern", deg.pattern, "haze t-field: constant|ramp|radial");
  deg_cmd->add_option("--t-level", deg.spec.t_level, "haze t-field level");
  deg_cmd->add_option("--gain", deg.spec.gain, "over-exposure gain");
  deg_cmd->add_option("--gamma", deg.spec.gamma, "over-exposure gamma");
  deg_cmd->add_option("--radius", deg.spec.blur_radius, "blur disc radius");
  deg_cmd->add_option("--rain-density", deg.spec.rain.density, "streaks per 1000 px");
  deg_cmd->add_option("--rain-length", deg.spec.rain.length, "streak length (px)");
  deg_cmd->add_option("--snow-density", deg.spec.snow.density, "flakes per 1000 px");
  deg_cmd->add_option("--modality", deg.modality, "batch filter: all|vis|ir")
      ->check(CLI::IsMember({"all", "vis", "ir"}));
  deg_cmd->add_option("--manifest", deg.manifest, "manifest path (batch default: OUT/manifest.json)");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "score fused images against their sources");
  eval_cmd->add_option("--a", ev.a, "first source (visible)");
  eval_cmd->add_option("--b", ev.b, "second source (infrared)");
  eval_cmd->add_option("--f", ev.f, "fused image");
  eval_cmd->add_option("--input-dir", ev.input_dir, "directory of name_vis/name_ir pairs");
  eval_cmd->add_option("--fused-dir", ev.fused_dir, "directory of name_fused images");
  eval_cmd->add_option("--out", ev.out, "CSV path (default stdout)");

  std::string inspect_target;
  auto* inspect_cmd = app.add_subcommand("inspect", "print diagnostics.json of a previous run");
  inspect_cmd->add_option("path", inspect_target, "dump directory or diagnostics.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fuse_cmd) return cmd_fuse(fuse, threads);
    if (*deg_cmd) return cmd_degrade(deg, threads);
    if (*eval_cmd) return cmd_eval(ev, threads);
    if (*inspect_cmd) return cmd_inspect(inspect_target);
  } catch (const StageError& e) {
    log_error(e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log_error(std::string("internal: ") + e.what());
    return kExitNumeric;
  }
  return kExitUsage;
}
