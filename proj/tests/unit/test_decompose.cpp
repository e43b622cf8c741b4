#include <cmath>

#include "dipf/decompose.hpp"
#include "dipf/degrade.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace dipf;

namespace {

// Column whose forward x-difference, summed over rows, is largest.
int edge_column(const GrayImage& img) {
  int best = 0;
  double best_v = -1.0;
  for (int x = 0; x + 1 < img.width(); ++x) {
    double acc = 0.0;
    for (int y = 0; y < img.height(); ++y) acc += img(x + 1, y) - img(x, y);
    if (std::fabs(acc) > best_v) {
      best_v = std::fabs(acc);
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("contrast/structure split") {
  const GrayImage vis = testing::uniform_noise(20, 16, 1);
  auto [cl1, sl1] = split_contrast_structure(vis, {GrayImage(20, 16, 1.0)});
  CHECK(sl1 == vis);
  CHECK(max_value(cl1) == 0.0);
  auto [cl2, sl2] = split_contrast_structure(vis, {GrayImage(20, 16, 0.5)});
  CHECK(cl2 == sl2);
  CHECK(testing::max_abs_diff(cl2, scale(vis, 0.5)) == 0.0);
  auto [cl, sl] = split_contrast_structure(vis, {testing::uniform_noise(20, 16, 2, 0.05, 1.0)});
  CHECK(testing::max_abs_diff(add(cl, sl), vis) < 1e-12);
  CHECK_THROWS_AS(split_contrast_structure(vis, {GrayImage(4, 4)}), StageError);
}

TEST_CASE("noise weight is zero exactly on flats") {
  CHECK(max_value(noise_suppression_weight(GrayImage(9, 7, 0.37))) == 0.0);
  CHECK(min_value(noise_suppression_weight(testing::uniform_noise(9, 7, 3))) > 0.0);
}

TEST_CASE("SANF weight factors") {
  const GrayImage img = testing::step_edge(24, 12, 12);
  const SanfWeights w = sanf_weights(img, {});
  CHECK(max_value(w.guide_gradient) == doctest::Approx(1.0));
  CHECK(w.penalty(3, 5) == doctest::Approx(10.0));  // flat: 1 / (0 + 0.1)
  CHECK(w.smoothness(3, 5) == doctest::Approx(0.4 / 1e-4));
  CHECK(min_value(w.scale_metric) >= 0.0);
  CHECK(max_value(w.scale_metric) <= 1.0);
  // Across the edge smoothing is weakest.
  CHECK(w.smoothness(11, 5) < w.smoothness(3, 5));
}

TEST_CASE("weighted smoothing solve meets its residual target") {
  const GrayImage b = testing::uniform_noise(33, 21, 5);
  const GrayImage wts = testing::uniform_noise(33, 21, 6, 0.0, 50.0);
  SolverStats st;
  const GrayImage x = solve_weighted_smoothing(b, wts, b, &st);
  CHECK(st.relative_residual <= 1e-6);
  // Independent application of (I + L_w).
  double rr = 0.0, bb = 0.0;
  for (int y = 0; y < 21; ++y) {
    for (int xx = 0; xx < 33; ++xx) {
      double v = x(xx, y);
      if (xx + 1 < 33) v += wts(xx, y) * (x(xx, y) - x(xx + 1, y));
      if (xx > 0) v += wts(xx - 1, y) * (x(xx, y) - x(xx - 1, y));
      if (y + 1 < 21) v += wts(xx, y) * (x(xx, y) - x(xx, y + 1));
      if (y > 0) v += wts(xx, y - 1) * (x(xx, y) - x(xx, y - 1));
      rr += (v - b(xx, y)) * (v - b(xx, y));
      bb += b(xx, y) * b(xx, y);
    }
  }
  CHECK(std::sqrt(rr / bb) <= 1e-6);
}

TEST_CASE("SANF fixed points and identity") {
  const GrayImage img = testing::uniform_noise(25, 19, 7);
  CHECK(sanf(img, {0.0, 1, 3, 1e-4}) == img);
  const GrayImage flat(25, 19, 0.42);
  CHECK(sanf(flat, {}) == flat);
  CHECK_THROWS_AS(sanf(img, {-1.0, 1, 3, 1e-4}), StageError);
}

TEST_CASE("SANF denoises a step edge without moving it") {
  const GrayImage clean = testing::step_edge(96, 64, 48);
  const GrayImage noisy = add_gaussian_noise(clean, 15.0, 21);
  const GrayImage out = sanf(noisy, {0.4, 1, 3, 1e-4});
  CHECK(estimate_noise_level(out).sigma < estimate_noise_level(noisy).sigma);
  CHECK(std::abs(edge_column(out) - 47) <= 1);
  CHECK(mean(out) == doctest::Approx(mean(noisy)).epsilon(1e-3));
}

TEST_CASE("SANF total variation is non-increasing in kappa") {
  const GrayImage noisy = add_gaussian_noise(testing::step_edge(64, 48, 30), 15.0, 4);
  double previous = total_variation(noisy);
  for (double kappa : {0.0, 0.1, 0.4, 1.0}) {
    const double tv = total_variation(sanf(noisy, {kappa, 1, 3, 1e-4}));
    CHECK(tv <= previous + 1e-9);
    previous = tv;
  }
}

TEST_CASE("infrared preprocessing") {
  CHECK(infrared_kappa({5.0}) == doctest::Approx(0.01));
  CHECK(infrared_kappa({25.0}) == doctest::Approx(0.02));
  CHECK(infrared_kappa({0.5}) == 0.0);

  const GrayImage clean = testing::smooth_noise(96, 96, 2, 6, 3);
  const FilteredImage pass = preprocess_infrared(clean);
  CHECK_FALSE(pass.filtered);
  CHECK(pass.image == clean);

  GrayImage mid = clean;
  for (double& v : mid.pixels()) v = 0.2 + 0.6 * v;
  const GrayImage noisy = add_gaussian_noise(mid, 25.0, 8);
  const FilteredImage f = preprocess_infrared(noisy);
  CHECK(f.filtered);
  CHECK(f.kappa == doctest::Approx(0.01 * std::log(f.sigma.sigma) / std::log(5.0)));
  CHECK(estimate_noise_level(f.image).sigma < f.sigma.sigma);
}

TEST_CASE("band decomposition") {
  CHECK(band_kappa({0.0}) == doctest::Approx(0.4));
  CHECK(band_kappa({20.0}) == doctest::Approx(0.4 / std::exp(0.6)));
  const BandSplit flat = band_decompose(GrayImage(16, 16, 0.3));
  CHECK(flat.low == GrayImage(16, 16, 0.3));
  CHECK(max_value(flat.high) == 0.0);
  CHECK(min_value(flat.high) == 0.0);
  const GrayImage layer = testing::uniform_noise(40, 30, 9);
  const BandSplit b = band_decompose(layer);
  CHECK(testing::max_abs_diff(add(b.low, b.high), layer) < 1e-9);
}
