#include <cmath>

#include "dipf/degrade.hpp"
#include "dipf/imgcore.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace dipf;
using dipf::testing::uniform_noise;

namespace {

GrayImage brute_window(const GrayImage& img, int r, int mode) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = mode == 0 ? 1e300 : (mode == 1 ? -1e300 : 0.0);
      int n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double v = img.clamped(x + dx, y + dy);
          if (mode == 0) acc = std::min(acc, v);
          if (mode == 1) acc = std::max(acc, v);
          if (mode == 2) acc += v;
          ++n;
        }
      }
      out(x, y) = mode == 2 ? acc / n : acc;
    }
  }
  return out;
}

GrayImage transpose(const GrayImage& img) {
  GrayImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out(y, x) = img(x, y);
  }
  return out;
}

}  // namespace

TEST_CASE("window filters match brute force with replicate borders") {
  const GrayImage img = uniform_noise(23, 17, 4);
  for (int r : {1, 2, 7}) {
    CHECK(testing::max_abs_diff(min_filter(img, r), brute_window(img, r, 0)) == 0.0);
    CHECK(testing::max_abs_diff(max_filter(img, r), brute_window(img, r, 1)) == 0.0);
    CHECK(testing::max_abs_diff(box_mean(img, r), brute_window(img, r, 2)) < 1e-12);
  }
}

TEST_CASE("min_channel takes the per-pixel minimum") {
  RgbImage img(2, 1);
  img.r(0, 0) = 0.3; img.g(0, 0) = 0.1; img.b(0, 0) = 0.5;
  img.r(1, 0) = 0.9; img.g(1, 0) = 0.8; img.b(1, 0) = 0.2;
  const GrayImage m = min_channel(img);
  CHECK(m(0, 0) == 0.1);
  CHECK(m(1, 0) == 0.2);
}

TEST_CASE("sobel directions: 0 sees x change, 2 sees y change, transposition swaps them") {
  const GrayImage xs = testing::ramp(9, 9, 0.0, 0.8);
  const auto resp = sobel_8dir(xs);
  CHECK(resp[0](4, 4) == doctest::Approx(0.8));  // 8 * 0.1 per px
  CHECK(resp[2](4, 4) == doctest::Approx(0.0));
  CHECK(resp[4](4, 4) == doctest::Approx(0.8));

  const GrayImage img = uniform_noise(12, 10, 8);
  const auto a = sobel_8dir(img);
  const auto b = sobel_8dir(transpose(img));
  CHECK(testing::max_abs_diff(transpose(a[0]), b[2]) < 1e-12);
  for (const auto& m : sobel_8dir(GrayImage(5, 5, 0.3))) CHECK(max_value(m) == 0.0);
}

TEST_CASE("convolve with a delta kernel is identity; box kernel matches box_mean") {
  const GrayImage img = uniform_noise(11, 13, 2);
  GrayImage delta(3, 3);
  delta(1, 1) = 1.0;
  CHECK(testing::max_abs_diff(convolve(img, delta), img) < 1e-15);
  GrayImage box(5, 5, 1.0 / 25.0);
  CHECK(testing::max_abs_diff(convolve(img, box), box_mean(img, 2)) < 1e-12);
}

TEST_CASE("luminance split and recolor round-trip") {
  const RgbImage img(uniform_noise(8, 8, 1), uniform_noise(8, 8, 2), uniform_noise(8, 8, 3));
  const LumaChroma lc = to_luminance(img);
  CHECK(lc.luma(3, 3) == doctest::Approx(0.299 * img.r(3, 3) + 0.587 * img.g(3, 3) + 0.114 * img.b(3, 3)));
  const RgbImage back = recolor(lc.luma, lc.chroma);
  CHECK(testing::max_abs_diff(back.r, img.r) < 1e-12);
  CHECK(testing::max_abs_diff(back.g, img.g) < 1e-12);
  CHECK(testing::max_abs_diff(back.b, img.b) < 1e-12);
}

TEST_CASE("histogram and entropy") {
  GrayImage img(256, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 256; ++x) img(x, y) = (x + 0.5) / 256.0;
  }
  const Pmf256 p = histogram_pmf(img);
  CHECK(p.total() == doctest::Approx(1.0));
  CHECK(entropy(p) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(entropy(histogram_pmf(GrayImage(4, 4, 0.5))) == doctest::Approx(0.0).epsilon(1e-9));
  // Explicit range: values outside land in the end bins.
  GrayImage two(2, 1);
  two(0, 0) = -5.0;
  two(1, 0) = 5.0;
  const Pmf256 q = histogram_pmf(two, 0.0, 1.0);
  CHECK(q.bins[0] == doctest::Approx(0.5));
  CHECK(q.bins[255] == doctest::Approx(0.5));
}

TEST_CASE("noise estimator") {
  CHECK(estimate_noise_level(GrayImage(64, 64, 0.4)).sigma == 0.0);
  const GrayImage clean = testing::smooth_noise(256, 256, 5, 8, 3);
  for (double sigma : {5.0, 10.0, 20.0}) {
    GrayImage mid = clean;
    for (double& v : mid.pixels()) v = 0.3 + 0.4 * v;  // keep clear of clamping
    const double est = estimate_noise_level(add_gaussian_noise(mid, sigma, 11)).sigma;
    CHECK(est == doctest::Approx(sigma).epsilon(0.15));
  }
}

TEST_CASE("statistics and total variation") {
  GrayImage img(3, 1);
  img(0, 0) = 0.0;
  img(1, 0) = 0.5;
  img(2, 0) = 0.2;
  CHECK(mean(img) == doctest::Approx(0.7 / 3.0));
  CHECK(min_value(img) == 0.0);
  CHECK(max_value(img) == 0.5);
  CHECK(total_variation(img) == doctest::Approx(0.8));
  CHECK(variance(GrayImage(4, 4, 0.3)) == doctest::Approx(0.0));
}

TEST_CASE("shape guards") {
  CHECK_THROWS_AS(require_same_shape(GrayImage(3, 3), GrayImage(3, 4), "x"), StageError);
  CHECK_THROWS_AS(require_min_size(2, 5, "input"), StageError);
  CHECK_NOTHROW(require_min_size(3, 3, "input"));
  try {
    require_same_shape(GrayImage(3, 3), GrayImage(4, 3), "co-registration");
  } catch (const StageError& e) {
    CHECK(e.stage() == "co-registration");
  }
}
