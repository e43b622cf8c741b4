#include <cmath>
#include <random>

#include "dipf/degrade.hpp"
#include "dipf/fusion.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace dipf;

namespace {

Pmf256 random_pmf(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Pmf256 p;
  double total = 0.0;
  for (double& v : p.bins) total += (v = u(rng) + 1e-9);
  for (double& v : p.bins) v /= total;
  return p;
}

}  // namespace

TEST_CASE("KL divergence") {
  std::mt19937_64 rng(1);
  const Pmf256 p = random_pmf(rng);
  CHECK(kl_divergence(p, p) == 0.0);
  for (int k = 0; k < 200; ++k) CHECK(kl_divergence(random_pmf(rng), random_pmf(rng)) >= 0.0);

  Pmf256 a, b;
  a.bins[0] = 0.5;
  a.bins[1] = 0.5;
  b.bins[0] = 0.25;
  b.bins[1] = 0.75;
  const double direct = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  CHECK(kl_divergence(a, b) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(direct == doctest::Approx(0.1438).epsilon(1e-3));

  Pmf256 c;
  c.bins[0] = 1.0;
  CHECK(std::isinf(kl_divergence(a, c)));
}

TEST_CASE("detail gate returns one of its inputs") {
  const GrayImage high = testing::uniform_noise(32, 32, 3, -0.1, 0.1);
  const GateResult kept = detail_gate(high, GrayImage(32, 32, 0.0), 0.05);
  CHECK(kept.kept_original);
  CHECK(kept.image == high);
  const GateResult same = detail_gate(high, high, 0.05);
  CHECK_FALSE(same.kept_original);
  CHECK(same.kl == 0.0);
}

TEST_CASE("adaptive high-band denoising") {
  const GrayImage clean = testing::smooth_noise(64, 64, 2, 4, 2);
  const DenoiseResult pass = adaptive_denoise_high(scale(clean, 0.01));
  CHECK_FALSE(pass.filtered);
  const GrayImage noisy = subtract(add_gaussian_noise(GrayImage(64, 64, 0.5), 20.0, 5), GrayImage(64, 64, 0.5));
  const DenoiseResult d = adaptive_denoise_high(noisy);
  CHECK(d.filtered);
  CHECK(d.delta == doctest::Approx(0.4 * std::log(d.sigma.sigma) / std::log(5.0)));
  CHECK(estimate_noise_level(d.image).sigma < d.sigma.sigma);
}

TEST_CASE("MPC maps") {
  const MpcMap flat = mpc(GrayImage(40, 30, 0.7));
  CHECK(max_value(flat.values) == 0.0);
  CHECK(min_value(flat.values) == 0.0);

  const GrayImage noise = testing::uniform_noise(50, 40, 4, -0.2, 0.2);
  CHECK(min_value(mpc(noise).values) >= 0.0);

  // Step edge between columns 31 and 32: the ridge of every row sits there.
  const GrayImage edge = testing::step_edge(64, 48, 32, 0.0, 1.0);
  const MpcMap m = mpc(edge);
  CHECK(min_value(m.values) >= 0.0);
  for (int y = 4; y < 44; y += 8) {
    int best = 0;
    for (int x = 1; x < 64; ++x) {
      if (m.values(x, y) > m.values(best, y)) best = x;
    }
    CHECK((best == 31 || best == 32));
  }
}

TEST_CASE("high-band fusion") {
  std::array<GrayImage, 3> h = {testing::uniform_noise(20, 20, 1, -0.1, 0.1),
                                testing::uniform_noise(20, 20, 2, -0.1, 0.1),
                                testing::uniform_noise(20, 20, 3, -0.1, 0.1)};
  std::array<MpcMap, 3> zero;
  for (auto& m : zero) m.values = GrayImage(20, 20, 0.0);
  const HighFusion f = fuse_high(h, zero, 0.1);
  for (std::size_t i = 0; i < f.fused.size(); ++i) {
    CHECK(f.fused[i] == h[0][i] + h[1][i] + h[2][i]);
  }

  // Pointwise oracle with non-trivial saliency.
  std::array<MpcMap, 3> sal;
  for (int a = 0; a < 3; ++a) sal[static_cast<std::size_t>(a)].values = testing::uniform_noise(20, 20, 10 + a);
  const HighFusion g = fuse_high(h, sal, 0.1);
  double peak = 0.0;
  for (std::size_t i = 0; i < 400; ++i) peak = std::max(peak, sal[0].values[i] + sal[1].values[i] + sal[2].values[i]);
  const std::size_t i = 137;
  double expect = 0.0;
  for (std::size_t a = 0; a < 3; ++a) expect += (sal[a].values[i] + 0.1) / (peak + 0.1) * h[a][i];
  CHECK(g.fused[i] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(g.max_saliency_sum == doctest::Approx(peak));
}

TEST_CASE("energy layer ties go to the infrared low band") {
  GrayImage l1(3, 1), l3(3, 1);
  l1(0, 0) = 0.5; l3(0, 0) = 0.2;
  l1(1, 0) = 0.1; l3(1, 0) = 0.6;
  l1(2, 0) = 0.4; l3(2, 0) = 0.4;
  const GrayImage e = energy_layer(l1, l3);
  CHECK(e(0, 0) == 0.5);
  CHECK(e(1, 0) == 0.6);
  CHECK(e(2, 0) == 0.4);
}

TEST_CASE("Gabor bank shape and FFT convolution oracle") {
  const GaborBank bank = gabor_bank();
  CHECK(bank.kernels[0].width() == 69);
  CHECK(bank.kernels[0].height() == 69);
  for (const auto& k : bank.kernels) CHECK(std::fabs(mean(k)) < 1e-15);

  const GaborBank small = gabor_bank(2.0, 6.0);
  const GrayImage img = testing::uniform_noise(23, 19, 6);
  const auto resp = gabor_responses(img, small);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(testing::max_abs_diff(resp[k], convolve(img, small.kernels[k])) < 1e-10);
  }
}

TEST_CASE("low-frequency weights") {
  const GaborBank bank = gabor_bank();
  for (int k = 0; k < 10; ++k) {
    const GrayImage a = testing::smooth_noise(48, 40, 30 + k, 3, 2);
    const GrayImage b = testing::smooth_noise(48, 40, 60 + k, 3, 2);
    const LowFreqStats s = lowfreq_weights(a, b, bank);
    CHECK(s.weights.w2 + s.weights.w4 == doctest::Approx(1.0).epsilon(1e-12));
    const GrayImage f = fuse_low(a, b, s.weights);
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(f[i] >= std::min(a[i], b[i]) - 1e-12);
      CHECK(f[i] <= std::max(a[i], b[i]) + 1e-12);
    }
  }
  const GrayImage same = testing::smooth_noise(48, 40, 1, 3, 2);
  const LowFreqStats eq = lowfreq_weights(same, same, bank);
  CHECK(eq.weights.w2 == 0.5);
  CHECK(eq.weights.w4 == 0.5);
  const LowFreqStats flat = lowfreq_weights(GrayImage(20, 20, 0.3), GrayImage(20, 20, 0.6), bank);
  CHECK(flat.weights.w2 == 0.5);
  CHECK(directional_variance(GrayImage(20, 20, 0.3), bank) == std::array<double, 4>{});
}

TEST_CASE("reconstruction is a plain sum") {
  const GrayImage fh = testing::uniform_noise(10, 10, 1, -0.2, 0.2);
  const GrayImage fl = testing::uniform_noise(10, 10, 2);
  const GrayImage f = reconstruct(fh, fl);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == fh[i] + fl[i]);
  CHECK(reconstruct(fh, GrayImage(10, 10, 0.0)) == fh);
}
