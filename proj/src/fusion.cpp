#include "dipf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dipf/decompose.hpp"
#include "fft.hpp"

namespace dipf {

namespace {
const double kPi = std::acos(-1.0);

// Half-sample symmetric index folding, valid for any offset.
int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}
}  // namespace

// -- high-frequency path --------------------------------------------------

DenoiseResult adaptive_denoise_high(const GrayImage& high, double coefficient, double log_base) {
  DenoiseResult out{high, estimate_noise_level(high), 0.0, false};
  if (out.sigma.sigma <= 1.0) return out;
  out.delta = coefficient * std::log(out.sigma.sigma) / std::log(log_base);
  out.image = sanf(high, {out.delta, 1, 3, 1e-4});
  out.filtered = true;
  return out;
}

double kl_divergence(const Pmf256& p, const Pmf256& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.bins.size(); ++i) {
    if (p.bins[i] <= 0.0) continue;
    if (q.bins[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p.bins[i] * std::log(p.bins[i] / q.bins[i]);
  }
  return std::max(kl, 0.0);
}

GateResult detail_gate(const GrayImage& high, const GrayImage& denoised, double threshold) {
  require_same_shape(high, denoised, "detail_gate");
  const double lo = std::min(min_value(high), min_value(denoised));
  const double hi = std::max(max_value(high), max_value(denoised));
  const double kl = kl_divergence(histogram_pmf(high, lo, hi), histogram_pmf(denoised, lo, hi));
  if (kl > threshold) return {high, kl, true};
  return {denoised, kl, false};
}

MpcMap mpc(const GrayImage& band, const MpcParams& params) {
  const int w = band.width();
  const int h = band.height();
  const int nscales = static_cast<int>(params.wavelengths.size());
  MpcMap out{GrayImage(w, h), nscales, 0.0};
  if (min_value(band) == max_value(band)) return out;

  const int pad = params.padding;
  const int pw = w + 2 * pad;
  const int ph = h + 2 * pad;
  const double mu = mean(band);
  std::vector<double> padded(static_cast<std::size_t>(pw) * static_cast<std::size_t>(ph));
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect_index(y - pad, h);
    for (int x = 0; x < pw; ++x) {
      padded[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)] =
          band(reflect_index(x - pad, w), sy) - mu;
    }
  }

  detail::RealFft2d fft(pw, ph);
  const std::vector<detail::Complex> spectrum = fft.forward(padded);
  const int sw = fft.spectrum_width();
  const double norm = static_cast<double>(pw) * static_cast<double>(ph);
  const double log_bw = 2.0 * std::pow(std::log(params.sigma_on_f), 2.0);

  std::vector<double> sum_even(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<double> sum_odd1(sum_even.size(), 0.0);
  std::vector<double> sum_odd2(sum_even.size(), 0.0);
  std::vector<double> sum_amp(sum_even.size(), 0.0);
  std::vector<double> max_amp(sum_even.size(), 0.0);
  std::vector<double> finest_amp(sum_even.size(), 0.0);

  std::vector<detail::Complex> even_spec(spectrum.size());
  std::vector<detail::Complex> odd1_spec(spectrum.size());
  std::vector<detail::Complex> odd2_spec(spectrum.size());
  const detail::Complex i_unit(0.0, 1.0);

  for (int s = 0; s < nscales; ++s) {
    const double f0 = 1.0 / params.wavelengths[static_cast<std::size_t>(s)];
    for (int ky = 0; ky < ph; ++ky) {
      const double v = detail::fft_frequency(ky, ph);
      for (int kx = 0; kx < sw; ++kx) {
        const double u = static_cast<double>(kx) / pw;
        const std::size_t k = static_cast<std::size_t>(ky) * static_cast<std::size_t>(sw) + static_cast<std::size_t>(kx);
        const double radius = std::hypot(u, v);
        if (radius == 0.0) {
          even_spec[k] = odd1_spec[k] = odd2_spec[k] = 0.0;
          continue;
        }
        const double lg = std::log(radius / f0);
        const double gain = std::exp(-(lg * lg) / log_bw);
        const detail::Complex filtered = spectrum[k] * gain;
        even_spec[k] = filtered;
        odd1_spec[k] = filtered * i_unit * (u / radius);
        odd2_spec[k] = filtered * i_unit * (v / radius);
      }
    }
    const std::vector<double> even = fft.inverse(even_spec);
    const std::vector<double> odd1 = fft.inverse(odd1_spec);
    const std::vector<double> odd2 = fft.inverse(odd2_spec);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t src = static_cast<std::size_t>(y + pad) * static_cast<std::size_t>(pw) +
                                static_cast<std::size_t>(x + pad);
        const std::size_t dst = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        const double e = even[src] / norm;
        const double o1 = odd1[src] / norm;
        const double o2 = odd2[src] / norm;
        const double amp = std::sqrt(e * e + o1 * o1 + o2 * o2);
        sum_even[dst] += e;
        sum_odd1[dst] += o1;
        sum_odd2[dst] += o2;
        sum_amp[dst] += amp;
        max_amp[dst] = std::max(max_amp[dst], amp);
        if (s == 0) finest_amp[dst] = amp;
      }
    }
  }

  // Noise threshold from the finest-scale response, scaled by the geometric
  // sum of per-scale amplitudes (each octave halves the expected noise response).
  std::nth_element(finest_amp.begin(), finest_amp.begin() + static_cast<std::ptrdiff_t>(finest_amp.size() / 2),
                   finest_amp.end());
  const double median_finest = finest_amp[finest_amp.size() / 2];
  double scale_sum = 0.0;
  for (int s = 0; s < nscales; ++s) scale_sum += std::pow(0.5, s);
  out.noise_threshold = params.noise_k * median_finest * scale_sum;

  for (std::size_t i = 0; i < sum_amp.size(); ++i) {
    const double energy = std::sqrt(sum_even[i] * sum_even[i] + sum_odd1[i] * sum_odd1[i] +
                                    sum_odd2[i] * sum_odd2[i]);
    const double amp = sum_amp[i];
    const double ratio = amp > 0.0 ? std::clamp(energy / amp, 0.0, 1.0) : 0.0;
    const double spread = max_amp[i] > 0.0 ? amp / (max_amp[i] * nscales) : 0.0;
    const double weight = 1.0 / (1.0 + std::exp(params.spread_gain * (params.spread_cutoff - spread)));
    const double phase = std::max(1.0 - params.gamma * std::acos(ratio), 0.0);
    const double excess = std::max(energy - out.noise_threshold, 0.0);
    out.values[i] = weight * phase * excess / (amp + params.amplitude_guard);
  }
  return out;
}

HighFusion fuse_high(std::span<const GrayImage, 3> high, std::span<const MpcMap, 3> saliency,
                     double eta) {
  for (int a = 0; a < 3; ++a) {
    require_same_shape(high[0], high[static_cast<std::size_t>(a)], "fuse_high");
    require_same_shape(high[0], saliency[static_cast<std::size_t>(a)].values, "fuse_high");
  }
  HighFusion out{GrayImage(high[0].width(), high[0].height()), 0.0, 0.0};
  const std::size_t n = high[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = saliency[0].values[i] + saliency[1].values[i] + saliency[2].values[i];
    out.max_saliency_sum = std::max(out.max_saliency_sum, s);
  }
  const double denom = out.max_saliency_sum + eta;
  double gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double wgt = (saliency[a].values[i] + eta) / denom;
      acc += wgt * high[a][i];
      gain += wgt;
    }
    out.fused[i] = acc;
  }
  out.mean_gain = gain / static_cast<double>(n);
  return out;
}

// -- low-frequency path ---------------------------------------------------

GrayImage energy_layer(const GrayImage& l1, const GrayImage& l3) {
  require_same_shape(l1, l3, "energy_layer");
  GrayImage out(l1.width(), l1.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = l1[i] > l3[i] ? l1[i] : l3[i];
  return out;
}

GaborBank gabor_bank(double sigma_hat, double lambda_hat, double tau, double psi) {
  if (sigma_hat <= 0.0 || lambda_hat <= 0.0) throw StageError("gabor_bank", "sigma and lambda must be positive");
  GaborBank bank;
  bank.sigma_hat = sigma_hat;
  bank.lambda_hat = lambda_hat;
  bank.tau = tau;
  bank.psi = psi;
  int size = static_cast<int>(std::lround(6.0 * sigma_hat + 1.0));
  if (size % 2 == 0) ++size;
  const int half = size / 2;
  for (std::size_t k = 0; k < kGaborAngles.size(); ++k) {
    const double theta = kGaborAngles[k] * kPi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    GrayImage kernel(size, size);
    for (int y = -half; y <= half; ++y) {
      for (int x = -half; x <= half; ++x) {
        const double xr = x * c + y * s;
        const double yr = -x * s + y * c;
        kernel(x + half, y + half) =
            std::exp(-(xr * xr + tau * tau * yr * yr) / (2.0 * sigma_hat * sigma_hat)) *
            std::cos(2.0 * kPi * xr / lambda_hat + psi);
      }
    }
    const double dc = mean(kernel);
    for (double& v : kernel.pixels()) v -= dc;
    bank.kernels[k] = std::move(kernel);
  }
  return bank;
}

std::array<GrayImage, 4> gabor_responses(const GrayImage& img, const GaborBank& bank) {
  const int w = img.width();
  const int h = img.height();
  const int kw = bank.kernels[0].width();
  const int kh = bank.kernels[0].height();
  const int hx = kw / 2;
  const int hy = kh / 2;
  const int pw = w + 2 * hx;
  const int ph = h + 2 * hy;

  // Circular convolution on the replicate-padded image equals linear
  // convolution with replicate borders inside the central window.
  std::vector<double> padded(static_cast<std::size_t>(pw) * static_cast<std::size_t>(ph));
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      padded[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)] =
          img.clamped(x - hx, y - hy);
    }
  }
  detail::RealFft2d fft(pw, ph);
  const std::vector<detail::Complex> img_spec = fft.forward(padded);
  const double norm = static_cast<double>(pw) * static_cast<double>(ph);

  std::array<GrayImage, 4> out;
  std::vector<double> kernel_buf(padded.size());
  for (std::size_t k = 0; k < bank.kernels.size(); ++k) {
    std::fill(kernel_buf.begin(), kernel_buf.end(), 0.0);
    const GrayImage& kernel = bank.kernels[k];
    for (int y = -hy; y <= hy; ++y) {
      for (int x = -hx; x <= hx; ++x) {
        const int wx = (x + pw) % pw;
        const int wy = (y + ph) % ph;
        kernel_buf[static_cast<std::size_t>(wy) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(wx)] +=
            kernel(x + hx, y + hy);
      }
    }
    std::vector<detail::Complex> spec = fft.forward(kernel_buf);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= img_spec[i];
    const std::vector<double> conv = fft.inverse(spec);
    GrayImage resp(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        resp(x, y) = conv[static_cast<std::size_t>(y + hy) * static_cast<std::size_t>(pw) +
                          static_cast<std::size_t>(x + hx)] / norm;
      }
    }
    out[k] = std::move(resp);
  }
  return out;
}

std::array<double, 4> directional_variance(const GrayImage& img, const GaborBank& bank) {
  std::array<double, 4> v{};
  if (min_value(img) == max_value(img)) return v;
  const auto responses = gabor_responses(img, bank);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = variance(responses[k]);
  return v;
}

LowFreqStats lowfreq_weights(const GrayImage& l2, const GrayImage& l4, const GaborBank& bank) {
  require_same_shape(l2, l4, "lowfreq_weights");
  LowFreqStats st;
  auto mean4 = [](const std::array<double, 4>& a) { return (a[0] + a[1] + a[2] + a[3]) / 4.0; };
  st.variance_l2 = mean4(directional_variance(l2, bank));
  st.variance_l4 = mean4(directional_variance(l4, bank));
  st.entropy_l2 = entropy(histogram_pmf(l2));
  st.entropy_l4 = entropy(histogram_pmf(l4));
  const double a2 = st.variance_l2 * std::exp(st.entropy_l2);
  const double a4 = st.variance_l4 * std::exp(st.entropy_l4);
  const double denom = a2 + a4;
  if (denom < 1e-15) {
    st.weights = {0.5, 0.5};
  } else {
    st.weights = {a2 / denom, a4 / denom};
  }
  return st;
}

GrayImage fuse_low(const GrayImage& l2, const GrayImage& l4, LowFreqWeights w) {
  require_same_shape(l2, l4, "fuse_low");
  GrayImage out(l2.width(), l2.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w.w2 * l2[i] + w.w4 * l4[i];
  return out;
}

GrayImage reconstruct(const GrayImage& fh, const GrayImage& fl) {
  require_same_shape(fh, fl, "reconstruct");
  return add(fh, fl);
}

}  // namespace dipf
