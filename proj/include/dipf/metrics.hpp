#pragma once

// Objective fusion-quality scores. Sources a, b and the fused image f are
// grayscale in [0,1]; values outside are clamped into the first/last bin.

#include <string>

#include "dipf/imgcore.hpp"

namespace dipf {

struct QualityReport {
  std::string pair_id;
  double q_mi = 0.0;
  double q_ncie = 0.0;
  double q_g = 0.0;
  double q_m = 0.0;
};

/// Mutual information in bits from a 256x256 joint histogram over [0,1].
double mutual_information(const GrayImage& x, const GrayImage& y);

/// Entropy in bits of the 256-bin histogram over [0,1].
double entropy_bits(const GrayImage& x);

/// 2 [ I(a;f)/(H(a)+H(f)) + I(b;f)/(H(b)+H(f)) ]; a zero-entropy pair adds 0.
double q_mi(const GrayImage& a, const GrayImage& b, const GrayImage& f);

/// Nonlinear correlation information entropy over the 3x3 matrix of
/// normalized MI coefficients.
double q_ncie(const GrayImage& a, const GrayImage& b, const GrayImage& f);

/// Sobel-based edge transfer in [0,1]. Both sigmoids are normalized to 1 at
/// perfect preservation.
double q_g(const GrayImage& a, const GrayImage& b, const GrayImage& f);

/// Two-level Haar edge preservation, each level weighted by twice its share of
/// the source edge energy. Self-fusion of textured content scores 2.
double q_m(const GrayImage& a, const GrayImage& b, const GrayImage& f);

QualityReport evaluate(const GrayImage& a, const GrayImage& b, const GrayImage& f,
                       std::string pair_id = {});

}  // namespace dipf
