#pragma once

// PNG / TIFF reading and writing, 8- and 16-bit, grayscale or RGB.
// Decoding divides by the type maximum; encoding rounds half-up after
// clamping to [0,1].

#include <filesystem>

#include "dipf/imgcore.hpp"

namespace dipf {

enum class BitDepth { k8 = 8, k16 = 16 };

struct LoadedImage {
  RgbImage rgb;
  bool grayscale = false;
  BitDepth depth = BitDepth::k8;
};

LoadedImage read_image(const std::filesystem::path& path);

/// Luminance of a colour file, or the single plane of a grayscale one.
GrayImage read_gray(const std::filesystem::path& path);

/// Grayscale files come back with three identical planes.
RgbImage read_rgb(const std::filesystem::path& path);

/// Writes atomically: the encoded file lands next to `path` under a temporary
/// name and is renamed into place.
void write_image(const std::filesystem::path& path, const GrayImage& img,
                 BitDepth depth = BitDepth::k8);
void write_image(const std::filesystem::path& path, const RgbImage& img,
                 BitDepth depth = BitDepth::k8);

/// Quantizes [0,1] to [0, max_code] with round-half-up.
unsigned quantize(double v, unsigned max_code);

}  // namespace dipf
