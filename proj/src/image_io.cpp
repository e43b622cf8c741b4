#include "dipf/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <string>

namespace dipf {

namespace fs = std::filesystem;

unsigned quantize(double v, unsigned max_code) {
  const double c = std::clamp(v, 0.0, 1.0) * static_cast<double>(max_code);
  return static_cast<unsigned>(std::floor(c + 0.5));
}

namespace {

template <typename T>
double plane_value(const cv::Mat& m, int x, int y, int channel, double scale) {
  return static_cast<double>(m.ptr<T>(y)[x * m.channels() + channel]) / scale;
}

void check_extension(const fs::path& path, const char* stage) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext != ".png" && ext != ".tif" && ext != ".tiff") {
    throw StageError(stage, "unsupported image format '" + ext + "' (png, tif, tiff)");
  }
}

cv::Mat encode_planes(const std::array<const GrayImage*, 3>& planes, int channels, BitDepth depth) {
  const int w = planes[0]->width();
  const int h = planes[0]->height();
  const bool deep = depth == BitDepth::k16;
  const unsigned max_code = deep ? 65535u : 255u;
  cv::Mat m(h, w, CV_MAKETYPE(deep ? CV_16U : CV_8U, channels));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        // OpenCV stores colour as BGR.
        const GrayImage& src = *planes[channels == 1 ? 0 : 2 - c];
        const unsigned q = quantize(src(x, y), max_code);
        if (deep) {
          m.ptr<std::uint16_t>(y)[x * channels + c] = static_cast<std::uint16_t>(q);
        } else {
          m.ptr<std::uint8_t>(y)[x * channels + c] = static_cast<std::uint8_t>(q);
        }
      }
    }
  }
  return m;
}

void write_mat(const fs::path& path, const cv::Mat& m) {
  check_extension(path, "write");
  static std::atomic<unsigned> counter{0};
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) {
    throw StageError("write", "output directory does not exist: " + dir.string());
  }
  const fs::path tmp = dir / (path.stem().string() + ".tmp" + std::to_string(counter++) +
                              path.extension().string());
  bool ok = false;
  try {
    ok = cv::imwrite(tmp.string(), m);
  } catch (const cv::Exception& e) {
    ok = false;
  }
  if (!ok) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw StageError("write", "cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw StageError("write", "cannot move output into place: " + path.string());
  }
}

}  // namespace

LoadedImage read_image(const fs::path& path) {
  check_extension(path, "read");
  if (!fs::exists(path)) throw StageError("read", "no such file: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw StageError("read", "unreadable image: " + path.string());

  LoadedImage out;
  double scale = 255.0;
  switch (m.depth()) {
    case CV_8U: out.depth = BitDepth::k8; scale = 255.0; break;
    case CV_16U: out.depth = BitDepth::k16; scale = 65535.0; break;
    default: throw StageError("read", "unsupported sample type in " + path.string());
  }
  const int channels = m.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw StageError("read", "unsupported channel count in " + path.string());
  }
  out.grayscale = channels == 1;
  out.rgb = RgbImage(m.cols, m.rows);
  const bool deep = out.depth == BitDepth::k16;
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      auto value = [&](int c) {
        return deep ? plane_value<std::uint16_t>(m, x, y, c, scale)
                    : plane_value<std::uint8_t>(m, x, y, c, scale);
      };
      if (channels == 1) {
        const double v = value(0);
        out.rgb.r(x, y) = v;
        out.rgb.g(x, y) = v;
        out.rgb.b(x, y) = v;
      } else {
        out.rgb.b(x, y) = value(0);
        out.rgb.g(x, y) = value(1);
        out.rgb.r(x, y) = value(2);
      }
    }
  }
  return out;
}

GrayImage read_gray(const fs::path& path) {
  LoadedImage img = read_image(path);
  if (img.grayscale) return std::move(img.rgb.r);
  return to_luminance(img.rgb).luma;
}

RgbImage read_rgb(const fs::path& path) { return read_image(path).rgb; }

void write_image(const fs::path& path, const GrayImage& img, BitDepth depth) {
  write_mat(path, encode_planes({&img, &img, &img}, 1, depth));
}

void write_image(const fs::path& path, const RgbImage& img, BitDepth depth) {
  write_mat(path, encode_planes(img.planes(), 3, depth));
}

}  // namespace dipf
