#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "unoqa/error.hpp"
#include "unoqa/types.hpp"

namespace unoqa {

// Rec. 601 luma from interleaved 8-bit RGB rows, scaled to [0,1].
inline Image gray_from_rgb8(const std::vector<std::uint8_t>& rgb, Index height, Index width) {
  Image out(height, width);
  const double* w = nullptr;
  static constexpr double kLuma[3] = {0.299, 0.587, 0.114};
  w = kLuma;
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x) {
      const std::size_t p = 3 * static_cast<std::size_t>(y * width + x);
      out(y, x) = (w[0] * rgb[p] + w[1] * rgb[p + 1] + w[2] * rgb[p + 2]) / 255.0;
    }
  return out;
}

// Bilinear resample with half-pixel center alignment; sample coordinates are
// clamped at the borders. Resizing to the source size reproduces the input.
inline Image bilinear_resize(const Image& src, Index out_h, Index out_w) {
  if (src.rows() <= 0 || src.cols() <= 0) throw FormatError("bilinear_resize: empty source image");
  if (out_h <= 0 || out_w <= 0) throw ArgError("bilinear_resize: target size must be positive");
  Image dst(out_h, out_w);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(out_w);
  for (Index oy = 0; oy < out_h; ++oy) {
    double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.rows() - 1));
    const Index y0 = static_cast<Index>(std::floor(fy));
    const Index y1 = std::min(y0 + 1, src.rows() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Index ox = 0; ox < out_w; ++ox) {
      double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.cols() - 1));
      const Index x0 = static_cast<Index>(std::floor(fx));
      const Index x1 = std::min(x0 + 1, src.cols() - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * src(y0, x0) + wx * src(y0, x1);
      const double bot = (1.0 - wx) * src(y1, x0) + wx * src(y1, x1);
      dst(oy, ox) = (1.0 - wy) * top + wy * bot;
    }
  }
  return dst;
}

// Separable Gaussian blur, replicate borders. sigma <= 0 is a copy.
inline Image gaussian_blur(const Image& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;

  const Index h = src.rows(), w = src.cols();
  Image tmp(h, w), dst(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const Index xx = std::clamp<Index>(x + i, 0, w - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * src(y, xx);
      }
      tmp(y, x) = acc;
    }
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const Index yy = std::clamp<Index>(y + i, 0, h - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * tmp(yy, x);
      }
      dst(y, x) = acc;
    }
  return dst;
}

inline void validate_image(const Image& img, const std::string& what) {
  if (img.rows() <= 0 || img.cols() <= 0) throw FormatError(what + ": zero-dimension image");
  if (!img.allFinite()) throw NumericError(what + ": non-finite pixel values");
  if (img.minCoeff() < 0.0 || img.maxCoeff() > 1.0)
    throw FormatError(what + ": pixel values outside [0,1]");
}

// Decode a PNG or PGM (P5) file to grayscale in [0,1] and bilinear-resize to
// target_size x target_size. RGB input is reduced with Rec. 601 luma weights.
Image load_image(const std::string& path, Index target_size);

// As above without resizing.
Image load_image_native(const std::string& path);

// 8-bit binary PGM writer; values are clamped to [0,1] then rounded to bytes.
void save_pgm(const std::string& path, const Image& img);

}  // namespace unoqa
