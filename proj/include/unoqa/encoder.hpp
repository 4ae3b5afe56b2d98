#pragma once

#include <algorithm>
#include <cmath>

#include "unoqa/feature_file.hpp"
#include "unoqa/image.hpp"
#include "unoqa/pyramid.hpp"

namespace unoqa {

inline constexpr Index kStatDescriptorDim = 8;

// Handcrafted per-cell descriptor of dimension 8, computed on the raw [0,1]
// image: {mean, std, mean gradient magnitude, 4-bin orientation histogram
// (magnitude weighted, normalized), max-min contrast}. Gradients are central
// differences with replicated borders; orientations are folded modulo pi so
// bin 0 holds horizontal gradients (vertical edges) and bin 2 vertical ones.
template <class Scalar>
FeaturePyramidT<Scalar> extract_stat_pyramid(const Image& image, const PyramidConfig& config) {
  config.validate();
  if (image.rows() != config.image_size || image.cols() != config.image_size)
    throw ConfigError("extract_stat_pyramid: image is " + std::to_string(image.rows()) + "x" +
                      std::to_string(image.cols()) + ", config wants " +
                      std::to_string(config.image_size));
  for (Index k = 0; k < config.num_scales(); ++k)
    if (config.dim(k) != kStatDescriptorDim)
      throw ConfigError("extract_stat_pyramid: descriptor dim must be 8");

  const Index n = config.image_size;
  Image gmag(n, n), gtheta(n, n);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) {
      const Index xm = std::max<Index>(x - 1, 0), xp = std::min<Index>(x + 1, n - 1);
      const Index ym = std::max<Index>(y - 1, 0), yp = std::min<Index>(y + 1, n - 1);
      const double gx = 0.5 * (image(y, xp) - image(y, xm));
      const double gy = 0.5 * (image(yp, x) - image(ym, x));
      gmag(y, x) = std::sqrt(gx * gx + gy * gy);
      double th = std::atan2(gy, gx);
      if (th < 0.0) th += M_PI;
      if (th >= M_PI) th = 0.0;
      gtheta(y, x) = th;
    }

  FeaturePyramidT<Scalar> pyramid;
  pyramid.scales.resize(static_cast<std::size_t>(config.num_scales()));
  for (Index k = 0; k < config.num_scales(); ++k) {
    const Index stride = config.strides[static_cast<std::size_t>(k)];
    const Index rows = n / stride, cols = n / stride;
    auto& scale = pyramid.scales[static_cast<std::size_t>(k)];
    scale.rows = rows;
    scale.cols = cols;
    scale.values.resize(rows * cols, kStatDescriptorDim);

    for (Index h = 0; h < rows; ++h)
      for (Index w = 0; w < cols; ++w) {
        const auto cell = image.block(h * stride, w * stride, stride, stride);
        const auto cell_mag = gmag.block(h * stride, w * stride, stride, stride);
        const double npx = static_cast<double>(stride * stride);

        const double mean = cell.mean();
        const double var = (cell.array() - mean).square().sum() / npx;
        const double mag_sum = cell_mag.sum();

        double hist[4] = {0, 0, 0, 0};
        for (Index dy = 0; dy < stride; ++dy)
          for (Index dx = 0; dx < stride; ++dx) {
            const double m = cell_mag(dy, dx);
            if (m <= 0.0) continue;
            int bin = static_cast<int>(gtheta(h * stride + dy, w * stride + dx) * (4.0 / M_PI));
            bin = std::clamp(bin, 0, 3);
            hist[bin] += m;
          }
        if (mag_sum > 0.0)
          for (double& v : hist) v /= mag_sum;

        auto d = scale.values.row(h * cols + w);
        d(0) = static_cast<Scalar>(mean);
        d(1) = static_cast<Scalar>(std::sqrt(std::max(var, 0.0)));
        d(2) = static_cast<Scalar>(mag_sum / npx);
        d(3) = static_cast<Scalar>(hist[0]);
        d(4) = static_cast<Scalar>(hist[1]);
        d(5) = static_cast<Scalar>(hist[2]);
        d(6) = static_cast<Scalar>(hist[3]);
        d(7) = static_cast<Scalar>(cell.maxCoeff() - cell.minCoeff());
      }
  }
  return pyramid;
}

// Imported deep features: validation plus pass-through.
template <class Scalar>
FeaturePyramidT<Scalar> pyramid_from_external(const FeaturePyramidT<float>& stored,
                                              const PyramidConfig& config) {
  config.validate();
  auto pyramid = from_storage<Scalar>(stored);
  pyramid.validate_against(config);
  return pyramid;
}

}  // namespace unoqa
