#pragma once

#include <string>
#include <vector>

#include "unoqa/error.hpp"
#include "unoqa/types.hpp"

namespace unoqa {

// Multi-scale grid layout. Default: strides {8,16,32} on a 320x320 frame,
// i.e. grids 40x40, 20x20, 10x10, with an 8-dim descriptor at every cell.
struct PyramidConfig {
  Index image_size = 320;
  std::vector<Index> strides = {8, 16, 32};
  std::vector<Index> descriptor_dims = {8, 8, 8};

  Index num_scales() const { return static_cast<Index>(strides.size()); }
  Index grid_rows(Index k) const { return image_size / strides[static_cast<std::size_t>(k)]; }
  Index grid_cols(Index k) const { return image_size / strides[static_cast<std::size_t>(k)]; }
  Index dim(Index k) const { return descriptor_dims[static_cast<std::size_t>(k)]; }

  void validate() const {
    if (strides.empty()) throw ConfigError("pyramid: need at least one scale");
    if (strides.size() != descriptor_dims.size())
      throw ConfigError("pyramid: strides and descriptor dims disagree");
    Index prev = 0;
    for (std::size_t k = 0; k < strides.size(); ++k) {
      if (strides[k] <= prev) throw ConfigError("pyramid: strides must be strictly increasing");
      prev = strides[k];
      if (image_size % strides[k] != 0)
        throw ConfigError("pyramid: stride " + std::to_string(strides[k]) +
                          " does not divide image size " + std::to_string(image_size));
      if (descriptor_dims[k] < 2) throw ConfigError("pyramid: descriptor dim must be >= 2");
    }
  }

  bool operator==(const PyramidConfig&) const = default;
};

// One scale of a feature pyramid: an (rows*cols) x dim matrix whose row
// (h*cols + w) is the descriptor of grid cell (h, w). The row-major value
// block therefore matches the on-disk (H, W, D) tensor layout.
template <class Scalar>
struct FeatureScaleT {
  Index rows = 0;
  Index cols = 0;
  RowMat<Scalar> values;  // (rows*cols) x dim

  Index dim() const { return values.cols(); }
  auto cell(Index h, Index w) const { return values.row(h * cols + w); }
};

template <class Scalar>
struct FeaturePyramidT {
  std::vector<FeatureScaleT<Scalar>> scales;

  Index num_scales() const { return static_cast<Index>(scales.size()); }

  void validate_against(const PyramidConfig& config) const {
    if (num_scales() != config.num_scales())
      throw ConfigError("feature pyramid: expected " + std::to_string(config.num_scales()) +
                        " scales, found " + std::to_string(num_scales()));
    for (Index k = 0; k < num_scales(); ++k) {
      const auto& s = scales[static_cast<std::size_t>(k)];
      if (s.rows != config.grid_rows(k) || s.cols != config.grid_cols(k) ||
          s.dim() != config.dim(k))
        throw ConfigError("feature pyramid scale " + std::to_string(k) + ": expected " +
                          std::to_string(config.grid_rows(k)) + "x" +
                          std::to_string(config.grid_cols(k)) + "x" + std::to_string(config.dim(k)) +
                          ", found " + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "x" +
                          std::to_string(s.dim()));
      if (!s.values.allFinite())
        throw NumericError("feature pyramid scale " + std::to_string(k) + ": non-finite values");
    }
  }
};

using FeatureScale = FeatureScaleT<double>;
using FeaturePyramid = FeaturePyramidT<double>;

}  // namespace unoqa
