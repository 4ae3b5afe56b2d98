#pragma once

#include <cmath>
#include <string>

#include "unoqa/error.hpp"
#include "unoqa/types.hpp"

namespace unoqa {

struct PositionalEncodingConfig {
  Index dim = 32;       // C, divisible by 4
  double base = 10000.0;

  void validate() const {
    if (dim <= 0 || dim % 4 != 0)
      throw ConfigError("positional encoding: dim must be a positive multiple of 4");
    if (base <= 1.0) throw ConfigError("positional encoding: base must exceed 1");
  }

  bool operator==(const PositionalEncodingConfig&) const = default;
};

// 2D sinusoidal position code: the first C/2 entries encode the row as
// interleaved sin/cos at frequencies base^(-4i/C), the last C/2 the column.
template <class Scalar>
Vec<Scalar> positional_encoding(Index h, Index w, Index grid_rows, Index grid_cols,
                                const PositionalEncodingConfig& config) {
  config.validate();
  if (h < 0 || h >= grid_rows || w < 0 || w >= grid_cols)
    throw ArgError("positional_encoding: position (" + std::to_string(h) + "," +
                   std::to_string(w) + ") outside grid " + std::to_string(grid_rows) + "x" +
                   std::to_string(grid_cols));
  const Index quarter = config.dim / 4;
  Vec<Scalar> out(config.dim);
  for (Index i = 0; i < quarter; ++i) {
    const double freq = std::pow(config.base, -4.0 * static_cast<double>(i) /
                                                  static_cast<double>(config.dim));
    out(2 * i) = static_cast<Scalar>(std::sin(h * freq));
    out(2 * i + 1) = static_cast<Scalar>(std::cos(h * freq));
    out(config.dim / 2 + 2 * i) = static_cast<Scalar>(std::sin(w * freq));
    out(config.dim / 2 + 2 * i + 1) = static_cast<Scalar>(std::cos(w * freq));
  }
  return out;
}

// All position codes of a grid, one row per cell in row-major cell order.
template <class Scalar>
Mat<Scalar> positional_encoding_grid(Index grid_rows, Index grid_cols,
                                     const PositionalEncodingConfig& config) {
  Mat<Scalar> out(grid_rows * grid_cols, config.dim);
  for (Index h = 0; h < grid_rows; ++h)
    for (Index w = 0; w < grid_cols; ++w)
      out.row(h * grid_cols + w) =
          positional_encoding<Scalar>(h, w, grid_rows, grid_cols, config).transpose();
  return out;
}

}  // namespace unoqa
