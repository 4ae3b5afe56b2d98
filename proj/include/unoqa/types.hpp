#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace unoqa {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matd = Mat<double>;
using RowMatd = RowMat<double>;
using Vecd = Vec<double>;
using Index = Eigen::Index;

// Grayscale raster, row-major, intensities in [0,1]. rows() = height, cols() = width.
using Image = RowMatd;

enum class QualityGrade : std::uint8_t { Outstanding = 0, Gradable = 1, Ungradable = 2 };

inline const char* grade_name(QualityGrade g) {
  switch (g) {
    case QualityGrade::Outstanding: return "outstanding";
    case QualityGrade::Gradable:    return "gradable";
    case QualityGrade::Ungradable:  return "ungradable";
  }
  return "?";
}

constexpr int kNumGrades = 3;

}  // namespace unoqa
