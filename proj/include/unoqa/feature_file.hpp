#pragma once

#include <string>
#include <vector>

#include "unoqa/pyramid.hpp"

namespace unoqa {

// Binary feature container, little-endian throughout:
//   magic "UNOQAFT1" | u32 version=1 | u32 n_samples | u32 K
//   per scale: u32 H_k, u32 W_k, u32 D_k
//   per sample: u32 id index, then per scale the row-major (H,W,D) f32 tensor
//   id table: u32 count, then per id u32 byte length + UTF-8 bytes
inline constexpr char kFeatureMagic[8] = {'U', 'N', 'O', 'Q', 'A', 'F', 'T', '1'};

struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<FeaturePyramidT<float>> pyramids;
};

// All pyramids must share K and per-scale shapes. Round trips bit-exactly.
void write_features(const std::string& path, const FeatureSet& set);
FeatureSet read_features(const std::string& path);

template <class Scalar>
FeaturePyramidT<float> to_storage(const FeaturePyramidT<Scalar>& p) {
  FeaturePyramidT<float> out;
  out.scales.reserve(p.scales.size());
  for (const auto& s : p.scales)
    out.scales.push_back({s.rows, s.cols, s.values.template cast<float>()});
  return out;
}

template <class Scalar>
FeaturePyramidT<Scalar> from_storage(const FeaturePyramidT<float>& p) {
  FeaturePyramidT<Scalar> out;
  out.scales.reserve(p.scales.size());
  for (const auto& s : p.scales)
    out.scales.push_back({s.rows, s.cols, s.values.template cast<Scalar>()});
  return out;
}

}  // namespace unoqa
