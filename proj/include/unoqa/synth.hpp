#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "unoqa/image.hpp"
#include "unoqa/manifest.hpp"
#include "unoqa/types.hpp"

namespace unoqa {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

// Degradations applied on top of the clean vessel phantom for one grade.
struct GradeDegradation {
  Range blur_sigma;        // Gaussian blur strength
  IntRange occlusion_bands;  // opaque horizontal bands
  Range contrast_scale;    // 1 = unchanged, <1 = flattened around the image mean
  Range illumination_amp;  // multiplicative ramp depth in [0,1)
};

struct SynthCorpusSpec {
  int count_per_grade = 100;
  std::uint64_t seed = 1;
  Index image_size = 320;
  GradeDegradation gradable{{0.8, 1.5}, {0, 0}, {0.85, 0.95}, {0.10, 0.22}};
  GradeDegradation ungradable{{2.5, 4.0}, {1, 3}, {0.40, 0.60}, {0.15, 0.35}};
};

// Throws ConfigError unless the gradable ranges are strictly milder than the
// ungradable ones (lower blur cap, fewer bands, contrast closer to 1).
void validate_spec(const SynthCorpusSpec& spec);

struct SynthSample {
  std::string id;
  QualityGrade grade;
  Image image;
};

// Deterministic three-grade corpus: dark background, bright curvilinear
// vessel strokes and mild speckle; gradable/ungradable variants degrade that
// base with blur, illumination ramps, contrast loss and occlusion bands.
// The manifest paths are "<id>.pgm" relative to wherever images get written.
std::pair<std::vector<SynthSample>, Manifest> generate_synthetic_corpus(const SynthCorpusSpec& spec);

}  // namespace unoqa
