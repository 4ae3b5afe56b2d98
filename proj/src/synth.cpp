#include "unoqa/synth.hpp"

#include <algorithm>
#include <cmath>

#include "unoqa/rng.hpp"

namespace unoqa {
namespace {

// Smooth low-frequency field: random coarse grid upsampled bilinearly.
Image smooth_field(Rng& rng, Index size, Index grid) {
  Image coarse(grid, grid);
  for (Index y = 0; y < grid; ++y)
    for (Index x = 0; x < grid; ++x) coarse(y, x) = rng.uniform();
  return bilinear_resize(coarse, size, size);
}

void stamp_gaussian(Image& img, double cy, double cx, double width, double intensity) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * width)));
  const Index y0 = std::max<Index>(0, static_cast<Index>(std::floor(cy)) - r);
  const Index y1 = std::min<Index>(img.rows() - 1, static_cast<Index>(std::ceil(cy)) + r);
  const Index x0 = std::max<Index>(0, static_cast<Index>(std::floor(cx)) - r);
  const Index x1 = std::min<Index>(img.cols() - 1, static_cast<Index>(std::ceil(cx)) + r);
  const double inv = 1.0 / (2.0 * width * width);
  for (Index y = y0; y <= y1; ++y)
    for (Index x = x0; x <= x1; ++x) {
      const double dy = y - cy, dx = x - cx;
      const double v = intensity * std::exp(-(dy * dy + dx * dx) * inv);
      img(y, x) = std::max(img(y, x), v);
    }
}

// One quadratic Bezier stroke with Gaussian cross-section.
void draw_vessel(Image& img, Rng& rng, Index size) {
  const double s = static_cast<double>(size - 1);
  // endpoints on opposite-ish borders, control point anywhere inside
  double p0y, p0x, p2y, p2x;
  if (rng.uniform() < 0.5) {
    p0y = 0.0;
    p2y = s;
    p0x = rng.uniform() * s;
    p2x = rng.uniform() * s;
  } else {
    p0x = 0.0;
    p2x = s;
    p0y = rng.uniform() * s;
    p2y = rng.uniform() * s;
  }
  const double p1y = rng.uniform() * s;
  const double p1x = rng.uniform() * s;
  const double width = rng.uniform(0.8, 2.0);
  const double intensity = rng.uniform(0.55, 0.85);

  const int steps = 2 * static_cast<int>(s);
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const double u = 1.0 - t;
    const double cy = u * u * p0y + 2.0 * u * t * p1y + t * t * p2y;
    const double cx = u * u * p0x + 2.0 * u * t * p1x + t * t * p2x;
    stamp_gaussian(img, cy, cx, width, intensity);
  }
}

Image make_clean_phantom(Rng& rng, Index size) {
  const double base = rng.uniform(0.05, 0.12);
  Image img = base + 0.05 * smooth_field(rng, size, 5).array();

  Image vessels = Image::Zero(size, size);
  const int n_strokes = 8 + static_cast<int>(rng.below(7));
  for (int i = 0; i < n_strokes; ++i) draw_vessel(vessels, rng, size);
  img = img.cwiseMax(vessels);

  // mild multiplicative speckle
  const double s = rng.uniform(0.03, 0.06);
  for (Index y = 0; y < size; ++y)
    for (Index x = 0; x < size; ++x) img(y, x) *= 1.0 + s * rng.normal();
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

void apply_contrast(Image& img, double scale) {
  const double mean = img.mean();
  img = (mean + scale * (img.array() - mean)).matrix();
}

void apply_illumination(Image& img, Rng& rng, double amp) {
  if (amp <= 0.0) return;
  const double theta = rng.uniform() * 6.283185307179586;
  const double dy = std::sin(theta), dx = std::cos(theta);
  const double diag = static_cast<double>(img.rows() + img.cols());
  for (Index y = 0; y < img.rows(); ++y)
    for (Index x = 0; x < img.cols(); ++x) {
      const double t = 0.5 + (dy * y + dx * x) / diag;  // roughly [0,1] across the frame
      img(y, x) *= 1.0 - amp * t;
    }
}

void apply_occlusion_bands(Image& img, Rng& rng, int bands) {
  for (int b = 0; b < bands; ++b) {
    const Index height = 8 + static_cast<Index>(rng.below(23));
    const Index y0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(
        std::max<Index>(1, img.rows() - height))));
    const double fill = rng.uniform(0.01, 0.05);
    img.middleRows(y0, std::min(height, img.rows() - y0)).setConstant(fill);
  }
}

Image degrade(const Image& clean, Rng& rng, const GradeDegradation& d) {
  Image img = gaussian_blur(clean, rng.uniform(d.blur_sigma.lo, d.blur_sigma.hi));
  apply_contrast(img, rng.uniform(d.contrast_scale.lo, d.contrast_scale.hi));
  apply_illumination(img, rng, rng.uniform(d.illumination_amp.lo, d.illumination_amp.hi));
  const int span = d.occlusion_bands.hi - d.occlusion_bands.lo;
  const int bands = d.occlusion_bands.lo +
                    (span > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(span + 1))) : 0);
  apply_occlusion_bands(img, rng, bands);
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

void validate_spec(const SynthCorpusSpec& spec) {
  if (spec.count_per_grade <= 0)
    throw ConfigError("synthetic corpus spec: count per grade must be positive");
  if (spec.image_size <= 0) throw ConfigError("synthetic corpus spec: image size must be positive");
  const auto& g = spec.gradable;
  const auto& u = spec.ungradable;
  if (!(g.blur_sigma.hi < u.blur_sigma.hi))
    throw ConfigError("synthetic corpus spec: gradable blur cap must be below ungradable");
  if (!(g.occlusion_bands.hi < u.occlusion_bands.hi))
    throw ConfigError("synthetic corpus spec: gradable band count must be below ungradable");
  const double gd = std::max(std::abs(1.0 - g.contrast_scale.lo), std::abs(1.0 - g.contrast_scale.hi));
  const double ud = std::min(std::abs(1.0 - u.contrast_scale.lo), std::abs(1.0 - u.contrast_scale.hi));
  if (!(gd < ud))
    throw ConfigError("synthetic corpus spec: gradable contrast must stay closer to 1 than ungradable");
}

std::pair<std::vector<SynthSample>, Manifest> generate_synthetic_corpus(const SynthCorpusSpec& spec) {
  validate_spec(spec);
  std::vector<SynthSample> samples;
  samples.reserve(static_cast<std::size_t>(3 * spec.count_per_grade));
  Manifest manifest;

  const QualityGrade grades[3] = {QualityGrade::Outstanding, QualityGrade::Gradable,
                                  QualityGrade::Ungradable};
  for (int gi = 0; gi < 3; ++gi) {
    for (int i = 0; i < spec.count_per_grade; ++i) {
      // independent stream per image so corpora nest across counts
      Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(gi) * 1000003ULL +
                                      static_cast<std::uint64_t>(i)));
      Image img = make_clean_phantom(rng, spec.image_size);
      if (grades[gi] == QualityGrade::Gradable) img = degrade(img, rng, spec.gradable);
      if (grades[gi] == QualityGrade::Ungradable) img = degrade(img, rng, spec.ungradable);

      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", grade_name(grades[gi]), i);
      SynthSample s{idbuf, grades[gi], std::move(img)};
      manifest.entries.push_back({s.id, s.id + ".pgm", grades[gi]});
      samples.push_back(std::move(s));
    }
  }
  return {std::move(samples), std::move(manifest)};
}

}  // namespace unoqa
