#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "unoqa/flow.hpp"
#include "unoqa/image.hpp"

namespace unoqa {

// Per-scale grid of per-position log-likelihoods ll(z_hw, c_hw).
template <class Scalar>
struct LikelihoodGridT {
  Index scale = 0;
  RowMat<Scalar> values;  // grid_rows x grid_cols
};

using LikelihoodGrid = LikelihoodGridT<double>;

enum class Aggregation { Max, Mean };

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "max") return Aggregation::Max;
  if (s == "mean") return Aggregation::Mean;
  throw ConfigError("unknown score aggregation '" + s + "' (want max or mean)");
}

template <class Scalar>
std::vector<LikelihoodGridT<Scalar>> likelihood_grids(const FeaturePyramidT<Scalar>& pyramid,
                                                      const FlowModelT<Scalar>& model) {
  pyramid.validate_against(model.pyramid);
  std::vector<LikelihoodGridT<Scalar>> grids;
  grids.reserve(pyramid.scales.size());
  for (Index k = 0; k < model.pyramid.num_scales(); ++k) {
    const auto& scale = pyramid.scales[static_cast<std::size_t>(k)];
    Mat<Scalar> cond = positional_encoding_grid<Scalar>(scale.rows, scale.cols, model.pe);
    Vec<Scalar> ll =
        log_lik(model.decoders[static_cast<std::size_t>(k)], Mat<Scalar>(scale.values), cond);
    LikelihoodGridT<Scalar> grid;
    grid.scale = k;
    grid.values = Eigen::Map<const RowMat<Scalar>>(ll.data(), scale.rows, scale.cols);
    grids.push_back(std::move(grid));
  }
  return grids;
}

// Scalar low-quality score: per scale, normalize the deviation below the
// training likelihood mean, bilinearly upsample every scale to the finest
// grid, sum, then pool. Higher = lower quality.
template <class Scalar>
Scalar image_score(const std::vector<LikelihoodGridT<Scalar>>& grids,
                   const FlowModelT<Scalar>& model, Aggregation aggregation) {
  if (grids.size() != model.decoders.size())
    throw ConfigError("image_score: expected " + std::to_string(model.decoders.size()) +
                      " likelihood grids, got " + std::to_string(grids.size()));
  Index fine_rows = 0, fine_cols = 0;
  for (const auto& g : grids) {
    fine_rows = std::max(fine_rows, g.values.rows());
    fine_cols = std::max(fine_cols, g.values.cols());
  }
  Image summed = Image::Zero(fine_rows, fine_cols);
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const auto& dec = model.decoders[k];
    if (dec.train_ll_std <= Scalar(0))
      throw NumericError("image_score: degenerate model, scale " + std::to_string(k) +
                         " has zero training likelihood spread");
    Image anomaly =
        ((Scalar(dec.train_ll_mean) - grids[k].values.template cast<double>().array()) /
         static_cast<double>(dec.train_ll_std))
            .matrix();
    summed += bilinear_resize(anomaly, fine_rows, fine_cols);
  }
  return static_cast<Scalar>(aggregation == Aggregation::Max ? summed.maxCoeff() : summed.mean());
}

enum class ThresholdMode { F1Max, Otsu };

// score > tau  =>  predicted non-outstanding.
struct ThresholdModel {
  double tau = 0.0;
  ThresholdMode mode = ThresholdMode::F1Max;
  double f1 = 0.0;            // achieved F1 (f1max mode)
  bool fallback_used = false;  // true when f1max degraded to otsu
};

// Histogram threshold maximizing between-class variance over 256 bins.
// Label-free fallback for calibration sets without both classes.
inline ThresholdModel otsu_threshold(const std::vector<double>& scores) {
  if (scores.size() < 2) throw ArgError("otsu_threshold: need at least 2 scores");
  const auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn)) throw NumericError("otsu_threshold: all scores identical");

  constexpr int kBins = 256;
  std::vector<double> count(kBins, 0.0), mass(kBins, 0.0);
  const double scale = kBins / (mx - mn);
  for (double s : scores) {
    int b = static_cast<int>((s - mn) * scale);
    b = std::clamp(b, 0, kBins - 1);
    count[static_cast<std::size_t>(b)] += 1.0;
    mass[static_cast<std::size_t>(b)] += s;
  }
  const double total_n = static_cast<double>(scores.size());
  double total_mass = 0.0;
  for (double m : mass) total_mass += m;

  double best_var = -1.0;
  int best_edge = 1;
  double n0 = 0.0, m0 = 0.0;
  for (int t = 1; t < kBins; ++t) {
    n0 += count[static_cast<std::size_t>(t - 1)];
    m0 += mass[static_cast<std::size_t>(t - 1)];
    const double n1 = total_n - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double mu0 = m0 / n0, mu1 = (total_mass - m0) / n1;
    const double var = (n0 / total_n) * (n1 / total_n) * (mu0 - mu1) * (mu0 - mu1);
    if (var >= best_var) {  // ties toward the larger threshold
      best_var = var;
      best_edge = t;
    }
  }
  ThresholdModel m;
  m.mode = ThresholdMode::Otsu;
  m.tau = mn + best_edge / scale;
  return m;
}

// F1-maximizing threshold for the non-outstanding (positive) class, swept
// over midpoints of consecutive sorted unique scores plus the two infinities;
// ties break toward the larger tau. Falls back to otsu when only one class
// is present.
inline ThresholdModel calibrate_threshold(const std::vector<double>& scores,
                                          const std::vector<bool>& non_outstanding) {
  if (scores.size() != non_outstanding.size())
    throw ArgError("calibrate_threshold: scores and labels disagree in length");
  if (scores.empty()) throw ArgError("calibrate_threshold: empty calibration set");
  bool has_pos = false, has_neg = false;
  for (bool b : non_outstanding) (b ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    ThresholdModel m = otsu_threshold(scores);
    m.fallback_used = true;
    return m;
  }

  std::vector<double> uniq = scores;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
    candidates.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  candidates.push_back(std::numeric_limits<double>::infinity());

  double best_f1 = -1.0, best_tau = candidates.front();
  for (double tau : candidates) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool pred_pos = scores[i] > tau;
      if (pred_pos && non_outstanding[i]) ++tp;
      if (pred_pos && !non_outstanding[i]) ++fp;
      if (!pred_pos && non_outstanding[i]) ++fn;
    }
    const double denom = 2.0 * tp + fp + fn;
    const double f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
    if (f1 >= best_f1) {  // >= so equal F1 prefers the larger tau
      best_f1 = f1;
      best_tau = tau;
    }
  }
  ThresholdModel m;
  m.mode = ThresholdMode::F1Max;
  m.tau = best_tau;
  m.f1 = best_f1;
  return m;
}

}  // namespace unoqa
