#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "unoqa/error.hpp"
#include "unoqa/positional.hpp"
#include "unoqa/pyramid.hpp"
#include "unoqa/rng.hpp"
#include "unoqa/types.hpp"

namespace unoqa {

template <class Scalar>
struct FlowConfig {
  Index blocks = 4;
  Scalar clamp = 1.9;            // soft-clamp amplitude for log-scales
  Scalar weight_init_std = 0.01;
};

struct TrainConfig {
  Index epochs = 30;
  Index batch_size = 512;  // positions per step
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs <= 0 || batch_size <= 0 || learning_rate <= 0.0)
      throw ConfigError("train config: epochs, batch size and learning rate must be positive");
  }
};

// Affine coupling block. The kept half (dims with index parity `parity`)
// conditions a two-layer tanh subnet that emits log-scale and shift for the
// complementary half; log-scales pass through a soft clamp so the transform
// and its log-determinant stay bounded.
template <class Scalar>
struct CouplingBlockT {
  int parity = 0;
  Mat<Scalar> w1;  // hidden x (n_keep + cond)
  Vec<Scalar> b1;
  Mat<Scalar> w2;  // 2*n_trans x hidden
  Vec<Scalar> b2;
};

// One conditional coupling-flow decoder: B blocks with alternating parity,
// a fixed random permutation between consecutive blocks, and the per-dim
// standardization fitted on training features. log_lik() is the model's
// log-density of raw (unstandardized) feature vectors.
template <class Scalar>
struct FlowDecoderT {
  Index dim = 0;       // D
  Index cond_dim = 0;  // C
  Scalar clamp = Scalar(1.9);
  std::vector<CouplingBlockT<Scalar>> blocks;
  std::vector<std::vector<Index>> perms;  // perms[b] applied before block b; perms[0] unused
  Vec<Scalar> feat_mean;
  Vec<Scalar> feat_std;  // > 0
  // per-position log-likelihood statistics over the training set
  Scalar train_ll_mean = Scalar(0);
  Scalar train_ll_std = Scalar(1);
};

namespace flow_detail {

inline void split_indices(Index dim, int parity, std::vector<Index>& keep,
                          std::vector<Index>& trans) {
  keep.clear();
  trans.clear();
  for (Index i = 0; i < dim; ++i)
    (static_cast<int>(i % 2) == parity ? keep : trans).push_back(i);
}

template <class Scalar>
struct BlockCache {
  Mat<Scalar> input;  // n x (keep + cond)
  Mat<Scalar> act;    // n x hidden
  Mat<Scalar> s;      // n x n_trans, clamped log-scales
  Mat<Scalar> xb;     // n x n_trans, transformed half before the transform
};

}  // namespace flow_detail

template <class Scalar>
FlowDecoderT<Scalar> make_decoder(Index dim, Index cond_dim, const FlowConfig<Scalar>& config,
                                  std::uint64_t seed) {
  if (dim < 2) throw ConfigError("flow decoder: feature dim must be >= 2");
  if (config.blocks < 1) throw ConfigError("flow decoder: need at least one coupling block");
  FlowDecoderT<Scalar> dec;
  dec.dim = dim;
  dec.cond_dim = cond_dim;
  dec.clamp = config.clamp;
  dec.feat_mean = Vec<Scalar>::Zero(dim);
  dec.feat_std = Vec<Scalar>::Ones(dim);

  Rng wrng(mix_seed(seed, 0x51));
  Rng prng(mix_seed(seed, 0x52));
  std::vector<Index> keep, trans;
  const Index hidden = 2 * dim;
  dec.blocks.resize(static_cast<std::size_t>(config.blocks));
  dec.perms.resize(static_cast<std::size_t>(config.blocks));
  for (Index b = 0; b < config.blocks; ++b) {
    auto& blk = dec.blocks[static_cast<std::size_t>(b)];
    blk.parity = static_cast<int>(b % 2);
    flow_detail::split_indices(dim, blk.parity, keep, trans);
    const Index in_dim = static_cast<Index>(keep.size()) + cond_dim;
    const Index out_dim = 2 * static_cast<Index>(trans.size());
    blk.w1.resize(hidden, in_dim);
    blk.w2.resize(out_dim, hidden);
    for (Index r = 0; r < hidden; ++r)
      for (Index c = 0; c < in_dim; ++c)
        blk.w1(r, c) = static_cast<Scalar>(wrng.normal(0.0, config.weight_init_std));
    for (Index r = 0; r < out_dim; ++r)
      for (Index c = 0; c < hidden; ++c)
        blk.w2(r, c) = static_cast<Scalar>(wrng.normal(0.0, config.weight_init_std));
    blk.b1 = Vec<Scalar>::Zero(hidden);
    blk.b2 = Vec<Scalar>::Zero(out_dim);

    if (b > 0) {
      std::vector<Index> perm(static_cast<std::size_t>(dim));
      for (Index i = 0; i < dim; ++i) perm[static_cast<std::size_t>(i)] = i;
      prng.shuffle(perm);
      dec.perms[static_cast<std::size_t>(b)] = std::move(perm);
    }
  }
  return dec;
}

// Batched forward pass. Rows of z/cond are positions; z must already be
// standardized. Returns u and per-row coupling log-determinants; caches are
// filled when requested so the backward pass can reuse them.
template <class Scalar>
void flow_forward_batch(const FlowDecoderT<Scalar>& dec, const Mat<Scalar>& z,
                        const Mat<Scalar>& cond, Mat<Scalar>& u, Vec<Scalar>& logdet,
                        std::vector<flow_detail::BlockCache<Scalar>>* caches = nullptr) {
  const Index n = z.rows();
  if (cond.rows() != n) throw ArgError("flow_forward: feature/condition row mismatch");
  if (z.cols() != dec.dim || cond.cols() != dec.cond_dim)
    throw ArgError("flow_forward: dimension mismatch");
  if (!z.allFinite() || !cond.allFinite()) throw NumericError("flow_forward: non-finite input");

  if (caches) caches->resize(dec.blocks.size());
  u = z;
  logdet = Vec<Scalar>::Zero(n);
  std::vector<Index> keep, trans;
  Mat<Scalar> tmp;
  for (std::size_t b = 0; b < dec.blocks.size(); ++b) {
    if (b > 0) {
      const auto& perm = dec.perms[b];
      tmp.resize(n, dec.dim);
      for (Index i = 0; i < dec.dim; ++i) tmp.col(i) = u.col(perm[static_cast<std::size_t>(i)]);
      u.swap(tmp);
    }
    const auto& blk = dec.blocks[b];
    flow_detail::split_indices(dec.dim, blk.parity, keep, trans);
    const Index nk = static_cast<Index>(keep.size());
    const Index nt = static_cast<Index>(trans.size());

    Mat<Scalar> in(n, nk + dec.cond_dim);
    for (Index i = 0; i < nk; ++i) in.col(i) = u.col(keep[static_cast<std::size_t>(i)]);
    in.rightCols(dec.cond_dim) = cond;

    Mat<Scalar> act =
        ((in * blk.w1.transpose()).rowwise() + blk.b1.transpose()).array().tanh().matrix();
    Mat<Scalar> out = (act * blk.w2.transpose()).rowwise() + blk.b2.transpose();
    // soft clamp keeps log-scales in (-alpha, alpha)
    Mat<Scalar> s = ((out.leftCols(nt).array() / dec.clamp).tanh() * dec.clamp).matrix();

    if (caches) {
      auto& cache = (*caches)[b];
      cache.input = in;
      cache.act = std::move(act);
      cache.s = s;
      cache.xb.resize(n, nt);
      for (Index i = 0; i < nt; ++i)
        cache.xb.col(i) = u.col(trans[static_cast<std::size_t>(i)]);
    }

    for (Index i = 0; i < nt; ++i) {
      const Index col = trans[static_cast<std::size_t>(i)];
      u.col(col) =
          (u.col(col).array() * s.col(i).array().exp() + out.col(nt + i).array()).matrix();
    }
    logdet += s.rowwise().sum();
  }
}

template <class Scalar>
std::pair<Vec<Scalar>, Scalar> flow_forward(const FlowDecoderT<Scalar>& dec, const Vec<Scalar>& z,
                                            const Vec<Scalar>& cond) {
  Mat<Scalar> u;
  Vec<Scalar> logdet;
  flow_forward_batch(dec, Mat<Scalar>(z.transpose()), Mat<Scalar>(cond.transpose()), u, logdet);
  return {u.row(0).transpose(), logdet(0)};
}

// Exact inverse of flow_forward on standardized coordinates.
template <class Scalar>
Vec<Scalar> flow_inverse(const FlowDecoderT<Scalar>& dec, const Vec<Scalar>& u,
                         const Vec<Scalar>& cond) {
  if (u.size() != dec.dim || cond.size() != dec.cond_dim)
    throw ArgError("flow_inverse: dimension mismatch");
  if (!u.allFinite() || !cond.allFinite()) throw NumericError("flow_inverse: non-finite input");
  Vec<Scalar> x = u;
  std::vector<Index> keep, trans;
  for (std::size_t b = dec.blocks.size(); b-- > 0;) {
    const auto& blk = dec.blocks[b];
    flow_detail::split_indices(dec.dim, blk.parity, keep, trans);
    const Index nk = static_cast<Index>(keep.size());
    const Index nt = static_cast<Index>(trans.size());

    Vec<Scalar> in(nk + dec.cond_dim);
    for (Index i = 0; i < nk; ++i) in(i) = x(keep[static_cast<std::size_t>(i)]);
    in.tail(dec.cond_dim) = cond;
    Vec<Scalar> act = (blk.w1 * in + blk.b1).array().tanh();
    Vec<Scalar> out = blk.w2 * act + blk.b2;
    for (Index i = 0; i < nt; ++i) {
      const Scalar s = std::tanh(out(i) / dec.clamp) * dec.clamp;
      const Index col = trans[static_cast<std::size_t>(i)];
      x(col) = (x(col) - out(nt + i)) * std::exp(-s);
    }
    if (b > 0) {
      const auto& perm = dec.perms[b];
      Vec<Scalar> unperm(dec.dim);
      for (Index i = 0; i < dec.dim; ++i) unperm(perm[static_cast<std::size_t>(i)]) = x(i);
      x = unperm;
    }
  }
  return x;
}

// Log-density of raw feature rows under the decoder. Includes the
// standardization change of variables, so values integrate to one over
// feature space.
template <class Scalar>
Mat<Scalar> standardize(const FlowDecoderT<Scalar>& dec, const Mat<Scalar>& z_raw) {
  return ((z_raw.rowwise() - dec.feat_mean.transpose()).array().rowwise() /
          dec.feat_std.transpose().array())
      .matrix();
}

template <class Scalar>
Vec<Scalar> log_lik(const FlowDecoderT<Scalar>& dec, const Mat<Scalar>& z_raw,
                    const Mat<Scalar>& cond) {
  Mat<Scalar> u;
  Vec<Scalar> logdet;
  flow_forward_batch(dec, standardize(dec, z_raw), cond, u, logdet);
  const Scalar offset = Scalar(-0.5) * static_cast<Scalar>(dec.dim) *
                            std::log(Scalar(2) * static_cast<Scalar>(M_PI)) -
                        dec.feat_std.array().log().sum();
  return (Scalar(-0.5) * u.rowwise().squaredNorm().array() + logdet.array() + offset).matrix();
}

template <class Scalar>
struct BlockGrads {
  Mat<Scalar> w1;
  Vec<Scalar> b1;
  Mat<Scalar> w2;
  Vec<Scalar> b2;
};

template <class Scalar>
using DecoderGrads = std::vector<BlockGrads<Scalar>>;

// Mean negative log-likelihood of a raw batch and, optionally, its exact
// gradient wrt every subnet weight (hand-derived reverse accumulation).
template <class Scalar>
Scalar nll_loss(const FlowDecoderT<Scalar>& dec, const Mat<Scalar>& z_raw, const Mat<Scalar>& cond,
                DecoderGrads<Scalar>* grads = nullptr) {
  const Index n = z_raw.rows();
  if (n == 0) throw ArgError("nll_loss: empty batch");
  Mat<Scalar> z = standardize(dec, z_raw);

  std::vector<flow_detail::BlockCache<Scalar>> caches;
  Mat<Scalar> u;
  Vec<Scalar> logdet;
  flow_forward_batch(dec, z, cond, u, logdet, grads ? &caches : nullptr);

  const Scalar base = Scalar(0.5) * static_cast<Scalar>(dec.dim) *
                      std::log(Scalar(2) * static_cast<Scalar>(M_PI));
  const Scalar std_logdet = dec.feat_std.array().log().sum();
  const Scalar loss = base + std_logdet +
                      (Scalar(0.5) * u.rowwise().squaredNorm().array() - logdet.array()).mean();

  if (grads) {
    grads->resize(dec.blocks.size());
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    Mat<Scalar> g = u * inv_n;  // dL/du
    std::vector<Index> keep, trans;
    Mat<Scalar> tmp;
    for (std::size_t b = dec.blocks.size(); b-- > 0;) {
      const auto& blk = dec.blocks[b];
      const auto& cache = caches[b];
      flow_detail::split_indices(dec.dim, blk.parity, keep, trans);
      const Index nk = static_cast<Index>(keep.size());
      const Index nt = static_cast<Index>(trans.size());

      Mat<Scalar> g_trans(n, nt);
      for (Index i = 0; i < nt; ++i) g_trans.col(i) = g.col(trans[static_cast<std::size_t>(i)]);

      Mat<Scalar> exp_s = cache.s.array().exp().matrix();
      // dL/ds: transform term plus -1/n from each row's logdet
      Mat<Scalar> ds = (g_trans.array() * cache.xb.array() * exp_s.array() - inv_n).matrix();
      // soft clamp derivative: 1 - (s/alpha)^2
      Mat<Scalar> dsraw =
          (ds.array() * (Scalar(1) - (cache.s.array() / dec.clamp).square())).matrix();

      Mat<Scalar> dout(n, 2 * nt);
      dout.leftCols(nt) = dsraw;
      dout.rightCols(nt) = g_trans;

      auto& bg = (*grads)[b];
      bg.w2 = dout.transpose() * cache.act;
      bg.b2 = dout.colwise().sum().transpose();
      Mat<Scalar> dact = dout * blk.w2;
      Mat<Scalar> dpre = (dact.array() * (Scalar(1) - cache.act.array().square())).matrix();
      bg.w1 = dpre.transpose() * cache.input;
      bg.b1 = dpre.colwise().sum().transpose();
      Mat<Scalar> din = dpre * blk.w1;

      Mat<Scalar> g_in(n, dec.dim);
      for (Index i = 0; i < nt; ++i)
        g_in.col(trans[static_cast<std::size_t>(i)]) =
            (g_trans.col(i).array() * exp_s.col(i).array()).matrix();
      for (Index i = 0; i < nk; ++i)
        g_in.col(keep[static_cast<std::size_t>(i)]) =
            g.col(keep[static_cast<std::size_t>(i)]) + din.col(i);
      if (b > 0) {
        const auto& perm = dec.perms[b];
        tmp.resize(n, dec.dim);
        for (Index i = 0; i < dec.dim; ++i) tmp.col(perm[static_cast<std::size_t>(i)]) = g_in.col(i);
        g = tmp;
      } else {
        g = std::move(g_in);
      }
    }
  }
  if (!std::isfinite(static_cast<double>(loss))) throw NumericError("nll_loss: non-finite loss");
  return loss;
}

template <class Scalar>
struct AdamState {
  DecoderGrads<Scalar> m;
  DecoderGrads<Scalar> v;
  Index step = 0;
};

template <class Scalar>
AdamState<Scalar> make_adam_state(const FlowDecoderT<Scalar>& dec) {
  AdamState<Scalar> st;
  st.m.resize(dec.blocks.size());
  st.v.resize(dec.blocks.size());
  for (std::size_t b = 0; b < dec.blocks.size(); ++b) {
    const auto& blk = dec.blocks[b];
    for (auto* g : {&st.m[b], &st.v[b]}) {
      g->w1 = Mat<Scalar>::Zero(blk.w1.rows(), blk.w1.cols());
      g->b1 = Vec<Scalar>::Zero(blk.b1.size());
      g->w2 = Mat<Scalar>::Zero(blk.w2.rows(), blk.w2.cols());
      g->b2 = Vec<Scalar>::Zero(blk.b2.size());
    }
  }
  return st;
}

template <class Scalar>
void adam_step(FlowDecoderT<Scalar>& dec, const DecoderGrads<Scalar>& grads, AdamState<Scalar>& st,
               const TrainConfig& cfg) {
  ++st.step;
  const Scalar b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar corr1 = 1 - std::pow(b1, static_cast<Scalar>(st.step));
  const Scalar corr2 = 1 - std::pow(b2, static_cast<Scalar>(st.step));
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar eps = static_cast<Scalar>(cfg.adam_eps);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1 - b1) * g;
    v = (b2 * v.array() + (1 - b2) * g.array().square()).matrix();
    param.array() -= lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
  };
  for (std::size_t b = 0; b < dec.blocks.size(); ++b) {
    auto& blk = dec.blocks[b];
    update(blk.w1, st.m[b].w1, st.v[b].w1, grads[b].w1);
    update(blk.b1, st.m[b].b1, st.v[b].b1, grads[b].b1);
    update(blk.w2, st.m[b].w2, st.v[b].w2, grads[b].w2);
    update(blk.b2, st.m[b].b2, st.v[b].b2, grads[b].b2);
  }
}

struct TrainLog {
  std::vector<double> epoch_mean_nll;  // running mean of batch losses per epoch
  double final_nll = 0.0;              // full training set, post-training
};

// Fit per-dim standardization on z_raw, Gaussian-initialize the subnets and
// train by Adam on shuffled minibatches. Also records the mean/std of the
// per-position log-likelihood over the training set, used downstream for
// score normalization.
template <class Scalar>
FlowDecoderT<Scalar> train_decoder(const Mat<Scalar>& z_raw, const Mat<Scalar>& cond,
                                   const FlowConfig<Scalar>& flow_cfg, const TrainConfig& train_cfg,
                                   TrainLog* log = nullptr) {
  train_cfg.validate();
  const Index n = z_raw.rows();
  if (n < 2) throw ArgError("train_decoder: need at least 2 positions");
  if (cond.rows() != n) throw ArgError("train_decoder: feature/condition row mismatch");
  if (!z_raw.allFinite() || !cond.allFinite())
    throw NumericError("train_decoder: non-finite training data");

  FlowDecoderT<Scalar> dec =
      make_decoder(z_raw.cols(), cond.cols(), flow_cfg, mix_seed(train_cfg.seed, 0x11));
  dec.feat_mean = z_raw.colwise().mean().transpose();
  Mat<Scalar> centered = z_raw.rowwise() - dec.feat_mean.transpose();
  dec.feat_std = centered.array().square().colwise().mean().sqrt().matrix().transpose().cwiseMax(
      Scalar(1e-6));

  AdamState<Scalar> adam = make_adam_state(dec);
  Rng shuffle_rng(mix_seed(train_cfg.seed, 0x12));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  DecoderGrads<Scalar> grads;
  Mat<Scalar> bz, bc;
  for (Index epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    Index batches = 0;
    for (Index start = 0; start < n; start += train_cfg.batch_size) {
      const Index len = std::min(train_cfg.batch_size, n - start);
      bz.resize(len, z_raw.cols());
      bc.resize(len, cond.cols());
      for (Index i = 0; i < len; ++i) {
        bz.row(i) = z_raw.row(order[static_cast<std::size_t>(start + i)]);
        bc.row(i) = cond.row(order[static_cast<std::size_t>(start + i)]);
      }
      Scalar loss;
      try {
        loss = nll_loss(dec, bz, bc, &grads);
      } catch (const NumericError&) {
        throw NumericError("flow training diverged at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(batches));
      }
      adam_step(dec, grads, adam, train_cfg);
      epoch_loss += static_cast<double>(loss);
      ++batches;
    }
    if (log) log->epoch_mean_nll.push_back(epoch_loss / static_cast<double>(batches));
  }

  Vec<Scalar> ll = log_lik(dec, z_raw, cond);
  dec.train_ll_mean = ll.mean();
  dec.train_ll_std = std::sqrt((ll.array() - dec.train_ll_mean).square().mean());
  if (dec.train_ll_std < Scalar(1e-12)) dec.train_ll_std = Scalar(1e-12);
  if (log) log->final_nll = -static_cast<double>(dec.train_ll_mean);
  return dec;
}

// K independent per-scale decoders plus the grid/encoding layout they were
// trained for.
template <class Scalar>
struct FlowModelT {
  PyramidConfig pyramid;
  PositionalEncodingConfig pe;
  Index blocks = 4;
  Scalar clamp = Scalar(1.9);
  std::vector<FlowDecoderT<Scalar>> decoders;
};

using FlowModel = FlowModelT<double>;

// Pool every training image's per-scale positions as i.i.d. samples and fit
// one decoder per scale.
template <class Scalar>
FlowModelT<Scalar> train_flow_model(const std::vector<FeaturePyramidT<Scalar>>& pyramids,
                                    const PyramidConfig& pyr_cfg,
                                    const PositionalEncodingConfig& pe_cfg,
                                    const FlowConfig<Scalar>& flow_cfg,
                                    const TrainConfig& train_cfg,
                                    std::vector<TrainLog>* logs = nullptr) {
  pyr_cfg.validate();
  pe_cfg.validate();
  if (pyramids.size() < 2) throw ArgError("train_flow_model: need at least 2 training images");
  for (const auto& p : pyramids) p.validate_against(pyr_cfg);

  FlowModelT<Scalar> model;
  model.pyramid = pyr_cfg;
  model.pe = pe_cfg;
  model.blocks = flow_cfg.blocks;
  model.clamp = flow_cfg.clamp;
  if (logs) logs->resize(static_cast<std::size_t>(pyr_cfg.num_scales()));

  const Index n_img = static_cast<Index>(pyramids.size());
  for (Index k = 0; k < pyr_cfg.num_scales(); ++k) {
    const Index cells = pyr_cfg.grid_rows(k) * pyr_cfg.grid_cols(k);
    const Index d = pyr_cfg.dim(k);
    Mat<Scalar> z(n_img * cells, d);
    Mat<Scalar> pe_grid =
        positional_encoding_grid<Scalar>(pyr_cfg.grid_rows(k), pyr_cfg.grid_cols(k), pe_cfg);
    Mat<Scalar> cond(n_img * cells, pe_cfg.dim);
    for (Index i = 0; i < n_img; ++i) {
      z.middleRows(i * cells, cells) =
          pyramids[static_cast<std::size_t>(i)].scales[static_cast<std::size_t>(k)].values;
      cond.middleRows(i * cells, cells) = pe_grid;
    }
    TrainConfig per_scale = train_cfg;
    per_scale.seed = mix_seed(train_cfg.seed, 0x1000 + static_cast<std::uint64_t>(k));
    model.decoders.push_back(train_decoder(z, cond, flow_cfg, per_scale,
                                           logs ? &(*logs)[static_cast<std::size_t>(k)] : nullptr));
  }
  return model;
}

}  // namespace unoqa
