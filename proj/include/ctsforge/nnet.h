// ctsforge/nnet.h

// Copyright 2026 The ctsforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Extended-TDNN speaker embedding extractor.
//
// Frame-level layers are dilated temporal convolutions (kernel 1 is a
// per-frame affine map), each followed by a per-channel PReLU. Statistics
// pooling turns the last frame layer's T x C output into a 2C vector of
// means and standard deviations. Segment-level layers are affine + PReLU,
// and the last one feeds an additive-margin cosine classifier. Embeddings
// are read from the affine output of the first segment-level layer, before
// its nonlinearity.
//
// Matrices hold one frame per row. A layer with kernel k and dilation d
// maps T input frames to T - (k-1)d output frames through a weight of shape
// out x (k * in), whose column block j multiplies input frame t + j*d.
//
// Everything is templated on the scalar type; training and gradient checks
// use double.

#ifndef CTSFORGE_NNET_H_
#define CTSFORGE_NNET_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ctsforge/binary_io.h"
#include "ctsforge/random.h"

namespace ctsforge {

// ---------------------------------------------------------------------------
// Configuration

enum class LayerKind : std::uint32_t { kFrameTdnn = 0, kFrameDense = 1, kSegDense = 2 };

struct LayerSpec {
  LayerKind kind = LayerKind::kFrameDense;
  int kernel = 1;
  int dilation = 1;
  int out_channels = 0;

  bool frame_level() const { return kind != LayerKind::kSegDense; }
  int context() const { return (kernel - 1) * dilation; }
  bool operator==(const LayerSpec&) const = default;
};

struct EtdnnConfig {
  int input_dim = 64;
  std::vector<LayerSpec> layers;  // frame-level layers, then segment-level
  int n_speakers = 0;

  /// 9 frame layers (widths 512, last 1500), pooling to 3000, then 512 + 512.
  static EtdnnConfig full(int n_speakers, int input_dim = 64);
  /// Same layout at desk scale: frame width 64, pooling 128 -> 256, embed 64.
  static EtdnnConfig desk(int n_speakers, int input_dim = 64, int channels = 64,
                          int pool_channels = 128, int embed_dim = 64);

  int num_frame_layers() const;
  int pool_channels() const;  // output width of the last frame layer
  int pooled_dim() const { return 2 * pool_channels(); }
  int embed_dim() const;      // first segment layer width
  int branch_dim() const;     // last segment layer width, classifier input
  int receptive_field() const;
  /// Throws std::invalid_argument unless there is at least one frame layer,
  /// followed by at least one segment layer, with positive widths.
  void check() const;
  bool operator==(const EtdnnConfig&) const = default;
};

struct AmSoftmaxParams {
  double margin = 0.2;
  double scale = 40.0;
};

inline constexpr double kPReluInit = 0.25;
inline constexpr double kStatsVarEps = 1e-10;
inline constexpr double kNormEps = 1e-12;

// ---------------------------------------------------------------------------
// Parameters

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct AffineLayer {
  MatrixX<Scalar> weight;  // out x (kernel * in)
  VectorX<Scalar> bias;    // out
  VectorX<Scalar> slope;   // out, PReLU negative-side slopes
};

/// Also used for gradients and momentum buffers.
template <typename Scalar>
struct EtdnnParams {
  std::vector<AffineLayer<Scalar>> layers;
  MatrixX<Scalar> classifier;  // n_speakers x branch_dim, rows unnormalized

  EtdnnParams zeros_like() const {
    EtdnnParams z;
    for (const auto& l : layers)
      z.layers.push_back({MatrixX<Scalar>::Zero(l.weight.rows(), l.weight.cols()),
                          VectorX<Scalar>::Zero(l.bias.size()),
                          VectorX<Scalar>::Zero(l.slope.size())});
    z.classifier = MatrixX<Scalar>::Zero(classifier.rows(), classifier.cols());
    return z;
  }
};

/// A parameter tensor viewed as a flat vector.
template <typename Scalar>
struct TensorView {
  std::string name;
  Eigen::Map<VectorX<Scalar>> data;
};

template <typename Scalar>
std::vector<TensorView<Scalar>> tensors(EtdnnParams<Scalar>& p) {
  std::vector<TensorView<Scalar>> out;
  auto add = [&out](std::string name, auto& m) {
    out.push_back({std::move(name), Eigen::Map<VectorX<Scalar>>(m.data(), m.size())});
  };
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i + 1) + ".";
    add(prefix + "weight", p.layers[i].weight);
    add(prefix + "bias", p.layers[i].bias);
    add(prefix + "prelu", p.layers[i].slope);
  }
  add("classifier", p.classifier);
  return out;
}

template <typename Scalar>
struct EtdnnModel {
  EtdnnConfig config;
  EtdnnParams<Scalar> params;

  template <typename Other>
  EtdnnModel<Other> cast() const {
    EtdnnModel<Other> m;
    m.config = config;
    for (const auto& l : params.layers)
      m.params.layers.push_back({l.weight.template cast<Other>(),
                                 l.bias.template cast<Other>(),
                                 l.slope.template cast<Other>()});
    m.params.classifier = params.classifier.template cast<Other>();
    return m;
  }
};

/// Weights uniform in +-sqrt(6 / ((1 + a^2) fan_in)) with a the initial PReLU
/// slope, biases zero, slopes kPReluInit.
template <typename Scalar>
EtdnnModel<Scalar> init_model(const EtdnnConfig& config, std::uint64_t seed) {
  config.check();
  EtdnnModel<Scalar> model;
  model.config = config;
  Rng rng(seed);
  auto fill = [&rng](MatrixX<Scalar>& w, double fan_in) {
    const double bound =
        std::sqrt(6.0 / ((1.0 + kPReluInit * kPReluInit) * fan_in));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
  };
  int in = config.input_dim;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const auto& spec = config.layers[l];
    if (static_cast<int>(l) == config.num_frame_layers()) in = config.pooled_dim();
    const int fan_in = spec.kernel * in;
    AffineLayer<Scalar> layer;
    layer.weight.resize(spec.out_channels, fan_in);
    fill(layer.weight, fan_in);
    layer.bias = VectorX<Scalar>::Zero(spec.out_channels);
    layer.slope = VectorX<Scalar>::Constant(spec.out_channels,
                                            static_cast<Scalar>(kPReluInit));
    model.params.layers.push_back(std::move(layer));
    in = spec.out_channels;
  }
  model.params.classifier.resize(config.n_speakers, config.branch_dim());
  fill(model.params.classifier, config.branch_dim());
  return model;
}

// ---------------------------------------------------------------------------
// Building blocks

template <typename Scalar>
MatrixX<Scalar> splice(const MatrixX<Scalar>& x, int kernel, int dilation) {
  const Eigen::Index frames = x.rows() - static_cast<Eigen::Index>(kernel - 1) * dilation;
  const Eigen::Index in = x.cols();
  MatrixX<Scalar> s(frames, kernel * in);
  for (int j = 0; j < kernel; ++j)
    s.middleCols(j * in, in) = x.middleRows(static_cast<Eigen::Index>(j) * dilation, frames);
  return s;
}

template <typename Derived, typename Slope>
auto prelu(const Eigen::MatrixBase<Derived>& z, const Eigen::MatrixBase<Slope>& slope) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> h = z;
  for (Eigen::Index c = 0; c < h.cols(); ++c)
    for (Eigen::Index t = 0; t < h.rows(); ++t)
      if (h(t, c) <= Scalar(0)) h(t, c) *= slope(c);
  return h;
}

/// Per-channel mean, then per-channel sqrt(population variance + var_eps).
template <typename Derived>
RowVectorX<typename Derived::Scalar> stats_pool(
    const Eigen::MatrixBase<Derived>& frames,
    typename Derived::Scalar var_eps = typename Derived::Scalar(kStatsVarEps)) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = frames.rows(), c = frames.cols();
  if (n == 0) throw std::invalid_argument("stats_pool: no frames");
  RowVectorX<Scalar> mean = frames.colwise().mean();
  RowVectorX<Scalar> var =
      (frames.rowwise() - mean).array().square().colwise().sum() / Scalar(n);
  RowVectorX<Scalar> out(2 * c);
  out.head(c) = mean;
  out.tail(c) = (var.array() + var_eps).sqrt();
  return out;
}

template <typename Derived>
auto l2_normalize_rows(const Eigen::MatrixBase<Derived>& m, const char* what) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Scalar norm = out.row(i).norm();
    if (!(norm > Scalar(kNormEps)))
      throw std::domain_error(std::string(what) + " row " + std::to_string(i) +
                              " has zero norm");
    out.row(i) /= norm;
  }
  return out;
}

// ---------------------------------------------------------------------------
// AM-softmax

template <typename Scalar>
struct AmSoftmaxResult {
  Scalar loss = 0;
  MatrixX<Scalar> cosines;  // batch x n_speakers
  Eigen::Index correct = 0; // argmax of margin-free logits equals the label
};

/// s * cos, with s * m subtracted from each sample's label column.
template <typename Scalar>
MatrixX<Scalar> am_softmax_logits(const MatrixX<Scalar>& cosines,
                                  const std::vector<int>& labels,
                                  const AmSoftmaxParams& am) {
  MatrixX<Scalar> logits = Scalar(am.scale) * cosines;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    logits(i, labels[static_cast<std::size_t>(i)]) -= Scalar(am.scale * am.margin);
  return logits;
}

namespace detail {

inline void check_labels(const std::vector<int>& labels, Eigen::Index batch,
                         Eigen::Index classes) {
  if (batch == 0) throw std::invalid_argument("am_softmax: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw std::invalid_argument("am_softmax: label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= classes)
      throw std::invalid_argument("am_softmax: label " + std::to_string(y) +
                                  " out of range");
}

/// Loss, and when the gradient pointers are non-null, the gradients of the
/// batch-mean loss with respect to the branch outputs and raw class rows.
template <typename Scalar>
AmSoftmaxResult<Scalar> am_softmax(const MatrixX<Scalar>& branch,
                                   const MatrixX<Scalar>& classifier,
                                   const std::vector<int>& labels,
                                   const AmSoftmaxParams& am,
                                   MatrixX<Scalar>* d_branch,
                                   MatrixX<Scalar>* d_classifier) {
  check_labels(labels, branch.rows(), classifier.rows());
  const Eigen::Index batch = branch.rows();
  MatrixX<Scalar> u = l2_normalize_rows(branch, "embedding");
  MatrixX<Scalar> w = l2_normalize_rows(classifier, "classifier");

  AmSoftmaxResult<Scalar> result;
  result.cosines = u * w.transpose();
  MatrixX<Scalar> logits = am_softmax_logits(result.cosines, labels, am);
  MatrixX<Scalar> d_logits(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    Eigen::Index best;
    result.cosines.row(i).maxCoeff(&best);
    result.correct += best == y;
    Scalar top = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - top).exp();
    Scalar sum = e.sum();
    result.loss += std::log(sum) + top - logits(i, y);
    d_logits.row(i) = e / sum;
    d_logits(i, y) -= Scalar(1);
  }
  result.loss /= Scalar(batch);
  if (!d_branch && !d_classifier) return result;

  // d loss / d cos, with the 1/batch of the mean folded in.
  MatrixX<Scalar> d_cos = d_logits * Scalar(am.scale / static_cast<double>(batch));
  if (d_branch) {
    MatrixX<Scalar> d_u = d_cos * w;
    d_branch->resize(branch.rows(), branch.cols());
    for (Eigen::Index i = 0; i < batch; ++i) {
      Scalar norm = branch.row(i).norm();
      d_branch->row(i) =
          (d_u.row(i) - u.row(i) * u.row(i).dot(d_u.row(i))) / norm;
    }
  }
  if (d_classifier) {
    MatrixX<Scalar> d_w = d_cos.transpose() * u;
    d_classifier->resize(classifier.rows(), classifier.cols());
    for (Eigen::Index j = 0; j < classifier.rows(); ++j) {
      Scalar norm = classifier.row(j).norm();
      d_classifier->row(j) =
          (d_w.row(j) - w.row(j) * w.row(j).dot(d_w.row(j))) / norm;
    }
  }
  return result;
}

}  // namespace detail

/// Batch-mean additive-margin softmax loss over cosines between the
/// length-normalized branch outputs (one per row) and classifier rows.
/// Throws std::domain_error on a zero-norm row.
template <typename Scalar>
AmSoftmaxResult<Scalar> am_softmax_loss(const MatrixX<Scalar>& branch,
                                        const MatrixX<Scalar>& classifier,
                                        const std::vector<int>& labels,
                                        const AmSoftmaxParams& am) {
  return detail::am_softmax<Scalar>(branch, classifier, labels, am, nullptr,
                                    nullptr);
}

// ---------------------------------------------------------------------------
// Forward / backward

template <typename Scalar>
struct FrameLayerCache {
  MatrixX<Scalar> spliced;  // layer input after splicing
  MatrixX<Scalar> pre;      // affine output
  MatrixX<Scalar> out;      // after PReLU
};

template <typename Scalar>
struct SegLayerCache {
  MatrixX<Scalar> in;   // batch x in
  MatrixX<Scalar> pre;  // batch x out
  MatrixX<Scalar> out;
};

template <typename Scalar>
struct ForwardPass {
  std::vector<std::vector<FrameLayerCache<Scalar>>> frames;  // [chunk][layer]
  MatrixX<Scalar> pooled;      // batch x pooled_dim
  std::vector<SegLayerCache<Scalar>> segment;
  MatrixX<Scalar> cosines;     // batch x n_speakers

  /// Last frame layer output of one chunk.
  const MatrixX<Scalar>& frame_activations(std::size_t chunk) const {
    return frames[chunk].back().out;
  }
  /// First segment layer affine output: the embeddings.
  const MatrixX<Scalar>& embeddings() const { return segment.front().pre; }
  /// Last segment layer output: the classifier input.
  const MatrixX<Scalar>& branch() const { return segment.back().out; }
  MatrixX<Scalar> logits(const AmSoftmaxParams& am) const {
    return Scalar(am.scale) * cosines;
  }
};

template <typename Scalar>
std::vector<FrameLayerCache<Scalar>> forward_frames(const EtdnnModel<Scalar>& model,
                                                    const MatrixX<Scalar>& feats) {
  const auto& cfg = model.config;
  if (feats.cols() != cfg.input_dim)
    throw std::invalid_argument("forward: feature dim " +
                                std::to_string(feats.cols()) + ", model expects " +
                                std::to_string(cfg.input_dim));
  if (feats.rows() < cfg.receptive_field())
    throw std::invalid_argument("forward: " + std::to_string(feats.rows()) +
                                " frames, receptive field is " +
                                std::to_string(cfg.receptive_field()));
  std::vector<FrameLayerCache<Scalar>> caches(
      static_cast<std::size_t>(cfg.num_frame_layers()));
  const MatrixX<Scalar>* x = &feats;
  for (std::size_t l = 0; l < caches.size(); ++l) {
    const auto& spec = cfg.layers[l];
    const auto& p = model.params.layers[l];
    auto& c = caches[l];
    c.spliced = splice(*x, spec.kernel, spec.dilation);
    c.pre = (c.spliced * p.weight.transpose()).rowwise() + p.bias.transpose();
    c.out = prelu(c.pre, p.slope);
    x = &c.out;
  }
  return caches;
}

/// Batched forward pass. Chunks may differ in length.
template <typename Scalar>
ForwardPass<Scalar> forward(const EtdnnModel<Scalar>& model,
                            const std::vector<MatrixX<Scalar>>& chunks) {
  const auto& cfg = model.config;
  const auto batch = static_cast<Eigen::Index>(chunks.size());
  if (batch == 0) throw std::invalid_argument("forward: empty batch");
  ForwardPass<Scalar> pass;
  pass.pooled.resize(batch, cfg.pooled_dim());
  for (Eigen::Index b = 0; b < batch; ++b) {
    pass.frames.push_back(forward_frames(model, chunks[static_cast<std::size_t>(b)]));
    pass.pooled.row(b) = stats_pool(pass.frames.back().back().out);
  }
  const MatrixX<Scalar>* x = &pass.pooled;
  for (std::size_t l = static_cast<std::size_t>(cfg.num_frame_layers());
       l < cfg.layers.size(); ++l) {
    const auto& p = model.params.layers[l];
    SegLayerCache<Scalar> c;
    c.in = *x;
    c.pre = (c.in * p.weight.transpose()).rowwise() + p.bias.transpose();
    c.out = prelu(c.pre, p.slope);
    pass.segment.push_back(std::move(c));
    x = &pass.segment.back().out;
  }
  pass.cosines = l2_normalize_rows(pass.branch(), "embedding") *
                 l2_normalize_rows(model.params.classifier, "classifier").transpose();
  return pass;
}

namespace detail {

/// Backprop through PReLU; accumulates slope gradients, returns d pre.
template <typename Scalar>
MatrixX<Scalar> prelu_backward(const MatrixX<Scalar>& pre, const MatrixX<Scalar>& d_out,
                               const VectorX<Scalar>& slope, VectorX<Scalar>& d_slope) {
  MatrixX<Scalar> d_pre = d_out;
  for (Eigen::Index c = 0; c < pre.cols(); ++c)
    for (Eigen::Index t = 0; t < pre.rows(); ++t)
      if (pre(t, c) <= Scalar(0)) {
        d_slope(c) += d_out(t, c) * pre(t, c);
        d_pre(t, c) *= slope(c);
      }
  return d_pre;
}

}  // namespace detail

template <typename Scalar>
struct LossAndGradient {
  Scalar loss = 0;
  Eigen::Index correct = 0;
  EtdnnParams<Scalar> grad;
};

/// Gradients of the batch-mean AM-softmax loss for every parameter, from a
/// cached forward pass over the same batch.
template <typename Scalar>
LossAndGradient<Scalar> backward(const EtdnnModel<Scalar>& model,
                                 const ForwardPass<Scalar>& pass,
                                 const std::vector<int>& labels,
                                 const AmSoftmaxParams& am) {
  const auto& cfg = model.config;
  const auto& params = model.params;
  LossAndGradient<Scalar> out;
  out.grad = params.zeros_like();
  auto& grad = out.grad;

  MatrixX<Scalar> d_x;
  auto head = detail::am_softmax<Scalar>(pass.branch(), params.classifier, labels,
                                         am, &d_x, &grad.classifier);
  out.loss = head.loss;
  out.correct = head.correct;

  const auto n_frame = static_cast<std::size_t>(cfg.num_frame_layers());
  for (std::size_t l = cfg.layers.size(); l-- > n_frame;) {
    const auto& c = pass.segment[l - n_frame];
    auto& g = grad.layers[l];
    MatrixX<Scalar> d_pre =
        detail::prelu_backward(c.pre, d_x, params.layers[l].slope, g.slope);
    g.weight += d_pre.transpose() * c.in;
    g.bias += d_pre.colwise().sum().transpose();
    d_x = d_pre * params.layers[l].weight;
  }

  // d_x is now batch x pooled_dim.
  const Eigen::Index pool_c = cfg.pool_channels();
  for (std::size_t b = 0; b < pass.frames.size(); ++b) {
    const auto& caches = pass.frames[b];
    const MatrixX<Scalar>& h = caches.back().out;
    const auto frames = static_cast<Scalar>(h.rows());
    RowVectorX<Scalar> d_mean = d_x.row(static_cast<Eigen::Index>(b)).head(pool_c);
    RowVectorX<Scalar> d_std = d_x.row(static_cast<Eigen::Index>(b)).tail(pool_c);
    RowVectorX<Scalar> mean = pass.pooled.row(static_cast<Eigen::Index>(b)).head(pool_c);
    RowVectorX<Scalar> std = pass.pooled.row(static_cast<Eigen::Index>(b)).tail(pool_c);
    RowVectorX<Scalar> coef = d_std.cwiseQuotient(std) / frames;
    MatrixX<Scalar> d_h = ((h.rowwise() - mean).array().rowwise() * coef.array()).matrix();
    d_h.rowwise() += d_mean / frames;

    for (std::size_t l = n_frame; l-- > 0;) {
      const auto& spec = cfg.layers[l];
      const auto& p = params.layers[l];
      auto& g = grad.layers[l];
      const auto& c = caches[l];
      MatrixX<Scalar> d_pre = detail::prelu_backward(c.pre, d_h, p.slope, g.slope);
      g.weight += d_pre.transpose() * c.spliced;
      g.bias += d_pre.colwise().sum().transpose();
      if (l == 0) break;
      MatrixX<Scalar> d_spliced = d_pre * p.weight;
      const Eigen::Index in = caches[l - 1].out.cols();
      MatrixX<Scalar> d_in = MatrixX<Scalar>::Zero(caches[l - 1].out.rows(), in);
      for (int j = 0; j < spec.kernel; ++j)
        d_in.middleRows(static_cast<Eigen::Index>(j) * spec.dilation, d_pre.rows()) +=
            d_spliced.middleCols(j * in, in);
      d_h = std::move(d_in);
    }
  }
  return out;
}

template <typename Scalar>
LossAndGradient<Scalar> loss_and_gradient(const EtdnnModel<Scalar>& model,
                                          const std::vector<MatrixX<Scalar>>& chunks,
                                          const std::vector<int>& labels,
                                          const AmSoftmaxParams& am) {
  return backward(model, forward(model, chunks), labels, am);
}

/// Batch-mean loss only (no gradient bookkeeping).
template <typename Scalar>
Scalar batch_loss(const EtdnnModel<Scalar>& model,
                  const std::vector<MatrixX<Scalar>>& chunks,
                  const std::vector<int>& labels, const AmSoftmaxParams& am) {
  auto pass = forward(model, chunks);
  return am_softmax_loss(pass.branch(), model.params.classifier, labels, am).loss;
}

/// Affine output of the first segment layer for a whole segment.
template <typename Scalar>
VectorX<Scalar> extract_embedding(const EtdnnModel<Scalar>& model,
                                  const MatrixX<Scalar>& feats) {
  auto caches = forward_frames(model, feats);
  RowVectorX<Scalar> pooled = stats_pool(caches.back().out);
  const auto& p = model.params.layers[static_cast<std::size_t>(
      model.config.num_frame_layers())];
  return p.weight * pooled.transpose() + p.bias;
}

// ---------------------------------------------------------------------------
// Optimization

template <typename Scalar>
struct TrainState {
  int epoch = 0;
  double base_lr = 0.1;
  double momentum = 0.9;
  int batch_size = 512;
  EtdnnParams<Scalar> velocity;
};

template <typename Scalar>
TrainState<Scalar> init_train_state(const EtdnnModel<Scalar>& model, double base_lr,
                                    double momentum, int batch_size) {
  TrainState<Scalar> s;
  s.base_lr = base_lr;
  s.momentum = momentum;
  s.batch_size = batch_size;
  s.velocity = model.params.zeros_like();
  return s;
}

/// Classical momentum: v <- mu v + g, theta <- theta - lr v. Throws
/// std::runtime_error naming the tensor if a gradient is not finite; nothing
/// is updated in that case.
template <typename Scalar>
void sgd_step(TrainState<Scalar>& state, EtdnnModel<Scalar>& model,
              EtdnnParams<Scalar>& grads, double lr) {
  auto theta = tensors(model.params);
  auto vel = tensors(state.velocity);
  auto g = tensors(grads);
  if (theta.size() != g.size() || theta.size() != vel.size())
    throw std::invalid_argument("sgd_step: tensor count mismatch");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i].data.size() != g[i].data.size() ||
        theta[i].data.size() != vel[i].data.size())
      throw std::invalid_argument("sgd_step: shape mismatch in " + theta[i].name);
    if (!g[i].data.allFinite()) {
      Eigen::Index bad = (!g[i].data.array().isFinite()).count();
      throw std::runtime_error("sgd_step: " + std::to_string(bad) +
                               " non-finite gradient entries in " + g[i].name +
                               " at epoch " + std::to_string(state.epoch));
    }
  }
  const auto mu = static_cast<Scalar>(state.momentum);
  const auto rate = static_cast<Scalar>(lr);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    vel[i].data = mu * vel[i].data + g[i].data;
    theta[i].data -= rate * vel[i].data;
  }
}

/// base_lr for epochs [0, first_halving); afterwards halved once at
/// first_halving and again every halving_period epochs.
double lr_schedule(int epoch, double base_lr, int first_halving = 5,
                   int halving_period = 2);

// ---------------------------------------------------------------------------
// Speaker-balanced sampling

struct SegmentInfo {
  std::size_t index = 0;    // caller's segment index
  Eigen::Index frames = 0;
};

using SpeakerPool = std::map<int, std::vector<SegmentInfo>>;

struct ChunkRef {
  int speaker = 0;
  std::size_t segment = 0;  // SegmentInfo::index
  Eigen::Index offset = 0;
};

using BatchPlan = std::vector<ChunkRef>;

/// One pass over the speaker pool: speakers shuffled and split into batches
/// of batch_size (the last one may be short), one random segment and one
/// random chunk_len window per speaker.
std::vector<BatchPlan> sample_pass(const SpeakerPool& pool, int batch_size,
                                   Eigen::Index chunk_len, Rng& rng);

/// Repeats sample_pass until the number of drawn chunks reaches the number
/// of segments in the pool (at least one pass).
std::vector<BatchPlan> sample_epoch(const SpeakerPool& pool, int batch_size,
                                    Eigen::Index chunk_len, Rng& rng);

/// chunk_len rows starting at offset; reads past the end wrap around.
template <typename Derived>
MatrixX<typename Derived::Scalar> cut_chunk(const Eigen::MatrixBase<Derived>& feats,
                                            Eigen::Index offset, Eigen::Index len) {
  using Scalar = typename Derived::Scalar;
  if (feats.rows() == 0) throw std::invalid_argument("cut_chunk: empty matrix");
  MatrixX<Scalar> out(len, feats.cols());
  for (Eigen::Index t = 0; t < len; ++t)
    out.row(t) = feats.row((offset + t) % feats.rows());
  return out;
}

// ---------------------------------------------------------------------------
// Model file: "ETDN", u32 version, u32 input_dim, u32 n_layers, per layer
// u32 kind/kernel/dilation/out_channels, u32 n_speakers, then per layer
// weight (row-major), bias, slopes, then the classifier; float32 LE.

void write_model_header(std::ostream& out, const EtdnnConfig& cfg);
EtdnnConfig read_model_header(std::istream& in);

template <typename Scalar>
void write_model(const std::filesystem::path& path, const EtdnnModel<Scalar>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_model_header(out, model.config);
  for (const auto& l : model.params.layers) {
    write_matrix_data<float>(out, l.weight);
    write_matrix_data<float>(out, l.bias);
    write_matrix_data<float>(out, l.slope);
  }
  write_matrix_data<float>(out, model.params.classifier);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename Scalar>
EtdnnModel<Scalar> read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  EtdnnModel<Scalar> model = init_model<Scalar>(read_model_header(in), 0);
  for (auto& l : model.params.layers) {
    read_matrix_data<float>(in, l.weight);
    read_matrix_data<float>(in, l.bias);
    read_matrix_data<float>(in, l.slope);
  }
  read_matrix_data<float>(in, model.params.classifier);
  return model;
}

}  // namespace ctsforge

#endif  // CTSFORGE_NNET_H_
