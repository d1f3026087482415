#pragma once

#include "massloc/image.hpp"
#include "massloc/network.hpp"
#include "massloc/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace massloc {

/// Plain mini-batch SGD settings for one training stage.
struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 10;
  double weight_init_scale = 0.05;
  std::uint64_t rng_seed = 1;
  double l2_penalty = 0.0;
  /// Multiplies the step for encoder weights only (auto-encoder stages).
  double encoder_lr_scale = 1.0;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("learning_rate must be finite and >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(weight_init_scale >= 0.0) || !std::isfinite(weight_init_scale))
      throw std::invalid_argument("weight_init_scale must be finite and >= 0");
    if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty))
      throw std::invalid_argument("l2_penalty must be finite and >= 0");
    if (!(encoder_lr_scale >= 0.0) || !std::isfinite(encoder_lr_scale))
      throw std::invalid_argument("encoder_lr_scale must be finite and >= 0");
  }
};

/// Raised when a run ends with a higher epoch loss than it started with, or
/// the loss stops being finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct LayerPretrainState {
  Matrix<Scalar> encoder;  // hidden x in
  Matrix<Scalar> decoder;  // in x hidden
  std::vector<double> loss_history;
};

/// Entries i.i.d. uniform in [-scale, scale], filled row by row.
template <typename Scalar>
Matrix<Scalar> init_weights(Index rows, Index cols, Scalar scale, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("init_weights: dimensions must be >= 1");
  Rng rng(seed);
  Matrix<Scalar> w(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) w(r, c) = scale * Scalar(2.0 * rng.uniform() - 1.0);
  return w;
}

// ---------------------------------------------------------------------------
// Reconstruction objective for one auto-encoder layer:
//   L = 1/B * sum_i || x_i - s(W' s(W x_i)) ||^2 + l2/2 * (|W|^2 + |W'|^2)
// with s the logistic sigmoid and the columns of `batch` as the x_i.

template <typename Scalar>
struct ReconstructionGradient {
  Scalar loss = 0;
  Matrix<Scalar> encoder;
  Matrix<Scalar> decoder;
};

template <typename Scalar>
Scalar reconstruction_loss(const Matrix<Scalar>& encoder, const Matrix<Scalar>& decoder,
                           const Matrix<Scalar>& batch, Scalar l2 = 0) {
  const Matrix<Scalar> hidden = sigmoid(encoder * batch);
  const Matrix<Scalar> recon = sigmoid(decoder * hidden);
  Scalar loss = (recon - batch).squaredNorm() / Scalar(batch.cols());
  if (l2 > 0) loss += l2 / 2 * (encoder.squaredNorm() + decoder.squaredNorm());
  return loss;
}

namespace detail {

// Forward pass plus the two backpropagated error signals of the
// reconstruction objective, without forming the weight gradients.
template <typename Scalar>
struct ReconstructionDeltas {
  Scalar loss = 0;
  Matrix<Scalar> hidden;        // hidden x B
  Matrix<Scalar> delta_out;     // in x B
  Matrix<Scalar> delta_hidden;  // hidden x B
};

template <typename Scalar>
ReconstructionDeltas<Scalar> reconstruction_deltas(const Matrix<Scalar>& encoder,
                                                   const Matrix<Scalar>& decoder,
                                                   const Matrix<Scalar>& batch) {
  const Scalar inv_b = Scalar(1) / Scalar(batch.cols());
  ReconstructionDeltas<Scalar> d;
  d.hidden = sigmoid(encoder * batch);
  d.delta_out = sigmoid(decoder * d.hidden);
  d.loss = (d.delta_out - batch).squaredNorm() * inv_b;
  d.delta_out = (Scalar(2) * inv_b * (d.delta_out - batch).array() * d.delta_out.array() *
                 (Scalar(1) - d.delta_out.array()))
                    .matrix();
  d.delta_hidden = ((decoder.transpose() * d.delta_out).array() * d.hidden.array() *
                    (Scalar(1) - d.hidden.array()))
                       .matrix();
  return d;
}

}  // namespace detail

template <typename Scalar>
ReconstructionGradient<Scalar> reconstruction_gradient(const Matrix<Scalar>& encoder,
                                                       const Matrix<Scalar>& decoder,
                                                       const Matrix<Scalar>& batch,
                                                       Scalar l2 = 0) {
  const auto d = detail::reconstruction_deltas(encoder, decoder, batch);
  ReconstructionGradient<Scalar> g;
  g.loss = d.loss;
  g.decoder.noalias() = d.delta_out * d.hidden.transpose();
  g.encoder.noalias() = d.delta_hidden * batch.transpose();
  if (l2 > 0) {
    g.loss += l2 / 2 * (encoder.squaredNorm() + decoder.squaredNorm());
    g.encoder += l2 * encoder;
    g.decoder += l2 * decoder;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Softmax head objective:
//   L = 1/B * sum_i -log softmax(W h_i)[label_i] + l2/2 * |W|^2

template <typename Scalar>
struct HeadGradient {
  Scalar loss = 0;
  Matrix<Scalar> weights;
};

namespace detail {

inline void check_labels(std::span<const int> labels, Index count, Index classes) {
  if (static_cast<Index>(labels.size()) != count)
    throw std::invalid_argument("expected one label per example");
  for (int label : labels)
    if (label < 0 || label >= classes)
      throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(classes) + ")");
}

template <typename Scalar>
Matrix<Scalar> log_softmax_columns(const Matrix<Scalar>& z) {
  Matrix<Scalar> shifted = z.rowwise() - z.colwise().maxCoeff();
  const auto log_norm = shifted.array().exp().colwise().sum().log().eval();
  shifted.array().rowwise() -= log_norm;
  return shifted;
}

template <typename Scalar>
Matrix<Scalar> gather_columns(const Matrix<Scalar>& data, std::span<const Index> columns) {
  Matrix<Scalar> out(data.rows(), static_cast<Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) out.col(Index(i)) = data.col(columns[i]);
  return out;
}

inline void check_history(const std::vector<double>& history, const char* stage) {
  for (double v : history)
    if (!std::isfinite(v)) throw TrainingError(std::string(stage) + ": loss became non-finite");
  if (history.back() > history.front())
    throw TrainingError(std::string(stage) + ": final epoch loss " + std::to_string(history.back()) +
                        " exceeds first epoch loss " + std::to_string(history.front()));
}

}  // namespace detail

template <typename Scalar>
Scalar cross_entropy_loss(const Matrix<Scalar>& weights, const Matrix<Scalar>& features,
                          std::span<const int> labels, Scalar l2 = 0) {
  detail::check_labels(labels, features.cols(), weights.rows());
  const Matrix<Scalar> logp = detail::log_softmax_columns<Scalar>(weights * features);
  Scalar loss = 0;
  for (Index i = 0; i < features.cols(); ++i) loss -= logp(labels[std::size_t(i)], i);
  loss /= Scalar(features.cols());
  if (l2 > 0) loss += l2 / 2 * weights.squaredNorm();
  return loss;
}

template <typename Scalar>
HeadGradient<Scalar> cross_entropy_gradient(const Matrix<Scalar>& weights,
                                            const Matrix<Scalar>& features,
                                            std::span<const int> labels, Scalar l2 = 0) {
  detail::check_labels(labels, features.cols(), weights.rows());
  const Matrix<Scalar> logp = detail::log_softmax_columns<Scalar>(weights * features);
  Matrix<Scalar> delta = logp.array().exp().matrix();
  HeadGradient<Scalar> g;
  for (Index i = 0; i < features.cols(); ++i) {
    const int label = labels[std::size_t(i)];
    g.loss -= logp(label, i);
    delta(label, i) -= Scalar(1);
  }
  const Scalar inv_b = Scalar(1) / Scalar(features.cols());
  g.loss *= inv_b;
  g.weights.noalias() = inv_b * delta * features.transpose();
  if (l2 > 0) {
    g.loss += l2 / 2 * weights.squaredNorm();
    g.weights += l2 * weights;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Mini-batch SGD driver shared by the layer and head trainers. `step` takes
// a batch of column indices, applies one update and returns the batch loss.

namespace detail {

template <typename Step>
std::vector<double> run_sgd(Index examples, const TrainConfig& cfg, std::uint64_t order_seed,
                            Step&& step) {
  Rng order_rng(order_seed);
  std::vector<Index> order(static_cast<std::size_t>(examples));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(std::span<Index>(order));
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t n = std::min(batch, order.size() - begin);
      total += static_cast<double>(step(std::span<const Index>(order.data() + begin, n))) *
               static_cast<double>(n);
    }
    history.push_back(total / static_cast<double>(examples));
  }
  return history;
}

}  // namespace detail

/// Trains one auto-encoder layer (encoder + untied decoder) on the columns
/// of `inputs`.
template <typename Scalar>
LayerPretrainState<Scalar> pretrain_layer(const Matrix<Scalar>& inputs, Index hidden,
                                          const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.cols() < 1) throw std::invalid_argument("pretrain_layer: empty input set");
  if (hidden < 1 || hidden >= inputs.rows())
    throw std::invalid_argument("pretrain_layer: hidden width must be in [1, input width)");

  LayerPretrainState<Scalar> state;
  const auto scale = static_cast<Scalar>(cfg.weight_init_scale);
  state.encoder = init_weights<Scalar>(hidden, inputs.rows(), scale, derive_seed(cfg.rng_seed, 1));
  state.decoder = init_weights<Scalar>(inputs.rows(), hidden, scale, derive_seed(cfg.rng_seed, 2));
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto l2 = static_cast<Scalar>(cfg.l2_penalty);

  state.loss_history = detail::run_sgd(
      inputs.cols(), cfg, derive_seed(cfg.rng_seed, 3), [&](std::span<const Index> cols) {
        const Matrix<Scalar> batch = detail::gather_columns(inputs, cols);
        const auto d = detail::reconstruction_deltas(state.encoder, state.decoder, batch);
        Scalar loss = d.loss;
        if (l2 > 0) {
          loss += l2 / 2 * (state.encoder.squaredNorm() + state.decoder.squaredNorm());
          state.encoder *= Scalar(1) - lr * l2;
          state.decoder *= Scalar(1) - lr * l2;
        }
        // Same update as subtracting lr * reconstruction_gradient(), applied
        // in place.
        const auto encoder_lr = lr * static_cast<Scalar>(cfg.encoder_lr_scale);
        state.encoder.noalias() -= encoder_lr * d.delta_hidden * batch.transpose();
        state.decoder.noalias() -= lr * d.delta_out * d.hidden.transpose();
        return loss;
      });
  detail::check_history(state.loss_history, "pretrain_layer");
  return state;
}

/// Trains the C x Q class layer on fixed features by softmax cross-entropy.
template <typename Scalar>
struct HeadTrainResult {
  Matrix<Scalar> weights;
  std::vector<double> loss_history;
};

template <typename Scalar>
HeadTrainResult<Scalar> train_head(const Matrix<Scalar>& features, std::span<const int> labels,
                                   Index classes, const TrainConfig& cfg) {
  cfg.validate();
  if (features.cols() < 1) throw std::invalid_argument("train_head: empty feature set");
  if (classes < 1) throw std::invalid_argument("train_head: need at least one class");
  detail::check_labels(labels, features.cols(), classes);

  HeadTrainResult<Scalar> out;
  out.weights = init_weights<Scalar>(classes, features.rows(),
                                     static_cast<Scalar>(cfg.weight_init_scale),
                                     derive_seed(cfg.rng_seed, 1));
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto l2 = static_cast<Scalar>(cfg.l2_penalty);
  std::vector<int> batch_labels;
  out.loss_history = detail::run_sgd(
      features.cols(), cfg, derive_seed(cfg.rng_seed, 3), [&](std::span<const Index> cols) {
        const Matrix<Scalar> batch = detail::gather_columns(features, cols);
        batch_labels.clear();
        for (Index c : cols) batch_labels.push_back(labels[std::size_t(c)]);
        const auto g = cross_entropy_gradient<Scalar>(out.weights, batch, batch_labels, l2);
        out.weights -= lr * g.weights;
        return g.loss;
      });
  detail::check_history(out.loss_history, "train_head");
  return out;
}

/// Per-stage settings. The three objectives live on very different scales
/// (tens of thousands of reconstructed pixels vs. ten features), so each
/// stage carries its own step size and epoch count. The defaults are tuned
/// for the 256x128 synthetic benchmark: layer 1 starts near zero and moves
/// its encoder slowly so the codes keep the image's low-frequency structure,
/// and the ten-feature head needs many cheap epochs to separate classes
/// without a bias term.
struct StackedTrainConfig {
  TrainConfig layer1{.learning_rate = 0.003, .epochs = 200, .batch_size = 10,
                     .weight_init_scale = 1e-4, .rng_seed = 11, .l2_penalty = 0.0,
                     .encoder_lr_scale = 0.001};
  TrainConfig layer2{.learning_rate = 0.1, .epochs = 200, .batch_size = 10,
                     .weight_init_scale = 0.05, .rng_seed = 12, .l2_penalty = 0.0,
                     .encoder_lr_scale = 0.01};
  TrainConfig head{.learning_rate = 2.0, .epochs = 500000, .batch_size = 10,
                   .weight_init_scale = 0.05, .rng_seed = 13, .l2_penalty = 0.0};

  void validate() const {
    layer1.validate();
    layer2.validate();
    head.validate();
  }
};

template <typename Scalar>
struct StackedTrainResult {
  NetworkParams<Scalar> params;
  std::vector<double> layer1_loss;
  std::vector<double> layer2_loss;
  std::vector<double> head_loss;
};

/// Greedy layer-wise training: layer 1 reconstructs the images, layer 2
/// reconstructs the frozen layer-1 codes, and the class layer is fit on the
/// frozen layer-2 codes. Decoders are discarded; there is no joint
/// fine-tuning afterwards.
template <typename Scalar>
StackedTrainResult<Scalar> train_stacked(const Matrix<Scalar>& images, std::span<const int> labels,
                                         const NetworkDims& dims, const StackedTrainConfig& cfg) {
  dims.validate();
  cfg.validate();
  if (images.rows() != dims.input)
    throw std::invalid_argument("train_stacked: images have " + std::to_string(images.rows()) +
                                " pixels, network expects " + std::to_string(dims.input));
  detail::check_labels(labels, images.cols(), dims.classes);
  for (Index c = 0; c < dims.classes; ++c)
    if (std::find(labels.begin(), labels.end(), int(c)) == labels.end())
      throw std::invalid_argument("train_stacked: no training example for class " +
                                  std::to_string(c));

  StackedTrainResult<Scalar> out;
  auto layer1 = pretrain_layer(images, dims.hidden1, cfg.layer1);
  const Matrix<Scalar> codes1 = sigmoid(layer1.encoder * images);
  auto layer2 = pretrain_layer(codes1, dims.hidden2, cfg.layer2);
  const Matrix<Scalar> codes2 = sigmoid(layer2.encoder * codes1);
  auto head = train_head(codes2, labels, dims.classes, cfg.head);

  out.layer1_loss = std::move(layer1.loss_history);
  out.layer2_loss = std::move(layer2.loss_history);
  out.head_loss = std::move(head.loss_history);
  out.params = NetworkParams<Scalar>(std::move(layer1.encoder), std::move(layer2.encoder),
                                     std::move(head.weights));
  return out;
}

}  // namespace massloc
