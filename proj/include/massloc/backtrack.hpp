#pragma once

#include "massloc/image.hpp"
#include "massloc/network.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace massloc {

template <typename Scalar>
struct SalientPixel {
  PixelCoord coord;
  Scalar score = 0;  // w_rj * x_j, signed
};

template <typename Scalar>
struct BacktrackResult {
  Index predicted_class = 0;
  double probability = 0.0;  // P of the predicted class
  Index class_used = 0;
  Index q_star = 0;
  Index r_star = 0;
  std::vector<SalientPixel<Scalar>> salient_pixels;  // descending score
};

/// Layer-2 neuron contributing most to class `c`: argmax_q W3[c,q] * h2[q].
template <typename Scalar>
Index backtrack_output(Index c, const ActivationTrace<Scalar>& trace,
                       const NetworkParams<Scalar>& params) {
  if (c < 0 || c >= params.dims().classes)
    throw std::invalid_argument("backtrack_output: class index out of range");
  return argmax((params.w3().row(c).transpose().array() * trace.h2.array()).eval());
}

/// Layer-1 neuron contributing most to layer-2 neuron `q`: argmax_r W2[q,r] * h1[r].
template <typename Scalar>
Index backtrack_hidden2(Index q, const ActivationTrace<Scalar>& trace,
                        const NetworkParams<Scalar>& params) {
  if (q < 0 || q >= params.dims().hidden2)
    throw std::invalid_argument("backtrack_hidden2: neuron index out of range");
  return argmax((params.w2().row(q).transpose().array() * trace.h1.array()).eval());
}

/// Top-`count` pixels by W1[r,j] * x_j, descending, ties to the lower index.
template <typename Scalar, typename Derived>
std::vector<SalientPixel<Scalar>> salient_pixels(Index r, const Eigen::MatrixBase<Derived>& x,
                                                 const NetworkParams<Scalar>& params, Index count,
                                                 Index width, Index height) {
  const Index n = width * height;
  if (x.size() != n || params.dims().input != n)
    throw std::invalid_argument("salient_pixels: image dimensions do not match the network");
  if (r < 0 || r >= params.dims().hidden1)
    throw std::invalid_argument("salient_pixels: neuron index out of range");
  if (count < 1 || count > n)
    throw std::invalid_argument("salient_pixels: count must lie in [1, " + std::to_string(n) + "]");

  const Vector<Scalar> scores = (params.w1().row(r).transpose().array() * x.array()).matrix();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  // (score desc, index asc) is a strict total order, so partial_sort gives
  // the same prefix a stable full sort would.
  std::partial_sort(order.begin(), order.begin() + count, order.end(), [&](Index a, Index b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });

  std::vector<SalientPixel<Scalar>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const Index j = order[static_cast<std::size_t>(k)];
    out.push_back({coord_of(j, width), scores(j)});
  }
  return out;
}

/// Greedy backtracking from the output layer to the salient input pixels.
/// Uses the predicted class unless `force_class` is given.
template <typename Scalar>
BacktrackResult<Scalar> run_backtrack(const Image<Scalar>& img, const NetworkParams<Scalar>& params,
                                      Index salient_count,
                                      std::optional<Index> force_class = std::nullopt) {
  if (img.size() != params.dims().input)
    throw std::invalid_argument("run_backtrack: image has " + std::to_string(img.size()) +
                                " pixels, network expects " + std::to_string(params.dims().input));
  const auto trace = forward(flatten(img), params);
  BacktrackResult<Scalar> out;
  out.predicted_class = trace.predicted_class;
  out.probability = static_cast<double>(trace.probabilities(trace.predicted_class));
  out.class_used = force_class.value_or(trace.predicted_class);
  out.q_star = backtrack_output(out.class_used, trace, params);
  out.r_star = backtrack_hidden2(out.q_star, trace, params);
  out.salient_pixels =
      salient_pixels(out.r_star, trace.x, params, salient_count, img.width(), img.height());
  return out;
}

}  // namespace massloc
