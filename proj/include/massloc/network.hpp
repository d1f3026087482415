#pragma once

#include "massloc/image.hpp"

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace massloc {

/// Class index convention used throughout.
inline constexpr int kNormalClass = 0;
inline constexpr int kAbnormalClass = 1;

/// Layer widths: input (J), hidden layer 1 (R), hidden layer 2 (Q), classes (C).
struct NetworkDims {
  Index input = 0;
  Index hidden1 = 0;
  Index hidden2 = 0;
  Index classes = 0;

  friend bool operator==(const NetworkDims&, const NetworkDims&) = default;

  /// Throws std::invalid_argument unless input > hidden1 > hidden2 > classes >= 1.
  void validate() const {
    if (classes < 1 || !(input > hidden1 && hidden1 > hidden2 && hidden2 > classes))
      throw std::invalid_argument("network dims must satisfy J > R > Q > C >= 1, got (" +
                                  std::to_string(input) + ", " + std::to_string(hidden1) + ", " +
                                  std::to_string(hidden2) + ", " + std::to_string(classes) + ")");
  }
};

/// Index of the largest element; ties resolve to the lowest index.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& v) {
  if (v.size() == 0) throw std::invalid_argument("argmax of empty vector");
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

/// exp(a) / (exp(a) + 1), evaluated without overflow for large |a|.
template <std::floating_point Scalar>
Scalar sigmoid(Scalar a) {
  if (a >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-a));
  const Scalar e = std::exp(a);
  return e / (e + Scalar(1));
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  return a.unaryExpr([](Scalar v) { return sigmoid(v); });
}

/// Max-shifted softmax over a vector of logits.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  if (z.size() == 0) throw std::invalid_argument("softmax of empty vector");
  Vector<Scalar> p = (z.array() - z.maxCoeff()).exp().matrix();
  p /= p.sum();
  return p;
}

/// Column-wise softmax of a C x B logit matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_columns(const Eigen::MatrixBase<Derived>& z) {
  Matrix<typename Derived::Scalar> p =
      (z.rowwise() - z.colwise().maxCoeff()).array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

/// Bias-free stacked encoder with a linear class layer. There are no bias
/// vectors anywhere; every activation is a pure weighted sum of the layer
/// below, so each input pixel's influence is the product weight * intensity.
template <typename Scalar>
class NetworkParams {
 public:
  NetworkParams() = default;

  NetworkParams(Matrix<Scalar> w1, Matrix<Scalar> w2, Matrix<Scalar> w3)
      : w1_(std::move(w1)), w2_(std::move(w2)), w3_(std::move(w3)) {
    dims().validate();
    if (w2_.cols() != w1_.rows() || w3_.cols() != w2_.rows())
      throw std::invalid_argument("network weight shapes do not chain");
    if (!w1_.allFinite() || !w2_.allFinite() || !w3_.allFinite())
      throw std::invalid_argument("network weights must be finite");
  }

  /// All-zero weights of the given shape.
  static NetworkParams zeros(const NetworkDims& d) {
    d.validate();
    return NetworkParams(Matrix<Scalar>::Zero(d.hidden1, d.input),
                         Matrix<Scalar>::Zero(d.hidden2, d.hidden1),
                         Matrix<Scalar>::Zero(d.classes, d.hidden2));
  }

  NetworkDims dims() const { return {w1_.cols(), w1_.rows(), w2_.rows(), w3_.rows()}; }

  /// R x J
  const Matrix<Scalar>& w1() const { return w1_; }
  /// Q x R
  const Matrix<Scalar>& w2() const { return w2_; }
  /// C x Q
  const Matrix<Scalar>& w3() const { return w3_; }

  friend bool operator==(const NetworkParams& a, const NetworkParams& b) {
    return a.dims() == b.dims() && a.w1_ == b.w1_ && a.w2_ == b.w2_ && a.w3_ == b.w3_;
  }

 private:
  Matrix<Scalar> w1_, w2_, w3_;
};

template <typename Scalar>
struct ActivationTrace {
  Vector<Scalar> x;
  Vector<Scalar> h1;
  Vector<Scalar> h2;
  /// Linear class scores; the softmax is the only output nonlinearity.
  Vector<Scalar> z;
  Vector<Scalar> probabilities;
  Index predicted_class = 0;
};

template <typename Scalar, typename Derived>
ActivationTrace<Scalar> forward(const Eigen::MatrixBase<Derived>& x,
                                const NetworkParams<Scalar>& params) {
  if (x.size() != params.dims().input)
    throw std::invalid_argument("forward: input length " + std::to_string(x.size()) +
                                " does not match network input " +
                                std::to_string(params.dims().input));
  ActivationTrace<Scalar> t;
  t.x = x;
  t.h1 = sigmoid(params.w1() * t.x);
  t.h2 = sigmoid(params.w2() * t.h1);
  t.z = params.w3() * t.h2;
  t.probabilities = softmax(t.z);
  t.predicted_class = argmax(t.probabilities);
  return t;
}

struct Classification {
  Index label = 0;
  double probability = 0.0;
};

template <typename Scalar>
Classification classify(const Image<Scalar>& img, const NetworkParams<Scalar>& params) {
  if (img.size() != params.dims().input)
    throw std::invalid_argument("classify: image has " + std::to_string(img.size()) +
                                " pixels, network expects " + std::to_string(params.dims().input));
  const auto trace = forward(flatten(img), params);
  return {trace.predicted_class, static_cast<double>(trace.probabilities(trace.predicted_class))};
}

// Model file: four little-endian uint64 dims (J, R, Q, C) followed by W1,
// W2, W3 as row-major little-endian float64.
std::vector<std::uint8_t> serialize_model(const NetworkParams<double>& params);
NetworkParams<double> deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::string& path, const NetworkParams<double>& params);
NetworkParams<double> load_model(const std::string& path);

}  // namespace massloc
