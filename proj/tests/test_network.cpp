#include "massloc/network.hpp"
#include "massloc/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace massloc;

namespace {

Matrix<double> random_matrix(Index rows, Index cols, double scale, Rng& rng) {
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

NetworkParams<double> random_net(const NetworkDims& d, Rng& rng, double scale = 2.0) {
  return {random_matrix(d.hidden1, d.input, scale, rng), random_matrix(d.hidden2, d.hidden1, scale, rng),
          random_matrix(d.classes, d.hidden2, scale, rng)};
}

Vector<double> random_input(Index n, Rng& rng) {
  Vector<double> x(n);
  for (Index i = 0; i < n; ++i) x(i) = rng.uniform();
  return x;
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("sigmoid values, symmetry and range") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      const double a = rng.uniform(-50, 50);
      CHECK(sigmoid(-a) == doctest::Approx(1.0 - sigmoid(a)).epsilon(1e-12));
    }
    CHECK(std::isfinite(sigmoid(1000.0)));
    CHECK(std::isfinite(sigmoid(-1000.0)));
    CHECK(sigmoid(-1000.0) >= 0.0);
    CHECK(sigmoid(30.0) < 1.0);
    CHECK(sigmoid(-30.0) > 0.0);
    CHECK(std::isnan(sigmoid(std::nan(""))));
  }

  TEST_CASE("softmax examples and shift invariance") {
    const auto p = softmax(Vector<double>{{0.0, 0.0}});
    CHECK(p(0) == 0.5);
    CHECK(p(1) == 0.5);
    const auto q = softmax(Vector<double>{{std::log(1.0), std::log(3.0)}});
    CHECK(q(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(q(1) == doctest::Approx(0.75).epsilon(1e-15));

    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      Vector<double> z(4);
      for (Index k = 0; k < 4; ++k) z(k) = rng.uniform(-20, 20);
      const double c = rng.uniform(-100, 100);
      const auto a = softmax(z);
      const auto b = softmax((z.array() + c).matrix().eval());
      CHECK(std::abs(a.sum() - 1.0) <= 1e-12);
      CHECK((a.array() > 0).all());
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const auto big = softmax(Vector<double>{{1000.0, 999.0}});
    CHECK(std::isfinite(big(0)));
  }

  TEST_CASE("argmax ties go to the lowest index") {
    CHECK(argmax(Vector<double>{{1.0, 3.0, 3.0}}) == 1);
    CHECK(argmax(Vector<double>{{2.0, 2.0}}) == 0);
    CHECK_THROWS(argmax(Vector<double>(0)));
  }

  TEST_CASE("dims must satisfy J > R > Q > C") {
    CHECK_NOTHROW(NetworkDims{32768, 100, 10, 2}.validate());
    CHECK_THROWS_AS(NetworkDims({64, 100, 10, 2}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(NetworkDims({8, 4, 4, 2}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(NetworkDims({8, 4, 2, 0}).validate(), std::invalid_argument);
  }

  TEST_CASE("params reject non-finite weights and broken chaining") {
    Matrix<double> w1 = Matrix<double>::Zero(3, 4);
    const Matrix<double> w2 = Matrix<double>::Zero(2, 3);
    const Matrix<double> w3 = Matrix<double>::Zero(1, 2);
    CHECK_NOTHROW(NetworkParams<double>(w1, w2, w3));
    CHECK_THROWS_AS(NetworkParams<double>(w1, Matrix<double>::Zero(2, 2), w3), std::invalid_argument);
    w1(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(NetworkParams<double>(w1, w2, w3), std::invalid_argument);
  }

  TEST_CASE("zero network gives flat activations and class 0") {
    const auto net = NetworkParams<double>::zeros({6, 4, 3, 2});
    Rng rng(3);
    const auto t = forward(random_input(6, rng), net);
    CHECK((t.h1.array() == 0.5).all());
    CHECK((t.h2.array() == 0.5).all());
    CHECK((t.z.array() == 0.0).all());
    CHECK(t.probabilities(0) == 0.5);
    CHECK(t.probabilities(1) == 0.5);
    CHECK(t.predicted_class == 0);

    const auto c = classify(Image<double>(3, 2, 0.3), net);
    CHECK(c.label == 0);
    CHECK(c.probability == 0.5);
  }

  TEST_CASE("forward matches the explicit-loop oracle") {
    Rng rng(4);
    const NetworkDims d{5, 4, 3, 2};
    for (int trial = 0; trial < 200; ++trial) {
      const auto net = random_net(d, rng);
      const auto x = random_input(5, rng);
      const auto t = forward(x, net);
      const auto o = oracle::forward({x.data(), x.data() + x.size()}, net);
      for (Index r = 0; r < 4; ++r) CHECK(std::abs(t.h1(r) - o.h1[std::size_t(r)]) <= 1e-12);
      for (Index q = 0; q < 3; ++q) CHECK(std::abs(t.h2(q) - o.h2[std::size_t(q)]) <= 1e-12);
      for (Index c = 0; c < 2; ++c) {
        CHECK(std::abs(t.z(c) - o.z[std::size_t(c)]) <= 1e-12);
        CHECK(std::abs(t.probabilities(c) - o.p[std::size_t(c)]) <= 1e-12);
      }
      CHECK(t.predicted_class == o.c);
    }
  }

  TEST_CASE("all-zero image goes through the oracle too") {
    Rng rng(5);
    const auto net = random_net({6, 4, 3, 2}, rng);
    const Image<double> img(3, 2, 0.0);
    const auto o = oracle::forward(std::vector<double>(6, 0.0), net);
    const auto c = classify(img, net);
    CHECK(c.label == o.c);
    CHECK(c.probability == doctest::Approx(o.p[std::size_t(o.c)]).epsilon(1e-12));
  }

  TEST_CASE("trace invariants hold on random instances") {
    Rng rng(6);
    for (int trial = 0; trial < 300; ++trial) {
      const Index c = 2, q = rng.uniform_int(3, 4), r = rng.uniform_int(q + 1, 8),
                  j = rng.uniform_int(r + 1, 16);
      const auto net = random_net({j, r, q, c}, rng, 3.0);
      const auto t = forward(random_input(j, rng), net);
      CHECK((t.h1.array() > 0).all());
      CHECK((t.h1.array() < 1).all());
      CHECK((t.h2.array() > 0).all());
      CHECK((t.h2.array() < 1).all());
      CHECK(std::abs(t.probabilities.sum() - 1.0) <= 1e-12);
      CHECK(t.predicted_class == argmax(t.probabilities));
    }
  }

  TEST_CASE("the output layer is linear") {
    Rng rng(7);
    const NetworkDims d{8, 4, 3, 2};
    auto base = random_net(d, rng);
    Matrix<double> w3 = Matrix<double>::Identity(2, 3);
    const NetworkParams<double> net(base.w1(), base.w2(), w3);
    const auto t = forward(random_input(8, rng), net);
    CHECK(t.z(0) == t.h2(0));
    CHECK(t.z(1) == t.h2(1));
  }

  TEST_CASE("positive scaling of W3 keeps the prediction") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
      const auto net = random_net({8, 4, 3, 2}, rng);
      const double alpha = rng.uniform(0.01, 100.0);
      const NetworkParams<double> scaled(net.w1(), net.w2(), (alpha * net.w3()).eval());
      const auto x = random_input(8, rng);
      CHECK(forward(x, net).predicted_class == forward(x, scaled).predicted_class);
    }
  }

  TEST_CASE("forward and classify reject mismatched inputs") {
    const auto net = NetworkParams<double>::zeros({6, 4, 3, 2});
    CHECK_THROWS_AS(forward(Vector<double>::Zero(5), net), std::invalid_argument);
    CHECK_THROWS_AS(classify(Image<double>(4, 2, 0.0), net), std::invalid_argument);
  }

  TEST_CASE("model files round-trip exactly") {
    Rng rng(9);
    const auto net = random_net({12, 5, 3, 2}, rng);
    const auto bytes = serialize_model(net);
    CHECK(bytes.size() == 4 * 8 + (5 * 12 + 3 * 5 + 2 * 3) * 8);
    CHECK(bytes[0] == 12);  // J, little-endian
    CHECK(deserialize_model(bytes) == net);
    auto cut = bytes;
    cut.pop_back();
    CHECK_THROWS(deserialize_model(cut));
  }
}
