#include "massloc/occlusion.hpp"
#include "massloc/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace massloc;

namespace {

Matrix<double> random_matrix(Index rows, Index cols, Rng& rng) {
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return m;
}

NetworkParams<double> random_net(Index input, Rng& rng) {
  return {random_matrix(6, input, rng), random_matrix(3, 6, rng), random_matrix(2, 3, rng)};
}

Image<double> random_image(Index w, Index h, Rng& rng) {
  Image<double>::Pixels px(h, w);
  for (Index i = 0; i < px.size(); ++i) px.data()[i] = rng.uniform();
  return Image<double>(std::move(px));
}

}  // namespace

TEST_SUITE("occlusion") {
  TEST_CASE("grid size follows the floor formula") {
    const auto g = OcclusionGrid::fit(128, 256, {});
    CHECK(g.cols == (128 - 16) / 8 + 1);
    CHECK(g.rows == (256 - 16) / 8 + 1);
    const auto odd = OcclusionGrid::fit(21, 13, {5, 3, 0.0});
    CHECK(odd.cols == 6);
    CHECK(odd.rows == 3);
    CHECK(odd.cell_centre(1, 2) == PixelCoord{8, 5});
    CHECK_THROWS_AS(OcclusionGrid::fit(10, 20, {}), std::invalid_argument);
    CHECK_THROWS_AS(OcclusionGrid::fit(64, 64, {8, 9, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(OcclusionGrid::fit(64, 64, {8, 0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(OcclusionGrid::fit(64, 64, {0, 1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(OcclusionGrid::fit(64, 64, {8, 4, 1.5}), std::invalid_argument);
  }

  TEST_CASE("zero network gives a flat zero heatmap") {
    Rng rng(1);
    const auto net = NetworkParams<double>::zeros({256, 6, 3, 2});
    const auto m = occlusion_map(random_image(16, 16, rng), net, {4, 4, 0.0});
    CHECK(m.heatmap.rows() == 4);
    CHECK(m.heatmap.cols() == 4);
    CHECK((m.heatmap.array() == 0.0).all());
    CHECK(m.forward_passes == 17);
  }

  TEST_CASE("occluding with the existing value changes nothing") {
    Rng rng(2);
    const auto net = random_net(256, rng);
    Image<double>::Pixels px = random_image(16, 16, rng).pixels();
    px.block(4, 8, 4, 4).setConstant(0.3);
    const auto m = occlusion_map(Image<double>(px), net, {4, 4, 0.3});
    CHECK(m.heatmap(1, 2) == 0.0);
  }

  TEST_CASE("heatmap equals naive re-forwarding of each occluded image") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto net = random_net(256, rng);
      const auto img = random_image(16, 16, rng);
      const double fill = trial % 2 ? 0.0 : rng.uniform();
      const auto m = occlusion_map(img, net, {4, 4, fill});
      const auto base = oracle::forward({img.data().begin(), img.data().end()}, net);
      CHECK(m.predicted_class == base.c);
      CHECK(m.target_class == base.c);
      for (int gr = 0; gr < 4; ++gr)
        for (int gc = 0; gc < 4; ++gc) {
          std::vector<double> x(img.data().begin(), img.data().end());
          for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) x[std::size_t((gr * 4 + r) * 16 + gc * 4 + c)] = fill;
          const auto o = oracle::forward(x, net);
          const double expect = base.p[std::size_t(base.c)] - o.p[std::size_t(base.c)];
          CHECK(std::abs(m.heatmap(gr, gc) - expect) <= 1e-12);
        }
    }
  }

  TEST_CASE("target_class selects the mapped probability") {
    Rng rng(4);
    const auto net = random_net(256, rng);
    const auto img = random_image(16, 16, rng);
    const auto a = occlusion_map(img, net, {4, 4, 0.0}, Index(0));
    const auto b = occlusion_map(img, net, {4, 4, 0.0}, Index(1));
    // Two classes: the drops are mirror images.
    CHECK(((a.heatmap + b.heatmap).cwiseAbs().array() <= 1e-12).all());
    CHECK(b.target_class == 1);
    CHECK_THROWS_AS(occlusion_map(img, net, {4, 4, 0.0}, Index(2)), std::invalid_argument);
    CHECK_THROWS_AS(occlusion_map(random_image(8, 8, rng), net, {4, 4, 0.0}), std::invalid_argument);
  }

  TEST_CASE("occlusion_seed picks the first maximal cell centre") {
    const auto single = OcclusionGrid::fit(16, 16, {16, 8, 0.0});
    CHECK(occlusion_seed(Matrix<double>::Constant(1, 1, 0.2), single) == PixelCoord{7, 7});

    const auto g = OcclusionGrid::fit(32, 32, {8, 8, 0.0});
    Matrix<double> h = Matrix<double>::Zero(4, 4);
    h(2, 1) = 0.5;
    CHECK(occlusion_seed(h, g) == PixelCoord{11, 19});
    CHECK(occlusion_seed(Matrix<double>::Zero(4, 4), g) == PixelCoord{3, 3});

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      for (Index i = 0; i < h.size(); ++i) h.data()[i] = double(rng.uniform_int(0, 5));
      Index br = 0, bc = 0;
      for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 4; ++c)
          if (h(r, c) > h(br, bc)) {
            br = r;
            bc = c;
          }
      CHECK(occlusion_seed(h, g) == PixelCoord{int(bc * 8 + 3), int(br * 8 + 3)});
    }
    CHECK_THROWS_AS(occlusion_seed(Matrix<double>::Zero(3, 4), g), std::invalid_argument);
  }

  TEST_CASE("occlusion_map is pure") {
    Rng rng(6);
    const auto net = random_net(256, rng);
    const auto img = random_image(16, 16, rng);
    const auto a = occlusion_map(img, net, {8, 4, 0.0});
    const auto b = occlusion_map(img, net, {8, 4, 0.0});
    CHECK(a.heatmap == b.heatmap);
    CHECK(a.forward_passes == a.grid.cells() + 1);
  }

  TEST_CASE("heatmap_image rescales to the unit range") {
    Matrix<double> h(2, 2);
    h << -0.2, 0.0, 0.2, 0.6;
    const auto img = heatmap_image(h);
    CHECK(img(0, 0) == 0.0);
    CHECK(img(1, 1) == 1.0);
    CHECK(img(1, 0) == doctest::Approx(0.5));
    CHECK((heatmap_image(Matrix<double>::Constant(2, 3, 0.4)).pixels().array() == 0.0).all());
  }
}
