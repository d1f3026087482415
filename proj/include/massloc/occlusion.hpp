#pragma once

#include "massloc/image.hpp"
#include "massloc/network.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace massloc {

struct OcclusionConfig {
  int patch_size = 16;
  int stride = 8;
  double fill_value = 0.0;

  void validate() const {
    if (patch_size < 1) throw std::invalid_argument("occlusion.patch_size must be >= 1");
    if (stride < 1 || stride > patch_size)
      throw std::invalid_argument("occlusion.stride must lie in [1, patch_size]");
    if (!(fill_value >= 0.0 && fill_value <= 1.0))
      throw std::invalid_argument("occlusion.fill_value must lie in [0, 1]");
  }
};

/// Placement of occluding patches: cell (gr, gc) covers rows
/// [gr*stride, gr*stride + patch) and columns [gc*stride, gc*stride + patch).
struct OcclusionGrid {
  Index patch = 0;
  Index stride = 0;
  Index rows = 0;
  Index cols = 0;

  static OcclusionGrid fit(Index width, Index height, const OcclusionConfig& cfg) {
    cfg.validate();
    if (cfg.patch_size > width || cfg.patch_size > height)
      throw std::invalid_argument("occlusion: patch of " + std::to_string(cfg.patch_size) +
                                  " px does not fit a " + std::to_string(width) + "x" +
                                  std::to_string(height) + " image");
    return {cfg.patch_size, cfg.stride, (height - cfg.patch_size) / cfg.stride + 1,
            (width - cfg.patch_size) / cfg.stride + 1};
  }

  Index cells() const { return rows * cols; }
  PixelCoord cell_origin(Index gr, Index gc) const {
    return {int(gc * stride), int(gr * stride)};
  }
  PixelCoord cell_centre(Index gr, Index gc) const {
    const auto o = cell_origin(gr, gc);
    return {int(o.col + (patch - 1) / 2), int(o.row + (patch - 1) / 2)};
  }
};

template <typename Scalar>
struct OcclusionMap {
  OcclusionGrid grid;
  Matrix<Scalar> heatmap;  // grid.rows x grid.cols, P_original - P_occluded
  Index predicted_class = 0;
  double probability = 0.0;  // P of the predicted class
  Index target_class = 0;    // class whose probability drop is mapped
  Index forward_passes = 0;
};

/// Drop in the originally predicted class probability (or `target_class`, if
/// given) when each grid cell is replaced by `fill_value`. Only the patch
/// columns of W1 see a changed input, so each occluded layer-1 pre-activation
/// is the unoccluded one minus the patch's contribution; the rest of the
/// network is evaluated for all cells as one batch.
template <typename Scalar>
OcclusionMap<Scalar> occlusion_map(const Image<Scalar>& img, const NetworkParams<Scalar>& params,
                                   const OcclusionConfig& cfg,
                                   std::optional<Index> target_class = std::nullopt) {
  if (img.size() != params.dims().input)
    throw std::invalid_argument("occlusion_map: image has " + std::to_string(img.size()) +
                                " pixels, network expects " + std::to_string(params.dims().input));
  OcclusionMap<Scalar> out;
  out.grid = OcclusionGrid::fit(img.width(), img.height(), cfg);
  const auto& g = out.grid;
  const Vector<Scalar> x = flatten(img);
  const Vector<Scalar> a1 = params.w1() * x;
  const auto base = forward(x, params);
  out.predicted_class = base.predicted_class;
  out.probability = double(base.probabilities(base.predicted_class));
  out.target_class = target_class.value_or(base.predicted_class);
  if (out.target_class < 0 || out.target_class >= params.dims().classes)
    throw std::invalid_argument("occlusion_map: class index out of range");

  const Scalar fill = Scalar(cfg.fill_value);
  Matrix<Scalar> pre(params.dims().hidden1, g.cells());
  for (Index gr = 0; gr < g.rows; ++gr)
    for (Index gc = 0; gc < g.cols; ++gc) {
      const PixelCoord o = g.cell_origin(gr, gc);
      auto col = pre.col(gr * g.cols + gc);
      col = a1;
      for (Index r = 0; r < g.patch; ++r) {
        const Index start = flat_index({o.col, int(o.row + r)}, img.width());
        col.noalias() -= params.w1().middleCols(start, g.patch) *
                         (x.segment(start, g.patch).array() - fill).matrix();
      }
    }
  const Matrix<Scalar> h1 = sigmoid(pre);
  const Matrix<Scalar> h2 = sigmoid(params.w2() * h1);
  const Matrix<Scalar> p = softmax_columns(params.w3() * h2);

  out.heatmap.resize(g.rows, g.cols);
  for (Index k = 0; k < g.cells(); ++k)
    out.heatmap(k / g.cols, k % g.cols) =
        base.probabilities(out.target_class) - p(out.target_class, k);
  out.forward_passes = g.cells() + 1;
  return out;
}

/// Centre pixel of the highest heatmap cell; ties go to the lowest row-major cell.
template <typename Derived>
SeedPoint occlusion_seed(const Eigen::MatrixBase<Derived>& heatmap, const OcclusionGrid& grid) {
  if (heatmap.size() == 0) throw std::invalid_argument("occlusion_seed: empty heatmap");
  if (heatmap.rows() != grid.rows || heatmap.cols() != grid.cols)
    throw std::invalid_argument("occlusion_seed: heatmap does not match the grid");
  Index best_r = 0, best_c = 0;
  for (Index r = 0; r < heatmap.rows(); ++r)
    for (Index c = 0; c < heatmap.cols(); ++c)
      if (heatmap(r, c) > heatmap(best_r, best_c)) {
        best_r = r;
        best_c = c;
      }
  return grid.cell_centre(best_r, best_c);
}

/// Heatmap rescaled to [0, 1] for viewing; a flat map renders black.
template <typename Derived>
Image<double> heatmap_image(const Eigen::MatrixBase<Derived>& heatmap) {
  const double lo = double(heatmap.minCoeff());
  const double hi = double(heatmap.maxCoeff());
  RowMajorMatrix<double> px = heatmap.template cast<double>();
  if (hi > lo)
    px = (px.array() - lo) / (hi - lo);
  else
    px.setZero();
  return Image<double>(std::move(px));
}

}  // namespace massloc
