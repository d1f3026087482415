#include "massloc/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace massloc {

void RegionGrowConfig::validate() const {
  if (!(intensity_tolerance >= 0.0 && intensity_tolerance <= 1.0))
    throw std::invalid_argument("regiongrow.intensity_tolerance must lie in [0, 1]");
  if (connectivity != 4 && connectivity != 8)
    throw std::invalid_argument("regiongrow.connectivity must be 4 or 8");
  if (!(max_region_fraction > 0.0 && max_region_fraction <= 1.0))
    throw std::invalid_argument("regiongrow.max_region_fraction must lie in (0, 1]");
}

BoundingBox bbox_of(const BinaryMask& mask) {
  BoundingBox box{int(mask.width()), int(mask.height()), -1, -1};
  for (Index r = 0; r < mask.height(); ++r)
    for (Index c = 0; c < mask.width(); ++c)
      if (mask(r, c)) {
        box.min_col = std::min(box.min_col, int(c));
        box.min_row = std::min(box.min_row, int(r));
        box.max_col = std::max(box.max_col, int(c));
        box.max_row = std::max(box.max_row, int(r));
      }
  if (box.max_col < 0) throw std::invalid_argument("bbox_of: empty mask");
  return box;
}

double bbox_iou(const BoundingBox& a, const BoundingBox& b) {
  const int w = std::min(a.max_col, b.max_col) - std::max(a.min_col, b.min_col) + 1;
  const int h = std::min(a.max_row, b.max_row) - std::max(a.min_row, b.min_row) + 1;
  const long inter = (w > 0 && h > 0) ? long(w) * h : 0;
  return double(inter) / double(a.area() + b.area() - inter);
}

RoiResult region_grow(const Image<double>& img, SeedPoint seed, const RegionGrowConfig& cfg) {
  cfg.validate();
  if (!img.contains(seed)) throw std::invalid_argument("region_grow: seed outside image");

  const Index cap = std::max<Index>(
      1, Index(std::floor(cfg.max_region_fraction * double(img.size()))));

  RoiResult out;
  out.seed = seed;
  out.mask = BinaryMask(img.width(), img.height());
  out.mask.set(seed);
  double sum = img.at(seed);
  Index size = 1;

  std::deque<PixelCoord> queue{seed};
  while (!queue.empty() && !out.truncated) {
    const PixelCoord p = queue.front();
    queue.pop_front();
    for (int dr = -1; dr <= 1 && !out.truncated; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        if (cfg.connectivity == 4 && dr != 0 && dc != 0) continue;
        const PixelCoord n{p.col + dc, p.row + dr};
        if (!img.contains(n) || out.mask.at(n)) continue;
        if (std::abs(img.at(n) - sum / double(size)) > cfg.intensity_tolerance) continue;
        if (size == cap) {
          out.truncated = true;
          break;
        }
        out.mask.set(n);
        sum += img.at(n);
        ++size;
        queue.push_back(n);
      }
  }
  out.bbox = bbox_of(out.mask);
  return out;
}

}  // namespace massloc
