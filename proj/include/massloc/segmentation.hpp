#pragma once

#include "massloc/image.hpp"

namespace massloc {

struct RegionGrowConfig {
  double intensity_tolerance = 0.1;
  int connectivity = 8;  // 4 or 8
  double max_region_fraction = 0.5;

  void validate() const;
};

/// Inclusive pixel bounds.
struct BoundingBox {
  int min_col = 0;
  int min_row = 0;
  int max_col = 0;
  int max_row = 0;

  int width() const { return max_col - min_col + 1; }
  int height() const { return max_row - min_row + 1; }
  long area() const { return long(width()) * height(); }
  bool contains(PixelCoord p) const {
    return p.col >= min_col && p.col <= max_col && p.row >= min_row && p.row <= max_row;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct RoiResult {
  BinaryMask mask;
  BoundingBox bbox;
  SeedPoint seed;
  bool truncated = false;  // stopped by the size cap, not by the tolerance
};

BoundingBox bbox_of(const BinaryMask& mask);

/// Intersection over union of two boxes, in [0, 1].
double bbox_iou(const BoundingBox& a, const BoundingBox& b);

/// Seeded region growing. A neighbour joins when it lies within
/// `intensity_tolerance` of the current region mean; the mean is updated after
/// every admission. Visits are FIFO with neighbours enumerated row-major, so the
/// result is fully determined by the inputs. Rejected pixels are re-tested when
/// reached again from a later region pixel.
RoiResult region_grow(const Image<double>& img, SeedPoint seed, const RegionGrowConfig& cfg);

}  // namespace massloc
