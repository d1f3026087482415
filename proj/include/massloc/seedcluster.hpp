#pragma once

#include "massloc/image.hpp"

#include <span>
#include <vector>

namespace massloc {

struct ClusterConfig {
  double link_radius = 10.0;
  int min_cluster_size = 3;

  void validate() const;
};

struct Cluster {
  std::vector<PixelCoord> members;  // input order
  PixelCoord centre;                // medoid: member nearest the centroid
  double centre_intensity = 0.0;
};

/// Single-linkage components under Euclidean distance <= link_radius.
/// Components smaller than min_cluster_size are dropped as outliers; if that
/// would drop everything, the largest component is kept instead. Clusters
/// are ordered by their first member's position in `coords`.
std::vector<Cluster> cluster_coords(std::span<const PixelCoord> coords, const ClusterConfig& cfg,
                                    const Image<double>& img);

/// Centre of the cluster whose centre pixel is brightest. Ties go to the
/// larger cluster, then to the lower row-major centre.
SeedPoint select_seed(std::span<const Cluster> clusters, const Image<double>& img);

}  // namespace massloc
