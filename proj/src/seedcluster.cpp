#include "massloc/seedcluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace massloc {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

PixelCoord medoid(const std::vector<PixelCoord>& members) {
  double mc = 0, mr = 0;
  for (const auto& p : members) {
    mc += p.col;
    mr += p.row;
  }
  mc /= double(members.size());
  mr /= double(members.size());
  PixelCoord best = members.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : members) {
    const double d = (p.col - mc) * (p.col - mc) + (p.row - mr) * (p.row - mr);
    if (d < best_d || (d == best_d && p < best)) {
      best = p;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

void ClusterConfig::validate() const {
  if (!(link_radius > 0.0)) throw std::invalid_argument("cluster.link_radius must be > 0");
  if (min_cluster_size < 1) throw std::invalid_argument("cluster.min_cluster_size must be >= 1");
}

std::vector<Cluster> cluster_coords(std::span<const PixelCoord> coords, const ClusterConfig& cfg,
                                    const Image<double>& img) {
  cfg.validate();
  if (coords.empty()) throw std::invalid_argument("cluster_coords: no coordinates");
  for (const auto& p : coords)
    if (!img.contains(p)) throw std::invalid_argument("cluster_coords: coordinate outside image");

  const std::size_t n = coords.size();
  const double r2 = cfg.link_radius * cfg.link_radius;
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dc = coords[i].col - coords[j].col;
      const double dr = coords[i].row - coords[j].row;
      if (dc * dc + dr * dr <= r2) sets.unite(i, j);
    }

  std::vector<std::vector<PixelCoord>> components;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = components.size();
      components.emplace_back();
    }
    components[slot[root]].push_back(coords[i]);
  }

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < components.size(); ++k)
    if (components[k].size() >= std::size_t(cfg.min_cluster_size)) kept.push_back(k);
  if (kept.empty()) {
    std::size_t largest = 0;
    for (std::size_t k = 1; k < components.size(); ++k)
      if (components[k].size() > components[largest].size()) largest = k;
    kept.push_back(largest);
  }

  std::vector<Cluster> out;
  out.reserve(kept.size());
  for (std::size_t k : kept) {
    Cluster c;
    c.members = std::move(components[k]);
    c.centre = medoid(c.members);
    c.centre_intensity = img.at(c.centre);
    out.push_back(std::move(c));
  }
  return out;
}

SeedPoint select_seed(std::span<const Cluster> clusters, const Image<double>& img) {
  if (clusters.empty()) throw std::invalid_argument("select_seed: no clusters");
  const Cluster* best = nullptr;
  double best_v = 0;
  for (const auto& c : clusters) {
    if (!img.contains(c.centre)) throw std::invalid_argument("select_seed: centre outside image");
    const double v = img.at(c.centre);
    if (!best || v > best_v ||
        (v == best_v && (c.members.size() > best->members.size() ||
                         (c.members.size() == best->members.size() && c.centre < best->centre)))) {
      best = &c;
      best_v = v;
    }
  }
  return best->centre;
}

}  // namespace massloc
