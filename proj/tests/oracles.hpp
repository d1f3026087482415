#pragma once

// Independent reference implementations. Everything here uses plain loops and
// std containers on purpose, so a bug shared with the library is unlikely.

#include "massloc/image.hpp"
#include "massloc/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <set>
#include <vector>

namespace oracle {

using massloc::Index;
using massloc::PixelCoord;

struct Trace {
  std::vector<double> h1, h2, z, p;
  Index c = 0;
};

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline Trace forward(const std::vector<double>& x, const massloc::NetworkParams<double>& net) {
  const auto d = net.dims();
  Trace t;
  t.h1.assign(std::size_t(d.hidden1), 0.0);
  for (Index r = 0; r < d.hidden1; ++r) {
    double s = 0;
    for (Index j = 0; j < d.input; ++j) s += net.w1()(r, j) * x[std::size_t(j)];
    t.h1[std::size_t(r)] = sigmoid(s);
  }
  t.h2.assign(std::size_t(d.hidden2), 0.0);
  for (Index q = 0; q < d.hidden2; ++q) {
    double s = 0;
    for (Index r = 0; r < d.hidden1; ++r) s += net.w2()(q, r) * t.h1[std::size_t(r)];
    t.h2[std::size_t(q)] = sigmoid(s);
  }
  t.z.assign(std::size_t(d.classes), 0.0);
  for (Index c = 0; c < d.classes; ++c)
    for (Index q = 0; q < d.hidden2; ++q) t.z[std::size_t(c)] += net.w3()(c, q) * t.h2[std::size_t(q)];
  double denom = 0;
  for (double z : t.z) denom += std::exp(z);
  for (double z : t.z) t.p.push_back(std::exp(z) / denom);
  for (std::size_t c = 1; c < t.p.size(); ++c)
    if (t.p[c] > t.p[std::size_t(t.c)]) t.c = Index(c);
  return t;
}

/// First index holding the maximum.
inline Index first_max(const std::vector<double>& v) {
  Index best = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > v[std::size_t(best)]) best = Index(i);
  return best;
}

/// Pixel indices of the top `count` products, via a stable full sort.
inline std::vector<Index> top_pixels(const std::vector<double>& scores, std::size_t count) {
  std::vector<Index> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = Index(i);
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return scores[std::size_t(a)] > scores[std::size_t(b)];
  });
  idx.resize(count);
  return idx;
}

/// Connected components of the "within radius" graph, found by BFS over the
/// full adjacency matrix. Components are returned as sorted index sets.
inline std::vector<std::set<std::size_t>> linkage_components(const std::vector<PixelCoord>& pts,
                                                             double radius) {
  const std::size_t n = pts.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[i].col - pts[j].col, dy = pts[i].row - pts[j].row;
      adj[i][j] = std::sqrt(dx * dx + dy * dy) <= radius;
    }
  std::vector<int> comp(n, -1);
  std::vector<std::set<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::set<std::size_t> members;
    std::deque<std::size_t> q{s};
    comp[s] = int(out.size());
    while (!q.empty()) {
      const auto u = q.front();
      q.pop_front();
      members.insert(u);
      for (std::size_t v = 0; v < n; ++v)
        if (adj[u][v] && comp[v] < 0) {
          comp[v] = int(out.size());
          q.push_back(v);
        }
    }
    out.push_back(members);
  }
  return out;
}

/// Quick-find union-find over every pair: each union relabels a whole class.
/// Returns a component label per point, labels numbered by first appearance.
inline std::vector<std::size_t> union_find_labels(const std::vector<PixelCoord>& pts, double radius) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[i].col - pts[j].col, dy = pts[i].row - pts[j].row;
      if (dx * dx + dy * dy > radius * radius || label[i] == label[j]) continue;
      const std::size_t from = label[j], to = label[i];
      for (auto& l : label)
        if (l == from) l = to;
    }
  std::vector<std::size_t> renamed(n, n), out(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (renamed[label[i]] == n) renamed[label[i]] = next++;
    out[i] = renamed[label[i]];
  }
  return out;
}

/// Pixels reachable from `seed` through pixels of exactly the seed's value.
inline std::set<std::pair<int, int>> flood_fill(const massloc::Image<double>& img, PixelCoord seed,
                                                int connectivity) {
  std::set<std::pair<int, int>> seen{{seed.row, seed.col}};
  std::deque<PixelCoord> q{seed};
  const double v = img.at(seed);
  while (!q.empty()) {
    const auto p = q.front();
    q.pop_front();
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if ((dr == 0 && dc == 0) || (connectivity == 4 && dr != 0 && dc != 0)) continue;
        const PixelCoord n{p.col + dc, p.row + dr};
        if (n.col < 0 || n.row < 0 || n.col >= img.width() || n.row >= img.height()) continue;
        if (img.at(n) != v || seen.count({n.row, n.col})) continue;
        seen.insert({n.row, n.col});
        q.push_back(n);
      }
  }
  return seen;
}

inline std::set<std::pair<int, int>> mask_pixels(const massloc::BinaryMask& m) {
  std::set<std::pair<int, int>> out;
  for (Index r = 0; r < m.height(); ++r)
    for (Index c = 0; c < m.width(); ++c)
      if (m(r, c)) out.insert({int(r), int(c)});
  return out;
}

}  // namespace oracle
