#include "chfb/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "chfb/error.hpp"

namespace chfb {

double euclidean(Point p, Point q) {
  const double dx = static_cast<double>(q.x) - p.x;
  const double dy = static_cast<double>(q.y) - p.y;
  return std::sqrt(dx * dx + dy * dy);
}

double complete_linkage(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::Degenerate, "complete linkage of an empty set");
  double best = 0.0;
  for (const auto& p : a) {
    for (const auto& q : b) best = std::max(best, euclidean(p, q));
  }
  return best;
}

Dendrogram build_dendrogram(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(ErrorCode::Degenerate, "a dendrogram needs at least two points");
  Dendrogram d;
  d.leaves.assign(points.begin(), points.end());

  // Active clusters in slot order; slot i starts as leaf i. Slots are
  // ordered by their smallest leaf, which survives every merge.
  std::vector<std::size_t> slots(n);
  std::iota(slots.begin(), slots.end(), 0);
  std::vector<int> cluster_id(n);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  std::vector<int> size(n, 1);
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = euclidean(points[i], points[j]);
  }

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t x = 0; x < slots.size(); ++x) {
      for (std::size_t y = x + 1; y < slots.size(); ++y) {
        const double v = dist[slots[x] * n + slots[y]];
        if (v < best) {
          best = v;
          bi = x;
          bj = y;
        }
      }
    }
    const std::size_t keep = slots[bi];
    const std::size_t drop = slots[bj];
    d.merges.push_back({std::min(cluster_id[keep], cluster_id[drop]), std::max(cluster_id[keep], cluster_id[drop]), best,
                        size[keep] + size[drop]});
    for (std::size_t s : slots) {
      if (s == keep || s == drop) continue;
      const double v = std::max(dist[keep * n + s], dist[drop * n + s]);
      dist[keep * n + s] = dist[s * n + keep] = v;
    }
    size[keep] += size[drop];
    cluster_id[keep] = static_cast<int>(n + step);
    slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return d;
}

ClusterCut cut(const Dendrogram& d, double threshold) {
  const std::size_t n = d.leaves.size();
  std::vector<int> parent(n + d.merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    const int node = static_cast<int>(n + k);
    if (m.distance < threshold) {
      parent[static_cast<std::size_t>(find(m.a))] = node;
      parent[static_cast<std::size_t>(find(m.b))] = node;
    }
  }
  ClusterCut out;
  out.threshold = threshold;
  std::vector<int> slot_of(parent.size(), -1);
  for (std::size_t i = 0; i < n; ++i) {
    const int root = find(static_cast<int>(i));
    int& slot = slot_of[static_cast<std::size_t>(root)];
    if (slot < 0) {
      slot = static_cast<int>(out.clusters.size());
      out.clusters.emplace_back();
      const Point p = d.leaves[i];
      out.boxes.push_back({p.x, p.y, p.x, p.y});
    }
    out.clusters[static_cast<std::size_t>(slot)].push_back(static_cast<int>(i));
    Rect& b = out.boxes[static_cast<std::size_t>(slot)];
    const Point p = d.leaves[i];
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return out;
}

ClusterCut auto_cut(const Dendrogram& d) {
  const auto& m = d.merges;
  if (m.empty()) return cut(d, 0.0);
  const double top = m.back().distance;
  if (m.size() < 2) return cut(d, top + 1.0);
  double best_ratio = 1.0;
  std::optional<std::size_t> best;
  // Walking from the top down makes the first maximum the one leaving
  // fewer clusters.
  for (std::size_t k = m.size() - 1; k > 0; --k) {
    const double lo = m[k - 1].distance;
    const double hi = m[k].distance;
    // Pixel points are at least one apart unless they coincide, so
    // duplicate merges at distance zero do not open an infinite gap.
    const double ratio = hi / std::max(lo, 1.0);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  if (!best) return cut(d, top + 1.0);
  return cut(d, 0.5 * (m[*best - 1].distance + m[*best].distance));
}

std::vector<Point> zero_gradient_points(const RefinedContour& rc) {
  std::vector<Point> out;
  for (std::size_t i = 1; i < rc.points.size(); ++i) {
    const Point a = rc.points[i - 1];
    const Point b = rc.points[i];
    if (step_angle(a, b) == Angle::Deg0) out.push_back({(a.x + b.x) / 2, a.y});
  }
  return out;
}

nlohmann::json to_json(const Dendrogram& d) {
  nlohmann::json leaves = nlohmann::json::array();
  for (const auto& p : d.leaves) leaves.push_back({p.x, p.y});
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : d.merges) merges.push_back({{"a", m.a}, {"b", m.b}, {"dist", m.distance}, {"size", m.size}});
  return {{"leaves", leaves}, {"merges", merges}};
}

Dendrogram dendrogram_from_json(const nlohmann::json& j) {
  try {
    Dendrogram d;
    for (const auto& p : j.at("leaves")) d.leaves.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    for (const auto& m : j.at("merges")) {
      d.merges.push_back({m.at("a").get<int>(), m.at("b").get<int>(), m.at("dist").get<double>(), m.value("size", 0)});
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("dendrogram JSON: ") + e.what());
  }
}

nlohmann::json to_json(const ClusterCut& c) {
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t i = 0; i < c.clusters.size(); ++i) {
    clusters.push_back({{"leaves", c.clusters[i]}, {"box", rect_to_json(c.boxes[i])}});
  }
  return {{"threshold", c.threshold}, {"clusters", clusters}};
}

}  // namespace chfb
