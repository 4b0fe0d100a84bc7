#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/contour.hpp"
#include "chfb/dataset.hpp"

namespace chfb {

double euclidean(Point p, Point q);

/// Largest pairwise distance between the two sets. Throws Degenerate on an
/// empty set.
double complete_linkage(std::span<const Point> a, std::span<const Point> b);

/// Leaves are clusters 0..n-1; merge k creates cluster n+k.
struct Merge {
  int a = 0;  ///< smaller of the two cluster ids
  int b = 0;
  double distance = 0.0;
  int size = 0;
  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::vector<Point> leaves;
  std::vector<Merge> merges;
};

/// Complete-linkage agglomeration. Among equal distances the pair whose
/// smallest member leaf is lowest wins, then the lowest second-cluster leaf.
/// Throws Degenerate with fewer than two points.
Dendrogram build_dendrogram(std::span<const Point> points);

struct ClusterCut {
  double threshold = 0.0;
  std::vector<std::vector<int>> clusters;  ///< leaf indices, ascending; clusters ordered by first leaf
  std::vector<Rect> boxes;                 ///< inclusive pixel bounds of each cluster
};

/// Clusters formed by the merges whose distance is strictly below threshold.
ClusterCut cut(const Dendrogram& d, double threshold);

/// Cuts inside the largest ratio between consecutive merge distances,
/// preferring the gap that leaves fewer clusters on ties. Lower distances
/// under one pixel count as one. Without a gap
/// above ratio 1 every leaf joins one cluster.
ClusterCut auto_cut(const Dendrogram& d);

/// Midpoints of adjacent pairs stepping at 0 degrees.
std::vector<Point> zero_gradient_points(const RefinedContour& rc);

nlohmann::json to_json(const Dendrogram& d);
Dendrogram dendrogram_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClusterCut& c);

}  // namespace chfb
