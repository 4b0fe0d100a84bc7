#include "chfb/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chfb/error.hpp"

namespace chfb {

std::string_view to_string(Region r) {
  switch (r) {
    case Region::Knee: return "knee";
    case Region::Leg: return "leg";
    case Region::Foot: return "foot";
  }
  return "leg";
}

Region region_from_string(std::string_view s) {
  if (s == "knee") return Region::Knee;
  if (s == "leg") return Region::Leg;
  if (s == "foot") return Region::Foot;
  throw Error(ErrorCode::Parse, "unknown region: " + std::string(s));
}

GradientDensity build_density(std::span<const RefinedContour> contours) {
  GradientDensity density;
  for (const auto& rc : contours) {
    for (std::size_t i = 1; i < rc.points.size(); ++i) {
      const Point a = rc.points[i - 1];
      const Point b = rc.points[i];
      // Both rows are non-negative, so integer division is floor.
      density.at(step_angle(a, b)).push_back((a.y + b.y) / 2);
    }
  }
  return density;
}

std::vector<YCluster> cluster_zero_gradient_rows(const GradientDensity& density, int gap) {
  if (gap < 1) throw Error(ErrorCode::InvalidInput, "cluster gap must be >= 1");
  std::vector<int> ys = density.at(Angle::Deg0);
  std::sort(ys.begin(), ys.end());
  std::vector<YCluster> out;
  for (int y : ys) {
    if (out.empty() || y - out.back().y_end > gap) {
      out.push_back({y, y, 1});
    } else {
      out.back().y_end = y;
      ++out.back().size;
    }
  }
  return out;
}

int cluster_gap_rows(int height, const SegmentationConfig& cfg) {
  return std::max(cfg.min_cluster_gap, static_cast<int>(std::floor(cfg.cluster_gap_frac * height)));
}

double knee_temp_threshold(int height) { return 2.0 * height / 10.0; }

double foot_temp_threshold(int height) { return 6.0 * height / 10.0; }

std::optional<int> knee_threshold(std::span<const YCluster> clusters, int height, std::size_t min_cluster_size) {
  if (height < 1) throw Error(ErrorCode::InvalidInput, "image height must be >= 1");
  const double t_temp = knee_temp_threshold(height);
  const YCluster* candidate = nullptr;
  for (const auto& c : clusters) {
    if (c.y_end < t_temp && (candidate == nullptr || c.y_end > candidate->y_end)) candidate = &c;
  }
  if (candidate == nullptr) return std::nullopt;
  if (candidate->size < min_cluster_size) return std::nullopt;
  return candidate->y_end + 1;
}

std::optional<int> foot_threshold(std::span<const YCluster> clusters, int height, const SegmentationConfig& cfg) {
  if (height < 1) throw Error(ErrorCode::InvalidInput, "image height must be >= 1");
  std::vector<YCluster> sorted(clusters.begin(), clusters.end());
  std::sort(sorted.begin(), sorted.end(), [](const YCluster& a, const YCluster& b) { return a.y_start < b.y_start; });

  const double t_temp = foot_temp_threshold(height);
  std::optional<int> t_large;
  std::optional<int> t_small;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const int upper = sorted[i - 1].y_end;
    const int lower = sorted[i].y_start;
    if (lower <= t_temp) continue;
    const int width = lower - upper;
    const int mid = (upper + lower) / 2;
    if (!t_large && width > cfg.large_gap_frac * height) t_large = mid;
    if (!t_small && width > cfg.small_gap_frac * height && mid >= t_temp) t_small = mid;
  }
  if (t_large && *t_large >= t_temp) return t_large;
  return t_small;
}

RegionThresholds compute_thresholds(std::span<const RefinedContour> contours, int height,
                                    const SegmentationConfig& cfg) {
  const auto density = build_density(contours);
  const auto clusters = cluster_zero_gradient_rows(density, cluster_gap_rows(height, cfg));
  RegionThresholds t;
  t.height = height;
  t.t_knee = knee_threshold(clusters, height, cfg.knee_min_cluster_size);
  t.t_foot = foot_threshold(clusters, height, cfg);
  return t;
}

Region assign_region(const RefinedContour& rc, const RegionThresholds& t) {
  const int top = std::min(rc.start().y, rc.end().y);
  const int bottom = std::max(rc.start().y, rc.end().y);
  if (t.t_knee && top < *t.t_knee) return Region::Knee;
  if (t.t_foot && bottom > *t.t_foot) return Region::Foot;
  return Region::Leg;
}

nlohmann::json regions_to_json(const RegionThresholds& t, std::span<const YCluster> clusters) {
  nlohmann::json cl = nlohmann::json::array();
  for (const auto& c : clusters) cl.push_back({{"y_start", c.y_start}, {"y_end", c.y_end}, {"size", c.size}});
  return {{"t_knee", t.t_knee ? nlohmann::json(*t.t_knee) : nlohmann::json(nullptr)},
          {"t_foot", t.t_foot ? nlohmann::json(*t.t_foot) : nlohmann::json(nullptr)},
          {"height", t.height},
          {"clusters", std::move(cl)}};
}

}  // namespace chfb
