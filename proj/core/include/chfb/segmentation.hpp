#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/contour.hpp"

namespace chfb {

enum class Region { Knee, Leg, Foot };

std::string_view to_string(Region r);
Region region_from_string(std::string_view s);

/// Per-angle rows (pixel y) at which each quantized gradient occurs.
struct GradientDensity {
  std::array<std::vector<int>, 4> rows;

  const std::vector<int>& at(Angle a) const { return rows[bucket(a)]; }
  std::vector<int>& at(Angle a) { return rows[bucket(a)]; }
};

struct YCluster {
  int y_start = 0;
  int y_end = 0;
  std::size_t size = 0;
  bool operator==(const YCluster&) const = default;
};

struct RegionThresholds {
  std::optional<int> t_knee;
  std::optional<int> t_foot;
  int height = 0;
};

struct SegmentationConfig {
  int min_cluster_gap = 5;            ///< gap = max(min_cluster_gap, cluster_gap_frac * h)
  double cluster_gap_frac = 0.03;
  double large_gap_frac = 0.08;
  double small_gap_frac = 0.03;
  std::size_t knee_min_cluster_size = 115;
};

/// Records floor(mean y) of every adjacent pair under its angle.
GradientDensity build_density(std::span<const RefinedContour> contours);

/// Splits the sorted 0-degree rows wherever neighbours differ by more than gap.
std::vector<YCluster> cluster_zero_gradient_rows(const GradientDensity& density, int gap);

int cluster_gap_rows(int height, const SegmentationConfig& cfg);

/// Temporary knee line, 0.2 h.
double knee_temp_threshold(int height);
/// Temporary foot line, 0.6 h.
double foot_temp_threshold(int height);

/// Bottom-most cluster lying entirely above the temporary knee line; a
/// candidate with fewer than min_cluster_size occurrences clears the
/// threshold, otherwise the knee line sits just below the candidate.
std::optional<int> knee_threshold(std::span<const YCluster> clusters, int height,
                                  std::size_t min_cluster_size = 115);

/// Gap semantics for the foot line. A gap is the row interval between two
/// consecutive clusters and is placed at its midpoint; a gap counts as lying
/// below the temporary foot line when the cluster under it starts below that
/// line. The large-gap candidate is the first such gap wider than
/// large_gap_frac * h, the small-gap candidate the first such gap wider than
/// small_gap_frac * h whose midpoint is itself below the line. The large-gap
/// candidate wins unless it sits above the temporary line.
std::optional<int> foot_threshold(std::span<const YCluster> clusters, int height,
                                  const SegmentationConfig& cfg = {});

RegionThresholds compute_thresholds(std::span<const RefinedContour> contours, int height,
                                    const SegmentationConfig& cfg = {});

Region assign_region(const RefinedContour& rc, const RegionThresholds& t);

/// {t_knee, t_foot, clusters: [{y_start, y_end, size}]}; absent thresholds are null.
nlohmann::json regions_to_json(const RegionThresholds& t, std::span<const YCluster> clusters);

}  // namespace chfb
