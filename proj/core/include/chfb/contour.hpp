#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/image.hpp"

namespace chfb {

struct Point {
  int x = 0;
  int y = 0;
  auto operator<=>(const Point&) const = default;
};

/// Closed border traversal of one 8-connected edge component.
struct Contour {
  int id = 0;
  std::vector<Point> points;

  std::size_t size() const noexcept { return points.size(); }
};

/// Open sub-path points[start_index ..= end_index] of a source contour.
struct RefinedContour {
  int source_id = 0;
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  std::vector<Point> points;

  const Point& start() const { return points.front(); }
  const Point& end() const { return points.back(); }
};

struct TurningPoint {
  std::size_t index = 0;  ///< point index within the source contour
  int distance = 0;
  bool operator==(const TurningPoint&) const = default;
};

/// Every intermediate quantity of one refinement, kept for inspection.
struct RefinementTrace {
  /// distances[j] is the Manhattan distance of point j+1 from point 0.
  std::vector<int> distances;
  int d_max = 0;
  std::size_t i_dmax = 0;
  std::vector<TurningPoint> turning_points;
  std::optional<TurningPoint> d_min;
  double threshold = 0.0;
  bool trimmed = false;  ///< true when the turning-point branch was taken
  std::size_t i_s = 0;
  std::size_t i_e = 0;
};

/// Quantized direction of one 8-connected step, folded modulo 180 degrees.
enum class Angle : std::uint8_t { Deg0 = 0, Deg45 = 1, Deg90 = 2, Deg135 = 3 };

constexpr int degrees(Angle a) noexcept { return 45 * static_cast<int>(a); }
constexpr std::size_t bucket(Angle a) noexcept { return static_cast<std::size_t>(a); }
Angle angle_from_degrees(int deg);

struct TraceOptions {
  std::size_t min_contour_points = 8;
};

/// One outer-border traversal per 8-connected component. Components are
/// visited in raster order of their top-left pixel and each traversal starts
/// there, so point order is fully deterministic. Traversals shorter than
/// min_contour_points are dropped; ids are assigned after filtering.
std::vector<Contour> trace_contours(const EdgeMap& edges, const TraceOptions& opts = {});

/// Manhattan distance of every point after the first from the first point.
std::vector<int> point_distances(const Contour& c);

RefinementTrace trace_refinement(const Contour& c);

/// Removes the duplicated return half of a closed traversal.
RefinedContour refine_contour(const Contour& c);

Angle step_angle(Point a, Point b);
std::vector<Angle> adjacent_gradients(std::span<const Point> path);
std::vector<Angle> adjacent_gradients(const RefinedContour& rc);

/// {id, points: [[x,y],...], refined: {i_s, i_e}}
nlohmann::json contour_to_json(const Contour& c, const RefinedContour& rc);

/// Rebuilds the contour and its refinement from contour_to_json output.
std::pair<Contour, RefinedContour> contour_from_json(const nlohmann::json& doc);

}  // namespace chfb
