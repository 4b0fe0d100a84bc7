#include "chfb/contour.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <string>

#include "chfb/error.hpp"

namespace chfb {

namespace {

// Clockwise neighbour ring in image coordinates (y grows downwards),
// starting west: W, NW, N, NE, E, SE, S, SW.
constexpr std::array<Point, 8> kRing{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int ring_index(Point centre, Point neighbour) {
  const Point d{neighbour.x - centre.x, neighbour.y - centre.y};
  for (int i = 0; i < 8; ++i) {
    if (kRing[static_cast<std::size_t>(i)] == d) return i;
  }
  throw Error(ErrorCode::ContractViolation, "points are not 8-neighbours");
}

Point offset(Point p, int ring) {
  const Point d = kRing[static_cast<std::size_t>(ring)];
  return {p.x + d.x, p.y + d.y};
}

// Outer border following for a component whose top-left pixel is `start`.
std::vector<Point> follow_border(const EdgeMap& edges, Point start) {
  auto on = [&](Point p) { return edges.in_bounds(p.x, p.y) && edges.at(p.x, p.y); };

  // Clockwise search from the west neighbour (background by construction).
  int first = -1;
  for (int k = 0; k < 8; ++k) {
    if (on(offset(start, k))) {
      first = k;
      break;
    }
  }
  if (first < 0) return {start};

  const Point p1 = offset(start, first);
  Point prev = p1;
  Point cur = start;
  std::vector<Point> path;
  while (true) {
    path.push_back(cur);
    // Counter-clockwise from the element after `prev`.
    const int from = ring_index(cur, prev);
    Point next = cur;
    for (int k = 1; k <= 8; ++k) {
      const int idx = ((from - k) % 8 + 8) % 8;
      const Point cand = offset(cur, idx);
      if (on(cand)) {
        next = cand;
        break;
      }
    }
    if (next == start && cur == p1) break;
    prev = cur;
    cur = next;
  }
  return path;
}

}  // namespace

Angle angle_from_degrees(int deg) {
  switch (deg) {
    case 0: return Angle::Deg0;
    case 45: return Angle::Deg45;
    case 90: return Angle::Deg90;
    case 135: return Angle::Deg135;
    default: throw Error(ErrorCode::InvalidInput, "angle must be 0, 45, 90 or 135: " + std::to_string(deg));
  }
}

std::vector<Contour> trace_contours(const EdgeMap& edges, const TraceOptions& opts) {
  std::vector<Contour> out;
  if (edges.empty()) return out;
  const int w = edges.width();
  const int h = edges.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  std::vector<Point> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y * w + x);
      if (!edges.at(x, y) || seen[i]) continue;
      // Mark the whole component so no pixel can seed a second traversal.
      seen[i] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (const Point d : kRing) {
          const Point q{p.x + d.x, p.y + d.y};
          if (!edges.in_bounds(q.x, q.y) || !edges.at(q.x, q.y)) continue;
          auto& s = seen[static_cast<std::size_t>(q.y * w + q.x)];
          if (!s) {
            s = 1;
            stack.push_back(q);
          }
        }
      }
      auto path = follow_border(edges, {x, y});
      if (path.size() < opts.min_contour_points) continue;
      out.push_back({static_cast<int>(out.size()), std::move(path)});
    }
  }
  return out;
}

std::vector<int> point_distances(const Contour& c) {
  if (c.size() < 2) throw Error(ErrorCode::TooSmall, "contour needs at least 2 points");
  const Point p1 = c.points.front();
  std::vector<int> d;
  d.reserve(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) {
    d.push_back(std::abs(p1.x - c.points[i].x) + std::abs(p1.y - c.points[i].y));
  }
  return d;
}

RefinementTrace trace_refinement(const Contour& c) {
  RefinementTrace t;
  t.distances = point_distances(c);
  const std::size_t m = c.size();
  // Point 0 sits at distance zero from itself.
  auto dist_at = [&](std::size_t k) { return k == 0 ? 0 : t.distances[k - 1]; };

  t.d_max = 0;
  t.i_dmax = 0;
  for (std::size_t k = 1; k < m; ++k) {
    if (dist_at(k) > t.d_max) {
      t.d_max = dist_at(k);
      t.i_dmax = k;
    }
  }

  // Status: +1 increasing, -1 decreasing; plateaus carry the previous status.
  int prev_status = 0;
  for (std::size_t k = 1; k < m; ++k) {
    const int a = dist_at(k);
    const int b = dist_at(k - 1);
    int status = a > b ? 1 : (a < b ? -1 : prev_status);
    if (k >= 2 && prev_status != 0 && status != prev_status) {
      t.turning_points.push_back({k, a});
    }
    prev_status = status;
  }

  for (const auto& tp : t.turning_points) {
    if (!t.d_min || tp.distance < t.d_min->distance) t.d_min = tp;
  }
  t.threshold = 0.25 * t.d_max;

  if (t.d_min && t.d_min->distance < t.threshold) {
    const std::size_t i = t.d_min->index;
    t.trimmed = true;
    t.i_s = (i + 1) / 2;
    t.i_e = (i + (m - 1) + 1) / 2;
  } else {
    t.i_s = 0;
    t.i_e = t.i_dmax;
  }
  return t;
}

RefinedContour refine_contour(const Contour& c) {
  const RefinementTrace t = trace_refinement(c);
  RefinedContour rc;
  rc.source_id = c.id;
  rc.start_index = t.i_s;
  rc.end_index = t.i_e;
  rc.points.assign(c.points.begin() + static_cast<std::ptrdiff_t>(t.i_s),
                   c.points.begin() + static_cast<std::ptrdiff_t>(t.i_e) + 1);
  return rc;
}

Angle step_angle(Point a, Point b) {
  const int dx = b.x - a.x;
  const int dy = b.y - a.y;
  if (std::max(std::abs(dx), std::abs(dy)) != 1) {
    throw Error(ErrorCode::ContractViolation, "consecutive points are not 8-adjacent");
  }
  if (dy == 0) return Angle::Deg0;
  if (dx == 0) return Angle::Deg90;
  return dx * dy > 0 ? Angle::Deg45 : Angle::Deg135;
}

std::vector<Angle> adjacent_gradients(std::span<const Point> path) {
  if (path.size() < 2) throw Error(ErrorCode::TooSmall, "path needs at least 2 points");
  std::vector<Angle> out;
  out.reserve(path.size() - 1);
  for (std::size_t i = 1; i < path.size(); ++i) out.push_back(step_angle(path[i - 1], path[i]));
  return out;
}

std::vector<Angle> adjacent_gradients(const RefinedContour& rc) { return adjacent_gradients(rc.points); }

nlohmann::json contour_to_json(const Contour& c, const RefinedContour& rc) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points) pts.push_back({p.x, p.y});
  return {{"id", c.id}, {"points", std::move(pts)}, {"refined", {{"i_s", rc.start_index}, {"i_e", rc.end_index}}}};
}

std::pair<Contour, RefinedContour> contour_from_json(const nlohmann::json& doc) {
  try {
    Contour c;
    c.id = doc.at("id").get<int>();
    for (const auto& p : doc.at("points")) c.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    RefinedContour rc;
    rc.source_id = c.id;
    rc.start_index = doc.at("refined").at("i_s").get<std::size_t>();
    rc.end_index = doc.at("refined").at("i_e").get<std::size_t>();
    if (rc.start_index > rc.end_index || rc.end_index >= c.size()) {
      throw Error(ErrorCode::Parse, "refined indices outside the contour");
    }
    rc.points.assign(c.points.begin() + static_cast<std::ptrdiff_t>(rc.start_index),
                     c.points.begin() + static_cast<std::ptrdiff_t>(rc.end_index) + 1);
    return {std::move(c), std::move(rc)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("contour JSON: ") + e.what());
  }
}

}  // namespace chfb
