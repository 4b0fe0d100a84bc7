#include "chfb/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "chfb/error.hpp"

namespace chfb {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorCode::Parse, "bad number in CSV: " + s);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::array<double, kFeatureCount> ContourFeatures::values() const {
  return {static_cast<double>(n_c), static_cast<double>(x1), static_cast<double>(y1),
          static_cast<double>(x2),  static_cast<double>(y2), dist_t,
          grad,                     g_avg1,                  g_avg2,
          x_mid,                    y_mid,                   static_cast<double>(n_g[0]),
          static_cast<double>(n_g[1]), static_cast<double>(n_g[2]), static_cast<double>(n_g[3]),
          static_cast<double>(n_g_diff[0]), static_cast<double>(n_g_diff[1]),
          static_cast<double>(n_g_diff[2]), static_cast<double>(n_g_diff[3])};
}

ContourFeatures ContourFeatures::from_values(const std::array<double, kFeatureCount>& v, Region region) {
  auto as_int = [](double d) { return static_cast<int>(std::lround(d)); };
  ContourFeatures f;
  f.n_c = as_int(v[0]);
  f.x1 = as_int(v[1]);
  f.y1 = as_int(v[2]);
  f.x2 = as_int(v[3]);
  f.y2 = as_int(v[4]);
  f.dist_t = v[5];
  f.grad = v[6];
  f.g_avg1 = v[7];
  f.g_avg2 = v[8];
  f.x_mid = v[9];
  f.y_mid = v[10];
  for (std::size_t k = 0; k < 4; ++k) {
    f.n_g[k] = as_int(v[11 + k]);
    f.n_g_diff[k] = as_int(v[15 + k]);
  }
  f.region = region;
  return f;
}

ContourFeatures extract_features(std::span<const Point> path, Region region, const FeatureOptions& opts) {
  if (path.size() < 2) throw Error(ErrorCode::TooSmall, "feature extraction needs at least 2 points");
  if (opts.window_len < 1) throw Error(ErrorCode::Config, "window_len must be >= 1");

  std::vector<Point> pts(path.begin(), path.end());
  const Point a = pts.front();
  const Point b = pts.back();
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::reverse(pts.begin(), pts.end());

  ContourFeatures f;
  f.region = region;
  f.n_c = static_cast<int>(pts.size());
  f.x1 = pts.front().x;
  f.y1 = pts.front().y;
  f.x2 = pts.back().x;
  f.y2 = pts.back().y;

  const int dx = f.x2 - f.x1;
  const int dy = f.y2 - f.y1;
  if (dy == 0) {
    f.grad = dx == 0 ? 0.0 : 90.0;
  } else {
    f.grad = std::atan(static_cast<double>(dx) / dy) * 180.0 / std::numbers::pi;
  }

  const auto angles = adjacent_gradients(pts);
  const std::size_t n = angles.size();
  double sum_deg = 0.0;
  double sum_xm = 0.0;
  double sum_ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = pts[i];
    const Point q = pts[i + 1];
    f.dist_t += std::hypot(static_cast<double>(q.x - p.x), static_cast<double>(q.y - p.y));
    sum_xm += (p.x + q.x) / 2.0;
    sum_ym += (p.y + q.y) / 2.0;
    sum_deg += degrees(angles[i]);
    ++f.n_g[bucket(angles[i])];
    if (i > 0) {
      const int diff = std::abs(degrees(angles[i]) - degrees(angles[i - 1]));
      ++f.n_g_diff[static_cast<std::size_t>(diff / 45)];
    }
  }
  f.g_avg1 = sum_deg / static_cast<double>(n);
  f.x_mid = sum_xm / static_cast<double>(n);
  f.y_mid = sum_ym / static_cast<double>(n);

  double sum_windows = 0.0;
  std::size_t windows = 0;
  for (std::size_t start = 0; start < n; start += opts.window_len) {
    const std::size_t stop = std::min(n, start + opts.window_len);
    double s = 0.0;
    for (std::size_t i = start; i < stop; ++i) s += degrees(angles[i]);
    sum_windows += s / static_cast<double>(stop - start);
    ++windows;
  }
  f.g_avg2 = sum_windows / static_cast<double>(windows);
  return f;
}

ContourFeatures extract_features(const RefinedContour& rc, Region region, const FeatureOptions& opts) {
  return extract_features(std::span<const Point>(rc.points), region, opts);
}

Normalizer::Normalizer(std::array<double, kFeatureCount> mins, std::array<double, kFeatureCount> maxs)
    : mins_(mins), maxs_(maxs), fitted_(true) {
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    if (!(mins_[k] <= maxs_[k])) throw Error(ErrorCode::InvalidInput, "normalizer min exceeds max");
  }
}

void Normalizer::fit(std::span<const ContourFeatures> rows) {
  if (rows.empty()) throw Error(ErrorCode::InsufficientData, "cannot fit a normalizer on zero rows");
  mins_ = rows.front().values();
  maxs_ = mins_;
  for (const auto& r : rows) {
    const auto v = r.values();
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      mins_[k] = std::min(mins_[k], v[k]);
      maxs_[k] = std::max(maxs_[k], v[k]);
    }
  }
  fitted_ = true;
}

FeatureVector Normalizer::normalize(const ContourFeatures& f) const {
  if (!fitted_) throw Error(ErrorCode::UnfittedNormalizer, "normalization statistics missing");
  FeatureVector out;
  const auto v = f.values();
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const double span = maxs_[k] - mins_[k];
    out[k] = span > 0.0 ? std::clamp((v[k] - mins_[k]) / span, 0.0, 1.0) : 0.0;
  }
  out[kFeatureCount + 0] = f.region == Region::Knee ? 1.0 : 0.0;
  out[kFeatureCount + 1] = f.region == Region::Leg ? 1.0 : 0.0;
  out[kFeatureCount + 2] = f.region == Region::Foot ? 1.0 : 0.0;
  return out;
}

std::array<double, kFeatureCount> Normalizer::denormalize(const FeatureVector& v) const {
  if (!fitted_) throw Error(ErrorCode::UnfittedNormalizer, "normalization statistics missing");
  std::array<double, kFeatureCount> out{};
  for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = mins_[k] + v[k] * (maxs_[k] - mins_[k]);
  return out;
}

FeatureVector to_vector(const ContourFeatures& f, const Normalizer& normalizer) { return normalizer.normalize(f); }

void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows) {
  for (std::size_t k = 0; k < kFeatureCount; ++k) out << kFeatureNames[k] << ',';
  out << "REGION,LABEL\n";
  for (const auto& row : rows) {
    for (double v : row.features.values()) out << format_double(v) << ',';
    out << to_string(row.features.region) << ',' << to_string(row.label) << '\n';
  }
}

std::vector<FeatureRow> read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "feature CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() != kFeatureCount + 2) throw Error(ErrorCode::Parse, "feature CSV header has wrong width");
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    if (header[k] != kFeatureNames[k]) throw Error(ErrorCode::Parse, "unexpected feature column " + header[k]);
  }
  std::vector<FeatureRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != kFeatureCount + 2) throw Error(ErrorCode::Parse, "feature CSV row has wrong width");
    std::array<double, kFeatureCount> v{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) v[k] = parse_double(cells[k]);
    rows.push_back({ContourFeatures::from_values(v, region_from_string(cells[kFeatureCount])),
                    label_from_string(cells[kFeatureCount + 1])});
  }
  return rows;
}

}  // namespace chfb
