#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chfb/contour.hpp"
#include "chfb/label.hpp"
#include "chfb/segmentation.hpp"

namespace chfb {

inline constexpr std::size_t kFeatureCount = 19;
inline constexpr std::size_t kInputWidth = kFeatureCount + 3;

/// Column names in extraction order.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "N-C",      "X1",        "Y1",         "X2",         "Y2",         "DIST-T",    "G",
    "G-AVG1",   "G-AVG2",    "X-MID",      "Y-MID",      "N-G0",       "N-G45",     "N-G90",
    "N-G135",   "N-G0-DIFF", "N-G45-DIFF", "N-G90-DIFF", "N-G135-DIFF"};

enum class FeatureIndex : std::size_t {
  NC, X1, Y1, X2, Y2, DistT, Grad, GAvg1, GAvg2, XMid, YMid,
  NG0, NG45, NG90, NG135, NG0Diff, NG45Diff, NG90Diff, NG135Diff
};

struct ContourFeatures {
  int n_c = 0;
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;
  double dist_t = 0.0;
  double grad = 0.0;    ///< degrees, atan(dx / dy) of the endpoint chord
  double g_avg1 = 0.0;  ///< degrees
  double g_avg2 = 0.0;  ///< degrees
  double x_mid = 0.0;
  double y_mid = 0.0;
  std::array<int, 4> n_g{};       ///< counts of 0, 45, 90, 135 degree steps
  std::array<int, 4> n_g_diff{};  ///< counts of folded step-to-step changes
  Region region = Region::Leg;

  std::array<double, kFeatureCount> values() const;
  static ContourFeatures from_values(const std::array<double, kFeatureCount>& v, Region region);
  bool operator==(const ContourFeatures&) const = default;
};

struct FeatureOptions {
  std::size_t window_len = 5;  ///< non-overlapping window for the second average gradient
};

/// The path is first oriented so that it starts at the endpoint with the
/// smaller x (smaller y on ties); every feature is computed on that
/// orientation.
ContourFeatures extract_features(std::span<const Point> path, Region region, const FeatureOptions& opts = {});
ContourFeatures extract_features(const RefinedContour& rc, Region region, const FeatureOptions& opts = {});

/// 19 normalized features followed by the region one-hot [knee, leg, foot].
struct FeatureVector {
  std::array<double, kInputWidth> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

/// Per-feature min-max scaling fitted on a training split. Values outside
/// the fitted range are clamped to [0, 1].
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(std::array<double, kFeatureCount> mins, std::array<double, kFeatureCount> maxs);

  void fit(std::span<const ContourFeatures> rows);
  bool fitted() const noexcept { return fitted_; }

  FeatureVector normalize(const ContourFeatures& f) const;
  /// Inverse of normalize for in-range values.
  std::array<double, kFeatureCount> denormalize(const FeatureVector& v) const;

  const std::array<double, kFeatureCount>& mins() const { return mins_; }
  const std::array<double, kFeatureCount>& maxs() const { return maxs_; }

  bool operator==(const Normalizer&) const = default;

 private:
  std::array<double, kFeatureCount> mins_{};
  std::array<double, kFeatureCount> maxs_{};
  bool fitted_ = false;
};

FeatureVector to_vector(const ContourFeatures& f, const Normalizer& normalizer);

struct FeatureRow {
  ContourFeatures features;
  Label label = Label::NonFractured;
};

/// Header: the 19 feature names, REGION, LABEL.
void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features_csv(std::istream& in);

}  // namespace chfb
