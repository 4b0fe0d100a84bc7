#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/contour.hpp"
#include "chfb/features.hpp"
#include "chfb/label.hpp"

namespace chfb {

/// Axis-aligned selection in image coordinates. Containment is strict: points
/// on the boundary are outside.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(Point p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
  bool operator==(const Rect&) const = default;
};

/// Throws InvalidSelection unless 0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height.
void validate_rect(const Rect& r, int width, int height);

nlohmann::json rect_to_json(const Rect& r);
Rect rect_from_json(const nlohmann::json& doc);

/// Fractured iff the refined start or end point lies inside any rectangle.
std::vector<Label> label_by_area(std::span<const RefinedContour> contours, std::span<const Rect> rects, int width,
                                 int height);

struct FleshOptions {
  double bone_band_frac = 0.6;  ///< share of endpoints the bone band must hold
  double window_frac = 0.3;     ///< initial band width as a share of image width
  std::size_t min_contours = 10;
};

struct FleshPartition {
  std::vector<std::size_t> bone;
  std::vector<std::size_t> flesh;
  int band_x0 = 0;  ///< inclusive
  int band_x1 = 0;  ///< inclusive
  bool skipped = false;
};

/// Finds the densest window of endpoint x-values, widens it until it holds
/// bone_band_frac of all endpoints, and marks contours whose two endpoints
/// both fall outside it as flesh. Input pairs are (start.x, end.x).
FleshPartition isolate_flesh(std::span<const std::pair<int, int>> endpoint_xs, int image_width,
                             const FleshOptions& opts = {});
FleshPartition isolate_flesh(std::span<const RefinedContour> contours, int image_width,
                             const FleshOptions& opts = {});

enum class Scheme { Standard, Improved };
enum class Protocol { SystemEval, AnnEval };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

/// One classified contour with its image context.
struct Sample {
  std::string image_id;
  int contour_id = 0;
  ContourFeatures features;
  Label area_label = Label::NonFractured;  ///< label from area selection
  bool flesh = false;                     ///< flagged by flesh isolation

  /// Label under a scheme: flesh contours become flesh-auto in the improved scheme.
  Label label(Scheme scheme) const {
    return scheme == Scheme::Improved && flesh ? Label::FleshAuto : area_label;
  }
  bool operator==(const Sample&) const = default;
};

struct ImageRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<Sample> samples;

  bool has_fracture() const;
};

/// Samples that take part in training and testing under a scheme: all of
/// them for the standard scheme, non-flesh ones for the improved scheme.
std::vector<Sample> scheme_samples(const ImageRecord& image, Scheme scheme);

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  Protocol protocol = Protocol::SystemEval;
  std::uint64_t seed = 0;
};

/// Fixed held-out image set for both protocols, stratified by whether an
/// image contains a fractured contour.
struct HoldOut {
  std::vector<std::string> train_pool;
  std::vector<std::string> test_images;
};

HoldOut hold_out_images(std::span<const ImageRecord> corpus, std::size_t n_test, std::uint64_t seed);

/// Samples n_train_images whole images from the train pool; the test side is
/// every held-out image.
DatasetSplit split_system_eval(std::span<const ImageRecord> corpus, const HoldOut& holdout, std::size_t n_train_images,
                               Scheme scheme, std::uint64_t seed);

/// Balanced training sample of per_class fractured and per_class
/// non-fractured contours, drawn without replacement from the pool.
DatasetSplit split_ann_eval(std::span<const Sample> pool, std::span<const Sample> test, std::size_t per_class,
                            Scheme scheme, std::uint64_t seed);

}  // namespace chfb
