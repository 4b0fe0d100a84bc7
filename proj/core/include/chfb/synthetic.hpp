#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chfb/dataset.hpp"
#include "chfb/image.hpp"

namespace chfb {

/// Dark transverse crack inside the tibia shaft. Cracks stop short of the
/// cortex so each one traces as its own short contour.
struct FractureSpec {
  double y = 0.0;      ///< crack centre row at the shaft centre column
  int gap = 4;         ///< crack height in rows at the centre column
  double slope = 0.0;  ///< rows per column
  int margin = 6;      ///< untouched bone between crack ends and the shaft edges
  int extra_cracks = 0;
  int crack_spacing = 9;
};

struct SyntheticSpec {
  int width = 192;
  int height = 384;
  std::uint64_t seed = 0;

  double tibia_x = 0.40;  ///< shaft centres and half-widths as fractions of width
  double tibia_half = 0.085;
  double fibula_x = 0.66;
  double fibula_half = 0.035;
  double tilt = 0.0;  ///< horizontal drift of both shafts over the full height, pixels

  double flesh_left = 0.10;  ///< soft-tissue boundaries as fractions of width
  double flesh_right = 0.90;
  double flesh_wiggle = 3.0;  ///< amplitude of boundary wobble, pixels
  int flesh_ramp = 2;         ///< half-width of the boundary ramp, pixels
  double flesh_contrast = 55.0;
  int flesh_folds = 3;  ///< short dark soft-tissue streaks

  double knee_end = 0.15;   ///< bottom of the knee band, fraction of height
  double foot_start = 0.82; ///< top of the foot band
  int knee_bars = 3;
  int foot_bars = 4;

  double noise_sigma = 3.0;
  std::optional<FractureSpec> fracture;
};

struct SyntheticImage {
  GrayImage image;
  std::vector<Rect> fracture_rects;
  int knee_end = 0;    ///< first leg row
  int foot_start = 0;  ///< first foot row
};

/// Randomized anatomy for one corpus entry; the fracture, when requested,
/// is placed inside the leg band.
SyntheticSpec random_spec(std::uint64_t seed, bool fractured, int width = 192, int height = 384);

/// Throws ErrorCode::Config on an impossible geometry.
void validate(const SyntheticSpec& spec);

SyntheticImage generate_synthetic(const SyntheticSpec& spec);

/// Rows darkened by the crack at column x, for render-then-measure checks.
std::vector<int> crack_rows_at(const SyntheticSpec& spec, int x);
int tibia_centre_column(const SyntheticSpec& spec, double y);

struct CorpusEntry {
  std::string image_id;
  bool fractured = false;
  std::uint64_t seed = 0;
};

/// Writes images/<id>.png, labels/<id>.json with the ground-truth
/// rectangles as selection events, and manifest.csv.
std::vector<CorpusEntry> write_synthetic_corpus(const std::filesystem::path& dir, int n_images, int n_fractured,
                                                std::uint64_t seed, int width = 192, int height = 384);

}  // namespace chfb
