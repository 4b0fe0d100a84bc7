#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/ann.hpp"
#include "chfb/contour.hpp"
#include "chfb/dataset.hpp"
#include "chfb/features.hpp"
#include "chfb/image.hpp"
#include "chfb/label_store.hpp"
#include "chfb/segmentation.hpp"

namespace chfb {

struct EvalSettings {
  int n_cases = 20;
  int n_sims = 10;
  std::size_t n_test_images = 0;
  double threshold = 0.5;
  int ann_step = 5;
  int ann_max_per_class = 375;
  bool compare_schemes = true;
};

struct SynthSettings {
  int n_images = 60;
  int n_fractured = 30;
  int width = 192;
  int height = 384;
};

struct ServeSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::filesystem::path ui_dir;
};

struct PipelineConfig {
  EnhancementConfig enhancement;
  TraceOptions trace;
  SegmentationConfig segmentation;
  FeatureOptions features;
  FleshOptions flesh;
  Scheme scheme = Scheme::Improved;
  TrainConfig train;
  EvalSettings eval;
  SynthSettings synth;
  ServeSettings serve;
  std::filesystem::path images_dir = "images";
  std::filesystem::path labels_dir = "labels";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Sets one "section.key" entry from its textual value. Throws Config on an
/// unknown key or an unparsable value.
void apply_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);
std::vector<std::string> config_keys();
/// Throws Config when any component configuration is invalid.
void validate(const PipelineConfig& cfg);

struct ProcessedImage {
  std::string image_id;
  CropBox crop;
  GrayImage enhanced;
  EdgeMap edges;
  std::vector<Contour> contours;
  std::vector<RefinedContour> refined;
  RegionThresholds thresholds;
  std::vector<YCluster> clusters;
  std::vector<Region> regions;
  std::vector<ContourFeatures> features;
  std::vector<Label> area_labels;  ///< from the selections, deselections applied, flesh ignored
  std::set<int> flesh;
  bool flesh_skipped = false;
  LabelDocument labels;  ///< document with flesh ids and recomputed labels
};

/// enhance -> edges -> contours -> refine -> segment -> features -> labels.
/// Without a label document every contour is non-fractured.
ProcessedImage process_image(const GrayImage& raw, const std::string& image_id, const PipelineConfig& cfg,
                             const LabelDocument* labels = nullptr);

ImageRecord to_record(const ProcessedImage& p);

/// Writes meta.json, enhanced.png, edges.pgm, edges.json, contours.json,
/// contours.csv, regions.json, features.csv and labels.json under dir.
void write_artifacts(const ProcessedImage& p, Scheme scheme, const std::filesystem::path& dir);

/// contours.json entry list with labels, regions and flesh flags.
nlohmann::json contours_json(const ProcessedImage& p, Scheme scheme);

/// Reads one image's processed artifacts. Throws NotFound naming the
/// missing artifact.
ImageRecord load_record(const std::filesystem::path& dir);
/// Every processed image under out_dir, ordered by image id.
std::vector<ImageRecord> load_corpus(const std::filesystem::path& out_dir);
/// Image ids with a meta.json under out_dir, sorted.
std::vector<std::string> processed_ids(const std::filesystem::path& out_dir);

/// Refined contours as stored in contours.json.
std::vector<RefinedContour> load_refined(const std::filesystem::path& dir);

/// Readable image files (png, pgm) in dir, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace chfb
