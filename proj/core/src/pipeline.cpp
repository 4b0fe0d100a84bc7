#include "chfb/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "chfb/error.hpp"
#include "chfb/image_io.hpp"

namespace chfb {

namespace {

int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::Config, std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::Config, std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::Config, std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::Config, std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  const int n = parse_int(key, v);
  if (n < 0) throw Error(ErrorCode::Config, std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(n);
}

using Setter = std::function<void(PipelineConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"enhance.gamma", [](auto& c, auto k, auto v) { c.enhancement.gamma = parse_double(k, v); }},
      {"enhance.denoise_window", [](auto& c, auto k, auto v) { c.enhancement.denoise_window = parse_int(k, v); }},
      {"enhance.unsharp_amount", [](auto& c, auto k, auto v) { c.enhancement.unsharp_amount = parse_double(k, v); }},
      {"enhance.unsharp_radius", [](auto& c, auto k, auto v) { c.enhancement.unsharp_radius = parse_int(k, v); }},
      {"enhance.crop_threshold", [](auto& c, auto k, auto v) { c.enhancement.crop_threshold = parse_int(k, v); }},
      {"enhance.equalize", [](auto& c, auto k, auto v) { c.enhancement.equalize = parse_bool(k, v); }},
      {"enhance.canny_low", [](auto& c, auto k, auto v) { c.enhancement.canny_low = parse_double(k, v); }},
      {"enhance.canny_high", [](auto& c, auto k, auto v) { c.enhancement.canny_high = parse_double(k, v); }},
      {"enhance.canny_sigma", [](auto& c, auto k, auto v) { c.enhancement.canny_sigma = parse_double(k, v); }},
      {"contour.min_points", [](auto& c, auto k, auto v) { c.trace.min_contour_points = parse_count(k, v); }},
      {"segmentation.min_cluster_gap", [](auto& c, auto k, auto v) { c.segmentation.min_cluster_gap = parse_int(k, v); }},
      {"segmentation.cluster_gap_frac",
       [](auto& c, auto k, auto v) { c.segmentation.cluster_gap_frac = parse_double(k, v); }},
      {"segmentation.large_gap_frac", [](auto& c, auto k, auto v) { c.segmentation.large_gap_frac = parse_double(k, v); }},
      {"segmentation.small_gap_frac", [](auto& c, auto k, auto v) { c.segmentation.small_gap_frac = parse_double(k, v); }},
      {"segmentation.knee_min_cluster_size",
       [](auto& c, auto k, auto v) { c.segmentation.knee_min_cluster_size = parse_count(k, v); }},
      {"features.window_len", [](auto& c, auto k, auto v) { c.features.window_len = parse_count(k, v); }},
      {"flesh.bone_band_frac", [](auto& c, auto k, auto v) { c.flesh.bone_band_frac = parse_double(k, v); }},
      {"flesh.window_frac", [](auto& c, auto k, auto v) { c.flesh.window_frac = parse_double(k, v); }},
      {"flesh.min_contours", [](auto& c, auto k, auto v) { c.flesh.min_contours = parse_count(k, v); }},
      {"ann.learning_rate", [](auto& c, auto k, auto v) { c.train.learning_rate = parse_double(k, v); }},
      {"ann.epochs", [](auto& c, auto k, auto v) { c.train.epochs = parse_int(k, v); }},
      {"ann.batch_size", [](auto& c, auto k, auto v) { c.train.batch_size = parse_int(k, v); }},
      {"ann.h1", [](auto& c, auto k, auto v) { c.train.h1 = parse_int(k, v); }},
      {"ann.h2", [](auto& c, auto k, auto v) { c.train.h2 = parse_int(k, v); }},
      {"ann.patience", [](auto& c, auto k, auto v) { c.train.patience = parse_int(k, v); }},
      {"ann.validation_fraction", [](auto& c, auto k, auto v) { c.train.validation_fraction = parse_double(k, v); }},
      {"ann.activation", [](auto& c, auto, auto v) { c.train.activation = activation_from_string(v); }},
      {"eval.n_cases", [](auto& c, auto k, auto v) { c.eval.n_cases = parse_int(k, v); }},
      {"eval.n_sims", [](auto& c, auto k, auto v) { c.eval.n_sims = parse_int(k, v); }},
      {"eval.n_test_images", [](auto& c, auto k, auto v) { c.eval.n_test_images = parse_count(k, v); }},
      {"eval.threshold", [](auto& c, auto k, auto v) { c.eval.threshold = parse_double(k, v); }},
      {"eval.ann_step", [](auto& c, auto k, auto v) { c.eval.ann_step = parse_int(k, v); }},
      {"eval.ann_max_per_class", [](auto& c, auto k, auto v) { c.eval.ann_max_per_class = parse_int(k, v); }},
      {"eval.compare_schemes", [](auto& c, auto k, auto v) { c.eval.compare_schemes = parse_bool(k, v); }},
      {"synth.n_images", [](auto& c, auto k, auto v) { c.synth.n_images = parse_int(k, v); }},
      {"synth.n_fractured", [](auto& c, auto k, auto v) { c.synth.n_fractured = parse_int(k, v); }},
      {"synth.width", [](auto& c, auto k, auto v) { c.synth.width = parse_int(k, v); }},
      {"synth.height", [](auto& c, auto k, auto v) { c.synth.height = parse_int(k, v); }},
      {"serve.host", [](auto& c, auto, auto v) { c.serve.host = std::string(v); }},
      {"serve.port", [](auto& c, auto k, auto v) { c.serve.port = parse_int(k, v); }},
      {"serve.token", [](auto& c, auto, auto v) { c.serve.token = std::string(v); }},
      {"serve.ui_dir", [](auto& c, auto, auto v) { c.serve.ui_dir = std::string(v); }},
      {"paths.images", [](auto& c, auto, auto v) { c.images_dir = std::string(v); }},
      {"paths.labels", [](auto& c, auto, auto v) { c.labels_dir = std::string(v); }},
      {"paths.out", [](auto& c, auto, auto v) { c.out_dir = std::string(v); }},
      {"run.seed", [](auto& c, auto k, auto v) { c.seed = parse_u64(k, v); }},
      {"run.workers", [](auto& c, auto k, auto v) { c.workers = parse_int(k, v); }},
      {"run.scheme", [](auto& c, auto, auto v) { c.scheme = scheme_from_string(v); }},
  };
  return table;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "missing artifact " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

void apply_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : setters()) out.push_back(k);
  return out;
}

void validate(const PipelineConfig& cfg) {
  validate(cfg.enhancement);
  validate(cfg.train);
  if (cfg.features.window_len < 1) throw Error(ErrorCode::Config, "features.window_len must be >= 1");
  if (cfg.segmentation.min_cluster_gap < 1) throw Error(ErrorCode::Config, "segmentation.min_cluster_gap must be >= 1");
  if (!(cfg.flesh.bone_band_frac > 0.0 && cfg.flesh.bone_band_frac <= 1.0)) {
    throw Error(ErrorCode::Config, "flesh.bone_band_frac must be in (0, 1]");
  }
  if (!(cfg.flesh.window_frac > 0.0 && cfg.flesh.window_frac <= 1.0)) {
    throw Error(ErrorCode::Config, "flesh.window_frac must be in (0, 1]");
  }
  if (!(cfg.eval.threshold > 0.0 && cfg.eval.threshold < 1.0)) {
    throw Error(ErrorCode::Config, "eval.threshold must lie strictly between 0 and 1");
  }
  if (cfg.eval.n_cases < 1 || cfg.eval.n_sims < 1) throw Error(ErrorCode::Config, "eval.n_cases and eval.n_sims must be >= 1");
  if (cfg.eval.ann_step < 1 || cfg.eval.ann_max_per_class < cfg.eval.ann_step) {
    throw Error(ErrorCode::Config, "eval.ann_step must be >= 1 and <= eval.ann_max_per_class");
  }
  if (cfg.workers < 1) throw Error(ErrorCode::Config, "run.workers must be >= 1");
  if (cfg.serve.port < 0 || cfg.serve.port > 65535) throw Error(ErrorCode::Config, "serve.port must be in 0..65535");
}

ProcessedImage process_image(const GrayImage& raw, const std::string& image_id, const PipelineConfig& cfg,
                             const LabelDocument* labels) {
  validate(cfg);
  ProcessedImage p;
  p.image_id = image_id;
  auto enhanced = enhance_with_crop(raw, cfg.enhancement);
  p.crop = enhanced.crop;
  p.enhanced = std::move(enhanced.image);
  p.edges = detect_edges(p.enhanced, cfg.enhancement);
  p.contours = trace_contours(p.edges, cfg.trace);
  p.refined.reserve(p.contours.size());
  for (const auto& c : p.contours) p.refined.push_back(refine_contour(c));

  const int w = p.enhanced.width();
  const int h = p.enhanced.height();
  p.clusters = cluster_zero_gradient_rows(build_density(p.refined), cluster_gap_rows(h, cfg.segmentation));
  p.thresholds.height = h;
  p.thresholds.t_knee = knee_threshold(p.clusters, h, cfg.segmentation.knee_min_cluster_size);
  p.thresholds.t_foot = foot_threshold(p.clusters, h, cfg.segmentation);

  std::vector<RefinedContour> leg;
  for (const auto& rc : p.refined) {
    const Region r = assign_region(rc, p.thresholds);
    p.regions.push_back(r);
    p.features.push_back(extract_features(rc, r, cfg.features));
    if (r == Region::Leg) leg.push_back(rc);
  }
  const auto part = isolate_flesh(leg, w, cfg.flesh);
  p.flesh_skipped = part.skipped;
  for (std::size_t i : part.flesh) p.flesh.insert(leg[i].source_id);

  if (labels) {
    p.labels = *labels;
  } else {
    p.labels.image_id = image_id;
  }
  p.labels.image_id = image_id;
  p.labels.flesh.clear();
  const auto area = compute_labels(p.labels, p.refined, w, h);
  for (const auto& rc : p.refined) p.area_labels.push_back(area.at(rc.source_id));
  p.labels.flesh = p.flesh;
  p.labels.labels = compute_labels(p.labels, p.refined, w, h);
  return p;
}

ImageRecord to_record(const ProcessedImage& p) {
  ImageRecord rec;
  rec.image_id = p.image_id;
  rec.width = p.enhanced.width();
  rec.height = p.enhanced.height();
  for (std::size_t i = 0; i < p.refined.size(); ++i) {
    const int id = p.refined[i].source_id;
    rec.samples.push_back({p.image_id, id, p.features[i], p.area_labels[i], p.flesh.contains(id)});
  }
  return rec;
}

nlohmann::json contours_json(const ProcessedImage& p, Scheme scheme) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < p.contours.size(); ++i) {
    auto j = contour_to_json(p.contours[i], p.refined[i]);
    const int id = p.refined[i].source_id;
    const bool flesh = p.flesh.contains(id);
    const Sample s{p.image_id, id, {}, p.area_labels[i], flesh};
    j["region"] = to_string(p.regions[i]);
    j["area_label"] = to_string(p.area_labels[i]);
    j["flesh"] = flesh;
    j["label"] = to_string(s.label(scheme));
    arr.push_back(std::move(j));
  }
  return arr;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void write_artifacts(const ProcessedImage& p, Scheme scheme, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta{{"image_id", p.image_id},
                      {"width", p.enhanced.width()},
                      {"height", p.enhanced.height()},
                      {"crop", {{"x0", p.crop.x0}, {"y0", p.crop.y0}, {"width", p.crop.width}, {"height", p.crop.height}}},
                      {"contours", p.contours.size()},
                      {"flesh", p.flesh.size()},
                      {"flesh_skipped", p.flesh_skipped},
                      {"scheme", to_string(scheme)}};
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
  write_png(dir / "enhanced.png", p.enhanced);
  write_edge_pgm(dir / "edges.pgm", p.edges);
  write_text_file(dir / "edges.json", edge_map_to_rle(p.edges).dump() + "\n");
  write_text_file(dir / "contours.json", contours_json(p, scheme).dump() + "\n");

  std::ostringstream csv;
  csv << "id,n_points,i_s,i_e,start_x,start_y,end_x,end_y,region,flesh,label\n";
  for (std::size_t i = 0; i < p.refined.size(); ++i) {
    const auto& rc = p.refined[i];
    const Sample s{p.image_id, rc.source_id, {}, p.area_labels[i], p.flesh.contains(rc.source_id)};
    csv << rc.source_id << ',' << p.contours[i].size() << ',' << rc.start_index << ',' << rc.end_index << ','
        << rc.start().x << ',' << rc.start().y << ',' << rc.end().x << ',' << rc.end().y << ','
        << to_string(p.regions[i]) << ',' << (s.flesh ? 1 : 0) << ',' << to_string(s.label(scheme)) << '\n';
  }
  write_text_file(dir / "contours.csv", csv.str());
  write_text_file(dir / "regions.json", regions_to_json(p.thresholds, p.clusters).dump(2) + "\n");

  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < p.refined.size(); ++i) {
    const Sample s{p.image_id, p.refined[i].source_id, {}, p.area_labels[i], p.flesh.contains(p.refined[i].source_id)};
    rows.push_back({p.features[i], s.label(scheme)});
  }
  std::ostringstream fcsv;
  write_features_csv(fcsv, rows);
  write_text_file(dir / "features.csv", fcsv.str());
  write_text_file(dir / "labels.json", to_json(p.labels).dump(2) + "\n");
}

std::vector<RefinedContour> load_refined(const std::filesystem::path& dir) {
  const auto doc = read_json_file(dir / "contours.json");
  std::vector<RefinedContour> out;
  for (const auto& entry : doc) out.push_back(contour_from_json(entry).second);
  return out;
}

ImageRecord load_record(const std::filesystem::path& dir) {
  const auto meta = read_json_file(dir / "meta.json");
  const auto contours = read_json_file(dir / "contours.json");
  std::istringstream fin(read_text(dir / "features.csv"));
  const auto rows = read_features_csv(fin);
  if (rows.size() != contours.size()) {
    throw Error(ErrorCode::Parse, (dir / "features.csv").string() + " has " + std::to_string(rows.size()) +
                                      " rows but contours.json lists " + std::to_string(contours.size()));
  }
  ImageRecord rec;
  try {
    rec.image_id = meta.at("image_id").get<std::string>();
    rec.width = meta.at("width").get<int>();
    rec.height = meta.at("height").get<int>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& c = contours[i];
      rec.samples.push_back({rec.image_id, c.at("id").get<int>(), rows[i].features,
                             label_from_string(c.at("area_label").get<std::string>()), c.at("flesh").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, dir.string() + ": " + e.what());
  }
  return rec;
}

std::vector<std::string> processed_ids(const std::filesystem::path& out_dir) {
  std::vector<std::string> ids;
  if (!std::filesystem::is_directory(out_dir)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<ImageRecord> load_corpus(const std::filesystem::path& out_dir) {
  std::vector<ImageRecord> out;
  for (const auto& id : processed_ids(out_dir)) out.push_back(load_record(out_dir / id));
  return out;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::NotFound, "image directory " + dir.string() + " does not exist");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".pgm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace chfb
