#include "chfb/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "chfb/error.hpp"
#include "chfb/rng.hpp"

namespace chfb {

void validate_rect(const Rect& r, int width, int height) {
  if (r.x0 < 0 || r.y0 < 0 || r.x1 > width || r.y1 > height || r.x0 >= r.x1 || r.y0 >= r.y1) {
    throw Error(ErrorCode::InvalidSelection, "rectangle (" + std::to_string(r.x0) + "," + std::to_string(r.y0) + ")-(" +
                                                 std::to_string(r.x1) + "," + std::to_string(r.y1) +
                                                 ") is malformed or outside the image");
  }
}

nlohmann::json rect_to_json(const Rect& r) { return {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}}; }

Rect rect_from_json(const nlohmann::json& doc) {
  try {
    return {doc.at("x0").get<int>(), doc.at("y0").get<int>(), doc.at("x1").get<int>(), doc.at("y1").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSelection, std::string("rectangle JSON: ") + e.what());
  }
}

std::vector<Label> label_by_area(std::span<const RefinedContour> contours, std::span<const Rect> rects, int width,
                                 int height) {
  for (const auto& r : rects) validate_rect(r, width, height);
  std::vector<Label> out;
  out.reserve(contours.size());
  for (const auto& rc : contours) {
    const bool hit = std::any_of(rects.begin(), rects.end(),
                                 [&](const Rect& r) { return r.contains(rc.start()) || r.contains(rc.end()); });
    out.push_back(hit ? Label::Fractured : Label::NonFractured);
  }
  return out;
}

FleshPartition isolate_flesh(std::span<const std::pair<int, int>> endpoint_xs, int image_width,
                             const FleshOptions& opts) {
  FleshPartition part;
  const std::size_t n = endpoint_xs.size();
  part.band_x0 = 0;
  part.band_x1 = image_width - 1;
  if (n < opts.min_contours) {
    part.skipped = true;
    for (std::size_t i = 0; i < n; ++i) part.bone.push_back(i);
    return part;
  }

  std::vector<int> hist(static_cast<std::size_t>(image_width), 0);
  for (const auto& [a, b] : endpoint_xs) {
    ++hist[static_cast<std::size_t>(std::clamp(a, 0, image_width - 1))];
    ++hist[static_cast<std::size_t>(std::clamp(b, 0, image_width - 1))];
  }
  std::vector<int> prefix(hist.size() + 1, 0);
  for (std::size_t i = 0; i < hist.size(); ++i) prefix[i + 1] = prefix[i] + hist[i];
  auto count = [&](int x0, int x1) { return prefix[static_cast<std::size_t>(x1 + 1)] - prefix[static_cast<std::size_t>(x0)]; };

  const int window = std::clamp(static_cast<int>(std::lround(opts.window_frac * image_width)), 1, image_width);
  const double centre = (image_width - 1) / 2.0;
  int best = 0;
  int best_count = -1;
  for (int x0 = 0; x0 + window <= image_width; ++x0) {
    const int c = count(x0, x0 + window - 1);
    const double off = std::abs(x0 + (window - 1) / 2.0 - centre);
    const double best_off = std::abs(best + (window - 1) / 2.0 - centre);
    if (c > best_count || (c == best_count && off < best_off)) {
      best = x0;
      best_count = c;
    }
  }
  int lo = best;
  int hi = best + window - 1;
  const double needed = opts.bone_band_frac * static_cast<double>(2 * n);
  // Widen towards whichever side adds more endpoints (left on ties).
  while (count(lo, hi) < needed && (lo > 0 || hi < image_width - 1)) {
    const int gain_left = lo > 0 ? hist[static_cast<std::size_t>(lo - 1)] : -1;
    const int gain_right = hi < image_width - 1 ? hist[static_cast<std::size_t>(hi + 1)] : -1;
    if (gain_left >= gain_right) {
      --lo;
    } else {
      ++hi;
    }
  }
  part.band_x0 = lo;
  part.band_x1 = hi;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [a, b] = endpoint_xs[i];
    const bool a_out = a < lo || a > hi;
    const bool b_out = b < lo || b > hi;
    (a_out && b_out ? part.flesh : part.bone).push_back(i);
  }
  return part;
}

FleshPartition isolate_flesh(std::span<const RefinedContour> contours, int image_width, const FleshOptions& opts) {
  std::vector<std::pair<int, int>> xs;
  xs.reserve(contours.size());
  for (const auto& rc : contours) xs.emplace_back(rc.start().x, rc.end().x);
  return isolate_flesh(xs, image_width, opts);
}

std::string_view to_string(Scheme s) { return s == Scheme::Improved ? "improved" : "standard"; }

Scheme scheme_from_string(std::string_view s) {
  if (s == "standard" || s == "standard-chfb") return Scheme::Standard;
  if (s == "improved" || s == "improved-chfb") return Scheme::Improved;
  throw Error(ErrorCode::Config, "scheme must be standard or improved, got " + std::string(s));
}

bool ImageRecord::has_fracture() const {
  return std::any_of(samples.begin(), samples.end(), [](const Sample& s) { return is_fractured(s.area_label); });
}

std::vector<Sample> scheme_samples(const ImageRecord& image, Scheme scheme) {
  std::vector<Sample> out;
  for (const auto& s : image.samples) {
    if (s.label(scheme) != Label::FleshAuto) out.push_back(s);
  }
  return out;
}

HoldOut hold_out_images(std::span<const ImageRecord> corpus, std::size_t n_test, std::uint64_t seed) {
  if (n_test >= corpus.size()) {
    throw Error(ErrorCode::InsufficientData, "hold-out of " + std::to_string(n_test) + " images leaves no training pool (corpus has " +
                                                 std::to_string(corpus.size()) + ")");
  }
  std::vector<std::string> pos;
  std::vector<std::string> neg;
  for (const auto& img : corpus) (img.has_fracture() ? pos : neg).push_back(img.image_id);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  const std::size_t n_pos = std::min(pos.size(), static_cast<std::size_t>(std::lround(
                                                     static_cast<double>(n_test) * static_cast<double>(pos.size()) /
                                                     static_cast<double>(corpus.size()))));
  const std::size_t n_neg = std::min(neg.size(), n_test - n_pos);
  HoldOut h;
  h.test_images.insert(h.test_images.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
  h.test_images.insert(h.test_images.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
  h.train_pool.insert(h.train_pool.end(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos), pos.end());
  h.train_pool.insert(h.train_pool.end(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg), neg.end());
  std::sort(h.test_images.begin(), h.test_images.end());
  std::sort(h.train_pool.begin(), h.train_pool.end());
  return h;
}

DatasetSplit split_system_eval(std::span<const ImageRecord> corpus, const HoldOut& holdout, std::size_t n_train_images,
                               Scheme scheme, std::uint64_t seed) {
  if (n_train_images > holdout.train_pool.size()) {
    throw Error(ErrorCode::InsufficientData, "requested " + std::to_string(n_train_images) + " training images but the pool holds " +
                                                 std::to_string(holdout.train_pool.size()));
  }
  std::map<std::string, const ImageRecord*> by_id;
  for (const auto& img : corpus) by_id[img.image_id] = &img;
  auto lookup = [&](const std::string& id) -> const ImageRecord& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::NotFound, "image " + id + " is not in the corpus");
    return *it->second;
  };

  std::vector<std::string> pool = holdout.train_pool;
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(n_train_images);
  std::sort(pool.begin(), pool.end());

  DatasetSplit split;
  split.protocol = Protocol::SystemEval;
  split.seed = seed;
  for (const auto& id : pool) {
    auto s = scheme_samples(lookup(id), scheme);
    split.train.insert(split.train.end(), s.begin(), s.end());
  }
  for (const auto& id : holdout.test_images) {
    auto s = scheme_samples(lookup(id), scheme);
    split.test.insert(split.test.end(), s.begin(), s.end());
  }
  return split;
}

DatasetSplit split_ann_eval(std::span<const Sample> pool, std::span<const Sample> test, std::size_t per_class,
                            Scheme scheme, std::uint64_t seed) {
  if (per_class == 0) throw Error(ErrorCode::InsufficientData, "per_class must be positive");
  std::vector<Sample> pos;
  std::vector<Sample> neg;
  for (const auto& s : pool) {
    const Label l = s.label(scheme);
    if (l == Label::FleshAuto) continue;
    (is_fractured(l) ? pos : neg).push_back(s);
  }
  if (pos.size() < per_class || neg.size() < per_class) {
    throw Error(ErrorCode::InsufficientData, "pool holds " + std::to_string(pos.size()) + " fractured and " +
                                                 std::to_string(neg.size()) + " non-fractured contours, need " +
                                                 std::to_string(per_class) + " of each");
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  DatasetSplit split;
  split.protocol = Protocol::AnnEval;
  split.seed = seed;
  split.train.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(per_class));
  split.train.insert(split.train.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(per_class));
  for (const auto& s : test) {
    if (s.label(scheme) != Label::FleshAuto) split.test.push_back(s);
  }
  return split;
}

}  // namespace chfb
