#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "chfb/dataset.hpp"
#include "chfb/error.hpp"
#include "chfb/image_io.hpp"
#include "chfb/label_store.hpp"
#include "chfb/rng.hpp"
#include "chfb/synthetic.hpp"

using namespace chfb;
namespace fs = std::filesystem;

namespace {

RefinedContour segment(Point a, Point b, int id = 0) {
  RefinedContour rc;
  rc.source_id = id;
  rc.points = {a, b};
  rc.end_index = 1;
  return rc;
}

std::vector<std::pair<int, int>> central_mass(int n, int lo, int hi, Rng& rng) {
  std::vector<std::pair<int, int>> xs;
  for (int i = 0; i < n; ++i) {
    xs.emplace_back(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))),
                    lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
  }
  return xs;
}

/// Corpus of images with a few fractured, non-fractured and flesh contours each.
std::vector<ImageRecord> toy_corpus(int n_images, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ImageRecord> corpus;
  for (int i = 0; i < n_images; ++i) {
    ImageRecord img;
    img.image_id = "img" + std::to_string(100 + i);
    img.width = 100;
    img.height = 200;
    const int n = 8 + static_cast<int>(rng.below(8));
    for (int k = 0; k < n; ++k) {
      Sample s;
      s.image_id = img.image_id;
      s.contour_id = k;
      s.features.n_c = 3 + k;
      s.features.x1 = static_cast<int>(rng.below(100));
      s.flesh = rng.uniform() < 0.25;
      s.area_label = (i % 2 == 0 && rng.uniform() < 0.4) ? Label::Fractured : Label::NonFractured;
      img.samples.push_back(s);
    }
    corpus.push_back(std::move(img));
  }
  return corpus;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chfb_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(AreaLabel, EmptyRectsLeaveEverythingNonFractured) {
  const std::vector<RefinedContour> cs{segment({1, 1}, {2, 2}), segment({50, 50}, {51, 51})};
  for (Label l : label_by_area(cs, {}, 100, 100)) EXPECT_EQ(l, Label::NonFractured);
}

TEST(AreaLabel, StartPointInside) {
  const std::vector<RefinedContour> cs{segment({50, 50}, {90, 90})};
  const std::vector<Rect> rects{{40, 40, 60, 60}};
  EXPECT_EQ(label_by_area(cs, rects, 100, 100)[0], Label::Fractured);
}

TEST(AreaLabel, BoundaryIsOutside) {
  const std::vector<RefinedContour> cs{segment({40, 50}, {90, 90}), segment({41, 41}, {0, 0})};
  const std::vector<Rect> rects{{40, 40, 60, 60}};
  const auto l = label_by_area(cs, rects, 100, 100);
  EXPECT_EQ(l[0], Label::NonFractured);
  EXPECT_EQ(l[1], Label::Fractured);
}

TEST(AreaLabel, ContainmentOracle) {
  Rng rng(1);
  std::vector<RefinedContour> cs;
  for (int i = 0; i < 200; ++i) {
    cs.push_back(segment({static_cast<int>(rng.below(200)), static_cast<int>(rng.below(150))},
                         {static_cast<int>(rng.below(200)), static_cast<int>(rng.below(150))}));
  }
  const std::vector<Rect> rects{{10, 10, 60, 40}, {100, 20, 180, 90}, {30, 100, 70, 149}};
  const auto labels = label_by_area(cs, rects, 200, 150);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    bool inside = false;
    for (const auto& r : rects) {
      for (const Point p : {cs[i].start(), cs[i].end()}) {
        inside |= p.x > r.x0 && p.x < r.x1 && p.y > r.y0 && p.y < r.y1;
      }
    }
    EXPECT_EQ(labels[i], inside ? Label::Fractured : Label::NonFractured) << i;
  }
}

TEST(AreaLabel, Monotone) {
  Rng rng(2);
  std::vector<RefinedContour> cs;
  for (int i = 0; i < 100; ++i) {
    cs.push_back(segment({static_cast<int>(rng.below(100)), static_cast<int>(rng.below(100))},
                         {static_cast<int>(rng.below(100)), static_cast<int>(rng.below(100))}));
  }
  std::vector<Rect> rects;
  auto prev = label_by_area(cs, rects, 100, 100);
  for (int k = 0; k < 6; ++k) {
    const int x0 = static_cast<int>(rng.below(80)), y0 = static_cast<int>(rng.below(80));
    rects.push_back({x0, y0, x0 + 1 + static_cast<int>(rng.below(20)), y0 + 1 + static_cast<int>(rng.below(20))});
    const auto now = label_by_area(cs, rects, 100, 100);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (prev[i] == Label::Fractured) {
        EXPECT_EQ(now[i], Label::Fractured);
      }
    }
    prev = now;
  }
}

TEST(AreaLabel, InvalidRect) {
  const std::vector<RefinedContour> cs{segment({1, 1}, {2, 2})};
  const std::vector<Rect> outside{{10, 10, 120, 20}};
  EXPECT_THROW(label_by_area(cs, outside, 100, 100), Error);
  EXPECT_THROW(validate_rect({5, 5, 5, 9}, 100, 100), Error);
  EXPECT_THROW(validate_rect({-1, 5, 8, 9}, 100, 100), Error);
  EXPECT_NO_THROW(validate_rect({0, 0, 100, 100}, 100, 100));
  EXPECT_EQ(rect_from_json(rect_to_json({1, 2, 3, 4})), (Rect{1, 2, 3, 4}));
}

TEST(Flesh, NarrowBandHasNoFlesh) {
  Rng rng(3);
  const auto xs = central_mass(40, 45, 55, rng);
  const auto p = isolate_flesh(xs, 100);
  EXPECT_TRUE(p.flesh.empty());
  EXPECT_EQ(p.bone.size(), 40u);
  EXPECT_FALSE(p.skipped);
}

TEST(Flesh, BorderOutliersAreFlesh) {
  Rng rng(4);
  auto xs = central_mass(30, 40, 60, rng);
  xs.emplace_back(2, 5);
  xs.emplace_back(96, 98);
  // Straddling contour: one endpoint in the bone band keeps it bone.
  xs.emplace_back(3, 50);
  const auto p = isolate_flesh(xs, 100);
  EXPECT_EQ(p.flesh, (std::vector<std::size_t>{30, 31}));
  EXPECT_LE(p.band_x0, 40);
  EXPECT_GE(p.band_x1, 60);
  EXPECT_EQ(p.bone.size() + p.flesh.size(), xs.size());
}

TEST(Flesh, BandHoldsRequiredShare) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<int, int>> xs;
    const int n = 10 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      xs.emplace_back(static_cast<int>(rng.below(150)), static_cast<int>(rng.below(150)));
    }
    const auto p = isolate_flesh(xs, 150);
    int inside = 0;
    for (const auto& [a, b] : xs) {
      inside += (a >= p.band_x0 && a <= p.band_x1) + (b >= p.band_x0 && b <= p.band_x1);
    }
    EXPECT_GE(inside, 0.6 * 2 * n);
    EXPECT_EQ(p.bone.size() + p.flesh.size(), xs.size());
    for (auto i : p.flesh) {
      EXPECT_TRUE(xs[i].first < p.band_x0 || xs[i].first > p.band_x1);
      EXPECT_TRUE(xs[i].second < p.band_x0 || xs[i].second > p.band_x1);
    }
  }
}

TEST(Flesh, TooFewContoursSkipped) {
  const std::vector<std::pair<int, int>> xs{{1, 2}, {98, 99}, {50, 50}};
  const auto p = isolate_flesh(xs, 100);
  EXPECT_TRUE(p.skipped);
  EXPECT_TRUE(p.flesh.empty());
  EXPECT_EQ(p.bone.size(), 3u);
}

TEST(Scheme, LabelsAndNames) {
  Sample s;
  s.flesh = true;
  s.area_label = Label::Fractured;
  EXPECT_EQ(s.label(Scheme::Standard), Label::Fractured);
  EXPECT_EQ(s.label(Scheme::Improved), Label::FleshAuto);
  EXPECT_EQ(scheme_from_string("improved-chfb"), Scheme::Improved);
  EXPECT_EQ(scheme_from_string("standard"), Scheme::Standard);
  EXPECT_THROW(scheme_from_string("other"), Error);
}

TEST(Splits, SystemEvalIsDeterministicAndDisjoint) {
  const auto corpus = toy_corpus(30, 6);
  const auto h = hold_out_images(corpus, 10, 77);
  EXPECT_EQ(h.test_images.size(), 10u);
  EXPECT_EQ(h.train_pool.size(), 20u);
  std::set<std::string> pool(h.train_pool.begin(), h.train_pool.end());
  for (const auto& id : h.test_images) EXPECT_FALSE(pool.count(id));
  const auto a = split_system_eval(corpus, h, 7, Scheme::Standard, 123);
  const auto b = split_system_eval(corpus, h, 7, Scheme::Standard, 123);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  std::set<std::pair<std::string, int>> train_ids, test_ids;
  std::set<std::string> train_images;
  for (const auto& s : a.train) {
    train_ids.insert({s.image_id, s.contour_id});
    train_images.insert(s.image_id);
  }
  for (const auto& s : a.test) test_ids.insert({s.image_id, s.contour_id});
  EXPECT_EQ(train_images.size(), 7u);
  for (const auto& k : train_ids) EXPECT_FALSE(test_ids.count(k));
  EXPECT_EQ(train_ids.size(), a.train.size());
}

TEST(Splits, StratifiedHoldOut) {
  const auto corpus = toy_corpus(30, 7);
  std::size_t pos = 0;
  for (const auto& img : corpus) pos += img.has_fracture();
  const auto h = hold_out_images(corpus, 9, 1);
  std::size_t test_pos = 0;
  for (const auto& img : corpus) {
    if (std::count(h.test_images.begin(), h.test_images.end(), img.image_id)) test_pos += img.has_fracture();
  }
  EXPECT_NEAR(static_cast<double>(test_pos), 9.0 * pos / corpus.size(), 1.0);
}

TEST(Splits, TooManyTrainingImages) {
  const auto corpus = toy_corpus(10, 8);
  const auto h = hold_out_images(corpus, 4, 1);
  EXPECT_THROW(split_system_eval(corpus, h, 7, Scheme::Standard, 1), Error);
  EXPECT_THROW(hold_out_images(corpus, 10, 1), Error);
}

TEST(Splits, ImprovedSchemeDropsFlesh) {
  const auto corpus = toy_corpus(30, 9);
  const auto h = hold_out_images(corpus, 10, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto split = split_system_eval(corpus, h, 12, Scheme::Improved, seed);
    for (const auto& s : split.train) EXPECT_FALSE(s.flesh);
    for (const auto& s : split.test) EXPECT_FALSE(s.flesh);
  }
  std::size_t leg = 0, kept = 0;
  for (const auto& img : corpus) {
    leg += img.samples.size();
    kept += scheme_samples(img, Scheme::Improved).size();
    std::size_t flesh = 0;
    for (const auto& s : img.samples) flesh += s.flesh;
    EXPECT_EQ(scheme_samples(img, Scheme::Improved).size() + flesh, img.samples.size());
    EXPECT_EQ(scheme_samples(img, Scheme::Standard).size(), img.samples.size());
  }
  EXPECT_LT(kept, leg);
}

TEST(Splits, AnnEvalBalanced) {
  const auto corpus = toy_corpus(40, 10);
  std::vector<Sample> pool;
  for (const auto& img : corpus) pool.insert(pool.end(), img.samples.begin(), img.samples.end());
  for (Scheme scheme : {Scheme::Standard, Scheme::Improved}) {
    const auto split = split_ann_eval(pool, pool, 5, scheme, 42);
    ASSERT_EQ(split.train.size(), 10u);
    int pos = 0;
    for (const auto& s : split.train) pos += is_fractured(s.label(scheme));
    EXPECT_EQ(pos, 5);
    std::set<std::pair<std::string, int>> unique;
    for (const auto& s : split.train) unique.insert({s.image_id, s.contour_id});
    EXPECT_EQ(unique.size(), 10u);
    if (scheme == Scheme::Improved) {
      for (const auto& s : split.test) EXPECT_NE(s.label(scheme), Label::FleshAuto);
      for (const auto& s : split.train) EXPECT_NE(s.label(scheme), Label::FleshAuto);
    }
  }
  EXPECT_THROW(split_ann_eval(pool, pool, 0, Scheme::Standard, 1), Error);
  EXPECT_THROW(split_ann_eval(pool, pool, 10000, Scheme::Standard, 1), Error);
}

TEST(LabelStore, ApplyReplayAndLabels) {
  LabelDocument doc;
  doc.image_id = "a";
  doc.flesh = {3};
  const std::vector<RefinedContour> cs{segment({10, 10}, {0, 0}, 0), segment({12, 12}, {90, 90}, 1),
                                       segment({80, 80}, {81, 81}, 2), segment({11, 11}, {12, 12}, 3)};
  doc.apply({EventKind::AddRect, Rect{5, 5, 20, 20}, 0, {}});
  auto labels = compute_labels(doc, cs, 100, 100);
  EXPECT_EQ(labels[0], Label::Fractured);
  EXPECT_EQ(labels[1], Label::Fractured);
  EXPECT_EQ(labels[2], Label::NonFractured);
  EXPECT_EQ(labels[3], Label::FleshAuto);
  doc.apply({EventKind::Deselect, {}, 1, {}});
  doc.apply({EventKind::Deselect, {}, 1, {}});
  EXPECT_EQ(compute_labels(doc, cs, 100, 100)[1], Label::NonFractured);
  doc.apply({EventKind::Reselect, {}, 1, {}});
  EXPECT_EQ(compute_labels(doc, cs, 100, 100)[1], Label::Fractured);
  doc.apply({EventKind::Cut, {}, 0, 4.5});
  doc.apply({EventKind::AddRect, Rect{70, 70, 85, 85}, 0, {}});
  doc.apply({EventKind::RemoveRect, {}, 0, {}});
  EXPECT_EQ(doc.revision, 7);
  EXPECT_EQ(doc.events.size(), 7u);
  labels = compute_labels(doc, cs, 100, 100);
  EXPECT_EQ(labels[0], Label::NonFractured);
  EXPECT_EQ(labels[2], Label::Fractured);
  doc.labels = labels;
  LabelDocument again = replay(doc);
  again.labels = compute_labels(again, cs, 100, 100);
  EXPECT_EQ(again, doc);
  EXPECT_THROW(doc.apply({EventKind::RemoveRect, {}, 5, {}}), Error);
}

TEST(LabelStore, JsonAndFileRoundTrip) {
  LabelDocument doc;
  doc.image_id = "x";
  doc.flesh = {1, 4};
  doc.apply({EventKind::AddRect, Rect{1, 2, 30, 40}, 0, {}});
  doc.apply({EventKind::Deselect, {}, 2, {}});
  doc.apply({EventKind::Cut, {}, 0, 3.25});
  doc.labels = {{0, Label::Fractured}, {1, Label::FleshAuto}, {2, Label::NonFractured}};
  const auto j = to_json(doc);
  EXPECT_EQ(j["version"], kLabelSchemaVersion);
  EXPECT_EQ(j["labels"]["1"], "flesh-auto");
  EXPECT_EQ(j["events"][0]["kind"], "add-rect");
  EXPECT_EQ(label_document_from_json(j), doc);
  const fs::path dir = scratch("labels");
  save_label_document(doc, dir / "x.json");
  EXPECT_EQ(load_label_document(dir / "x.json"), doc);
  EXPECT_THROW(load_label_document(dir / "missing.json"), Error);
}

TEST(Synthetic, NoFractureNoRects) {
  auto spec = random_spec(5, false);
  EXPECT_FALSE(spec.fracture.has_value());
  EXPECT_TRUE(generate_synthetic(spec).fracture_rects.empty());
  EXPECT_FALSE(random_spec(5, true).fracture == std::nullopt);
}

TEST(Synthetic, Deterministic) {
  const auto spec = random_spec(11, true);
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.fracture_rects, b.fracture_rects);
  EXPECT_EQ(a.image.width(), 192);
  EXPECT_EQ(a.image.height(), 384);
}

TEST(Synthetic, FractureLiesInLegBand) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto spec = random_spec(seed, true);
    const auto img = generate_synthetic(spec);
    ASSERT_FALSE(img.fracture_rects.empty());
    for (const auto& r : img.fracture_rects) {
      EXPECT_GE(r.y0, img.knee_end);
      EXPECT_LE(r.y1, img.foot_start);
      EXPECT_NO_THROW(validate_rect(r, spec.width, spec.height));
    }
  }
}

TEST(Synthetic, RenderedGapMatchesSpec) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto spec = random_spec(seed, true);
    spec.noise_sigma = 0.0;
    spec.flesh_folds = 0;
    spec.fracture->extra_cracks = 0;
    const auto img = generate_synthetic(spec);
    const auto& f = *spec.fracture;
    const int x = tibia_centre_column(spec, f.y);
    const int centre = static_cast<int>(std::lround(f.y));
    ASSERT_LT(img.image.at(x, centre), 128) << "seed " << seed;
    int first = centre, last = centre;
    while (img.image.at(x, first - 1) < 128) --first;
    while (img.image.at(x, last + 1) < 128) ++last;
    // Expected rows: a band of `gap` rows centred on the crack centre line.
    EXPECT_NEAR(first, f.y - f.gap / 2.0, 1.0) << "seed " << seed;
    EXPECT_NEAR(last + 1, f.y + f.gap / 2.0, 1.0) << "seed " << seed;
  }
}

TEST(Synthetic, InvalidSpec) {
  SyntheticSpec s;
  s.knee_end = 0.9;
  EXPECT_THROW(validate(s), Error);
  SyntheticSpec t;
  t.fracture = FractureSpec{10.0};
  EXPECT_THROW(validate(t), Error);
}

TEST(Synthetic, CorpusWriter) {
  const fs::path dir = scratch("corpus");
  const auto entries = write_synthetic_corpus(dir, 6, 3, 99);
  ASSERT_EQ(entries.size(), 6u);
  int fractured = 0;
  for (const auto& e : entries) {
    fractured += e.fractured;
    EXPECT_TRUE(fs::exists(dir / "images" / (e.image_id + ".png")));
    const auto doc = load_label_document(dir / "labels" / (e.image_id + ".json"));
    EXPECT_EQ(doc.rects.empty(), !e.fractured);
    EXPECT_EQ(read_image(dir / "images" / (e.image_id + ".png")).width(), 192);
  }
  EXPECT_EQ(fractured, 3);
  std::ifstream manifest(dir / "manifest.csv");
  std::string line;
  int lines = 0;
  while (std::getline(manifest, line)) ++lines;
  EXPECT_EQ(lines, 7);
}
