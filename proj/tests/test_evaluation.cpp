#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "chfb/error.hpp"
#include "chfb/evaluation.hpp"
#include "chfb/report.hpp"
#include "chfb/rng.hpp"
#include "oracles.hpp"

using namespace chfb;

namespace {

/// Images whose fractured contours are longer than the rest, with overlap.
std::vector<ImageRecord> separable_corpus(int n_images, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ImageRecord> corpus;
  for (int i = 0; i < n_images; ++i) {
    ImageRecord img;
    img.image_id = "s" + std::to_string(1000 + i);
    img.width = 100;
    img.height = 200;
    for (int k = 0; k < 12; ++k) {
      Sample s;
      s.image_id = img.image_id;
      s.contour_id = k;
      const bool frac = k < 4;
      s.area_label = frac ? Label::Fractured : Label::NonFractured;
      s.flesh = !frac && k >= 10;
      s.features.n_c = frac ? 20 + static_cast<int>(rng.below(15)) : 3 + static_cast<int>(rng.below(15));
      s.features.dist_t = s.features.n_c * rng.uniform(0.8, 1.2);
      s.features.x1 = static_cast<int>(rng.below(100));
      s.features.y1 = static_cast<int>(rng.below(200));
      s.features.grad = rng.uniform(0, 90);
      img.samples.push_back(s);
    }
    corpus.push_back(std::move(img));
  }
  return corpus;
}

TrainConfig quick_train() {
  TrainConfig t;
  t.epochs = 40;
  t.patience = 10;
  return t;
}

}  // namespace

TEST(Metrics, WorkedExample) {
  ConfusionCounts c;
  for (int i = 0; i < 8; ++i) c.add(true, true);
  for (int i = 0; i < 2; ++i) c.add(true, false);
  for (int i = 0; i < 3; ++i) c.add(false, true);
  for (int i = 0; i < 87; ++i) c.add(false, false);
  EXPECT_EQ(c, (ConfusionCounts{8, 3, 87, 2}));
  const auto m = metrics(c);
  EXPECT_DOUBLE_EQ(*m.accuracy, 0.95);
  EXPECT_DOUBLE_EQ(*m.sensitivity, 0.8);
  EXPECT_DOUBLE_EQ(*m.specificity, 87.0 / 90.0);
  EXPECT_DOUBLE_EQ(*m.false_positive_rate, 3.0 / 90.0);
  EXPECT_DOUBLE_EQ(*m.specificity + *m.false_positive_rate, 1.0);
}

TEST(Metrics, ZeroDenominators) {
  const auto empty = metrics({});
  EXPECT_FALSE(empty.accuracy);
  EXPECT_FALSE(empty.sensitivity);
  const auto no_pos = metrics({0, 1, 4, 0});
  EXPECT_FALSE(no_pos.sensitivity);
  EXPECT_DOUBLE_EQ(*no_pos.specificity, 0.8);
}

TEST(Roc, SeparatedAndTied) {
  const std::vector<ScoredLabel> separated{{0.9, true}, {0.8, true}, {0.2, false}, {0.1, false}};
  EXPECT_DOUBLE_EQ(roc(separated).auc, 1.0);
  const std::vector<ScoredLabel> tied{{0.5, true}, {0.5, false}, {0.5, true}, {0.5, false}};
  EXPECT_DOUBLE_EQ(roc(tied).auc, 0.5);
  const std::vector<ScoredLabel> inverted{{0.1, true}, {0.9, false}};
  EXPECT_DOUBLE_EQ(roc(inverted).auc, 0.0);
}

TEST(Roc, MatchesPairwiseOracle) {
  Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ScoredLabel> scored;
    for (int i = 0; i < 200; ++i) {
      const bool pos = rng.uniform() < 0.3;
      // Coarse scores force ties.
      scored.push_back({std::round((pos ? 0.6 : 0.4) * 10 + rng.normal() * 2) / 10.0, pos});
    }
    scored[0].positive = true;
    scored[1].positive = false;
    EXPECT_NEAR(roc(scored).auc, oracle::pairwise_auc(scored), 1e-12);
  }
}

TEST(Roc, CurveShape) {
  Rng rng(72);
  std::vector<ScoredLabel> scored;
  for (int i = 0; i < 50; ++i) scored.push_back({rng.uniform(), i % 3 == 0});
  const auto c = roc(scored);
  ASSERT_GE(c.points.size(), 2u);
  EXPECT_EQ(c.points.front().fpr, 0.0);
  EXPECT_EQ(c.points.front().tpr, 0.0);
  EXPECT_EQ(c.points.back().fpr, 1.0);
  EXPECT_EQ(c.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
    EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    EXPECT_LT(c.points[i].threshold, c.points[i - 1].threshold);
  }
}

TEST(Roc, SingleClassIsUndefined) {
  const std::vector<ScoredLabel> pos{{0.3, true}, {0.6, true}};
  try {
    roc(pos);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UndefinedAuc);
  }
  EXPECT_THROW(roc(std::vector<ScoredLabel>{}), Error);
}

TEST(SystemEval, RowsMatchPredictionRecount) {
  const auto corpus = separable_corpus(18, 3);
  SystemEvalConfig cfg;
  cfg.n_cases = 4;
  cfg.n_sims = 3;
  cfg.train = quick_train();
  cfg.train.epochs = 400;
  cfg.train.patience = 50;
  cfg.seed = 5;
  const auto report = run_system_eval(corpus, Scheme::Improved, cfg);
  ASSERT_EQ(report.rows.size(), 4u);

  std::map<std::pair<std::string, int>, Label> truth;
  for (const auto& img : corpus) {
    for (const auto& s : img.samples) truth[{s.image_id, s.contour_id}] = s.label(Scheme::Improved);
  }
  std::map<std::pair<int, int>, ConfusionCounts> counts;
  std::map<int, std::vector<ScoredLabel>> pooled;
  for (const auto& p : report.predictions) {
    const Label l = truth.at({p.image_id, p.contour_id});
    ASSERT_NE(l, Label::FleshAuto);
    EXPECT_EQ(p.truth, l == Label::Fractured);
    EXPECT_EQ(p.predicted, p.score >= 0.5);
    counts[{p.case_index, p.simulation}].add(p.truth, p.predicted);
    pooled[p.case_index].push_back({p.score, p.truth});
  }
  double overall = 0.0;
  for (const auto& row : report.rows) {
    double lo = 2.0, hi = -1.0, sum = 0.0, fp = 0.0;
    for (int s = 0; s < 3; ++s) {
      const auto& c = counts.at({row.case_index, s});
      const double acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
      sum += acc;
      fp += 100.0 * static_cast<double>(c.fp) / static_cast<double>(c.total());
    }
    EXPECT_DOUBLE_EQ(row.min_accuracy, lo);
    EXPECT_DOUBLE_EQ(row.max_accuracy, hi);
    EXPECT_NEAR(row.avg_accuracy, sum / 3.0, 1e-12);
    EXPECT_NEAR(row.fp_percent, fp / 3.0, 1e-9);
    ASSERT_TRUE(row.pooled_auc);
    EXPECT_NEAR(*row.pooled_auc, oracle::pairwise_auc(pooled[row.case_index]), 1e-12);
    EXPECT_LE(row.min_accuracy, row.avg_accuracy);
    EXPECT_LE(row.avg_accuracy, row.max_accuracy);
    overall += row.avg_accuracy / 4.0;
  }
  EXPECT_NEAR(report.overall_avg_accuracy, overall, 1e-12);
  // Longer fractured contours are easy to separate once a few images train the model.
  EXPECT_GT(*report.rows.back().pooled_auc, 0.9);
}

TEST(SystemEval, WorkerCountDoesNotChangeResults) {
  const auto corpus = separable_corpus(12, 4);
  SystemEvalConfig cfg;
  cfg.n_cases = 3;
  cfg.n_sims = 2;
  cfg.train = quick_train();
  const auto a = run_system_eval(corpus, Scheme::Standard, cfg);
  cfg.workers = 4;
  const auto b = run_system_eval(corpus, Scheme::Standard, cfg);
  std::stringstream sa, sb;
  write_case_report_csv(sa, a);
  write_case_report_csv(sb, b);
  write_predictions_csv(sa, a.predictions);
  write_predictions_csv(sb, b.predictions);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(SystemEval, PoolShortfallNamesTheGap) {
  const auto corpus = separable_corpus(9, 5);
  SystemEvalConfig cfg;
  cfg.n_cases = 20;
  try {
    run_system_eval(corpus, Scheme::Standard, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
    EXPECT_NE(std::string(e.what()).find("short by 14"), std::string::npos) << e.what();
  }
}

TEST(AnnEval, SeriesSizesAndTruncation) {
  const auto corpus = separable_corpus(15, 6);
  AnnEvalConfig cfg;
  cfg.step = 5;
  cfg.max_per_class = 15;
  cfg.train = quick_train();
  const auto s = run_ann_eval(corpus, Scheme::Standard, cfg);
  ASSERT_EQ(s.rows.size(), 3u);
  EXPECT_TRUE(s.warnings.empty());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.rows[i].per_class, 5 * static_cast<int>(i + 1));
    EXPECT_EQ(s.rows[i].counts.total(), s.rows[0].counts.total());
  }
  cfg.max_per_class = 400;
  const auto t = run_ann_eval(corpus, Scheme::Improved, cfg);
  ASSERT_EQ(t.warnings.size(), 1u);
  // 10 training images hold 40 fractured contours.
  EXPECT_EQ(t.rows.size(), 8u);
  std::stringstream csv;
  write_ann_series_csv(csv, t);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "scheme,per_class,train_size,tp,fp,tn,fn,accuracy,auc");
}

TEST(Report, CaseCsvLayout) {
  CaseReport r;
  r.scheme = Scheme::Improved;
  CaseRow row;
  row.case_index = 1;
  row.simulations = 10;
  row.min_accuracy = 0.5;
  row.avg_accuracy = 0.75;
  row.max_accuracy = 1.0;
  row.pooled_auc = 0.8;
  r.rows.push_back(row);
  std::stringstream ss;
  write_case_report_csv(ss, r);
  std::string header, line;
  std::getline(ss, header);
  std::getline(ss, line);
  EXPECT_EQ(header,
            "scheme,case,simulations,min_accuracy,avg_accuracy,max_accuracy,fp_percent,fn_percent,sensitivity,"
            "specificity,false_positive_rate,pooled_auc,test_contours,test_fractured");
  EXPECT_EQ(line, "improved-chfb,1,10,0.5,0.75,1,0,0,,,,0.8,0,0");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  const auto svg = svg_line_chart("a<b", "x", "y", {{"s", {1, 2}, {0.5, 0.9}}});
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
}
