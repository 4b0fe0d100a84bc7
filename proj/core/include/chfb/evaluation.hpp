#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chfb/ann.hpp"
#include "chfb/dataset.hpp"

namespace chfb {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  void add(bool truth, bool predicted);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// Absent values mark a zero denominator.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;          ///< TP / (TP + FN)
  std::optional<double> specificity;          ///< TN / (FP + TN)
  std::optional<double> false_positive_rate;  ///< FP / (FP + TN)
};

Metrics metrics(const ConfusionCounts& c);

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

struct RocPoint {
  double threshold = 0.0;  ///< predictions are positive when score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  ///< from threshold +inf down to -inf
  double auc = 0.0;
};

/// Thresholds at +inf, every distinct score, and -inf; trapezoidal area.
/// Throws UndefinedAuc unless both classes are present.
RocCurve roc(std::span<const ScoredLabel> scored);

struct Prediction {
  int case_index = 0;  ///< training images (system) or per-class size (ann)
  int simulation = 0;
  std::string image_id;
  int contour_id = 0;
  double score = 0.0;
  bool truth = false;
  bool predicted = false;
};

struct CaseRow {
  int case_index = 0;
  std::size_t simulations = 0;
  double min_accuracy = 0.0;
  double avg_accuracy = 0.0;
  double max_accuracy = 0.0;
  double fp_percent = 0.0;  ///< mean over simulations of 100 * FP / total
  double fn_percent = 0.0;
  std::optional<double> avg_sensitivity;
  std::optional<double> avg_specificity;
  std::optional<double> avg_false_positive_rate;
  std::optional<double> pooled_auc;
  std::size_t test_contours = 0;
  std::size_t test_fractured = 0;
};

struct CaseReport {
  Scheme scheme = Scheme::Standard;
  std::vector<CaseRow> rows;
  std::vector<Prediction> predictions;
  double overall_avg_accuracy = 0.0;
};

struct SystemEvalConfig {
  int n_cases = 20;
  int n_sims = 10;
  std::size_t n_test_images = 0;  ///< 0 holds out a third of the corpus
  double threshold = 0.5;
  TrainConfig train;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Case c trains on c whole images sampled from the pool left after a fixed
/// stratified hold-out and tests on every held-out image; each of n_sims
/// simulations draws its own split from the master seed. Throws
/// InsufficientData naming the shortfall when the pool is too small.
CaseReport run_system_eval(std::span<const ImageRecord> corpus, Scheme scheme, const SystemEvalConfig& cfg);

struct AnnEvalRow {
  int per_class = 0;
  ConfusionCounts counts;
  double accuracy = 0.0;
  std::optional<double> auc;
};

struct AnnEvalSeries {
  Scheme scheme = Scheme::Standard;
  std::vector<AnnEvalRow> rows;
  std::vector<Prediction> predictions;
  std::vector<std::string> warnings;
};

struct AnnEvalConfig {
  int step = 5;
  int max_per_class = 375;
  std::size_t n_test_images = 0;
  double threshold = 0.5;
  TrainConfig train;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Balanced training samples of step, 2*step, ... per class drawn from the
/// contours of the training-pool images, evaluated on the held-out images.
/// Stops early with a warning when a class runs out.
AnnEvalSeries run_ann_eval(std::span<const ImageRecord> corpus, Scheme scheme, const AnnEvalConfig& cfg);

/// Normalizes with a normalizer fitted on the training side, trains, and
/// scores every test sample.
struct FittedSplit {
  NetworkModel model;
  std::vector<double> scores;
};
FittedSplit fit_and_score(const DatasetSplit& split, Scheme scheme, const TrainConfig& cfg);

}  // namespace chfb
