#include "chfb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chfb/error.hpp"
#include "chfb/parallel.hpp"
#include "chfb/rng.hpp"

namespace chfb {

void ConfusionCounts::add(bool truth, bool predicted) {
  if (truth) {
    ++(predicted ? tp : fn);
  } else {
    ++(predicted ? fp : tn);
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Metrics metrics(const ConfusionCounts& c) {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp + c.tn, c.total()), ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.fp + c.tn), ratio(c.fp, c.fp + c.tn)};
}

RocCurve roc(std::span<const ScoredLabel> scored) {
  std::size_t pos = 0;
  for (const auto& s : scored) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::InvalidInput, "ROC scores must be finite");
    pos += s.positive ? 1 : 0;
  }
  const std::size_t neg = scored.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::UndefinedAuc, "ROC needs both positive and negative samples");

  std::vector<ScoredLabel> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  RocCurve curve;
  const double inf = std::numeric_limits<double>::infinity();
  curve.points.push_back({inf, 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == t; ++i) ++(sorted[i].positive ? tp : fp);
    curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
  }
  curve.points.push_back({-inf, 1.0, 1.0});
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return curve;
}

FittedSplit fit_and_score(const DatasetSplit& split, Scheme scheme, const TrainConfig& cfg) {
  if (split.train.empty()) throw Error(ErrorCode::InsufficientData, "training split is empty");
  std::vector<ContourFeatures> train_features;
  train_features.reserve(split.train.size());
  for (const auto& s : split.train) train_features.push_back(s.features);
  Normalizer norm;
  norm.fit(train_features);

  std::vector<FeatureVector> inputs;
  std::vector<Label> labels;
  for (const auto& s : split.train) {
    inputs.push_back(norm.normalize(s.features));
    labels.push_back(s.label(scheme));
  }
  NetworkModel initial = init_model(cfg);
  initial.normalizer = norm;
  FittedSplit out;
  out.model = train(initial, inputs, labels, cfg).model;
  out.scores.reserve(split.test.size());
  for (const auto& s : split.test) out.scores.push_back(forward(out.model, norm.normalize(s.features)));
  return out;
}

namespace {

std::size_t resolve_test_count(std::size_t requested, std::size_t corpus) {
  return requested > 0 ? requested : corpus / 3;
}

struct SimResult {
  ConfusionCounts counts;
  std::vector<Prediction> predictions;
};

std::optional<double> pooled_auc(std::span<const Prediction> preds) {
  std::vector<ScoredLabel> scored;
  for (const auto& p : preds) scored.push_back({p.score, p.truth});
  try {
    return roc(scored).auc;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

CaseReport run_system_eval(std::span<const ImageRecord> corpus, Scheme scheme, const SystemEvalConfig& cfg) {
  if (cfg.n_cases < 1 || cfg.n_sims < 1) throw Error(ErrorCode::Config, "n_cases and n_sims must be >= 1");
  const std::size_t n_test = resolve_test_count(cfg.n_test_images, corpus.size());
  const HoldOut holdout = hold_out_images(corpus, n_test, derive_seed(cfg.seed, {0x401d}));
  if (holdout.train_pool.size() < static_cast<std::size_t>(cfg.n_cases)) {
    throw Error(ErrorCode::InsufficientData,
                "system evaluation needs " + std::to_string(cfg.n_cases) + " training-pool images after holding out " +
                    std::to_string(n_test) + ", but only " + std::to_string(holdout.train_pool.size()) +
                    " remain (short by " + std::to_string(cfg.n_cases - static_cast<int>(holdout.train_pool.size())) +
                    ")");
  }

  const auto n_cases = static_cast<std::size_t>(cfg.n_cases);
  const auto n_sims = static_cast<std::size_t>(cfg.n_sims);
  std::vector<SimResult> sims(n_cases * n_sims);
  parallel_for(sims.size(), cfg.workers, [&](std::size_t job) {
    const int c = static_cast<int>(job / n_sims) + 1;
    const int s = static_cast<int>(job % n_sims);
    const auto split_seed = derive_seed(cfg.seed, {0x5b17, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)});
    const auto split = split_system_eval(corpus, holdout, static_cast<std::size_t>(c), scheme, split_seed);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, {0x7a, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s)});
    const auto fitted = fit_and_score(split, scheme, tc);
    SimResult& r = sims[job];
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      const auto& sample = split.test[i];
      const bool truth = is_fractured(sample.label(scheme));
      const bool predicted = is_fractured(classify_score(fitted.scores[i], cfg.threshold));
      r.counts.add(truth, predicted);
      r.predictions.push_back({c, s, sample.image_id, sample.contour_id, fitted.scores[i], truth, predicted});
    }
  });

  CaseReport report;
  report.scheme = scheme;
  for (std::size_t c = 0; c < n_cases; ++c) {
    CaseRow row;
    row.case_index = static_cast<int>(c) + 1;
    row.simulations = n_sims;
    row.min_accuracy = std::numeric_limits<double>::infinity();
    row.max_accuracy = -std::numeric_limits<double>::infinity();
    double sens_sum = 0.0;
    double spec_sum = 0.0;
    double fpr_sum = 0.0;
    std::size_t sens_n = 0;
    std::size_t spec_n = 0;
    std::vector<Prediction> pooled;
    for (std::size_t s = 0; s < n_sims; ++s) {
      const auto& r = sims[c * n_sims + s];
      const auto m = metrics(r.counts);
      const double acc = m.accuracy.value_or(0.0);
      row.min_accuracy = std::min(row.min_accuracy, acc);
      row.max_accuracy = std::max(row.max_accuracy, acc);
      row.avg_accuracy += acc / static_cast<double>(n_sims);
      const auto total = static_cast<double>(std::max<std::size_t>(1, r.counts.total()));
      row.fp_percent += 100.0 * static_cast<double>(r.counts.fp) / total / static_cast<double>(n_sims);
      row.fn_percent += 100.0 * static_cast<double>(r.counts.fn) / total / static_cast<double>(n_sims);
      if (m.sensitivity) {
        sens_sum += *m.sensitivity;
        ++sens_n;
      }
      if (m.specificity) {
        spec_sum += *m.specificity;
        fpr_sum += *m.false_positive_rate;
        ++spec_n;
      }
      row.test_contours = r.counts.total();
      row.test_fractured = r.counts.tp + r.counts.fn;
      pooled.insert(pooled.end(), r.predictions.begin(), r.predictions.end());
    }
    if (sens_n > 0) row.avg_sensitivity = sens_sum / static_cast<double>(sens_n);
    if (spec_n > 0) {
      row.avg_specificity = spec_sum / static_cast<double>(spec_n);
      row.avg_false_positive_rate = fpr_sum / static_cast<double>(spec_n);
    }
    row.pooled_auc = pooled_auc(pooled);
    report.overall_avg_accuracy += row.avg_accuracy / static_cast<double>(n_cases);
    report.predictions.insert(report.predictions.end(), pooled.begin(), pooled.end());
    report.rows.push_back(row);
  }
  return report;
}

AnnEvalSeries run_ann_eval(std::span<const ImageRecord> corpus, Scheme scheme, const AnnEvalConfig& cfg) {
  if (cfg.step < 1 || cfg.max_per_class < cfg.step) throw Error(ErrorCode::Config, "need 1 <= step <= max_per_class");
  const std::size_t n_test = resolve_test_count(cfg.n_test_images, corpus.size());
  const HoldOut holdout = hold_out_images(corpus, n_test, derive_seed(cfg.seed, {0x401d}));
  const auto everything = split_system_eval(corpus, holdout, holdout.train_pool.size(), scheme, 0);

  std::size_t pos = 0;
  for (const auto& s : everything.train) pos += is_fractured(s.label(scheme)) ? 1 : 0;
  const std::size_t neg = everything.train.size() - pos;
  const std::size_t limit = std::min(pos, neg);

  AnnEvalSeries series;
  series.scheme = scheme;
  std::vector<int> sizes;
  for (int k = cfg.step; k <= cfg.max_per_class; k += cfg.step) {
    if (static_cast<std::size_t>(k) > limit) {
      series.warnings.push_back("series truncated at " + std::to_string(k - cfg.step) + " per class: pool holds " +
                                std::to_string(pos) + " fractured and " + std::to_string(neg) +
                                " non-fractured contours");
      break;
    }
    sizes.push_back(k);
  }

  std::vector<SimResult> results(sizes.size());
  parallel_for(sizes.size(), cfg.workers, [&](std::size_t job) {
    const int k = sizes[job];
    const auto seed = derive_seed(cfg.seed, {0xa44, static_cast<std::uint64_t>(k)});
    const auto split = split_ann_eval(everything.train, everything.test, static_cast<std::size_t>(k), scheme, seed);
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, {0x7b, static_cast<std::uint64_t>(k)});
    const auto fitted = fit_and_score(split, scheme, tc);
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      const auto& sample = split.test[i];
      const bool truth = is_fractured(sample.label(scheme));
      const bool predicted = is_fractured(classify_score(fitted.scores[i], cfg.threshold));
      results[job].counts.add(truth, predicted);
      results[job].predictions.push_back({k, 0, sample.image_id, sample.contour_id, fitted.scores[i], truth, predicted});
    }
  });
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    AnnEvalRow row;
    row.per_class = sizes[j];
    row.counts = results[j].counts;
    row.accuracy = metrics(row.counts).accuracy.value_or(0.0);
    row.auc = pooled_auc(results[j].predictions);
    series.rows.push_back(row);
    series.predictions.insert(series.predictions.end(), results[j].predictions.begin(), results[j].predictions.end());
  }
  return series;
}

}  // namespace chfb
