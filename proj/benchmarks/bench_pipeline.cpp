#include <benchmark/benchmark.h>

#include "chfb/ann.hpp"
#include "chfb/clustering.hpp"
#include "chfb/contour.hpp"
#include "chfb/features.hpp"
#include "chfb/image.hpp"
#include "chfb/rng.hpp"
#include "chfb/synthetic.hpp"

using namespace chfb;

namespace {

const GrayImage& fractured_leg() {
  static const GrayImage img = generate_synthetic(random_spec(11, true)).image;
  return img;
}

const EdgeMap& leg_edges() {
  static const EdgeMap e = detect_edges(enhance(fractured_leg(), {}), {});
  return e;
}

const std::vector<Contour>& leg_contours() {
  static const auto c = trace_contours(leg_edges());
  return c;
}

void BM_Enhance(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enhance(fractured_leg(), {}));
}
BENCHMARK(BM_Enhance)->Unit(benchmark::kMillisecond);

void BM_DetectEdges(benchmark::State& state) {
  const auto enhanced = enhance(fractured_leg(), {});
  for (auto _ : state) benchmark::DoNotOptimize(detect_edges(enhanced, {}));
}
BENCHMARK(BM_DetectEdges)->Unit(benchmark::kMillisecond);

void BM_TraceContours(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(trace_contours(leg_edges()));
  state.counters["contours"] = static_cast<double>(leg_contours().size());
}
BENCHMARK(BM_TraceContours)->Unit(benchmark::kMicrosecond);

void BM_RefineAll(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& c : leg_contours()) benchmark::DoNotOptimize(refine_contour(c));
  }
}
BENCHMARK(BM_RefineAll)->Unit(benchmark::kMicrosecond);

void BM_FeaturesAll(benchmark::State& state) {
  std::vector<RefinedContour> refined;
  for (const auto& c : leg_contours()) refined.push_back(refine_contour(c));
  for (auto _ : state) {
    for (const auto& rc : refined) {
      if (rc.points.size() >= 2) benchmark::DoNotOptimize(extract_features(rc, Region::Leg));
    }
  }
}
BENCHMARK(BM_FeaturesAll)->Unit(benchmark::kMicrosecond);

void BM_Dendrogram(benchmark::State& state) {
  Rng rng(5);
  std::vector<Point> pts;
  for (int i = 0; i < state.range(0); ++i) pts.push_back({static_cast<int>(rng.below(400)), static_cast<int>(rng.below(400))});
  for (auto _ : state) benchmark::DoNotOptimize(build_dendrogram(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dendrogram)->RangeMultiplier(2)->Range(64, 1024)->Complexity()->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto model = init_model({22, 16, 8, 1}, Activation::Logistic, 3);
  std::vector<double> in(22);
  Rng rng(6);
  for (auto& v : in) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(forward_raw(model, in));
}
BENCHMARK(BM_Forward);

void BM_TrainEpoch(benchmark::State& state) {
  Rng rng(7);
  Eigen::MatrixXd x(512, 22);
  Eigen::VectorXd y(512);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    y(i) = static_cast<double>(i % 2);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform() + 0.3 * y(i);
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.validation_fraction = 0.0;
  const auto model = init_model(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(train(model, x, y, cfg));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
