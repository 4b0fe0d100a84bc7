#include "commands.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <fstream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chfb/analysis.hpp"
#include "chfb/ann.hpp"
#include "chfb/annotator.hpp"
#include "chfb/clustering.hpp"
#include "chfb/error.hpp"
#include "chfb/evaluation.hpp"
#include "chfb/image_io.hpp"
#include "chfb/parallel.hpp"
#include "chfb/report.hpp"
#include "chfb/rng.hpp"
#include "chfb/synthetic.hpp"
#include "server.hpp"

namespace chfb {

namespace fs = std::filesystem;

namespace {

std::vector<ImageRecord> require_corpus(const PipelineConfig& cfg) {
  auto corpus = load_corpus(cfg.out_dir);
  if (corpus.empty()) {
    throw Error(ErrorCode::NotFound, "no processed images under " + cfg.out_dir.string() +
                                         " (missing meta.json/contours.json/features.csv); run 'chfb process' first");
  }
  return corpus;
}

fs::path reports_dir(const PipelineConfig& cfg) {
  auto dir = cfg.out_dir / "reports";
  fs::create_directories(dir);
  return dir;
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& w) {
  std::ostringstream s;
  w(s);
  write_text_file(path, s.str());
}

std::string stem(Scheme s) { return std::string(to_string(s)); }

}  // namespace

void load_config_file(PipelineConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key;
    for (const auto& p : item.parents) {
      if (p == "default") continue;
      key += p + ".";
    }
    key += item.name;
    if (item.inputs.size() != 1) throw Error(ErrorCode::Config, key + ": expected a single value");
    apply_config_value(cfg, key, item.inputs.front());
  }
}

int cmd_process(const PipelineConfig& cfg) {
  const auto images = list_images(cfg.images_dir);
  if (images.empty()) {
    spdlog::warn("no images found in {}", cfg.images_dir.string());
    return kExitOk;
  }
  fs::create_directories(cfg.out_dir);
  std::vector<int> failed(images.size(), 0);
  parallel_for(images.size(), cfg.workers, [&](std::size_t i) {
    const auto& path = images[i];
    const auto id = path.stem().string();
    try {
      const auto raw = read_image(path);
      std::optional<LabelDocument> doc;
      const auto label_path = cfg.labels_dir / (id + ".json");
      if (fs::exists(label_path)) doc = load_label_document(label_path);
      const auto p = process_image(raw, id, cfg, doc ? &*doc : nullptr);
      write_artifacts(p, cfg.scheme, cfg.out_dir / id);
      spdlog::info("{}: {} contours, {} flesh", id, p.contours.size(), p.flesh.size());
    } catch (const std::exception& e) {
      spdlog::error("{}: {}", path.string(), e.what());
      failed[i] = 1;
    }
  });
  const auto n_failed = std::count(failed.begin(), failed.end(), 1);
  if (n_failed > 0) {
    spdlog::error("{} of {} images failed", n_failed, images.size());
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_train(const PipelineConfig& cfg) {
  const auto corpus = require_corpus(cfg);
  std::vector<ContourFeatures> feats;
  std::vector<Label> labels;
  for (const auto& img : corpus) {
    for (const auto& s : scheme_samples(img, cfg.scheme)) {
      feats.push_back(s.features);
      labels.push_back(s.label(cfg.scheme));
    }
  }
  Normalizer norm;
  norm.fit(feats);
  std::vector<FeatureVector> inputs;
  for (const auto& f : feats) inputs.push_back(norm.normalize(f));
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, {0x7a17});
  auto initial = init_model(tc);
  initial.normalizer = norm;
  const auto result = train(initial, inputs, labels, tc);
  save_model(result.model, cfg.out_dir / "model.json");
  write_with(reports_dir(cfg) / "train_history.csv", [&](std::ostream& out) {
    out << "epoch,train_loss,validation_loss\n";
    for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
      out << e + 1 << ',' << format_number(result.train_loss[e]) << ','
          << (e < result.validation_loss.size() ? format_number(result.validation_loss[e]) : std::string()) << '\n';
    }
  });
  spdlog::info("trained on {} contours; kept epoch {}", inputs.size(), result.best_epoch);
  return kExitOk;
}

int cmd_eval(const PipelineConfig& cfg) {
  const auto corpus = require_corpus(cfg);
  const auto dir = reports_dir(cfg);
  std::vector<Scheme> schemes;
  if (cfg.eval.compare_schemes) {
    schemes = {Scheme::Standard, Scheme::Improved};
  } else {
    schemes = {cfg.scheme};
  }

  SystemEvalConfig sys;
  sys.n_cases = cfg.eval.n_cases;
  sys.n_sims = cfg.eval.n_sims;
  sys.n_test_images = cfg.eval.n_test_images;
  sys.threshold = cfg.eval.threshold;
  sys.train = cfg.train;
  sys.seed = cfg.seed;
  sys.workers = cfg.workers;
  AnnEvalConfig ann;
  ann.step = cfg.eval.ann_step;
  ann.max_per_class = cfg.eval.ann_max_per_class;
  ann.n_test_images = cfg.eval.n_test_images;
  ann.threshold = cfg.eval.threshold;
  ann.train = cfg.train;
  ann.seed = cfg.seed;
  ann.workers = cfg.workers;

  nlohmann::json summary = nlohmann::json::object();
  std::vector<ChartSeries> accuracy_lines;
  std::vector<ChartSeries> ann_lines;
  for (Scheme s : schemes) {
    const auto report = run_system_eval(corpus, s, sys);
    write_with(dir / ("system_" + stem(s) + ".csv"), [&](std::ostream& o) { write_case_report_csv(o, report); });
    write_text_file(dir / ("system_" + stem(s) + ".json"), to_json(report).dump(2) + "\n");
    write_with(dir / ("predictions_" + stem(s) + ".csv"), [&](std::ostream& o) { write_predictions_csv(o, report.predictions); });

    std::vector<ScoredLabel> last_case;
    for (const auto& p : report.predictions) {
      if (p.case_index == sys.n_cases) last_case.push_back({p.score, p.truth});
    }
    nlohmann::json entry{{"overall_avg_accuracy", report.overall_avg_accuracy},
                         {"final_case_avg_accuracy", report.rows.back().avg_accuracy}};
    try {
      const auto curve = roc(last_case);
      write_with(dir / ("roc_" + stem(s) + ".csv"), [&](std::ostream& o) { write_roc_csv(o, curve); });
      entry["final_case_auc"] = curve.auc;
    } catch (const Error& e) {
      spdlog::warn("{}: no ROC for the final case: {}", stem(s), e.what());
      entry["final_case_auc"] = nullptr;
    }

    ChartSeries line{stem(s) + "-chfb", {}, {}};
    ChartSeries fp{"FP %", {}, {}};
    ChartSeries fn{"FN %", {}, {}};
    std::vector<std::string> cats;
    for (const auto& r : report.rows) {
      line.x.push_back(r.case_index);
      line.y.push_back(100.0 * r.avg_accuracy);
      fp.y.push_back(r.fp_percent);
      fn.y.push_back(r.fn_percent);
      cats.push_back(std::to_string(r.case_index));
    }
    accuracy_lines.push_back(line);
    write_text_file(dir / ("fp_fn_" + stem(s) + ".svg"), svg_bar_chart("False positives and negatives per case (" + stem(s) + ")", cats, {fp, fn}));

    const auto series = run_ann_eval(corpus, s, ann);
    for (const auto& w : series.warnings) spdlog::warn("{}: {}", stem(s), w);
    write_with(dir / ("ann_" + stem(s) + ".csv"), [&](std::ostream& o) { write_ann_series_csv(o, series); });
    write_text_file(dir / ("ann_" + stem(s) + ".json"), to_json(series).dump(2) + "\n");
    ChartSeries ann_line{stem(s) + "-chfb", {}, {}};
    for (const auto& r : series.rows) {
      ann_line.x.push_back(r.per_class);
      ann_line.y.push_back(100.0 * r.accuracy);
    }
    ann_lines.push_back(ann_line);
    summary[stem(s)] = entry;
    spdlog::info("{}: average accuracy {:.4f} over {} cases", stem(s), report.overall_avg_accuracy, report.rows.size());
  }
  write_text_file(dir / "accuracy.svg", svg_line_chart("Average accuracy per case", "training images", "accuracy (%)", accuracy_lines));
  write_text_file(dir / "ann_accuracy.svg", svg_line_chart("Accuracy against balanced training size", "contours per class", "accuracy (%)", ann_lines));
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

int cmd_analyze(const PipelineConfig& cfg) {
  const auto corpus = require_corpus(cfg);
  std::vector<ContourFeatures> feats;
  std::vector<LabelledFeatures> labelled;
  for (const auto& img : corpus) {
    for (const auto& s : scheme_samples(img, cfg.scheme)) {
      feats.push_back(s.features);
      labelled.push_back({s.features, s.label(cfg.scheme)});
    }
  }
  const auto dir = reports_dir(cfg);
  const auto corr = correlate(feats);
  write_with(dir / "correlation.csv", [&](std::ostream& o) { write_correlation_csv(o, corr); });
  write_text_file(dir / "correlation.json", correlation_to_json(corr).dump(2) + "\n");

  int status = kExitOk;
  const std::pair<LabelFilter, const char*> filters[] = {
      {LabelFilter::All, "all"}, {LabelFilter::Fractured, "fractured"}, {LabelFilter::NonFractured, "non_fractured"}};
  nlohmann::json pcas = nlohmann::json::object();
  for (const auto& [filter, name] : filters) {
    try {
      const auto rep = pca_contributions(labelled, filter);
      write_with(dir / (std::string("pca_") + name + ".csv"), [&](std::ostream& o) { write_contributions_csv(o, rep); });
      pcas[name] = pca_to_json(rep);
    } catch (const Error& e) {
      spdlog::warn("PCA over {} contours skipped: {}", name, e.what());
      status = kExitPartial;
    }
  }
  write_text_file(dir / "pca.json", pcas.dump(2) + "\n");
  return status;
}

int cmd_cluster(const PipelineConfig& cfg) {
  const auto model_path = cfg.out_dir / "model.json";
  if (!fs::exists(model_path)) {
    throw Error(ErrorCode::NotFound, "missing artifact " + model_path.string() + "; run 'chfb train' first");
  }
  const auto model = load_model(model_path);
  if (!model.normalizer.fitted()) throw Error(ErrorCode::UnfittedNormalizer, model_path.string() + " has no normalizer");
  const auto ids = processed_ids(cfg.out_dir);
  if (ids.empty()) throw Error(ErrorCode::NotFound, "no processed images under " + cfg.out_dir.string() + "; run 'chfb process' first");

  std::vector<int> failed(ids.size(), 0);
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    const auto dir = cfg.out_dir / ids[i];
    try {
      const auto rec = load_record(dir);
      const auto refined = load_refined(dir);
      std::vector<int> fractured;
      std::vector<Point> points;
      for (std::size_t k = 0; k < rec.samples.size(); ++k) {
        const auto& s = rec.samples[k];
        if (s.label(cfg.scheme) == Label::FleshAuto) continue;
        const double score = forward(model, model.normalizer.normalize(s.features));
        if (!is_fractured(classify_score(score, cfg.eval.threshold))) continue;
        fractured.push_back(s.contour_id);
        const auto pts = zero_gradient_points(refined[k]);
        points.insert(points.end(), pts.begin(), pts.end());
      }
      nlohmann::json out{{"image_id", ids[i]}, {"fractured_contours", fractured}};
      if (points.size() >= 2) {
        const auto d = build_dendrogram(points);
        out["dendrogram"] = to_json(d);
        out["auto_cut"] = to_json(auto_cut(d));
        out["warning"] = nullptr;
      } else {
        out["dendrogram"] = to_json(Dendrogram{points, {}});
        out["auto_cut"] = nullptr;
        out["warning"] = fractured.empty() ? "no contour was classified fractured"
                                           : "fractured contours contributed fewer than two 0-degree points";
      }
      write_text_file(dir / "cluster.json", out.dump() + "\n");
    } catch (const std::exception& e) {
      spdlog::error("{}: {}", ids[i], e.what());
      failed[i] = 1;
    }
  });
  return std::count(failed.begin(), failed.end(), 1) > 0 ? kExitPartial : kExitOk;
}

int cmd_synth(const PipelineConfig& cfg) {
  const auto entries = write_synthetic_corpus(cfg.out_dir, cfg.synth.n_images, cfg.synth.n_fractured, cfg.seed,
                                              cfg.synth.width, cfg.synth.height);
  spdlog::info("wrote {} synthetic images to {}", entries.size(), cfg.out_dir.string());
  return kExitOk;
}

namespace {
std::atomic<HttpServer*> g_server{nullptr};
}

int cmd_serve(const PipelineConfig& cfg) {
  if (!fs::is_directory(cfg.out_dir)) {
    throw Error(ErrorCode::NotFound, "artifact directory " + cfg.out_dir.string() + " does not exist; run 'chfb process' first");
  }
  AnnotatorService service({cfg.out_dir, cfg.labels_dir, cfg.serve.token});
  HttpServer server(service, cfg.serve.ui_dir);
  const int port = server.bind(cfg.serve.host, cfg.serve.port);
  if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + cfg.serve.host + ":" + std::to_string(cfg.serve.port));
  spdlog::info("serving {} on http://{}:{}", cfg.out_dir.string(), cfg.serve.host, port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("chfb");
    l->set_pattern("[%l] %v");
    spdlog::set_default_logger(l);
    return l;
  }();

  CLI::App app{"Contour-based fracture detection for leg X-ray images"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::map<std::string, std::string> overrides;
  auto flag = [&](CLI::App& where, const std::string& name, const std::string& key, const std::string& help) {
    where.add_option_function<std::string>(name, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
  };
  app.add_option("--config", config_path, "TOML config file")->check(CLI::ExistingFile);
  flag(app, "--seed", "run.seed", "master seed");
  flag(app, "--workers", "run.workers", "parallel workers");
  flag(app, "--scheme", "run.scheme", "standard or improved");
  flag(app, "--out", "paths.out", "artifact directory (synth: corpus directory)");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  auto* process = app.add_subcommand("process", "enhance, trace, refine, segment and extract features per image");
  flag(*process, "--images", "paths.images", "input image directory");
  flag(*process, "--labels", "paths.labels", "label document directory");
  auto* train_cmd = app.add_subcommand("train", "train the classifier on every processed image");
  auto* eval = app.add_subcommand("eval", "run the system and balanced-sample evaluations");
  flag(*eval, "--cases", "eval.n_cases", "number of cases");
  flag(*eval, "--sims", "eval.n_sims", "simulations per case");
  auto* analyze = app.add_subcommand("analyze", "feature correlation and principal component contributions");
  auto* cluster = app.add_subcommand("cluster", "dendrograms over 0-degree points of fractured contours");
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  flag(*synth, "--n", "synth.n_images", "number of images");
  flag(*synth, "--fractured", "synth.n_fractured", "number of fractured images");
  auto* serve = app.add_subcommand("serve", "annotation service");
  flag(*serve, "--port", "serve.port", "listen port");
  flag(*serve, "--host", "serve.host", "listen address");
  flag(*serve, "--token", "serve.token", "bearer token");
  flag(*serve, "--ui", "serve.ui_dir", "built UI bundle directory");
  flag(*serve, "--labels", "paths.labels", "label document directory");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  logger->set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  PipelineConfig cfg;
  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& [k, v] : overrides) apply_config_value(cfg, k, v);
    validate(cfg);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }

  try {
    if (process->parsed()) return cmd_process(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (cluster->parsed()) return cmd_cluster(cfg);
    if (synth->parsed()) return cmd_synth(cfg);
    if (serve->parsed()) return cmd_serve(cfg);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::Config ? kExitConfig : kExitPartial;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitPartial;
  }
  return kExitConfig;
}

}  // namespace chfb
