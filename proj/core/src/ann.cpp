#include "chfb/ann.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "chfb/error.hpp"
#include "chfb/rng.hpp"

namespace chfb {

namespace {

Eigen::MatrixXd logistic(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd hidden(const Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::Tanh) return z.array().tanh().matrix();
  return logistic(z);
}

Eigen::MatrixXd hidden_slope(const Eigen::MatrixXd& out, Activation a) {
  if (a == Activation::Tanh) return (1.0 - out.array().square()).matrix();
  return (out.array() * (1.0 - out.array())).matrix();
}

void check_shapes(const NetworkModel& m) {
  const std::size_t layers = m.layer_sizes.size();
  if (layers < 2 || m.weights.size() != layers - 1 || m.biases.size() != layers - 1) {
    throw Error(ErrorCode::Shape, "model tensors do not match its layer count");
  }
  if (m.layer_sizes.back() != 1) throw Error(ErrorCode::Shape, "output layer must have exactly one node");
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    if (m.weights[l].rows() != m.layer_sizes[l + 1] || m.weights[l].cols() != m.layer_sizes[l] ||
        m.biases[l].size() != m.layer_sizes[l + 1]) {
      throw Error(ErrorCode::Shape, "tensor shapes of layer " + std::to_string(l + 1) + " do not chain");
    }
  }
}

/// Activations of every layer for column-stacked inputs; acts[0] is the input.
std::vector<Eigen::MatrixXd> run(const NetworkModel& m, const Eigen::MatrixXd& input_cols, Eigen::RowVectorXd* logits) {
  std::vector<Eigen::MatrixXd> acts{input_cols};
  const std::size_t n_layers = m.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = m.weights[l] * acts.back();
    z.colwise() += m.biases[l];
    if (l + 1 == n_layers) {
      if (logits) *logits = z.row(0);
      acts.push_back(logistic(z));
    } else {
      acts.push_back(hidden(z, m.activation));
    }
  }
  return acts;
}

double bce_from_logit(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "logistic"; }

Activation activation_from_string(std::string_view s) {
  if (s == "logistic") return Activation::Logistic;
  if (s == "tanh") return Activation::Tanh;
  throw Error(ErrorCode::Config, "activation must be logistic or tanh, got " + std::string(s));
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorCode::Config, "learning_rate must be a finite non-negative number");
  }
  if (cfg.epochs < 1) throw Error(ErrorCode::Config, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorCode::Config, "batch_size must be >= 1");
  if (cfg.h1 < 1 || cfg.h2 < 1) throw Error(ErrorCode::Config, "hidden widths must be >= 1");
  if (cfg.patience < 1) throw Error(ErrorCode::Config, "patience must be >= 1");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
    throw Error(ErrorCode::Config, "validation_fraction must be in [0, 1)");
  }
}

bool NetworkModel::operator==(const NetworkModel& o) const {
  if (layer_sizes != o.layer_sizes || activation != o.activation || seed != o.seed || !(normalizer == o.normalizer) ||
      weights.size() != o.weights.size() || biases.size() != o.biases.size()) {
    return false;
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != o.weights[l].rows() || weights[l].cols() != o.weights[l].cols() ||
        weights[l] != o.weights[l] || biases[l].size() != o.biases[l].size() || biases[l] != o.biases[l]) {
      return false;
    }
  }
  return true;
}

NetworkModel init_model(const TrainConfig& cfg) {
  validate(cfg);
  return init_model({static_cast<int>(kInputWidth), cfg.h1, cfg.h2, 1}, cfg.activation, cfg.seed);
}

double init_scale(int fan_in, int fan_out, Activation activation) {
  const double glorot = std::sqrt(6.0 / (fan_in + fan_out));
  return activation == Activation::Logistic ? 4.0 * glorot : glorot;
}

NetworkModel init_model(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed) {
  if (layer_sizes.size() < 2 || std::any_of(layer_sizes.begin(), layer_sizes.end(), [](int s) { return s < 1; })) {
    throw Error(ErrorCode::Shape, "every layer needs at least one node");
  }
  NetworkModel m;
  m.layer_sizes = std::move(layer_sizes);
  m.activation = activation;
  m.seed = seed;
  Rng rng(derive_seed(seed, {0x1417}));
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const int fan_in = m.layer_sizes[l];
    const double s = init_scale(fan_in, m.layer_sizes[l + 1], activation);
    Eigen::MatrixXd w(m.layer_sizes[l + 1], fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-s, s);
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(m.layer_sizes[l + 1]));
  }
  return m;
}

double forward_raw(const NetworkModel& model, std::span<const double> input) {
  check_shapes(model);
  if (static_cast<int>(input.size()) != model.layer_sizes.front()) {
    throw Error(ErrorCode::Shape, "input has " + std::to_string(input.size()) + " values, model expects " +
                                      std::to_string(model.layer_sizes.front()));
  }
  Eigen::MatrixXd col = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  return run(model, col, nullptr).back()(0, 0);
}

double forward(const NetworkModel& model, const FeatureVector& v) {
  if (model.layer_sizes.empty() || model.layer_sizes.front() != static_cast<int>(kInputWidth)) {
    throw Error(ErrorCode::Shape, "model input width must be " + std::to_string(kInputWidth));
  }
  return forward_raw(model, v.values);
}

double loss_and_gradient(const NetworkModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         Gradients* grad) {
  check_shapes(model);
  if (x.cols() != model.layer_sizes.front() || x.rows() != y.size() || x.rows() == 0) {
    throw Error(ErrorCode::Shape, "batch shape does not match the model");
  }
  const auto n = static_cast<double>(x.rows());
  Eigen::RowVectorXd logits;
  const auto acts = run(model, x.transpose(), &logits);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) total += bce_from_logit(logits(i), y(i));
  const double mean = total / n;
  if (grad == nullptr) return mean;

  const std::size_t n_layers = model.weights.size();
  grad->weights.assign(n_layers, {});
  grad->biases.assign(n_layers, {});
  Eigen::MatrixXd delta = (acts.back() - y.transpose()) / n;
  for (std::size_t l = n_layers; l-- > 0;) {
    grad->weights[l] = delta * acts[l].transpose();
    grad->biases[l] = delta.rowwise().sum();
    if (l > 0) delta = (model.weights[l].transpose() * delta).cwiseProduct(hidden_slope(acts[l], model.activation));
  }
  return mean;
}

double loss(const NetworkModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return loss_and_gradient(model, x, y, nullptr);
}

TrainResult train(const NetworkModel& initial, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const TrainConfig& cfg) {
  validate(cfg);
  check_shapes(initial);
  if (x.rows() == 0) throw Error(ErrorCode::InsufficientData, "training set is empty");
  if (x.cols() != initial.layer_sizes.front() || x.rows() != y.size()) {
    throw Error(ErrorCode::Shape, "training data shape does not match the model");
  }

  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> canon(n);
  std::iota(canon.begin(), canon.end(), 0);
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    return y(a) < y(b);
  });

  Rng rng(derive_seed(cfg.seed, {0x7a1}));
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = 0;
  std::vector<std::size_t> train_rows = canon;
  std::vector<std::size_t> val_rows;
  if (n_val > 0) {
    rng.shuffle(train_rows);
    val_rows.assign(train_rows.begin(), train_rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_rows.erase(train_rows.begin(), train_rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    auto rank = [&](std::vector<std::size_t>& rows) {
      std::vector<std::size_t> pos(n);
      for (std::size_t i = 0; i < n; ++i) pos[canon[i]] = i;
      std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return pos[a] < pos[b]; });
    };
    rank(train_rows);
    rank(val_rows);
  }
  auto gather = [&](const std::vector<std::size_t>& rows, Eigen::MatrixXd& bx, Eigen::VectorXd& by) {
    bx.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    by.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      bx.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
      by(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
    }
  };
  Eigen::MatrixXd xt;
  Eigen::VectorXd yt;
  Eigen::MatrixXd xv;
  Eigen::VectorXd yv;
  gather(train_rows, xt, yt);
  if (n_val > 0) gather(val_rows, xv, yv);

  TrainResult result;
  NetworkModel model = initial;
  result.model = model;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> perm(train_rows.size());
  Gradients g;
  Eigen::MatrixXd bx;
  Eigen::VectorXd by;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (std::size_t start = 0; start < perm.size(); start += batch) {
      const std::size_t end = std::min(perm.size(), start + batch);
      bx.resize(static_cast<Eigen::Index>(end - start), xt.cols());
      by.resize(static_cast<Eigen::Index>(end - start));
      for (std::size_t i = start; i < end; ++i) {
        bx.row(static_cast<Eigen::Index>(i - start)) = xt.row(static_cast<Eigen::Index>(perm[i]));
        by(static_cast<Eigen::Index>(i - start)) = yt(static_cast<Eigen::Index>(perm[i]));
      }
      const double batch_loss = loss_and_gradient(model, bx, by, &g);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
      }
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= cfg.learning_rate * g.weights[l];
        model.biases[l] -= cfg.learning_rate * g.biases[l];
      }
    }
    const double tl = loss(model, xt, yt);
    if (!std::isfinite(tl) || !model.weights.back().allFinite()) {
      throw Error(ErrorCode::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
    }
    result.train_loss.push_back(tl);
    if (n_val == 0) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    const double vl = loss(model, xv, yv);
    result.validation_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

TrainResult train(const NetworkModel& initial, std::span<const FeatureVector> inputs, std::span<const Label> labels,
                  const TrainConfig& cfg) {
  if (inputs.size() != labels.size()) throw Error(ErrorCode::Shape, "inputs and labels differ in length");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(kInputWidth));
  Eigen::VectorXd y(static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t c = 0; c < kInputWidth; ++c) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = inputs[i][c];
    y(static_cast<Eigen::Index>(i)) = is_fractured(labels[i]) ? 1.0 : 0.0;
  }
  return train(initial, x, y, cfg);
}

Label classify_score(double score, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "classification threshold must lie strictly between 0 and 1");
  }
  return score >= threshold ? Label::Fractured : Label::NonFractured;
}

Label classify(const NetworkModel& model, const FeatureVector& v, double threshold) {
  return classify_score(forward(model, v), threshold);
}

nlohmann::json normalizer_to_json(const Normalizer& n) {
  if (!n.fitted()) return nullptr;
  return {{"mins", n.mins()}, {"maxs", n.maxs()}};
}

Normalizer normalizer_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  return Normalizer(j.at("mins").get<std::array<double, kFeatureCount>>(),
                    j.at("maxs").get<std::array<double, kFeatureCount>>());
}

nlohmann::json to_json(const NetworkModel& model) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(model.weights[l].cols()));
      for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) row[static_cast<std::size_t>(c)] = model.weights[l](r, c);
      rows.push_back(row);
    }
    weights.push_back(std::move(rows));
    biases.push_back(std::vector<double>(model.biases[l].data(), model.biases[l].data() + model.biases[l].size()));
  }
  return {{"version", kModelSchemaVersion},
          {"layer_sizes", model.layer_sizes},
          {"weights", weights},
          {"biases", biases},
          {"activation", to_string(model.activation)},
          {"normalizer", normalizer_to_json(model.normalizer)},
          {"seed", model.seed}};
}

NetworkModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kModelSchemaVersion) {
      throw Error(ErrorCode::Parse, "unsupported model version " + j.at("version").dump());
    }
    NetworkModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    m.activation = activation_from_string(j.at("activation").get<std::string>());
    m.normalizer = normalizer_from_json(j.at("normalizer"));
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& layer : j.at("weights")) {
      const auto rows = layer.get<std::vector<std::vector<double>>>();
      const auto cols = rows.empty() ? 0 : rows.front().size();
      Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw Error(ErrorCode::Shape, "ragged weight matrix");
        for (std::size_t c = 0; c < cols; ++c) w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      m.weights.push_back(std::move(w));
    }
    for (const auto& layer : j.at("biases")) {
      const auto b = layer.get<std::vector<double>>();
      m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    check_shapes(m);
    for (const auto& w : m.weights) {
      if (!w.allFinite()) throw Error(ErrorCode::Parse, "model contains non-finite weights");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model JSON: ") + e.what());
  }
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

NetworkModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "model file " + path.string() + " does not exist");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace chfb
