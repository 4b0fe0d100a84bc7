#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "chfb/features.hpp"
#include "chfb/label.hpp"

namespace chfb {

inline constexpr int kModelSchemaVersion = 1;

enum class Activation { Logistic, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 500;
  int batch_size = 16;
  std::uint64_t seed = 0;
  int h1 = 16;
  int h2 = 8;
  int patience = 50;
  double validation_fraction = 0.1;  ///< 0 disables the carve-out and early stopping
  Activation activation = Activation::Logistic;
};

/// Throws ErrorCode::Config when the configuration violates its invariants.
void validate(const TrainConfig& cfg);

/// Fully connected network. weights[l] maps layer l to layer l+1 and has
/// shape (layer_sizes[l+1], layer_sizes[l]). Hidden layers use `activation`;
/// the single output node is always logistic.
struct NetworkModel {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::Logistic;
  Normalizer normalizer;
  std::uint64_t seed = 0;

  bool operator==(const NetworkModel& o) const;
};

/// Same layout as the model, one entry per parameter tensor.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

NetworkModel init_model(const TrainConfig& cfg);
/// Glorot bound sqrt(6 / (fan_in + fan_out)), scaled by 4 for logistic units.
double init_scale(int fan_in, int fan_out, Activation activation);
/// Weights uniform in [-s, s] with s = init_scale of the layer; biases zero.
NetworkModel init_model(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed);

/// Throws ErrorCode::Shape on inconsistent tensors or a wrong input width.
double forward_raw(const NetworkModel& model, std::span<const double> input);
/// Requires a model whose input layer is the 22-wide feature vector.
double forward(const NetworkModel& model, const FeatureVector& v);

/// Mean binary cross-entropy over the rows of x and its exact gradient.
/// Labels are 0 or 1.
double loss_and_gradient(const NetworkModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         Gradients* grad);
double loss(const NetworkModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct TrainResult {
  NetworkModel model;
  std::vector<double> train_loss;       ///< full training-set loss after each epoch
  std::vector<double> validation_loss;  ///< empty without a carve-out
  int best_epoch = 0;                   ///< 1-based epoch whose weights were kept
};

/// Mini-batch SGD on binary cross-entropy. Rows are put into a canonical
/// order first, so the result depends only on the multiset of rows, the
/// seed and the configuration. Throws InsufficientData on an empty set and
/// Divergence when the loss stops being finite.
TrainResult train(const NetworkModel& initial, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const TrainConfig& cfg);
TrainResult train(const NetworkModel& initial, std::span<const FeatureVector> inputs, std::span<const Label> labels,
                  const TrainConfig& cfg);

/// Fractured iff the score reaches the threshold. Throws InvalidInput unless
/// 0 < threshold < 1.
Label classify(const NetworkModel& model, const FeatureVector& v, double threshold = 0.5);
Label classify_score(double score, double threshold = 0.5);

nlohmann::json to_json(const NetworkModel& model);
NetworkModel model_from_json(const nlohmann::json& j);
void save_model(const NetworkModel& model, const std::filesystem::path& path);
NetworkModel load_model(const std::filesystem::path& path);

nlohmann::json normalizer_to_json(const Normalizer& n);
Normalizer normalizer_from_json(const nlohmann::json& j);

}  // namespace chfb
