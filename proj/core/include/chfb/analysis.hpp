#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "chfb/features.hpp"

namespace chfb {

/// Pearson correlation between the 19 feature columns. Constant columns are
/// reported and correlate 0 with every other column (1 with themselves).
struct CorrelationMatrix {
  Eigen::MatrixXd values;
  std::vector<std::size_t> constant_columns;
};

CorrelationMatrix correlate(std::span<const ContourFeatures> rows);
CorrelationMatrix correlate_matrix(const Eigen::MatrixXd& data);

enum class LabelFilter { All, Fractured, NonFractured };

struct PcaReport {
  Eigen::MatrixXd loadings;  ///< column k is principal component k
  Eigen::VectorXd eigenvalues;
  std::vector<double> explained_variance_ratio;
  std::vector<double> contribution;  ///< |loading| of each feature on the first component
  std::size_t rows = 0;

  std::size_t dominant_feature() const;
  /// Feature indices ordered by decreasing contribution (stable on ties).
  std::vector<std::size_t> ranking() const;
};

/// Standardizes columns, eigendecomposes the covariance matrix and orders
/// components by decreasing eigenvalue. Each component is signed so that its
/// largest-magnitude loading is positive.
PcaReport pca(const Eigen::MatrixXd& data);

struct LabelledFeatures {
  ContourFeatures features;
  Label label = Label::NonFractured;
};

/// Requires at least 20 rows after filtering.
PcaReport pca_contributions(std::span<const LabelledFeatures> rows, LabelFilter filter);

Eigen::MatrixXd feature_matrix(std::span<const ContourFeatures> rows);

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& c);
void write_contributions_csv(std::ostream& out, const PcaReport& report);
nlohmann::json correlation_to_json(const CorrelationMatrix& c);
nlohmann::json pca_to_json(const PcaReport& report);

}  // namespace chfb
