#include "chfb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "chfb/error.hpp"

namespace chfb {

namespace {

// Column-centred data scaled to unit sample standard deviation; constant
// columns come back as zero columns and are listed in `constant`.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& data, std::vector<std::size_t>& constant) {
  const auto n = data.rows();
  Eigen::MatrixXd z = data.rowwise() - data.colwise().mean();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n - 1));
    if (sd == 0.0 || !std::isfinite(sd)) {
      constant.push_back(static_cast<std::size_t>(j));
      z.col(j).setZero();
    } else {
      z.col(j) /= sd;
    }
  }
  return z;
}

std::vector<std::string> feature_names(Eigen::Index cols) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < cols; ++j) {
    names.push_back(static_cast<std::size_t>(j) < kFeatureCount ? std::string(kFeatureNames[static_cast<std::size_t>(j)])
                                                                 : "F" + std::to_string(j));
  }
  return names;
}

}  // namespace

Eigen::MatrixXd feature_matrix(std::span<const ContourFeatures> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = rows[i].values();
    for (std::size_t k = 0; k < kFeatureCount; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
  }
  return m;
}

CorrelationMatrix correlate_matrix(const Eigen::MatrixXd& data) {
  if (data.rows() < 3) throw Error(ErrorCode::InsufficientData, "correlation needs at least 3 rows");
  CorrelationMatrix out;
  const Eigen::MatrixXd z = standardize(data, out.constant_columns);
  out.values = (z.transpose() * z) / static_cast<double>(data.rows() - 1);
  for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
    out.values(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < out.values.cols(); ++j) {
      out.values(i, j) = std::clamp(out.values(i, j), -1.0, 1.0);
      out.values(j, i) = out.values(i, j);
    }
  }
  return out;
}

CorrelationMatrix correlate(std::span<const ContourFeatures> rows) { return correlate_matrix(feature_matrix(rows)); }

std::size_t PcaReport::dominant_feature() const { return ranking().front(); }

std::vector<std::size_t> PcaReport::ranking() const {
  std::vector<std::size_t> idx(contribution.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return contribution[a] > contribution[b]; });
  return idx;
}

PcaReport pca(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) throw Error(ErrorCode::InsufficientData, "PCA needs at least 2 rows");
  std::vector<std::size_t> constant;
  const Eigen::MatrixXd z = standardize(data, constant);
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(data.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::Degenerate, "eigendecomposition failed");

  const auto d = cov.rows();
  PcaReport report;
  report.rows = static_cast<std::size_t>(data.rows());
  report.loadings.resize(d, d);
  report.eigenvalues.resize(d);
  // The solver returns ascending eigenvalues.
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = d - 1 - k;
    report.eigenvalues(k) = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    report.loadings.col(k) = v;
  }
  const double total = report.eigenvalues.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::Degenerate, "every column is constant");
  for (Eigen::Index k = 0; k < d; ++k) report.explained_variance_ratio.push_back(report.eigenvalues(k) / total);
  for (Eigen::Index j = 0; j < d; ++j) report.contribution.push_back(std::abs(report.loadings(j, 0)));
  return report;
}

PcaReport pca_contributions(std::span<const LabelledFeatures> rows, LabelFilter filter) {
  std::vector<ContourFeatures> kept;
  for (const auto& r : rows) {
    const bool fractured = is_fractured(r.label);
    if (filter == LabelFilter::All || (filter == LabelFilter::Fractured && fractured) ||
        (filter == LabelFilter::NonFractured && !fractured)) {
      kept.push_back(r.features);
    }
  }
  if (kept.size() < 20) {
    throw Error(ErrorCode::InsufficientData,
                "PCA needs at least 20 rows after filtering, got " + std::to_string(kept.size()));
  }
  return pca(feature_matrix(kept));
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& c) {
  const auto names = feature_names(c.values.cols());
  out << "FEATURE";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < c.values.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < c.values.cols(); ++j) out << ',' << c.values(i, j);
    out << '\n';
  }
}

void write_contributions_csv(std::ostream& out, const PcaReport& report) {
  const auto names = feature_names(static_cast<Eigen::Index>(report.contribution.size()));
  out << "FEATURE,CONTRIBUTION,EXPLAINED_VARIANCE_RATIO\n";
  for (std::size_t j = 0; j < report.contribution.size(); ++j) {
    out << names[j] << ',' << report.contribution[j] << ',' << report.explained_variance_ratio[j] << '\n';
  }
}

nlohmann::json correlation_to_json(const CorrelationMatrix& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < c.values.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < c.values.cols(); ++j) row.push_back(c.values(i, j));
    rows.push_back(std::move(row));
  }
  return {{"features", feature_names(c.values.cols())}, {"matrix", std::move(rows)},
          {"constant_columns", c.constant_columns}};
}

nlohmann::json pca_to_json(const PcaReport& report) {
  return {{"features", feature_names(static_cast<Eigen::Index>(report.contribution.size()))},
          {"contribution", report.contribution},
          {"explained_variance_ratio", report.explained_variance_ratio},
          {"ranking", report.ranking()},
          {"rows", report.rows}};
}

}  // namespace chfb
