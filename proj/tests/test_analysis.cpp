#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "chfb/analysis.hpp"
#include "chfb/error.hpp"
#include "chfb/rng.hpp"
#include "oracles.hpp"

using namespace chfb;

namespace {

/// Rows of correlated gaussian data: random mixing of independent sources.
Eigen::MatrixXd mixed_data(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd src(rows, cols), mix(cols, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) src(i, j) = rng.normal() * (1.0 + j);
  }
  for (int i = 0; i < cols; ++i) {
    for (int j = 0; j < cols; ++j) mix(i, j) = rng.uniform(-1, 1);
  }
  return src * mix;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double n = static_cast<double>(a.size());
  const double ma = a.sum() / n, mb = b.sum() / n;
  double sab = 0, saa = 0, sbb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Correlation, TextbookOracle) {
  const Eigen::MatrixXd data = mixed_data(50, 19, 1);
  const auto c = correlate_matrix(data);
  ASSERT_EQ(c.values.rows(), 19);
  for (int i = 0; i < 19; ++i) {
    EXPECT_NEAR(c.values(i, i), 1.0, 1e-12);
    for (int j = 0; j < 19; ++j) {
      EXPECT_NEAR(c.values(i, j), pearson(data.col(i), data.col(j)), 1e-12);
      EXPECT_EQ(c.values(i, j), c.values(j, i));
      EXPECT_LE(std::abs(c.values(i, j)), 1.0);
    }
  }
}

TEST(Correlation, AffineDependence) {
  Eigen::MatrixXd data = mixed_data(30, 19, 2);
  data.col(4) = 2.0 * data.col(1).array() + 3.0;
  EXPECT_NEAR(correlate_matrix(data).values(1, 4), 1.0, 1e-12);
}

TEST(Correlation, PositiveAffineInvariance) {
  const Eigen::MatrixXd data = mixed_data(40, 19, 3);
  Eigen::MatrixXd moved = data;
  moved.col(7) = 5.0 * moved.col(7).array() - 11.0;
  const auto a = correlate_matrix(data), b = correlate_matrix(moved);
  EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Correlation, ConstantColumnsAndShortInput) {
  Eigen::MatrixXd data = mixed_data(10, 19, 4);
  data.col(2).setConstant(7.0);
  const auto c = correlate_matrix(data);
  EXPECT_EQ(c.constant_columns, std::vector<std::size_t>{2});
  EXPECT_EQ(c.values(2, 5), 0.0);
  EXPECT_EQ(c.values(2, 2), 1.0);
  EXPECT_THROW(correlate_matrix(mixed_data(2, 19, 5)), Error);
}

TEST(Pca, Orthonormal) {
  const auto r = pca(mixed_data(100, 19, 6));
  const Eigen::MatrixXd g = r.loadings.transpose() * r.loadings;
  EXPECT_LT((g - Eigen::MatrixXd::Identity(19, 19)).cwiseAbs().maxCoeff(), 1e-9);
  double sum = 0.0;
  for (std::size_t k = 0; k < r.explained_variance_ratio.size(); ++k) {
    sum += r.explained_variance_ratio[k];
    if (k > 0) {
      EXPECT_LE(r.explained_variance_ratio[k], r.explained_variance_ratio[k - 1]);
    }
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Pca, RankOne) {
  Rng rng(7);
  Eigen::MatrixXd data(60, 19);
  for (int i = 0; i < 60; ++i) {
    const double t = rng.normal();
    for (int j = 0; j < 19; ++j) data(i, j) = (j % 3 == 0 ? -1.0 : 1.0) * (j + 1) * t + j;
  }
  EXPECT_NEAR(pca(data).explained_variance_ratio[0], 1.0, 1e-9);
}

TEST(Pca, IsotropicNoise) {
  Rng rng(8);
  Eigen::MatrixXd data(20000, 19);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal();
  for (double r : pca(data).explained_variance_ratio) EXPECT_NEAR(r, 1.0 / 19.0, 0.01);
}

TEST(Pca, MatchesJacobiOracle) {
  const Eigen::MatrixXd data = mixed_data(100, 19, 9);
  const auto r = pca(data);
  // Independent route: standardize by hand, covariance, Jacobi rotations.
  Eigen::MatrixXd z = data;
  for (int j = 0; j < 19; ++j) {
    const double m = z.col(j).mean();
    z.col(j).array() -= m;
    z.col(j) /= std::sqrt(z.col(j).squaredNorm() / 99.0);
  }
  const auto ref = oracle::jacobi_eigen(z.transpose() * z / 99.0);
  for (int k = 0; k < 19; ++k) {
    EXPECT_NEAR(r.eigenvalues(k), ref.values(k), 1e-9);
    const double sign = r.loadings.col(k).dot(ref.vectors.col(k)) < 0 ? -1.0 : 1.0;
    EXPECT_LT((r.loadings.col(k) - sign * ref.vectors.col(k)).cwiseAbs().maxCoeff(), 1e-6) << "component " << k;
  }
}

TEST(Pca, JacobiOracleSelfCheck) {
  const Eigen::MatrixXd a = [] {
    Eigen::MatrixXd m = mixed_data(30, 6, 10);
    return Eigen::MatrixXd(m.transpose() * m);
  }();
  const auto e = oracle::jacobi_eigen(a);
  for (int k = 0; k < 6; ++k) {
    EXPECT_LT((a * e.vectors.col(k) - e.values(k) * e.vectors.col(k)).norm(), 1e-8 * e.values(0));
  }
}

TEST(Pca, DominantFeatureSurvivesRescaling) {
  const Eigen::MatrixXd data = mixed_data(80, 19, 11);
  Eigen::MatrixXd scaled = data;
  Rng rng(12);
  for (int j = 0; j < 19; ++j) scaled.col(j) = rng.uniform(0.1, 50.0) * scaled.col(j).array() + rng.uniform(-9, 9);
  EXPECT_EQ(pca(data).dominant_feature(), pca(scaled).dominant_feature());
}

TEST(Pca, SignConvention) {
  const auto r = pca(mixed_data(50, 19, 13));
  for (int k = 0; k < 19; ++k) {
    Eigen::Index arg = 0;
    r.loadings.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(r.loadings(arg, k), 0.0);
  }
}

TEST(Pca, FilterNeedsTwentyRows) {
  std::vector<LabelledFeatures> rows;
  Rng rng(14);
  for (int i = 0; i < 30; ++i) {
    ContourFeatures f;
    f.n_c = 3 + i;
    f.x1 = static_cast<int>(rng.below(100));
    f.dist_t = rng.uniform(1, 50);
    rows.push_back({f, i < 10 ? Label::Fractured : Label::NonFractured});
  }
  EXPECT_THROW(pca_contributions(rows, LabelFilter::Fractured), Error);
  EXPECT_NO_THROW(pca_contributions(rows, LabelFilter::NonFractured));
  const auto all = pca_contributions(rows, LabelFilter::All);
  EXPECT_EQ(all.rows, 30u);
  EXPECT_EQ(all.contribution.size(), kFeatureCount);
}

TEST(Pca, Reports) {
  const auto r = pca(mixed_data(40, 19, 15));
  std::stringstream ss;
  write_contributions_csv(ss, r);
  std::string line;
  int lines = 0;
  while (std::getline(ss, line)) ++lines;
  EXPECT_EQ(lines, 20);
  const auto j = pca_to_json(r);
  EXPECT_EQ(j["ranking"].size(), 19u);
  EXPECT_EQ(j["features"][6], "G");
}
