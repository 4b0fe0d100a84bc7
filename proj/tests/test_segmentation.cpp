#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "chfb/rng.hpp"
#include "chfb/segmentation.hpp"
#include "oracles.hpp"

using namespace chfb;

namespace {

RefinedContour path(std::vector<Point> pts) {
  RefinedContour rc;
  rc.points = std::move(pts);
  rc.end_index = rc.points.size() - 1;
  return rc;
}

GradientDensity zero_rows(std::vector<int> ys) {
  GradientDensity d;
  d.at(Angle::Deg0) = std::move(ys);
  return d;
}

}  // namespace

TEST(Density, Empty) {
  const auto d = build_density({});
  for (const auto& rows : d.rows) EXPECT_TRUE(rows.empty());
}

TEST(Density, HorizontalContour) {
  const std::vector<RefinedContour> cs{path({{0, 10}, {1, 10}, {2, 10}})};
  const auto d = build_density(cs);
  EXPECT_EQ(d.at(Angle::Deg0), (std::vector<int>{10, 10}));
  EXPECT_TRUE(d.at(Angle::Deg90).empty());
}

TEST(Density, MatchesRecount) {
  Rng rng(15);
  std::vector<RefinedContour> cs;
  for (int i = 0; i < 40; ++i) cs.push_back(path(oracle::random_walk(rng, 5 + static_cast<int>(rng.below(20)))));
  const auto d = build_density(cs);
  std::map<int, std::multiset<int>> expect;
  for (const auto& c : cs) {
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
      const int sum = c.points[i].y + c.points[i + 1].y;
      const int floor_mean = sum >= 0 ? sum / 2 : -((-sum + 1) / 2);
      expect[oracle::atan2_quantized(c.points[i], c.points[i + 1])].insert(floor_mean);
    }
  }
  for (Angle a : {Angle::Deg0, Angle::Deg45, Angle::Deg90, Angle::Deg135}) {
    const auto& got = d.at(a);
    EXPECT_EQ(std::multiset<int>(got.begin(), got.end()), expect[degrees(a)]) << degrees(a);
  }
}

TEST(Clusters, GapSplit) {
  const auto cs = cluster_zero_gradient_rows(zero_rows({40, 5, 6, 41, 7}), 10);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0], (YCluster{5, 7, 3}));
  EXPECT_EQ(cs[1], (YCluster{40, 41, 2}));
  EXPECT_EQ(cluster_zero_gradient_rows(zero_rows({9}), 3), (std::vector<YCluster>{{9, 9, 1}}));
}

TEST(Clusters, MatchReferenceScan) {
  Rng rng(100);
  std::vector<int> ys;
  for (int i = 0; i < 500; ++i) ys.push_back(static_cast<int>(rng.below(2000)));
  const auto got = cluster_zero_gradient_rows(zero_rows(ys), 15);
  std::sort(ys.begin(), ys.end());
  std::vector<YCluster> expect{{ys[0], ys[0], 1}};
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (ys[i] - ys[i - 1] > 15) {
      expect.push_back({ys[i], ys[i], 1});
    } else {
      expect.back().y_end = ys[i];
      ++expect.back().size;
    }
  }
  EXPECT_EQ(got, expect);
  std::size_t total = 0;
  for (const auto& c : got) total += c.size;
  EXPECT_EQ(total, ys.size());
}

TEST(Thresholds, TemporaryLinesAreExactFractions) {
  EXPECT_EQ(knee_temp_threshold(500), 100.0);
  EXPECT_EQ(foot_temp_threshold(500), 300.0);
  for (int h = 100; h <= 2000; h += 100) {
    EXPECT_EQ(knee_temp_threshold(h), h / 5);
    EXPECT_EQ(foot_temp_threshold(h), 3 * h / 5);
    for (int k = 2; k <= 4; ++k) {
      EXPECT_EQ(knee_temp_threshold(k * h), k * knee_temp_threshold(h));
      EXPECT_EQ(foot_temp_threshold(k * h), k * foot_temp_threshold(h));
    }
  }
}

TEST(Thresholds, KneeClusterSizeRule) {
  const std::vector<YCluster> small{{10, 60, 114}, {200, 300, 500}};
  EXPECT_FALSE(knee_threshold(small, 500).has_value());
  const std::vector<YCluster> big{{10, 60, 115}, {200, 300, 500}};
  EXPECT_EQ(knee_threshold(big, 500), 61);
  const std::vector<YCluster> none{{120, 160, 900}};
  EXPECT_FALSE(knee_threshold(none, 500).has_value());
  // The candidate is the lowest cluster entirely above the line.
  const std::vector<YCluster> two{{5, 20, 300}, {40, 70, 200}, {90, 110, 400}};
  EXPECT_EQ(knee_threshold(two, 500), 71);
}

TEST(Thresholds, FootGapRule) {
  // h = 500: temporary line 300, large gap > 40 rows, small gap > 15 rows.
  const std::vector<YCluster> one_gap{{100, 150, 10}, {300, 350, 10}, {410, 450, 10}};
  EXPECT_EQ(foot_threshold(one_gap, 500), 380);
  EXPECT_FALSE(foot_threshold(std::vector<YCluster>{{10, 40, 5}, {60, 200, 9}}, 500).has_value());
  EXPECT_FALSE(foot_threshold(std::vector<YCluster>{}, 500).has_value());
  // Only a small gap exists below the line.
  const std::vector<YCluster> small{{250, 320, 10}, {340, 400, 10}};
  EXPECT_EQ(foot_threshold(small, 500), 330);
  // A large gap straddling the line loses to the small gap below it.
  const std::vector<YCluster> straddle{{200, 240, 10}, {310, 330, 10}, {350, 420, 10}};
  EXPECT_EQ(foot_threshold(straddle, 500), 340);
}

TEST(Regions, RuleOracle) {
  Rng rng(44);
  for (int trial = 0; trial < 300; ++trial) {
    RegionThresholds t;
    t.height = 400;
    if (rng.uniform() < 0.7) t.t_knee = static_cast<int>(rng.below(120));
    if (rng.uniform() < 0.7) t.t_foot = 250 + static_cast<int>(rng.below(150));
    const auto rc = path({{0, static_cast<int>(rng.below(400))}, {1, static_cast<int>(rng.below(400))}});
    const int lo = std::min(rc.start().y, rc.end().y);
    const int hi = std::max(rc.start().y, rc.end().y);
    Region expect = Region::Leg;
    if (t.t_knee && lo < *t.t_knee) expect = Region::Knee;
    else if (t.t_foot && hi > *t.t_foot) expect = Region::Foot;
    EXPECT_EQ(assign_region(rc, t), expect);
  }
  const auto rc = path({{0, 10}, {1, 11}});
  RegionThresholds t;
  t.t_knee = 100;
  EXPECT_EQ(assign_region(rc, t), Region::Knee);
  EXPECT_EQ(assign_region(rc, RegionThresholds{}), Region::Leg);
}

TEST(Regions, Json) {
  RegionThresholds t;
  t.t_knee = 50;
  t.height = 300;
  const std::vector<YCluster> cs{{5, 9, 4}};
  const auto j = regions_to_json(t, cs);
  EXPECT_EQ(j["t_knee"], 50);
  EXPECT_TRUE(j["t_foot"].is_null());
  EXPECT_EQ(j["clusters"][0]["size"], 4);
  EXPECT_EQ(region_from_string(to_string(Region::Foot)), Region::Foot);
}
