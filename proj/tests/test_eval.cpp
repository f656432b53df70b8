#include <gtest/gtest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "popnet/eval.hpp"
#include "test_util.hpp"

using namespace popnet;

TEST(Spearman, Examples) {
  EXPECT_DOUBLE_EQ(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  const std::vector<double> a = {1, 2, 2, 4}, b = {1, 3, 2, 4};
  EXPECT_NEAR(spearman_rho(a, b), oracle::spearman(a, b), 1e-12);
  EXPECT_EQ(average_ranks({5, 1, 5, 3}), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(Spearman, MatchesOracleOnRandomTiedData) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto a = testutil::normal_vector(50, seed), b = testutil::normal_vector(50, seed + 1000);
    for (auto& v : a) v = std::round(v * 2);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += a[i];
    EXPECT_NEAR(spearman_rho(a, b), oracle::spearman(a, b), 1e-12);
  }
}

TEST(Spearman, InvariantUnderMonotoneMaps) {
  const auto a = testutil::normal_vector(40, 3), b = testutil::normal_vector(40, 4);
  std::vector<double> ea(a.size()), fb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ea[i] = std::exp(a[i]);
    fb[i] = 3.0 * b[i] - 7.0;
  }
  const double base = spearman_rho(a, b);
  EXPECT_NEAR(spearman_rho(ea, fb), base, 1e-12);
  EXPECT_NEAR(spearman_rho(b, a), base, 1e-12);
  EXPECT_LE(std::abs(base), 1.0);
}

TEST(Spearman, Errors) {
  EXPECT_POPNET_ERROR(spearman_rho({1, 1, 1}, {1, 2, 3}), kDegenerateInput);
  EXPECT_POPNET_ERROR(spearman_rho({1}, {1}), kDegenerateInput);
  EXPECT_POPNET_ERROR(spearman_rho({1, 2}, {1, 2, 3}), kLengthMismatch);
  const auto m = evaluate({2, 2, 2}, {1, 2, 3});
  EXPECT_FALSE(m.rho_defined);
  EXPECT_NEAR(m.mae, 2.0 / 3.0, 1e-15);
  EXPECT_NE(metrics_csv({{"flat", m}}).find("undefined"), std::string::npos);
}

TEST(ErrorMetrics, Examples) {
  EXPECT_DOUBLE_EQ(mean_absolute_error({0, 0}, {1, 3}), 2.0);
  EXPECT_DOUBLE_EQ(mean_squared_error({0, 0}, {1, 3}), 5.0);
  EXPECT_POPNET_ERROR(mean_squared_error({}, {}), kLengthMismatch);
  const auto m = evaluate({1, 2, 3}, {1, 2, 3});
  EXPECT_TRUE(m.rho_defined);
  EXPECT_EQ(m.spearman_rho, 1.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(m.n, 3u);
}

TEST(Histogram, Examples) {
  const auto zero = error_histogram({0.0});
  EXPECT_EQ(zero.edges, (std::vector<double>{-0.5, 0.0, 0.5}));
  EXPECT_EQ(zero.counts, (std::vector<std::size_t>{0, 1}));

  const auto h = error_histogram({-0.7, 0.2, 0.3, 1.1});
  ASSERT_EQ(h.edges.size(), 7u);
  EXPECT_DOUBLE_EQ(h.edges.front(), -1.5);
  EXPECT_DOUBLE_EQ(h.edges.back(), 1.5);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{0, 1, 0, 2, 0, 1}));

  EXPECT_POPNET_ERROR(error_histogram({}), kInvalidArgument);
  EXPECT_POPNET_ERROR(error_histogram({1.0}, 0.0), kInvalidArgument);
  EXPECT_POPNET_ERROR(error_histogram({NAN}), kInvalidArgument);
}

TEST(Histogram, PartitionsEveryResidual) {
  auto r = testutil::normal_vector(1000, 5, 2.0);
  r.push_back(1.5);
  r.push_back(-2.0);
  for (double w : {0.25, 0.5, 1.0}) {
    const auto h = error_histogram(r, w);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    EXPECT_EQ(total, r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::size_t inside = 0;
      for (std::size_t b = 0; b < h.counts.size(); ++b) inside += h.edges[b] <= r[i] && r[i] < h.edges[b + 1];
      EXPECT_EQ(inside, 1u) << r[i];
    }
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      std::size_t c = 0;
      for (double v : r) c += h.edges[b] <= v && v < h.edges[b + 1];
      EXPECT_EQ(c, h.counts[b]);
    }
  }
}

TEST(Percentile, NearestRank) {
  EXPECT_EQ(percentile_nearest_rank({15, 20, 35, 40, 50}, 30), 20);
  EXPECT_EQ(percentile_nearest_rank({15, 20, 35, 40, 50}, 80), 40);
  EXPECT_EQ(percentile_nearest_rank({3, 1, 2}, 100), 3);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto v = testutil::normal_vector(17 + seed, seed);
    for (auto& x : v) x = std::round(x * 3);
    EXPECT_EQ(percentile_nearest_rank(v, 80), oracle::nearest_rank(v, 80));
  }
}

TEST(Pareto, AllPopularImagesFromPopularUser) {
  std::map<std::string, double> views = {{"u1", 1}, {"u2", 2}, {"u3", 3}, {"u4", 4}, {"u5", 5}};
  std::vector<ParetoSample> s;
  for (int i = 1; i <= 8; ++i) s.push_back({"u" + std::to_string(1 + (i % 4)), double(i)});
  s.push_back({"u5", 100});
  s.push_back({"u5", 101});
  const auto r = pareto_analysis(s, views);
  EXPECT_EQ(r.image_threshold, 8.0);
  EXPECT_EQ(r.user_threshold, 4.0);
  EXPECT_EQ(r.popular_users, 1u);
  EXPECT_EQ(r.images_by_popular_users, 2u);
  EXPECT_EQ(r.images_by_common_users, 8u);
  EXPECT_DOUBLE_EQ(r.popular_user_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.common_user_fraction, 0.0);
  EXPECT_NE(pareto_csv(r).find("popular_user_fraction"), std::string::npos);
}

TEST(Pareto, MatchesOracle) {
  std::mt19937_64 rng(7);
  std::map<std::string, double> views;
  for (int u = 0; u < 10; ++u) views["user" + std::to_string(u)] = double(rng() % 50);
  std::vector<ParetoSample> s;
  std::vector<std::string> users;
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) {
    const std::string u = "user" + std::to_string(rng() % 10);
    const double score = double(rng() % 30) + views[u] * 0.2;
    s.push_back({u, score});
    users.push_back(u);
    scores.push_back(score);
  }
  const auto r = pareto_analysis(s, views);
  const auto ref = oracle::pareto(users, scores, views);
  EXPECT_NEAR(r.popular_user_fraction, ref.popular_fraction, 1e-15);
  EXPECT_NEAR(r.common_user_fraction, ref.common_fraction, 1e-15);
}

TEST(Pareto, Errors) {
  std::map<std::string, double> views = {{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 5}};
  std::vector<ParetoSample> s = {{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"zz", 5}};
  EXPECT_POPNET_ERROR(pareto_analysis(s, views), kUnknownUser);
  EXPECT_POPNET_ERROR(pareto_analysis({{"a", 1}}, views), kInvalidArgument);
}

TEST(Reports, CsvAndSvgShapes) {
  const auto h = error_histogram({0.1, -0.3, 0.9});
  const auto csv = histogram_csv(h);
  EXPECT_EQ(csv.rfind("edge_lo,edge_hi,count\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(h.counts.size() + 1));
  EXPECT_EQ(scatter_csv({1, 2}, {1.5, 2.5}), "truth,pred\n1,1.5\n2,2.5\n");
  for (const auto& svg : {histogram_svg(h, "h"), scatter_svg({1, 2}, {2, 1}, "s"),
                          comparison_svg({{"lr", evaluate({1, 2, 3}, {1, 3, 2})}}, "c")}) {
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
  }
}
