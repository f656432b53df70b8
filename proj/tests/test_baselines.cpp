#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "popnet/baselines.hpp"
#include "test_util.hpp"

using namespace popnet;

namespace {

Matrix random_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = u(rng);
  return m;
}

oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

std::vector<double> row(const Matrix& m, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) r[j] = m(i, j);
  return r;
}

}  // namespace

TEST(LinearRegression, NoFeaturesGivesMean) {
  Matrix x(4, 0);
  const auto m = lr_fit(x, {1, 2, 3, 6});
  EXPECT_NEAR(m.bias, 3.0, 1e-9);
  EXPECT_NEAR(lr_predict(m, Vector(0)), 3.0, 1e-9);
}

TEST(LinearRegression, RecoversLineAndMatchesClosedForm) {
  Matrix x(5, 1);
  x << 0, 1, 2, 3, 4;
  const auto m = lr_fit(x, {1, 3, 5, 7, 9});
  EXPECT_NEAR(m.weights(0), 2.0, 1e-6);
  EXPECT_NEAR(m.bias, 1.0, 1e-6);

  const Matrix xr = random_matrix(60, 4, 1);
  std::vector<double> y(60);
  const auto noise = testutil::normal_vector(60, 2, 0.3);
  for (int i = 0; i < 60; ++i) y[i] = 0.5 * xr(i, 0) - 1.5 * xr(i, 1) + 2.0 * xr(i, 3) + 0.7 + noise[i];
  const auto beta = oracle::least_squares(to_grid(xr), y);
  const auto fit = lr_fit(xr, y);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(fit.weights(j), beta[j], 1e-6);
  EXPECT_NEAR(fit.bias, beta[4], 1e-6);
}

TEST(LinearRegression, PredictionIsAffine) {
  const Matrix x = random_matrix(30, 3, 3);
  std::vector<double> y(30);
  for (int i = 0; i < 30; ++i) y[i] = x(i, 0) * x(i, 1) + x(i, 2);
  const auto m = lr_fit(x, y);
  const Vector a = Vector::Random(3), b = Vector::Random(3);
  const double t = 0.3;
  EXPECT_NEAR(lr_predict(m, t * a + (1 - t) * b), t * lr_predict(m, a) + (1 - t) * lr_predict(m, b), 1e-12);
}

TEST(LinearRegression, Errors) {
  EXPECT_POPNET_ERROR(lr_fit(Matrix(3, 1), {1, 2}), kLengthMismatch);
  EXPECT_POPNET_ERROR(lr_fit(Matrix(0, 1), {}), kInvalidArgument);
}

TEST(Svr, KernelBasics) {
  const Vector u = Vector::Random(5);
  EXPECT_EQ(rbf_kernel(u, u, 0.7), 1.0);
  Vector v = u;
  v(0) += 1.0;
  EXPECT_NEAR(rbf_kernel(u, v, 0.7), std::exp(-0.7), 1e-15);
}

TEST(Svr, SinglePointFitsWithinEpsilon) {
  Matrix x(1, 2);
  x << 0.3, -0.2;
  const auto m = svr_fit(x, {4.2});
  EXPECT_LE(std::abs(svr_predict(m, x.row(0).transpose()) - 4.2), 0.1 + 1e-9);
}

TEST(Svr, DualObjectiveMatchesProjectedGradient) {
  const Matrix x = random_matrix(4, 2, 7);
  const std::vector<double> y = {1.0, -0.5, 2.0, 0.3};
  SvrConfig cfg;
  cfg.c = 1.0;
  cfg.epsilon = 0.1;
  cfg.gamma = 0.5;
  cfg.tolerance = 1e-8;
  const auto m = svr_fit(x, y, cfg);
  oracle::Grid k(4, std::vector<double>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) k[i][j] = std::exp(-0.5 * (x.row(i) - x.row(j)).squaredNorm());
  EXPECT_NEAR(m.objective, oracle::svr_dual_minimum(k, y, 1.0, 0.1), 1e-3);
  for (double c : m.coefficients) EXPECT_LE(std::abs(c), 1.0 + 1e-12);
}

TEST(Svr, CoefficientsBoundedAndBalanced) {
  const Matrix x = random_matrix(80, 3, 8);
  std::vector<double> y(80);
  for (int i = 0; i < 80; ++i) y[i] = std::sin(3 * x(i, 0)) + x(i, 1);
  const auto m = svr_fit(x, y);
  double total = 0.0;
  for (double c : m.coefficients) {
    EXPECT_LE(std::abs(c), 3.0 + 1e-12);
    total += c;
  }
  EXPECT_NEAR(total, 0.0, 1e-9);
  EXPECT_NEAR(m.gamma, 1.0 / 3.0, 1e-15);
  EXPECT_POPNET_ERROR(svr_fit(x, {1.0}), kLengthMismatch);
}

TEST(Cart, FirstSplitByHand) {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  CartConfig cfg;
  cfg.max_depth = 1;
  const auto t = cart_fit(x, {0, 0, 10, 10}, cfg);
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 2.5);
  EXPECT_EQ(cart_predict(t, Vector::Constant(1, 1.7)), 0.0);
  EXPECT_EQ(cart_predict(t, Vector::Constant(1, 3.2)), 10.0);
}

TEST(Cart, ConstantTargetIsSingleLeaf) {
  const auto t = cart_fit(random_matrix(20, 3, 9), std::vector<double>(20, 1.5));
  EXPECT_EQ(t.leaf_count(), 1u);
  EXPECT_EQ(t.depth(), 0);
  EXPECT_EQ(cart_predict(t, Vector::Zero(3)), 1.5);
}

TEST(Cart, UnlimitedDepthMemorizesDistinctRows) {
  const Matrix x = random_matrix(50, 2, 10);
  const auto y = testutil::normal_vector(50, 11);
  CartConfig cfg;
  cfg.max_depth = -1;
  const auto t = cart_fit(x, y, cfg);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(cart_predict(t, x.row(i).transpose()), y[i]);
}

TEST(Cart, MatchesExhaustiveSearch) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const int n = 8 + static_cast<int>(seed % 13);
    Matrix x = random_matrix(n, 3, seed);
    for (int i = 0; i < n; ++i) x(i, 2) = std::round(x(i, 2) * 2);  // duplicated values
    const auto y = testutil::normal_vector(static_cast<std::size_t>(n), seed + 100);
    for (int depth : {1, 3, -1}) {
      CartConfig cfg;
      cfg.max_depth = depth;
      const auto t = cart_fit(x, y, cfg);
      const auto ref = oracle::cart(to_grid(x), y, depth);
      EXPECT_EQ(t.nodes.size(), ref.size()) << "seed " << seed << " depth " << depth;
      const Matrix probes = random_matrix(40, 3, seed + 200);
      for (int i = 0; i < 40; ++i)
        EXPECT_NEAR(cart_predict(t, probes.row(i).transpose()), oracle::tree_predict(ref, row(probes, i)), 1e-12);
    }
  }
}

TEST(Gbdt, SingleFullRateRoundEqualsTree) {
  const Matrix x = random_matrix(30, 2, 40);
  const auto y = testutil::normal_vector(30, 41);
  GbdtConfig g;
  g.n_estimators = 1;
  g.learning_rate = 1.0;
  g.max_depth = 2;
  const auto m = gbdt_fit(x, y, g);
  CartConfig c;
  c.max_depth = 2;
  const auto t = cart_fit(x, y, c);
  for (int i = 0; i < 30; ++i) EXPECT_NEAR(gbdt_predict(m, x.row(i).transpose()), cart_predict(t, x.row(i).transpose()), 1e-12);
}

TEST(Gbdt, TwoRoundsMatchHandUnrolledBoosting) {
  const Matrix x = random_matrix(25, 2, 42);
  const auto y = testutil::normal_vector(25, 43);
  GbdtConfig g;
  g.n_estimators = 2;
  g.learning_rate = 0.5;
  g.max_depth = 2;
  const auto m = gbdt_fit(x, y, g);

  const auto grid = to_grid(x);
  double base = 0.0;
  for (double v : y) base += v / 25.0;
  std::vector<double> f(25, base), r(25);
  for (int round = 0; round < 2; ++round) {
    for (int i = 0; i < 25; ++i) r[i] = y[i] - f[i];
    const auto tree = oracle::cart(grid, r, 2);
    for (int i = 0; i < 25; ++i) f[i] += 0.5 * oracle::tree_predict(tree, grid[i]);
  }
  for (int i = 0; i < 25; ++i) EXPECT_NEAR(gbdt_predict(m, x.row(i).transpose()), f[i], 1e-12);
}

TEST(Gbdt, TrainingErrorNeverIncreases) {
  const Matrix x = random_matrix(60, 3, 44);
  std::vector<double> y(60);
  for (int i = 0; i < 60; ++i) y[i] = x(i, 0) * x(i, 1) + std::cos(2 * x(i, 2));
  double prev = 1e300;
  for (int rounds : {0, 1, 2, 5, 10, 20}) {
    GbdtConfig g;
    g.n_estimators = rounds;
    g.learning_rate = 0.1;
    g.max_depth = 3;
    const auto m = gbdt_fit(x, y, g);
    double err = 0.0;
    for (int i = 0; i < 60; ++i) err += std::pow(gbdt_predict(m, x.row(i).transpose()) - y[i], 2);
    EXPECT_LE(err, prev + 1e-12);
    prev = err;
  }
}

TEST(Gbdt, ZeroRateGivesMean) {
  GbdtConfig g;
  g.n_estimators = 5;
  g.learning_rate = 0.0;
  const auto m = gbdt_fit(random_matrix(10, 2, 45), {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, g);
  EXPECT_NEAR(gbdt_predict(m, Vector::Zero(2)), 5.5, 1e-12);
}

TEST(Baselines, ArchivesRoundTrip) {
  const Matrix x = random_matrix(40, 3, 50);
  const auto y = testutil::normal_vector(40, 51);
  const Vector probe = Vector::Random(3);

  const auto lr = lr_fit(x, y);
  EXPECT_EQ(lr_predict(linear_from_archive(Archive::deserialize(to_archive(lr).serialize())), probe),
            lr_predict(lr, probe));
  const auto svr = svr_fit(x, y);
  EXPECT_EQ(svr_predict(svr_from_archive(Archive::deserialize(to_archive(svr).serialize())), probe),
            svr_predict(svr, probe));
  const auto tree = cart_fit(x, y);
  EXPECT_EQ(cart_predict(cart_from_archive(Archive::deserialize(to_archive(tree).serialize())), probe),
            cart_predict(tree, probe));
  GbdtConfig g;
  g.n_estimators = 15;
  g.max_depth = 3;
  const auto gb = gbdt_fit(x, y, g);
  const auto back = gbdt_from_archive(Archive::deserialize(to_archive(gb).serialize()));
  EXPECT_EQ(gbdt_predict(back, probe), gbdt_predict(gb, probe));
  EXPECT_EQ(gbdt_dump(back), gbdt_dump(gb));
  EXPECT_FALSE(gbdt_dump(gb).empty());
}
