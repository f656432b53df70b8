#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "netcheck.hpp"
#include "popnet/popmodels.hpp"
#include "test_util.hpp"

using namespace popnet;
using testutil::descriptors_for;

namespace {

NetworkConfig scaled() {
  NetworkConfig c;
  c.init = nn::InitKind::kScaled;
  return c;
}

void zero_params(PopularityNet& net, const std::string& prefix) {
  for (auto& [name, v] : net.store().parameters())
    if (name.rfind(prefix, 0) == 0) std::fill(v->value.values.begin(), v->value.values.end(), 0.0);
}

}  // namespace

TEST(PopularityNet, Widths) {
  PopularityNet vs(NetKind::kVscnn, {}, 1);
  EXPECT_EQ(vs.merged_width(), 4352u);
  EXPECT_EQ(vs.x_dim(), 20u);
  EXPECT_EQ(vs.z_dim(), 14u);
  PopularityNet v(NetKind::kVcnn, {}, 1);
  EXPECT_EQ(v.merged_width(), 2560u);
  EXPECT_FALSE(v.store().has_parameter_prefix("conv1d_s"));
  EXPECT_TRUE(v.store().has_parameter_prefix("conv1d_v"));
  PopularityNet s(NetKind::kScnn, {}, 1);
  EXPECT_EQ(s.merged_width(), 1792u);
  EXPECT_FALSE(s.store().has_parameter_prefix("conv1d_v"));
  PopularityNet ef(NetKind::kVscnnEf, {}, 1);
  EXPECT_EQ(ef.x_dim(), 20u);
  EXPECT_EQ(ef.z_dim(), 0u);
  EXPECT_EQ(vs.store().parameter("fc2.weight")->value.shape, (nn::Shape{500, 1024}));
}

TEST(PopularityNet, GoldenParameterCounts) {
  EXPECT_EQ(PopularityNet(NetKind::kVscnn, {}, 1).store().parameter_count(), 5022676u);
  EXPECT_EQ(PopularityNet(NetKind::kVcnn, {}, 1).store().parameter_count(), 3166452u);
  EXPECT_EQ(PopularityNet(NetKind::kScnn, {}, 1).store().parameter_count(), 2369748u);
  EXPECT_EQ(PopularityNet(NetKind::kVscnnEf, {}, 1).store().parameter_count(), 3166452u);
  NetworkConfig head;
  head.trainable_head = true;
  EXPECT_EQ(PopularityNet(NetKind::kVscnn, head, 1).store().parameter_count(), 5022676u + 501u);
}

TEST(PopularityNet, InputShapeErrors) {
  PopularityNet net(NetKind::kVscnn, {}, 1);
  DescriptorSet d;
  d.x = Matrix::Zero(3, 19);
  d.z = Matrix::Zero(3, 14);
  EXPECT_POPNET_ERROR(net.predict(d), kDimensionMismatch);
  d.x = Matrix::Zero(3, 20);
  d.z = Matrix::Zero(2, 14);
  EXPECT_POPNET_ERROR(net.predict(d), kDimensionMismatch);
}

TEST(PopularityNet, PredictionIgnoresBatching) {
  PopularityNet net(NetKind::kVscnn, scaled(), 3);
  const auto d = descriptors_for(net, 300, 4);
  const auto all = net.predict(d);
  ASSERT_EQ(all.size(), 300u);
  for (Eigen::Index i : {0, 7, 255, 256, 299}) {
    DescriptorSet one{d.x.middleRows(i, 1), d.z.middleRows(i, 1)};
    EXPECT_NEAR(net.predict(one)[0], all[static_cast<std::size_t>(i)], 1e-12);
  }
  std::vector<Eigen::Index> perm(300);
  for (int i = 0; i < 300; ++i) perm[i] = (i * 7) % 300;
  DescriptorSet shuffled{Matrix(300, 20), Matrix(300, 14)};
  for (int i = 0; i < 300; ++i) {
    shuffled.x.row(i) = d.x.row(perm[i]);
    shuffled.z.row(i) = d.z.row(perm[i]);
  }
  const auto sp = net.predict(shuffled);
  for (int i = 0; i < 300; ++i) EXPECT_NEAR(sp[i], all[perm[i]], 1e-12);
}

TEST(PopularityNet, ZeroedFc2GivesZero) {
  PopularityNet net(NetKind::kVscnn, {}, 5);
  zero_params(net, "fc2");
  for (double p : net.predict(descriptors_for(net, 10, 6))) EXPECT_EQ(p, 0.0);
}

TEST(PopularityNet, ZeroedSocialBranchIgnoresZ) {
  NetworkConfig c = scaled();
  c.batch_norm = false;
  PopularityNet net(NetKind::kVscnn, c, 7);
  zero_params(net, "conv1d_s");
  auto d = descriptors_for(net, 12, 8);
  const auto a = net.predict(d);
  d.z = testutil::uniform_matrix(12, 14, 99, -5.0, 5.0);
  EXPECT_EQ(net.predict(d), a);
}

double max_abs(PopularityNet& net, const std::string& name) {
  for (auto& [n, v] : net.store().parameters())
    if (n == name) {
      double m = 0;
      for (double x : v->value.values) m = std::max(m, std::abs(x));
      return m;
    }
  return -1;
}

TEST(PopularityNet, ScaledInitShrinksFc2UnderFixedSum) {
  const double he = std::sqrt(6.0 / 1024.0);
  PopularityNet sum(NetKind::kScnn, scaled(), 3);
  const double w = max_abs(sum, "fc2.weight");
  EXPECT_LE(w, he / std::sqrt(500.0));
  EXPECT_GT(w, 0.9 * he / std::sqrt(500.0));
  NetworkConfig c = scaled();
  c.trainable_head = true;
  PopularityNet head(NetKind::kScnn, c, 3);
  EXPECT_GT(max_abs(head, "fc2.weight"), 0.9 * he);
  EXPECT_LE(max_abs(head, "fc2.weight"), he);
}

TEST(PopularityNet, WholeGraphGradientCheck) {
  for (auto kind : {NetKind::kVscnn, NetKind::kScnn}) {
    for (const auto& r : testutil::network_gradcheck(kind, scaled(), 8, 11))
      EXPECT_TRUE(testutil::gradcheck_ok(r)) << net_kind_name(kind) << " " << r.name << " err=" << r.rel_error
                                             << " kinks=" << r.kinks << " |a|=" << r.analytic_norm;
  }
  NetworkConfig head = scaled();
  head.trainable_head = true;
  for (const auto& r : testutil::network_gradcheck(NetKind::kVcnn, head, 8, 12))
    EXPECT_TRUE(testutil::gradcheck_ok(r)) << "vcnn+head " << r.name << " err=" << r.rel_error << " kinks=" << r.kinks;
}

TEST(PopularityNet, ArchiveRoundTrip) {
  PopularityNet net(NetKind::kVscnn, scaled(), 13);
  const auto d = descriptors_for(net, 6, 14);
  const auto back = PopularityNet::from_archive(Archive::deserialize(net.to_archive().serialize()));
  EXPECT_EQ(back->kind(), NetKind::kVscnn);
  EXPECT_EQ(back->predict(d), net.predict(d));
  EXPECT_EQ(back->to_archive().serialize(), net.to_archive().serialize());
}

TEST(Training, LearnsPlantedSocialSignal) {
  PopularityNet net(NetKind::kVscnn, scaled(), 21);
  auto train_set = descriptors_for(net, 500, 22);
  auto val_set = descriptors_for(net, 100, 23);
  auto target = [](const DescriptorSet& d) {
    std::vector<double> y(static_cast<std::size_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) y[i] = 2.0 + 3.0 * d.z(i, 0) - 2.0 * d.z(i, 5) + d.z(i, 9);
    return y;
  };
  const auto ty = target(train_set), vy = target(val_set);
  const double initial = nn::mse(net.predict(train_set), ty);
  nn::TrainConfig cfg;
  cfg.epochs = 8;
  cfg.seed = 21;
  const auto result = train(net, train_set, ty, val_set, vy, cfg);
  const double final_mse = nn::mse(net.predict(train_set), ty);
  EXPECT_LT(final_mse, 0.05 * initial) << "initial " << initial;
}

TEST(Training, DeterministicAndRestoresBestEpoch) {
  auto run = [] {
    PopularityNet net(NetKind::kScnn, scaled(), 31);
    const auto tr = descriptors_for(net, 61, 32);
    const auto va = descriptors_for(net, 20, 33);
    std::vector<double> ty(61), vy(20);
    for (int i = 0; i < 61; ++i) ty[i] = tr.z(i, 1) * 4.0;
    for (int i = 0; i < 20; ++i) vy[i] = va.z(i, 1) * 4.0;
    nn::TrainConfig cfg;
    cfg.epochs = 4;
    cfg.seed = 31;
    auto result = train(net, tr, ty, va, vy, cfg);
    const double restored = nn::mse(net.predict(va), vy);
    return std::make_tuple(result, restored, net.to_archive().serialize());
  };
  const auto [a, restored_a, bytes_a] = run();
  const auto [b, restored_b, bytes_b] = run();
  ASSERT_EQ(a.log.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(a.log[e].train_mse, b.log[e].train_mse);
    EXPECT_EQ(a.log[e].val_mse, b.log[e].val_mse);
  }
  EXPECT_EQ(bytes_a, bytes_b);
  std::vector<double> vals;
  for (const auto& e : a.log) vals.push_back(e.val_mse);
  EXPECT_EQ(a.best_val_mse, *std::min_element(vals.begin(), vals.end()));
  EXPECT_EQ(a.best_epoch, nn::checkpoint_best(vals));
  EXPECT_EQ(restored_a, a.best_val_mse);
  EXPECT_NEAR(a.log[3].lr, 0.001, 1e-18);
  EXPECT_NE(training_log_csv(a.log).find("val_mse"), std::string::npos);
}

TEST(Training, Errors) {
  PopularityNet net(NetKind::kScnn, {}, 1);
  const auto d = descriptors_for(net, 10, 2);
  EXPECT_POPNET_ERROR(train(net, d, std::vector<double>(9), d, std::vector<double>(10), {}), kLengthMismatch);
  nn::TrainConfig bad;
  bad.epochs = -1;
  EXPECT_POPNET_ERROR(train(net, d, std::vector<double>(10), d, std::vector<double>(10), bad), kInvalidArgument);
}

TEST(SeededPermutation, IsAPermutation) {
  std::mt19937_64 rng(3);
  auto p = seeded_permutation(100, rng);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(p[i], i);
}
