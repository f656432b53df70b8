#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "oracles/oracles.hpp"
#include "popnet/nn/layers.hpp"
#include "popnet/nn/optim.hpp"
#include "test_util.hpp"

using namespace popnet;
using namespace popnet::nn;
using testutil::gradcheck;
using testutil::random_tensor;

namespace {

// Weighted sum so every output element receives a distinct upstream gradient.
Var probe_loss(const Var& out, std::uint64_t seed) {
  auto w = constant(random_tensor(out->value.shape, seed));
  return sum(mul(out, w));
}

void expect_grads_ok(const std::vector<testutil::GradReport>& reports) {
  for (const auto& r : reports) {
    EXPECT_LT(r.rel_error, 1e-4) << r.name;
    EXPECT_EQ(r.kinks, 0u) << r.name;
  }
}

}  // namespace

TEST(Tensor, ShapeContract) {
  EXPECT_EQ(Tensor({2, 3}).size(), 6u);
  EXPECT_EQ(Tensor(Shape{}, 4.0).size(), 1u);
  EXPECT_POPNET_ERROR(Tensor({2, 2}, std::vector<double>{1, 2, 3}), kShapeMismatch);
}

TEST(Conv1d, ValidSliceByHand) {
  auto x = constant(Tensor({1, 1, 4}, std::vector<double>{1, 2, 3, 4}));
  auto w = constant(Tensor({1, 1, 3}, std::vector<double>{1, 0, -1}));
  auto b = constant(Tensor({1}, 0.0));
  const auto y = conv1d(x, w, b, ConvPadding::valid());
  EXPECT_EQ(y->value.shape, (Shape{1, 1, 2}));
  EXPECT_EQ(y->value.values[0], -2.0);
  EXPECT_EQ(y->value.values[1], -2.0);
}

TEST(Conv1d, IdentityKernelWithSamePadding) {
  auto x = constant(random_tensor({2, 1, 7}, 1));
  auto w = constant(Tensor({1, 1, 3}, std::vector<double>{0, 1, 0}));
  auto b = constant(Tensor({1}, 0.0));
  EXPECT_EQ(conv1d(x, w, b, ConvPadding::same(3))->value.values, x->value.values);
}

TEST(Conv1d, MatchesNaiveConvolution) {
  std::uint64_t seed = 10;
  for (std::size_t k : {2u, 3u, 5u})
    for (auto pad : {ConvPadding::same(k), ConvPadding::valid()}) {
      const std::size_t batch = 3, cin = 4, cout = 5, len = 9;
      auto x = constant(random_tensor({batch, cin, len}, ++seed));
      auto w = constant(random_tensor({cout, cin, k}, ++seed));
      auto b = constant(random_tensor({cout}, ++seed));
      const auto y = conv1d(x, w, b, pad);
      const std::vector<double> xv(x->value.values.begin(), x->value.values.end());
      const std::vector<double> wv(w->value.values.begin(), w->value.values.end());
      const std::vector<double> bv(b->value.values.begin(), b->value.values.end());
      const auto ref = oracle::conv1d(xv, batch, cin, len, wv, cout, k, bv, pad.left, pad.right);
      ASSERT_EQ(y->value.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y->value.values[i], ref[i], 1e-12);
    }
  EXPECT_EQ(ConvPadding::same(2).left + ConvPadding::same(2).right, 1u);
}

TEST(Conv1d, ChannelMismatch) {
  auto x = constant(random_tensor({1, 2, 5}, 1));
  auto w = constant(random_tensor({3, 4, 3}, 2));
  auto b = constant(random_tensor({3}, 3));
  EXPECT_POPNET_ERROR(conv1d(x, w, b, ConvPadding::same(3)), kShapeMismatch);
}

TEST(Backward, SquareAtThree) {
  auto w = parameter(Tensor(Shape{}, 3.0));
  backward(sum(square(w)));
  EXPECT_DOUBLE_EQ(w->grad[0], 6.0);
}

TEST(Backward, SumHeadPassesUpstreamScalar) {
  auto h = parameter(random_tensor({3, 5}, 4));
  auto out = row_sum(h);
  backward(scale(sum(out), 2.5));
  for (double g : h->grad) EXPECT_DOUBLE_EQ(g, 2.5);
}

TEST(Backward, Errors) {
  EXPECT_POPNET_ERROR(backward(nullptr), kGraphNotBuilt);
  auto p = parameter(random_tensor({2, 2}, 5));
  EXPECT_POPNET_ERROR(backward(p), kShapeMismatch);
  EXPECT_POPNET_ERROR(backward(sum(constant(random_tensor({2}, 6)))), kGraphNotBuilt);
}

TEST(Backward, GradientsAccumulateUntilCleared) {
  auto w = parameter(Tensor(Shape{}, 2.0));
  backward(sum(square(w)));
  backward(sum(square(w)));
  EXPECT_DOUBLE_EQ(w->grad[0], 8.0);
  w->clear_grad();
  backward(sum(scale(w, 3.0)));
  EXPECT_DOUBLE_EQ(w->grad[0], 3.0);
}

TEST(GradCheck, ElementwiseOps) {
  auto a = parameter(random_tensor({3, 4}, 7));
  auto b = parameter(random_tensor({3, 4}, 8));
  expect_grads_ok(gradcheck([&] { return probe_loss(add(mul(a, b), sub(square(a), scale(b, 0.7))), 9); },
                            {{"a", a}, {"b", b}}, 100, 1));
  expect_grads_ok(gradcheck([&] { return mean(mul(a, b)); }, {{"a", a}, {"b", b}}, 100, 2));
}

TEST(GradCheck, Linear) {
  auto x = parameter(random_tensor({4, 6}, 10));
  auto w = parameter(random_tensor({5, 6}, 11));
  auto b = parameter(random_tensor({5}, 12));
  expect_grads_ok(gradcheck([&] { return probe_loss(linear(x, w, b), 13); }, {{"x", x}, {"w", w}, {"b", b}}, 100, 3));
  auto x1 = parameter(random_tensor({1, 6}, 14));
  expect_grads_ok(gradcheck([&] { return probe_loss(linear(x1, w, b), 15); }, {{"x1", x1}, {"w", w}}, 100, 4));
}

TEST(GradCheck, Conv1dBothPaddings) {
  for (std::size_t k : {2u, 3u}) {
    auto x = parameter(random_tensor({4, 3, 8}, 20 + k));
    auto w = parameter(random_tensor({5, 3, k}, 30 + k));
    auto b = parameter(random_tensor({5}, 40 + k));
    for (auto pad : {ConvPadding::same(k), ConvPadding::valid()}) {
      expect_grads_ok(gradcheck([&] { return probe_loss(conv1d(x, w, b, pad), 50 + k); },
                                {{"x", x}, {"w", w}, {"b", b}}, 200, 5));
    }
  }
}

TEST(GradCheck, BatchNormTrainAndEval) {
  auto gamma = parameter(random_tensor({3}, 60));
  auto beta = parameter(random_tensor({3}, 61));
  for (Shape shape : {Shape{4, 3}, Shape{4, 3, 5}}) {
    auto x = parameter(random_tensor(shape, 62));
    BatchNormState state(3);
    expect_grads_ok(gradcheck(
        [&] {
          BatchNormState scratch = state;  // keep running stats fixed across evaluations
          return probe_loss(batchnorm(x, gamma, beta, scratch, true), 63);
        },
        {{"x", x}, {"gamma", gamma}, {"beta", beta}}, 100, 6));
    state.running_mean = {0.2, -0.1, 0.5};
    state.running_var = {1.5, 0.7, 2.0};
    expect_grads_ok(gradcheck([&] { return probe_loss(batchnorm(x, gamma, beta, state, false), 64); },
                              {{"x", x}, {"gamma", gamma}, {"beta", beta}}, 100, 7));
  }
}

TEST(GradCheck, ReluDropoutShapeOps) {
  auto x = parameter(random_tensor({4, 2, 3}, 70, 1.0, 0.05));
  auto y = parameter(random_tensor({4, 5}, 71, 1.0, 0.05));
  expect_grads_ok(gradcheck(
      [&] {
        std::mt19937_64 rng(72);  // same mask every evaluation
        auto merged = concat({flatten(relu(x)), dropout(y, 0.3, true, rng)});
        return sum(mul(row_sum(merged), constant(random_tensor({4}, 73))));
      },
      {{"x", x}, {"y", y}}, 100, 8));
}

TEST(GradCheck, MseLoss) {
  auto p = parameter(random_tensor({6}, 80));
  const std::vector<double> target = {0.1, -0.4, 2.0, 0.0, 1.0, -1.0};
  expect_grads_ok(gradcheck([&] { return mse_loss(p, target); }, {{"p", p}}, 10, 9));
  auto p2 = parameter(random_tensor({6, 1}, 81));
  expect_grads_ok(gradcheck([&] { return mse_loss(p2, target); }, {{"p2", p2}}, 10, 10));
}

TEST(BatchNorm, ZeroVarianceBatchGivesZeros) {
  auto x = constant(Tensor({4, 2}, 3.0));
  auto gamma = constant(Tensor({2}, 1.0));
  auto beta = constant(Tensor({2}, 0.0));
  BatchNormState s(2);
  const auto y = batchnorm(x, gamma, beta, s, true);
  for (double v : y->value.values) EXPECT_EQ(v, 0.0);
}

TEST(BatchNorm, StandardizesLargeBatch) {
  Tensor t({5000, 1});
  const auto draws = testutil::normal_vector(5000, 3, 2.0);
  for (std::size_t i = 0; i < draws.size(); ++i) t.values[i] = draws[i] + 4.0;
  auto gamma = constant(Tensor({1}, 1.0));
  auto beta = constant(Tensor({1}, 0.0));
  BatchNormState s(1);
  const auto y = batchnorm(constant(t), gamma, beta, s, true);
  double m = 0, v = 0;
  for (double e : y->value.values) m += e / 5000.0;
  for (double e : y->value.values) v += (e - m) * (e - m) / 5000.0;
  EXPECT_NEAR(m, 0.0, 0.1);
  EXPECT_NEAR(v, 1.0, 0.1);
  EXPECT_NEAR(s.running_mean[0], 0.1 * 4.0, 0.05);
}

TEST(BatchNorm, EvalIsPureAndTrainNeedsTwoRows) {
  auto x = constant(random_tensor({3, 2}, 90));
  auto gamma = constant(Tensor({2}, 1.5));
  auto beta = constant(Tensor({2}, 0.2));
  BatchNormState s(2);
  s.running_mean = {0.3, 0.1};
  const auto before = s.running_mean;
  const auto a = batchnorm(x, gamma, beta, s, false)->value.values;
  EXPECT_EQ(a, batchnorm(x, gamma, beta, s, false)->value.values);
  EXPECT_EQ(s.running_mean, before);
  EXPECT_POPNET_ERROR(batchnorm(constant(random_tensor({1, 2}, 91)), gamma, beta, s, true), kBatchTooSmall);
}

TEST(Dropout, EvalAndZeroRateAreIdentity) {
  std::mt19937_64 rng(1);
  auto x = constant(random_tensor({10, 10}, 100));
  EXPECT_EQ(dropout(x, 0.5, false, rng)->value.values, x->value.values);
  EXPECT_EQ(dropout(x, 0.0, true, rng)->value.values, x->value.values);
  EXPECT_POPNET_ERROR(dropout(x, 1.0, true, rng), kInvalidArgument);
  EXPECT_POPNET_ERROR(dropout(x, -0.1, true, rng), kInvalidArgument);
}

TEST(Dropout, DropFrequencyAndScaling) {
  std::mt19937_64 rng(2);
  auto x = constant(Tensor({1000000}, 1.0));
  const auto y = dropout(x, 0.1, true, rng);
  std::size_t dropped = 0;
  for (double v : y->value.values) {
    if (v == 0.0) ++dropped;
    else EXPECT_DOUBLE_EQ(v, 1.0 / 0.9);
  }
  EXPECT_NEAR(static_cast<double>(dropped) / 1e6, 0.1, 0.002);
}

TEST(Adam, FirstStepAndZeroGradient) {
  auto w = parameter(Tensor(Shape{}, 0.0));
  Optimizer opt(OptimizerKind::kAdam, {w}, 0.1);
  w->grad_buffer()[0] = 1.0;
  opt.step();
  EXPECT_NEAR(w->value.values[0], -0.1 / (1.0 + 1e-8), 1e-15);

  auto z = parameter(Tensor({3}, 0.5));
  Optimizer opt2(OptimizerKind::kAdam, {z}, 0.1);
  z->grad_buffer();
  opt2.step();
  opt2.step();
  for (double v : z->value.values) EXPECT_EQ(v, 0.5);
}

TEST(Adam, MatchesScalarRecurrence) {
  const std::vector<double> grads = {0.3, -1.2, 2.5, 0.0, -0.7};
  const auto expected = oracle::scalar_adam(1.5, grads, 0.01);
  auto w = parameter(Tensor(Shape{}, 1.5));
  Optimizer opt(OptimizerKind::kAdam, {w}, 0.01);
  for (std::size_t t = 0; t < grads.size(); ++t) {
    opt.zero_grad();
    w->grad_buffer()[0] = grads[t];
    opt.step();
    EXPECT_NEAR(w->value.values[0], expected[t], 1e-12) << "step " << t;
  }
  EXPECT_EQ(opt.steps(), 5);
}

TEST(Sgd, PlainStep) {
  auto w = parameter(Tensor({2}, std::vector<double>{1.0, -1.0}));
  Optimizer opt(OptimizerKind::kSgd, {w}, 0.5);
  w->grad_buffer()[0] = 2.0;
  w->grad_buffer()[1] = -4.0;
  opt.step();
  EXPECT_DOUBLE_EQ(w->value.values[0], 0.0);
  EXPECT_DOUBLE_EQ(w->value.values[1], 1.0);
}

TEST(LrSchedule, StepDecay) {
  TrainConfig c;
  EXPECT_DOUBLE_EQ(lr_schedule(0, c), 0.001);
  EXPECT_NEAR(lr_schedule(9, c), 0.001, 1e-18);
  EXPECT_NEAR(lr_schedule(10, c), 1e-4, 1e-18);
  EXPECT_NEAR(lr_schedule(25, c), 1e-5, 1e-18);
}

TEST(MseAndCheckpoint, Examples) {
  EXPECT_DOUBLE_EQ(mse({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(mse({0, 0}, {1, 3}), 5.0);
  EXPECT_DOUBLE_EQ(mse_loss(constant(Tensor({2}, 0.0)), {1, 3})->value.values[0], 5.0);
  EXPECT_POPNET_ERROR(mse({1}, {1, 2}), kLengthMismatch);
  EXPECT_POPNET_ERROR(mse_loss(constant(Tensor({2}, 0.0)), {1}), kLengthMismatch);
  EXPECT_EQ(checkpoint_best({0.9, 0.4, 0.4, 0.7}), 1u);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(validate_train_config(c));
  c.batch_size = 0;
  EXPECT_POPNET_ERROR(validate_train_config(c), kInvalidArgument);
}

TEST(ParameterStore, CheckpointRoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  Linear a(6, 4, InitKind::kUniform, rng);
  BatchNorm bn(4);
  bn.state.running_mean = {0.1, 0.2, 0.3, 0.4};
  ParameterStore s;
  a.register_in(s, "fc");
  bn.register_in(s, "bn");
  Archive ar;
  s.save_to(ar);

  std::mt19937_64 rng2(99);
  Linear b(6, 4, InitKind::kScaled, rng2);
  BatchNorm bn2(4);
  ParameterStore t;
  b.register_in(t, "fc");
  bn2.register_in(t, "bn");
  t.load_from(Archive::deserialize(ar.serialize()));
  EXPECT_EQ(b.weight->value.values, a.weight->value.values);
  EXPECT_EQ(bn2.state.running_mean, bn.state.running_mean);
  Archive again;
  t.save_to(again);
  EXPECT_EQ(again.serialize(), ar.serialize());

  Linear c(5, 4, InitKind::kUniform, rng2);
  ParameterStore u;
  c.register_in(u, "fc");
  EXPECT_POPNET_ERROR(u.load_from(ar), kConfigMismatch);
}

TEST(Init, RangesPerKind) {
  std::mt19937_64 rng(6);
  Linear u(50, 40, InitKind::kUniform, rng);
  for (double v : u.weight->value.values) EXPECT_LE(std::abs(v), 1.0);
  Linear s(50, 40, InitKind::kScaled, rng);
  for (double v : s.weight->value.values) EXPECT_LE(std::abs(v), std::sqrt(6.0 / 50.0));
  for (double v : s.bias->value.values) EXPECT_EQ(v, 0.0);
}
