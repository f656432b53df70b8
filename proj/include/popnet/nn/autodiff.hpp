#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "popnet/nn/tensor.hpp"

namespace popnet::nn {

/// A value in the computation graph. Parameters are long-lived leaves with
/// requires_grad set; every op result records its parents and a closure
/// that pushes its gradient back to them.
struct Node {
  Tensor value;
  Buffer grad;  // meaningful only while grad_live
  bool grad_live = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Zero-filled on first use after clear_grad().
  Buffer& grad_buffer();
  /// Marks the gradient absent while keeping its storage.
  void clear_grad() { grad_live = false; }
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor t);
Var parameter(Tensor t);

/// Reverse pass from a scalar node. Gradients accumulate into every node
/// that requires them; parameters keep theirs until cleared.
void backward(const Var& loss);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var square(const Var& a);
Var scale(const Var& a, double k);
Var sum(const Var& a);
Var mean(const Var& a);

/// x [B, in], w [out, in], b [out] -> x wᵀ + b, [B, out].
Var linear(const Var& x, const Var& w, const Var& b);

struct ConvPadding {
  std::size_t left = 0;
  std::size_t right = 0;
  /// Output length equals input length: left = (k-1)/2, right = k-1-left.
  static ConvPadding same(std::size_t kernel);
  static ConvPadding valid() { return {}; }
};

/// Cross-correlation with stride 1. x [B, Cin, L], w [Cout, Cin, k],
/// b [Cout] -> [B, Cout, L + left + right - k + 1].
Var conv1d(const Var& x, const Var& w, const Var& b, ConvPadding padding);

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Normalizes per channel: x is [B, C] or [B, C, L] and statistics run over
/// every axis except C. Training mode uses biased batch statistics and
/// updates the running averages (unbiased variance); evaluation uses the
/// running averages and leaves them untouched.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool training);

Var relu(const Var& x);

/// Inverted dropout. In training each element is zeroed with probability
/// `rate` and survivors are scaled by 1 / (1 - rate).
Var dropout(const Var& x, double rate, bool training, std::mt19937_64& rng);

/// [B, ...] -> [B, prod(...)].
Var flatten(const Var& x);
/// Concatenates [B, n_i] blocks along axis 1.
Var concat(const std::vector<Var>& parts);
/// [B, F] -> [B], summing each row.
Var row_sum(const Var& x);
/// Mean squared error of pred [B] (or [B, 1]) against target values.
Var mse_loss(const Var& pred, const std::vector<double>& target);

}  // namespace popnet::nn
