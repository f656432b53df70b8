#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popnet/nn/autodiff.hpp"

namespace popnet::nn {

enum class OptimizerKind { kAdam, kSgd };
const char* optimizer_kind_name(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 20;
  double initial_lr = 0.001;
  double lr_decay_factor = 0.1;
  int lr_decay_every = 10;
  std::uint64_t seed = 0;
  double hidden_dropout = 0.1;
  double final_dropout = 0.2;
  OptimizerKind optimizer = OptimizerKind::kAdam;
};

void validate_train_config(const TrainConfig& config);

/// initial_lr * decay_factor^floor(epoch / decay_every).
double lr_schedule(int epoch, const TrainConfig& config);

/// Index of the smallest entry, earliest on ties.
std::size_t checkpoint_best(const std::vector<double>& history);

/// Plain mean squared error of two equal-length sequences.
double mse(const std::vector<double>& pred, const std::vector<double>& target);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias corrected) or plain SGD over
/// a fixed parameter list. Missing gradients count as zero.
class Optimizer {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Optimizer(OptimizerKind kind, std::vector<Var> params, double lr);

  void step();
  void zero_grad();
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  OptimizerKind kind_;
  std::vector<Var> params_;
  double lr_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace popnet::nn
