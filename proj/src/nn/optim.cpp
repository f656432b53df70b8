#include "popnet/nn/optim.hpp"

#include <cmath>

#include "popnet/error.hpp"

namespace popnet::nn {

const char* optimizer_kind_name(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw Error(ErrorCode::kInvalidArgument, "optimizer must be 'adam' or 'sgd', got '" + name + "'");
}

void validate_train_config(const TrainConfig& c) {
  if (c.epochs < 1 || c.batch_size < 1 || c.lr_decay_every < 1) {
    throw Error(ErrorCode::kInvalidArgument, "epochs, batch_size and lr_decay_every must be positive");
  }
  if (!(c.initial_lr > 0) || !(c.lr_decay_factor > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate and decay factor must be positive");
  }
  for (double r : {c.hidden_dropout, c.final_dropout}) {
    if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::kInvalidArgument, "dropout rates must lie in [0, 1)");
  }
}

double lr_schedule(int epoch, const TrainConfig& config) {
  if (epoch < 0) throw Error(ErrorCode::kInvalidArgument, "epoch must be non-negative");
  return config.initial_lr * std::pow(config.lr_decay_factor, epoch / config.lr_decay_every);
}

std::size_t checkpoint_best(const std::vector<double>& history) {
  if (history.empty()) throw Error(ErrorCode::kInvalidArgument, "empty validation history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] < history[best]) best = i;
  }
  return best;
}

double mse(const std::vector<double>& pred, const std::vector<double>& target) {
  if (pred.size() != target.size()) {
    throw Error(ErrorCode::kLengthMismatch, "mse: " + std::to_string(pred.size()) + " predictions for " +
                                                std::to_string(target.size()) + " targets");
  }
  if (pred.empty()) throw Error(ErrorCode::kLengthMismatch, "mse of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

Optimizer::Optimizer(OptimizerKind kind, std::vector<Var> params, double lr)
    : kind_(kind), params_(std::move(params)), lr_(lr) {
  if (kind_ == OptimizerKind::kAdam) {
    for (const auto& p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p->clear_grad();
}

void Optimizer::step() {
  ++t_;
  if (kind_ == OptimizerKind::kSgd) {
    for (auto& p : params_) {
      if (!p->grad_live) continue;
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value.values[i] -= lr_ * p->grad[i];
    }
    return;
  }
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  const double step_size = lr_ / c1;
  const double inv_c2 = 1.0 / c2;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = *params_[k];
    const std::size_t n = p.value.size();
    double* __restrict w = p.value.data();
    double* __restrict m = m_[k].data();
    double* __restrict v = v_[k].data();
    if (!p.grad_live) {
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = kBeta1 * m[i];
        v[i] = kBeta2 * v[i];
        w[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_c2) + kEps);
      }
      continue;
    }
    const double* __restrict g = p.grad.data();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      w[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_c2) + kEps);
    }
  }
}

}  // namespace popnet::nn
