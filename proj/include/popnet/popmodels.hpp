#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "popnet/nn/layers.hpp"
#include "popnet/nn/optim.hpp"
#include "popnet/reduce.hpp"

namespace popnet {

enum class NetKind { kVscnn, kVcnn, kScnn, kVscnnEf };
const char* net_kind_name(NetKind kind);
NetKind parse_net_kind(const std::string& name);
bool net_uses_visual(NetKind kind);
bool net_uses_social(NetKind kind);

struct NetworkConfig {
  std::vector<std::size_t> visual_channels{32, 64, 128};
  std::size_t visual_kernel = 3;
  std::vector<std::size_t> social_channels{32, 64, 128};
  std::size_t social_kernel = 2;
  std::size_t fc1 = 1024;
  std::size_t fc2 = 500;
  std::size_t visual_dim = kVisualPcaDim;
  std::size_t social_dim = kSocialPcaDim;
  nn::InitKind init = nn::InitKind::kUniform;
  /// Replace the fixed sum of FC2 outputs with a trainable 1-unit layer.
  bool trainable_head = false;
  bool batch_norm = true;
};

/// Conv branches over the descriptor vectors (one channel, length = dim),
/// flatten and concatenate, then FC1 -> FC2 -> final node. Each conv layer
/// runs conv -> batch norm -> ReLU -> dropout.
class PopularityNet {
 public:
  PopularityNet(NetKind kind, NetworkConfig config, std::uint64_t seed);
  PopularityNet(const PopularityNet&) = delete;
  PopularityNet& operator=(const PopularityNet&) = delete;

  NetKind kind() const { return kind_; }
  const NetworkConfig& config() const { return config_; }
  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }
  /// Width of the flattened, concatenated branch outputs.
  std::size_t merged_width() const;
  /// Expected x / z column counts (0 when the input is unused).
  std::size_t x_dim() const;
  std::size_t z_dim() const;

  /// x rows feed the visual (or fused) branch, z rows the social branch.
  nn::Var forward(const Matrix& x, const Matrix& z, bool training, double hidden_dropout,
                  double final_dropout, std::mt19937_64& rng);
  /// Evaluation-mode scores; independent of how rows are batched.
  std::vector<double> predict(const DescriptorSet& data);

  Archive to_archive() const;
  static std::unique_ptr<PopularityNet> from_archive(const Archive& ar);

 private:
  struct ConvStage {
    nn::Conv1d conv;
    nn::BatchNorm bn;
  };
  nn::Var run_branch(std::vector<ConvStage>& stages, const Matrix& input, bool training, double dropout,
                     std::mt19937_64& rng);
  void check_inputs(const Matrix& x, const Matrix& z) const;

  NetKind kind_;
  NetworkConfig config_;
  std::uint64_t seed_;
  std::vector<ConvStage> visual_;
  std::vector<ConvStage> social_;
  std::unique_ptr<nn::Linear> fc1_;
  std::unique_ptr<nn::Linear> fc2_;
  std::unique_ptr<nn::Linear> head_;
  nn::ParameterStore store_;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_mse = 0.0;  // mean of the epoch's batch losses
  double val_mse = 0.0;    // evaluation mode
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
};

/// Seeded shuffling each epoch, step-decayed learning rate, and the weights
/// of the best validation epoch restored at the end. A trailing batch of a
/// single row joins the previous batch.
TrainResult train(PopularityNet& net, const DescriptorSet& train_set, const std::vector<double>& train_y,
                  const DescriptorSet& val_set, const std::vector<double>& val_y, const nn::TrainConfig& config);

std::string training_log_csv(const std::vector<EpochLog>& log);

/// Fisher-Yates permutation of 0..n-1 drawn with rejection sampling.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::mt19937_64& rng);

}  // namespace popnet
