#include "popnet/popmodels.hpp"

#include <cstdio>
#include <limits>

#include "popnet/error.hpp"

namespace popnet {
namespace {

nn::Var as_channels(const Matrix& m) {
  const auto rows = static_cast<std::size_t>(m.rows()), cols = static_cast<std::size_t>(m.cols());
  nn::Tensor t({rows, 1, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      t.values[i * cols + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return nn::constant(std::move(t));
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto next = s.find(',', pos);
    out.push_back(std::stoul(s.substr(pos, next - pos)));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

struct Snapshot {
  std::vector<nn::Buffer> params;
  std::vector<std::vector<double>> buffers;

  static Snapshot take(const nn::ParameterStore& s) {
    Snapshot snap;
    for (const auto& [name, v] : s.parameters()) snap.params.push_back(v->value.values);
    for (const auto& [name, b] : s.buffers()) snap.buffers.push_back(*b);
    return snap;
  }
  void restore(nn::ParameterStore& s) const {
    for (std::size_t i = 0; i < params.size(); ++i) s.parameters()[i].second->value.values = params[i];
    for (std::size_t i = 0; i < buffers.size(); ++i) *s.buffers()[i].second = buffers[i];
  }
};

}  // namespace

const char* net_kind_name(NetKind kind) {
  switch (kind) {
    case NetKind::kVscnn: return "vscnn";
    case NetKind::kVcnn: return "vcnn";
    case NetKind::kScnn: return "scnn";
    case NetKind::kVscnnEf: return "vscnn_ef";
  }
  return "?";
}

NetKind parse_net_kind(const std::string& name) {
  for (auto k : {NetKind::kVscnn, NetKind::kVcnn, NetKind::kScnn, NetKind::kVscnnEf}) {
    if (name == net_kind_name(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown network kind '" + name + "'");
}

bool net_uses_visual(NetKind kind) { return kind != NetKind::kScnn; }
bool net_uses_social(NetKind kind) { return kind == NetKind::kVscnn || kind == NetKind::kScnn; }

PopularityNet::PopularityNet(NetKind kind, NetworkConfig config, std::uint64_t seed)
    : kind_(kind), config_(std::move(config)), seed_(seed) {
  std::mt19937_64 rng(seed);
  auto build_branch = [&](std::vector<ConvStage>& stages, const std::vector<std::size_t>& channels,
                          std::size_t kernel, const std::string& prefix) {
    std::size_t in = 1;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      stages.push_back({nn::Conv1d(in, channels[i], kernel, config_.init, rng), nn::BatchNorm(channels[i])});
      in = channels[i];
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const std::string name = prefix + std::to_string(i + 1);
      stages[i].conv.register_in(store_, name);
      if (config_.batch_norm) stages[i].bn.register_in(store_, name + ".bn");
    }
  };
  if (net_uses_visual(kind_)) build_branch(visual_, config_.visual_channels, config_.visual_kernel, "conv1d_v");
  if (net_uses_social(kind_)) build_branch(social_, config_.social_channels, config_.social_kernel, "conv1d_s");
  fc1_ = std::make_unique<nn::Linear>(merged_width(), config_.fc1, config_.init, rng);
  fc1_->register_in(store_, "fc1");
  fc2_ = std::make_unique<nn::Linear>(config_.fc1, config_.fc2, config_.init, rng);
  if (config_.init == nn::InitKind::kScaled && !config_.trainable_head) {
    // The fixed sum adds fc2 outputs, so shrink them to keep the initial prediction near unit scale.
    const double s = 1.0 / std::sqrt(static_cast<double>(config_.fc2));
    for (auto& v : fc2_->weight->value.values) v *= s;
  }
  fc2_->register_in(store_, "fc2");
  if (config_.trainable_head) {
    head_ = std::make_unique<nn::Linear>(config_.fc2, 1, config_.init, rng);
    head_->register_in(store_, "head");
  }
}

std::size_t PopularityNet::x_dim() const {
  if (!net_uses_visual(kind_)) return 0;
  return kind_ == NetKind::kVscnnEf ? static_cast<std::size_t>(kEarlyPcaDim) : config_.visual_dim;
}

std::size_t PopularityNet::z_dim() const { return net_uses_social(kind_) ? config_.social_dim : 0; }

std::size_t PopularityNet::merged_width() const {
  std::size_t w = 0;
  if (!visual_.empty()) w += x_dim() * config_.visual_channels.back();
  if (!social_.empty()) w += z_dim() * config_.social_channels.back();
  return w;
}

void PopularityNet::check_inputs(const Matrix& x, const Matrix& z) const {
  if (x_dim() > 0 && static_cast<std::size_t>(x.cols()) != x_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(net_kind_name(kind_)) + " expects " +
                                                   std::to_string(x_dim()) + "-d x, got " + std::to_string(x.cols()));
  }
  if (z_dim() > 0 && static_cast<std::size_t>(z.cols()) != z_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(net_kind_name(kind_)) + " expects " +
                                                   std::to_string(z_dim()) + "-d z, got " + std::to_string(z.cols()));
  }
  if (x_dim() > 0 && z_dim() > 0 && x.rows() != z.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "x and z row counts differ");
  }
}

nn::Var PopularityNet::run_branch(std::vector<ConvStage>& stages, const Matrix& input, bool training,
                                  double dropout, std::mt19937_64& rng) {
  nn::Var h = as_channels(input);
  for (auto& s : stages) {
    h = s.conv(h);
    if (config_.batch_norm) h = s.bn(h, training);
    h = nn::dropout(nn::relu(h), dropout, training, rng);
  }
  return nn::flatten(h);
}

nn::Var PopularityNet::forward(const Matrix& x, const Matrix& z, bool training, double hidden_dropout,
                               double final_dropout, std::mt19937_64& rng) {
  check_inputs(x, z);
  std::vector<nn::Var> parts;
  if (!visual_.empty()) parts.push_back(run_branch(visual_, x, training, hidden_dropout, rng));
  if (!social_.empty()) parts.push_back(run_branch(social_, z, training, hidden_dropout, rng));
  nn::Var merged = parts.size() == 1 ? parts[0] : nn::concat(parts);
  nn::Var h = nn::dropout(nn::relu((*fc1_)(merged)), hidden_dropout, training, rng);
  h = nn::dropout(nn::relu((*fc2_)(h)), final_dropout, training, rng);
  if (head_) return nn::flatten((*head_)(h));
  return nn::row_sum(h);
}

std::vector<double> PopularityNet::predict(const DescriptorSet& data) {
  check_inputs(data.x, data.z);
  const auto n = static_cast<std::size_t>(x_dim() > 0 ? data.x.rows() : data.z.rows());
  std::vector<double> out;
  out.reserve(n);
  std::mt19937_64 unused(0);
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const auto len = static_cast<Eigen::Index>(std::min(kChunk, n - begin));
    const auto b = static_cast<Eigen::Index>(begin);
    const Matrix x = x_dim() > 0 ? Matrix(data.x.middleRows(b, len)) : Matrix(len, 0);
    const Matrix z = z_dim() > 0 ? Matrix(data.z.middleRows(b, len)) : Matrix(len, 0);
    const auto y = forward(x, z, false, 0.0, 0.0, unused);
    out.insert(out.end(), y->value.values.begin(), y->value.values.end());
  }
  return out;
}

Archive PopularityNet::to_archive() const {
  Archive ar;
  ar.put_string("kind", net_kind_name(kind_));
  ar.put_string("config.visual_channels", join_sizes(config_.visual_channels));
  ar.put_string("config.social_channels", join_sizes(config_.social_channels));
  ar.put_scalar("config.visual_kernel", static_cast<double>(config_.visual_kernel));
  ar.put_scalar("config.social_kernel", static_cast<double>(config_.social_kernel));
  ar.put_scalar("config.fc1", static_cast<double>(config_.fc1));
  ar.put_scalar("config.fc2", static_cast<double>(config_.fc2));
  ar.put_scalar("config.visual_dim", static_cast<double>(config_.visual_dim));
  ar.put_scalar("config.social_dim", static_cast<double>(config_.social_dim));
  ar.put_string("config.init", nn::init_kind_name(config_.init));
  ar.put_scalar("config.trainable_head", config_.trainable_head ? 1.0 : 0.0);
  ar.put_scalar("config.batch_norm", config_.batch_norm ? 1.0 : 0.0);
  ar.put_string("seed", std::to_string(seed_));
  store_.save_to(ar);
  return ar;
}

std::unique_ptr<PopularityNet> PopularityNet::from_archive(const Archive& ar) {
  NetworkConfig c;
  c.visual_channels = split_sizes(ar.string("config.visual_channels"));
  c.social_channels = split_sizes(ar.string("config.social_channels"));
  c.visual_kernel = static_cast<std::size_t>(ar.scalar("config.visual_kernel"));
  c.social_kernel = static_cast<std::size_t>(ar.scalar("config.social_kernel"));
  c.fc1 = static_cast<std::size_t>(ar.scalar("config.fc1"));
  c.fc2 = static_cast<std::size_t>(ar.scalar("config.fc2"));
  c.visual_dim = static_cast<std::size_t>(ar.scalar("config.visual_dim"));
  c.social_dim = static_cast<std::size_t>(ar.scalar("config.social_dim"));
  c.init = nn::parse_init_kind(ar.string("config.init"));
  c.trainable_head = ar.scalar("config.trainable_head") != 0.0;
  c.batch_norm = ar.scalar("config.batch_norm") != 0.0;
  auto net = std::make_unique<PopularityNet>(parse_net_kind(ar.string("kind")), c,
                                             std::stoull(ar.string("seed")));
  net->store_.load_from(ar);
  return net;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[uniform_below(rng, i)]);
  return p;
}

TrainResult train(PopularityNet& net, const DescriptorSet& train_set, const std::vector<double>& train_y,
                  const DescriptorSet& val_set, const std::vector<double>& val_y, const nn::TrainConfig& config) {
  nn::validate_train_config(config);
  const auto n = static_cast<std::size_t>(net.x_dim() > 0 ? train_set.x.rows() : train_set.z.rows());
  if (n != train_y.size()) throw Error(ErrorCode::kLengthMismatch, "training targets do not match rows");
  const auto n_val = static_cast<std::size_t>(net.x_dim() > 0 ? val_set.x.rows() : val_set.z.rows());
  if (n_val != val_y.size()) throw Error(ErrorCode::kLengthMismatch, "validation targets do not match rows");
  if (n == 0 || n_val == 0) throw Error(ErrorCode::kInvalidArgument, "training and validation sets must be nonempty");

  std::mt19937_64 shuffle_rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0x14057b7ef767814fULL);
  nn::Optimizer opt(config.optimizer, net.store().parameter_vars(), config.initial_lr);

  const auto batch = static_cast<std::size_t>(config.batch_size);
  TrainResult result;
  Snapshot best;
  result.best_val_mse = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = nn::lr_schedule(epoch, config);
    opt.set_learning_rate(lr);
    const auto order = seeded_permutation(n, shuffle_rng);
    std::vector<std::size_t> bounds;
    for (std::size_t b = 0; b < n; b += batch) bounds.push_back(b);
    if (bounds.size() > 1 && n - bounds.back() == 1) bounds.pop_back();
    bounds.push_back(n);

    double loss_sum = 0.0;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      const std::size_t begin = bounds[k], end = bounds[k + 1];
      const Matrix x = net.x_dim() > 0 ? take_rows(train_set.x, order, begin, end) : Matrix(end - begin, 0);
      const Matrix z = net.z_dim() > 0 ? take_rows(train_set.z, order, begin, end) : Matrix(end - begin, 0);
      std::vector<double> y(end - begin);
      for (std::size_t i = begin; i < end; ++i) y[i - begin] = train_y[order[i]];
      opt.zero_grad();
      auto pred = net.forward(x, z, true, config.hidden_dropout, config.final_dropout, dropout_rng);
      auto loss = nn::mse_loss(pred, y);
      nn::backward(loss);
      opt.step();
      loss_sum += loss->value.values[0];
    }
    opt.zero_grad();

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.train_mse = loss_sum / static_cast<double>(bounds.size() - 1);
    entry.val_mse = nn::mse(net.predict(val_set), val_y);
    result.log.push_back(entry);
    if (entry.val_mse < result.best_val_mse) {
      result.best_val_mse = entry.val_mse;
      result.best_epoch = static_cast<std::size_t>(epoch);
      best = Snapshot::take(net.store());
    }
  }
  if (!best.params.empty()) best.restore(net.store());
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,lr,train_mse,val_mse\n";
  char buf[160];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_mse, e.val_mse);
    out += buf;
  }
  return out;
}

}  // namespace popnet
