#pragma once

#include <random>
#include <string>
#include <vector>

#include "popnet/binio.hpp"
#include "popnet/nn/autodiff.hpp"

namespace popnet::nn {

/// uniform(-1, 1) for every parameter, or He-style uniform(±sqrt(6/fan_in))
/// weights with zero biases.
enum class InitKind { kUniform, kScaled };
const char* init_kind_name(InitKind kind);
InitKind parse_init_kind(const std::string& name);

/// Named view over a model's trainable parameters and non-trainable buffers.
/// Order of registration is the checkpoint order.
class ParameterStore {
 public:
  void add_parameter(std::string name, Var var);
  void add_buffer(std::string name, std::vector<double>* values);

  const std::vector<std::pair<std::string, Var>>& parameters() const { return params_; }
  const std::vector<std::pair<std::string, std::vector<double>*>>& buffers() const { return buffers_; }
  std::vector<Var> parameter_vars() const;
  std::size_t parameter_count() const;
  bool has_parameter_prefix(const std::string& prefix) const;
  Var parameter(const std::string& name) const;

  void zero_grad();

  /// Layer manifest (one "name shape" line per entry) plus f64 payloads.
  void save_to(Archive& ar) const;
  /// Names and shapes must match the manifest exactly.
  void load_from(const Archive& ar);

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::vector<std::pair<std::string, std::vector<double>*>> buffers_;
};

double uniform_draw(std::mt19937_64& rng, double lo, double hi);

struct Linear {
  Var weight;  // [out, in]
  Var bias;    // [out]

  Linear(std::size_t in, std::size_t out, InitKind init, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return linear(x, weight, bias); }
  void register_in(ParameterStore& store, const std::string& name);
};

struct Conv1d {
  Var weight;  // [out, in, k]
  Var bias;    // [out]
  ConvPadding padding;

  Conv1d(std::size_t in, std::size_t out, std::size_t kernel, InitKind init, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return conv1d(x, weight, bias, padding); }
  void register_in(ParameterStore& store, const std::string& name);
};

struct BatchNorm {
  Var gamma;
  Var beta;
  BatchNormState state;

  explicit BatchNorm(std::size_t channels);
  Var operator()(const Var& x, bool training) { return batchnorm(x, gamma, beta, state, training); }
  void register_in(ParameterStore& store, const std::string& name);
};

}  // namespace popnet::nn
