#include "popnet/nn/layers.hpp"

#include <cmath>
#include <sstream>

#include "popnet/error.hpp"

namespace popnet::nn {
namespace {

Tensor init_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = uniform_draw(rng, -bound, bound);
  return t;
}

Var init_weight(Shape shape, std::size_t fan_in, InitKind init, std::mt19937_64& rng) {
  const double bound = init == InitKind::kUniform ? 1.0 : std::sqrt(6.0 / static_cast<double>(fan_in));
  return parameter(init_tensor(std::move(shape), bound, rng));
}

Var init_bias(std::size_t n, InitKind init, std::mt19937_64& rng) {
  if (init == InitKind::kUniform) return parameter(init_tensor({n}, 1.0, rng));
  return parameter(Tensor({n}, 0.0));
}

}  // namespace

const char* init_kind_name(InitKind kind) { return kind == InitKind::kUniform ? "uniform" : "scaled"; }

InitKind parse_init_kind(const std::string& name) {
  if (name == "uniform") return InitKind::kUniform;
  if (name == "scaled") return InitKind::kScaled;
  throw Error(ErrorCode::kInvalidArgument, "init must be 'uniform' or 'scaled', got '" + name + "'");
}

double uniform_draw(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

void ParameterStore::add_parameter(std::string name, Var var) { params_.emplace_back(std::move(name), std::move(var)); }

void ParameterStore::add_buffer(std::string name, std::vector<double>* values) {
  buffers_.emplace_back(std::move(name), values);
}

std::vector<Var> ParameterStore::parameter_vars() const {
  std::vector<Var> out;
  for (const auto& [name, v] : params_) out.push_back(v);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : params_) n += v->value.size();
  return n;
}

bool ParameterStore::has_parameter_prefix(const std::string& prefix) const {
  for (const auto& [name, v] : params_) {
    if (name.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

Var ParameterStore::parameter(const std::string& name) const {
  for (const auto& [n, v] : params_) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "no parameter named '" + name + "'");
}

void ParameterStore::zero_grad() {
  for (auto& [name, v] : params_) v->clear_grad();
}

void ParameterStore::save_to(Archive& ar) const {
  std::ostringstream manifest;
  for (const auto& [name, v] : params_) {
    manifest << "param " << name << " " << shape_string(v->value.shape) << "\n";
    std::vector<std::uint64_t> shape(v->value.shape.begin(), v->value.shape.end());
    ar.put_array("param/" + name, std::move(shape), {v->value.values.begin(), v->value.values.end()});
  }
  for (const auto& [name, b] : buffers_) {
    manifest << "buffer " << name << " [" << b->size() << "]\n";
    ar.put_array("buffer/" + name, *b);
  }
  ar.put_string("manifest", manifest.str());
}

void ParameterStore::load_from(const Archive& ar) {
  for (auto& [name, v] : params_) {
    const auto& entry = ar.array("param/" + name);
    const Shape shape(entry.shape.begin(), entry.shape.end());
    if (shape != v->value.shape) {
      throw Error(ErrorCode::kConfigMismatch, "checkpoint shape of '" + name + "' is " + shape_string(shape) +
                                                  ", model expects " + shape_string(v->value.shape));
    }
    v->value.values.assign(entry.values.begin(), entry.values.end());
    v->clear_grad();
  }
  for (auto& [name, b] : buffers_) {
    const auto& entry = ar.array("buffer/" + name);
    if (entry.values.size() != b->size()) {
      throw Error(ErrorCode::kConfigMismatch, "checkpoint buffer '" + name + "' has the wrong length");
    }
    *b = entry.values;
  }
}

Linear::Linear(std::size_t in, std::size_t out, InitKind init, std::mt19937_64& rng)
    : weight(init_weight({out, in}, in, init, rng)), bias(init_bias(out, init, rng)) {}

void Linear::register_in(ParameterStore& store, const std::string& name) {
  store.add_parameter(name + ".weight", weight);
  store.add_parameter(name + ".bias", bias);
}

Conv1d::Conv1d(std::size_t in, std::size_t out, std::size_t kernel, InitKind init, std::mt19937_64& rng)
    : weight(init_weight({out, in, kernel}, in * kernel, init, rng)),
      bias(init_bias(out, init, rng)),
      padding(ConvPadding::same(kernel)) {}

void Conv1d::register_in(ParameterStore& store, const std::string& name) {
  store.add_parameter(name + ".weight", weight);
  store.add_parameter(name + ".bias", bias);
}

BatchNorm::BatchNorm(std::size_t channels)
    : gamma(parameter(Tensor({channels}, 1.0))), beta(parameter(Tensor({channels}, 0.0))), state(channels) {}

void BatchNorm::register_in(ParameterStore& store, const std::string& name) {
  store.add_parameter(name + ".gamma", gamma);
  store.add_parameter(name + ".beta", beta);
  store.add_buffer(name + ".running_mean", &state.running_mean);
  store.add_buffer(name + ".running_var", &state.running_var);
}

}  // namespace popnet::nn
