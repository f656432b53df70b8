#include "popnet/nn/tensor.hpp"

#include <functional>
#include <numeric>

#include "popnet/error.hpp"

namespace popnet::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, const std::vector<double>& v) : Tensor(std::move(s), Buffer(v.begin(), v.end())) {}

Tensor::Tensor(Shape s, Buffer v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_size(shape)) {
    throw Error(ErrorCode::kShapeMismatch, "tensor of shape " + shape_string(shape) + " given " +
                                               std::to_string(values.size()) + " values");
  }
}

}  // namespace popnet::nn
