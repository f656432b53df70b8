#include "popnet/nn/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "popnet/error.hpp"

namespace popnet::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;
using MapVector = Eigen::Map<Eigen::VectorXd>;
using ConstMapVector = Eigen::Map<const Eigen::VectorXd>;

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p->requires_grad; });
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return node;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.shape != b->value.shape) {
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": shapes " + shape_string(a->value.shape) + " and " +
                                               shape_string(b->value.shape) + " differ");
  }
}

void require_rank(const Var& x, std::size_t rank, const char* op) {
  if (x->value.rank() != rank) {
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": expected rank " + std::to_string(rank) +
                                               ", got " + shape_string(x->value.shape));
  }
}

// Adds `g` into a parent's gradient when that parent wants one.
void accumulate(const Var& parent, const Buffer& g) {
  if (!parent->requires_grad) return;
  auto& buf = parent->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

// Eigen picks a matrix-vector kernel for a single row, whose rounding
// differs from the matrix-matrix kernel; a duplicated row keeps results
// independent of batch size.
RowMatrix product_rows(const ConstMapMatrix& x, const ConstMapMatrix& w_t_source) {
  if (x.rows() == 1) {
    RowMatrix two(2, x.cols());
    two.row(0) = x.row(0);
    two.row(1) = x.row(0);
    RowMatrix y = two * w_t_source.transpose();
    return y.topRows(1);
  }
  return x * w_t_source.transpose();
}

}  // namespace

Buffer& Node::grad_buffer() {
  if (!grad_live) {
    grad.assign(value.size(), 0.0);
    grad_live = true;
  }
  return grad;
}

Var constant(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  return node;
}

Var parameter(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  node->requires_grad = true;
  return node;
}

void backward(const Var& loss) {
  if (!loss) throw Error(ErrorCode::kGraphNotBuilt, "backward called without a loss node");
  if (loss->value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar, got " + shape_string(loss->value.shape));
  }
  if (!loss->requires_grad) {
    throw Error(ErrorCode::kGraphNotBuilt, "no recorded operation connects the loss to a parameter");
  }
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad_live) n->backward_fn(*n);
  }
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b->value.values[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    accumulate(n.parents[0], n.grad);
    accumulate(n.parents[1], n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= b->value.values[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    accumulate(n.parents[0], n.grad);
    Buffer g(n.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -n.grad[i];
    accumulate(n.parents[1], g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= b->value.values[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    const auto& av = n.parents[0]->value.values;
    const auto& bv = n.parents[1]->value.values;
    Buffer ga(n.grad.size()), gb(n.grad.size());
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] = n.grad[i] * bv[i];
      gb[i] = n.grad[i] * av[i];
    }
    accumulate(n.parents[0], ga);
    accumulate(n.parents[1], gb);
  });
}

Var square(const Var& a) {
  Tensor out = a->value;
  for (auto& v : out.values) v *= v;
  return make_result(std::move(out), {a}, [](Node& n) {
    const auto& av = n.parents[0]->value.values;
    Buffer g(n.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * av[i] * n.grad[i];
    accumulate(n.parents[0], g);
  });
}

Var scale(const Var& a, double k) {
  Tensor out = a->value;
  for (auto& v : out.values) v *= k;
  return make_result(std::move(out), {a}, [k](Node& n) {
    Buffer g(n.grad);
    for (auto& v : g) v *= k;
    accumulate(n.parents[0], g);
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a->value.values) s += v;
  return make_result(Tensor(Shape{}, s), {a}, [](Node& n) {
    accumulate(n.parents[0], Buffer(n.parents[0]->value.size(), n.grad[0]));
  });
}

Var mean(const Var& a) {
  if (a->value.size() == 0) throw Error(ErrorCode::kShapeMismatch, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a->value.size()));
}

Var linear(const Var& x, const Var& w, const Var& b) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t batch = x->value.dim(0), in = x->value.dim(1), out = w->value.dim(0);
  if (w->value.dim(1) != in || b->value.size() != out) {
    throw Error(ErrorCode::kShapeMismatch, "linear: input " + shape_string(x->value.shape) + " weight " +
                                               shape_string(w->value.shape) + " bias " +
                                               shape_string(b->value.shape));
  }
  const ConstMapMatrix xm(x->value.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
  const ConstMapMatrix wm(w->value.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  Tensor y({batch, out});
  MapMatrix ym(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
  if (batch > 0) ym = product_rows(xm, wm);
  ym.rowwise() += ConstMapVector(b->value.data(), static_cast<Eigen::Index>(out)).transpose();

  return make_result(std::move(y), {x, w, b}, [batch, in, out](Node& n) {
    const auto B = static_cast<Eigen::Index>(batch), I = static_cast<Eigen::Index>(in),
               O = static_cast<Eigen::Index>(out);
    const ConstMapMatrix gy(n.grad.data(), B, O);
    const auto& px = n.parents[0];
    const auto& pw = n.parents[1];
    const auto& pb = n.parents[2];
    if (px->requires_grad) {
      MapMatrix gx(px->grad_buffer().data(), B, I);
      gx.noalias() += gy * ConstMapMatrix(pw->value.data(), O, I);
    }
    if (pw->requires_grad) {
      const ConstMapMatrix xm(px->value.data(), B, I);
      if (pw->grad_live) {
        MapMatrix(pw->grad.data(), O, I).noalias() += gy.transpose() * xm;
      } else {
        pw->grad.resize(pw->value.size());
        pw->grad_live = true;
        MapMatrix(pw->grad.data(), O, I).noalias() = gy.transpose() * xm;
      }
    }
    if (pb->requires_grad) {
      MapVector gb(pb->grad_buffer().data(), O);
      gb += gy.colwise().sum().transpose();
    }
  });
}

ConvPadding ConvPadding::same(std::size_t kernel) {
  const std::size_t left = (kernel - 1) / 2;
  return {left, kernel - 1 - left};
}

Var conv1d(const Var& x, const Var& w, const Var& b, ConvPadding padding) {
  require_rank(x, 3, "conv1d");
  require_rank(w, 3, "conv1d");
  const std::size_t batch = x->value.dim(0), cin = x->value.dim(1), len = x->value.dim(2);
  const std::size_t cout = w->value.dim(0), k = w->value.dim(2);
  if (w->value.dim(1) != cin || b->value.size() != cout) {
    throw Error(ErrorCode::kShapeMismatch, "conv1d: input " + shape_string(x->value.shape) + " weight " +
                                               shape_string(w->value.shape) + " bias " +
                                               shape_string(b->value.shape));
  }
  if (len + padding.left + padding.right < k) {
    throw Error(ErrorCode::kShapeMismatch, "conv1d: kernel longer than padded input");
  }
  const std::size_t lout = len + padding.left + padding.right - k + 1;
  const std::size_t rows = batch * lout, width = cin * k;

  // im2col: row (b, t) holds the receptive field of output position t.
  auto cols = std::make_shared<RowMatrix>(RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width)));
  const double* xv = x->value.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t t = 0; t < lout; ++t) {
      double* row = cols->data() + (bi * lout + t) * width;
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t j = 0; j < k; ++j) {
          const auto src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(padding.left);
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) {
            row[c * k + j] = xv[(bi * cin + c) * len + static_cast<std::size_t>(src)];
          }
        }
      }
    }
  }
  const ConstMapMatrix wm(w->value.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(width));
  RowMatrix yc = rows > 0 ? product_rows(ConstMapMatrix(cols->data(), cols->rows(), cols->cols()), wm)
                          : RowMatrix(0, static_cast<Eigen::Index>(cout));
  Tensor y({batch, cout, lout});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t co = 0; co < cout; ++co) {
      const double bias = b->value.values[co];
      for (std::size_t t = 0; t < lout; ++t) {
        y.values[(bi * cout + co) * lout + t] = yc(static_cast<Eigen::Index>(bi * lout + t), static_cast<Eigen::Index>(co)) + bias;
      }
    }
  }

  return make_result(std::move(y), {x, w, b}, [=](Node& n) {
    RowMatrix gyc(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cout));
    for (std::size_t bi = 0; bi < batch; ++bi) {
      for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t t = 0; t < lout; ++t) {
          gyc(static_cast<Eigen::Index>(bi * lout + t), static_cast<Eigen::Index>(co)) = n.grad[(bi * cout + co) * lout + t];
        }
      }
    }
    const auto& px = n.parents[0];
    const auto& pw = n.parents[1];
    const auto& pb = n.parents[2];
    if (pw->requires_grad) {
      MapMatrix gw(pw->grad_buffer().data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(width));
      gw.noalias() += gyc.transpose() * *cols;
    }
    if (pb->requires_grad) {
      MapVector gb(pb->grad_buffer().data(), static_cast<Eigen::Index>(cout));
      gb += gyc.colwise().sum().transpose();
    }
    if (px->requires_grad) {
      const RowMatrix gcols =
          gyc * ConstMapMatrix(pw->value.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(width));
      auto& gx = px->grad_buffer();
      for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t t = 0; t < lout; ++t) {
          const double* row = gcols.data() + (bi * lout + t) * width;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t j = 0; j < k; ++j) {
              const auto src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(padding.left);
              if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) {
                gx[(bi * cin + c) * len + static_cast<std::size_t>(src)] += row[c * k + j];
              }
            }
          }
        }
      }
    }
  });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool training) {
  const auto& shape = x->value.shape;
  if (shape.size() != 2 && shape.size() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "batchnorm expects [B, C] or [B, C, L], got " + shape_string(shape));
  }
  const std::size_t batch = shape[0], channels = shape[1], len = shape.size() == 3 ? shape[2] : 1;
  if (gamma->value.size() != channels || beta->value.size() != channels ||
      state.running_mean.size() != channels || state.running_var.size() != channels) {
    throw Error(ErrorCode::kShapeMismatch, "batchnorm parameters do not match " + std::to_string(channels) + " channels");
  }
  if (training && batch < 2) {
    throw Error(ErrorCode::kBatchTooSmall, "batchnorm training needs a batch of at least 2, got " + std::to_string(batch));
  }
  const double count = static_cast<double>(batch * len);
  const double* xv = x->value.data();
  auto at = [len, channels](std::size_t bi, std::size_t c, std::size_t t) { return (bi * channels + c) * len + t; };

  std::vector<double> mu(channels), inv_std(channels);
  if (training) {
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t bi = 0; bi < batch; ++bi)
        for (std::size_t t = 0; t < len; ++t) s += xv[at(bi, c, t)];
      const double m = s / count;
      double ss = 0.0;
      for (std::size_t bi = 0; bi < batch; ++bi)
        for (std::size_t t = 0; t < len; ++t) ss += (xv[at(bi, c, t)] - m) * (xv[at(bi, c, t)] - m);
      const double var = ss / count;
      mu[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * m;
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * ss / std::max(1.0, count - 1.0);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mu[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  auto xhat = std::make_shared<Buffer>(x->value.size());
  Tensor y(shape);
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = at(bi, c, t);
        (*xhat)[i] = (xv[i] - mu[c]) * inv_std[c];
        y.values[i] = gamma->value.values[c] * (*xhat)[i] + beta->value.values[c];
      }
    }
  }

  return make_result(std::move(y), {x, gamma, beta}, [=](Node& n) {
    const auto& px = n.parents[0];
    const auto& pg = n.parents[1];
    const auto& pb = n.parents[2];
    const auto& gv = pg->value.values;
    for (std::size_t c = 0; c < channels; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t i = at(bi, c, t);
          sum_dy += n.grad[i];
          sum_dy_xhat += n.grad[i] * (*xhat)[i];
        }
      }
      if (pg->requires_grad) pg->grad_buffer()[c] += sum_dy_xhat;
      if (pb->requires_grad) pb->grad_buffer()[c] += sum_dy;
      if (!px->requires_grad) continue;
      auto& gx = px->grad_buffer();
      const double k = gv[c] * inv_std[c];
      for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t i = at(bi, c, t);
          gx[i] += training ? k * (n.grad[i] - sum_dy / count - (*xhat)[i] * sum_dy_xhat / count) : k * n.grad[i];
        }
      }
    }
  });
}

Var relu(const Var& x) {
  Tensor out = x->value;
  for (auto& v : out.values) v = v > 0 ? v : 0.0;
  return make_result(std::move(out), {x}, [](Node& n) {
    const auto& xv = n.parents[0]->value.values;
    Buffer g(n.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = xv[i] > 0 ? n.grad[i] : 0.0;
    accumulate(n.parents[0], g);
  });
}

Var dropout(const Var& x, double rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::kInvalidArgument, "dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x->value.size());
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    (*mask)[i] = u < rate ? 0.0 : keep_scale;
    out.values[i] *= (*mask)[i];
  }
  return make_result(std::move(out), {x}, [mask](Node& n) {
    Buffer g(n.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * (*mask)[i];
    accumulate(n.parents[0], g);
  });
}

Var flatten(const Var& x) {
  if (x->value.rank() < 1) throw Error(ErrorCode::kShapeMismatch, "flatten needs a batch axis");
  const std::size_t batch = x->value.dim(0);
  const std::size_t rest = batch ? x->value.size() / batch : 0;
  Tensor out({batch, rest}, x->value.values);
  return make_result(std::move(out), {x}, [](Node& n) { accumulate(n.parents[0], n.grad); });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat of nothing");
  const std::size_t batch = parts[0]->value.dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat");
    if (p->value.dim(0) != batch) throw Error(ErrorCode::kShapeMismatch, "concat: batch sizes differ");
    widths.push_back(p->value.dim(1));
    total += widths.back();
  }
  Tensor out({batch, total});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      std::copy_n(parts[k]->value.data() + bi * widths[k], widths[k], out.data() + bi * total + offset);
      offset += widths[k];
    }
  }
  return make_result(std::move(out), parts, [batch, widths, total](Node& n) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      if (n.parents[k]->requires_grad) {
        auto& g = n.parents[k]->grad_buffer();
        for (std::size_t bi = 0; bi < batch; ++bi) {
          for (std::size_t j = 0; j < widths[k]; ++j) g[bi * widths[k] + j] += n.grad[bi * total + offset + j];
        }
      }
      offset += widths[k];
    }
  });
}

Var row_sum(const Var& x) {
  require_rank(x, 2, "row_sum");
  const std::size_t batch = x->value.dim(0), width = x->value.dim(1);
  Tensor out({batch});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    double s = 0.0;
    for (std::size_t j = 0; j < width; ++j) s += x->value.values[bi * width + j];
    out.values[bi] = s;
  }
  return make_result(std::move(out), {x}, [batch, width](Node& n) {
    Buffer g(batch * width);
    for (std::size_t bi = 0; bi < batch; ++bi) std::fill_n(g.begin() + static_cast<std::ptrdiff_t>(bi * width), width, n.grad[bi]);
    accumulate(n.parents[0], g);
  });
}

Var mse_loss(const Var& pred, const std::vector<double>& target) {
  if (pred->value.size() != target.size()) {
    throw Error(ErrorCode::kLengthMismatch, "mse: " + std::to_string(pred->value.size()) + " predictions for " +
                                                std::to_string(target.size()) + " targets");
  }
  if (target.empty()) throw Error(ErrorCode::kLengthMismatch, "mse of empty vectors");
  const double inv = 1.0 / static_cast<double>(target.size());
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = pred->value.values[i] - target[i];
    s += d * d;
  }
  return make_result(Tensor(Shape{}, s * inv), {pred}, [target, inv](Node& n) {
    const auto& p = n.parents[0]->value.values;
    Buffer g(p.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * (p[i] - target[i]) * inv * n.grad[0];
    accumulate(n.parents[0], g);
  });
}

}  // namespace popnet::nn
