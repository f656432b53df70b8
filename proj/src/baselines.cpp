#include "popnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "popnet/error.hpp"

namespace popnet {
namespace {

void check_fit_inputs(const Matrix& x, const std::vector<double>& y, const char* what) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + ": " + std::to_string(x.rows()) + " rows but " +
                                                std::to_string(y.size()) + " targets");
  }
  if (y.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " needs at least one sample");
}

double mean_of(const std::vector<double>& y) {
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

}  // namespace

// ---- linear regression ------------------------------------------------------

LinearModel lr_fit(const Matrix& x, const std::vector<double>& y, const LinearConfig& config) {
  check_fit_inputs(x, y, "linear regression");
  const auto n = x.rows(), d = x.cols();
  const Vector mu = x.colwise().mean().transpose();
  Vector sigma(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = std::sqrt((x.col(j).array() - mu[j]).square().sum() / static_cast<double>(n));
    sigma[j] = s > 0 ? s : 1.0;
  }
  const Matrix xs = (x.rowwise() - mu.transpose()).array().rowwise() / sigma.transpose().array();
  const Eigen::Map<const Vector> target(y.data(), n);

  Vector w = Vector::Zero(d);
  double b = 0.0;
  const double scale = 2.0 / static_cast<double>(n);
  for (int it = 0; it < config.iterations; ++it) {
    const Vector residual = (xs * w).array() + b - target.array();
    w -= config.learning_rate * scale * (xs.transpose() * residual);
    b -= config.learning_rate * scale * residual.sum();
  }
  LinearModel m;
  m.weights = w.array() / sigma.array();
  m.bias = b - m.weights.dot(mu);
  return m;
}

double lr_predict(const LinearModel& model, const Vector& x) {
  if (x.size() != model.weights.size()) throw Error(ErrorCode::kDimensionMismatch, "linear model input length differs");
  return model.weights.dot(x) + model.bias;
}

// ---- epsilon-SVR ---------------------------------------------------------------

double rbf_kernel(const Vector& u, const Vector& v, double gamma) { return std::exp(-gamma * (u - v).squaredNorm()); }

SvrModel svr_fit(const Matrix& x, const std::vector<double>& y, const SvrConfig& config) {
  check_fit_inputs(x, y, "SVR");
  if (!(config.c > 0) || config.epsilon < 0) throw Error(ErrorCode::kInvalidArgument, "SVR needs C > 0, epsilon >= 0");
  const auto n = static_cast<std::size_t>(x.rows());
  const double gamma = config.gamma > 0 ? config.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
  const double c = config.c;
  constexpr double kTau = 1e-12;

  // Kernel matrix over the n samples; variable t < n is alpha_t (sign +1),
  // variable t >= n is alpha*_{t-n} (sign -1).
  Matrix k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Vector sq = x.rowwise().squaredNorm();
  const Matrix gram = x * x.transpose();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      k(a, b) = i == j ? 1.0 : std::exp(-gamma * std::max(0.0, sq[a] + sq[b] - 2.0 * gram(a, b)));
    }
  }
  const std::size_t m = 2 * n;
  std::vector<double> alpha(m, 0.0), grad(m), sign(m), p(m);
  for (std::size_t t = 0; t < n; ++t) {
    sign[t] = 1.0;
    sign[t + n] = -1.0;
    p[t] = config.epsilon - y[t];
    p[t + n] = config.epsilon + y[t];
  }
  grad = p;
  auto q = [&](std::size_t s, std::size_t t) {
    return sign[s] * sign[t] * k(static_cast<Eigen::Index>(s % n), static_cast<Eigen::Index>(t % n));
  };
  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::int64_t iter = 0;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < m; ++t) {
      if (sign[t] > 0 ? !upper(t) : !lower(t)) {
        const double v = -sign[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          i = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    if (i >= 0) {
      const auto ii = static_cast<std::size_t>(i);
      for (std::size_t t = 0; t < m; ++t) {
        if (sign[t] > 0 ? lower(t) : upper(t)) continue;
        const double v = sign[t] * grad[t];
        gmax2 = std::max(gmax2, v);
        const double grad_diff = gmax + v;
        if (grad_diff > 0) {
          // K(i,i) = K(t,t) = 1 for the RBF kernel
          const double quad = 2.0 - 2.0 * k(static_cast<Eigen::Index>(ii % n), static_cast<Eigen::Index>(t % n));
          const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
          if (obj <= best_obj) {
            best_obj = obj;
            j = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < config.tolerance) break;
    if (++iter > config.max_iterations) {
      throw Error(ErrorCode::kSolverNotConverged, "SVR solver hit " + std::to_string(config.max_iterations) + " iterations");
    }

    const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
    const double old_a = alpha[a], old_b = alpha[b];
    const double qab = q(a, b);
    if (sign[a] != sign[b]) {
      double quad = 2.0 + 2.0 * qab;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[a] - grad[b]) / quad;
      const double diff = alpha[a] - alpha[b];
      alpha[a] += delta;
      alpha[b] += delta;
      if (diff > 0) {
        if (alpha[b] < 0) {
          alpha[b] = 0;
          alpha[a] = diff;
        }
      } else if (alpha[a] < 0) {
        alpha[a] = 0;
        alpha[b] = -diff;
      }
      if (diff > 0) {
        if (alpha[a] > c) {
          alpha[a] = c;
          alpha[b] = c - diff;
        }
      } else if (alpha[b] > c) {
        alpha[b] = c;
        alpha[a] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qab;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[a] - grad[b]) / quad;
      const double total = alpha[a] + alpha[b];
      alpha[a] -= delta;
      alpha[b] += delta;
      if (total > c) {
        if (alpha[a] > c) {
          alpha[a] = c;
          alpha[b] = total - c;
        }
      } else if (alpha[b] < 0) {
        alpha[b] = 0;
        alpha[a] = total;
      }
      if (total > c) {
        if (alpha[b] > c) {
          alpha[b] = c;
          alpha[a] = total - c;
        }
      } else if (alpha[a] < 0) {
        alpha[a] = 0;
        alpha[b] = total;
      }
    }
    const double da = alpha[a] - old_a, db = alpha[b] - old_b;
    for (std::size_t t = 0; t < m; ++t) grad[t] += q(a, t) * da + q(b, t) * db;
  }

  // Bias from free variables, or the middle of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = sign[t] * grad[t];
    if (upper(t)) {
      if (sign[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : (ub + lb) / 2.0;

  SvrModel model;
  model.gamma = gamma;
  model.bias = -rho;
  model.iterations = iter;
  double obj = 0.0;
  for (std::size_t t = 0; t < m; ++t) obj += alpha[t] * (grad[t] + p[t]);
  model.objective = obj / 2.0;
  std::vector<Eigen::Index> rows;
  for (std::size_t t = 0; t < n; ++t) {
    const double coef = alpha[t] - alpha[t + n];
    if (coef != 0.0) {
      rows.push_back(static_cast<Eigen::Index>(t));
      model.coefficients.push_back(coef);
    }
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) model.support_vectors.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  return model;
}

double svr_predict(const SvrModel& model, const Vector& x) {
  if (model.support_vectors.rows() > 0 && x.size() != model.support_vectors.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "SVR input length differs");
  }
  double s = model.bias;
  for (Eigen::Index r = 0; r < model.support_vectors.rows(); ++r) {
    s += model.coefficients[static_cast<std::size_t>(r)] * rbf_kernel(model.support_vectors.row(r).transpose(), x, model.gamma);
  }
  return s;
}

// ---- CART -----------------------------------------------------------------------

std::size_t CartTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int CartTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    for (int child : {nodes[i].left, nodes[i].right}) {
      d[static_cast<std::size_t>(child)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
  }
  return best;
}

namespace {

// Level-wise growth: one scan per feature over a global presorted order
// evaluates every split candidate of every open node at that depth.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<double>& y, const CartConfig& config,
              const std::vector<std::vector<std::uint32_t>>& order)
      : x_(x), y_(y), config_(config), order_(order), node_of_(y.size(), 0) {}

  CartTree build() {
    CartTree tree;
    TreeNode root;
    double s = 0.0;
    for (double v : y_) s += v;
    root.samples = static_cast<std::int64_t>(y_.size());
    root.value = s / static_cast<double>(y_.size());
    tree.nodes.push_back(root);
    std::vector<int> open{0};
    for (int depth = 0; !open.empty(); ++depth) {
      if (config_.max_depth >= 0 && depth >= config_.max_depth) break;
      open = split_level(tree, open);
    }
    return tree;
  }

 private:
  struct Stats {
    std::int64_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;
  };
  struct Best {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };

  std::vector<int> split_level(CartTree& tree, const std::vector<int>& open) {
    const std::size_t n_nodes = tree.nodes.size();
    std::vector<int> slot(n_nodes, -1);
    std::vector<Stats> total(open.size());
    for (std::size_t k = 0; k < open.size(); ++k) slot[static_cast<std::size_t>(open[k])] = static_cast<int>(k);
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const int s = slot[static_cast<std::size_t>(node_of_[i])];
      if (s < 0) continue;
      auto& t = total[static_cast<std::size_t>(s)];
      ++t.n;
      t.sum += y_[i];
      t.sumsq += y_[i] * y_[i];
    }
    std::vector<double> sse(open.size());
    std::vector<bool> splittable(open.size());
    for (std::size_t k = 0; k < open.size(); ++k) {
      const auto& t = total[k];
      sse[k] = std::max(0.0, t.sumsq - t.sum * t.sum / static_cast<double>(t.n));
      splittable[k] = t.n >= config_.min_samples_split && sse[k] > 0.0;
    }

    std::vector<Best> best(open.size());
    std::vector<Stats> left(open.size());
    std::vector<double> last(open.size());
    std::vector<bool> seen(open.size());
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      std::fill(left.begin(), left.end(), Stats{});
      std::fill(seen.begin(), seen.end(), false);
      for (std::uint32_t i : order_[static_cast<std::size_t>(f)]) {
        const int s = slot[static_cast<std::size_t>(node_of_[i])];
        if (s < 0 || !splittable[static_cast<std::size_t>(s)]) continue;
        const auto k = static_cast<std::size_t>(s);
        const double v = x_(static_cast<Eigen::Index>(i), f);
        if (seen[k] && v != last[k]) {
          const auto& t = total[k];
          const auto& l = left[k];
          const double r_sum = t.sum - l.sum;
          const auto r_n = t.n - l.n;
          const double gain = l.sum * l.sum / static_cast<double>(l.n) + r_sum * r_sum / static_cast<double>(r_n) -
                              t.sum * t.sum / static_cast<double>(t.n);
          // Gains equal up to rounding count as ties and keep the earlier candidate.
          if (gain > best[k].gain + 1e-12 * sse[k]) {
            double thr = 0.5 * (last[k] + v);
            if (!(thr < v)) thr = last[k];
            best[k] = {gain, static_cast<int>(f), thr};
          }
        }
        auto& l = left[k];
        ++l.n;
        l.sum += y_[i];
        seen[k] = true;
        last[k] = v;
      }
    }

    std::vector<int> next;
    std::vector<int> left_child(n_nodes, -1);
    for (std::size_t k = 0; k < open.size(); ++k) {
      if (best[k].feature < 0 || !(best[k].gain > 1e-12 * sse[k])) continue;
      auto& node = tree.nodes[static_cast<std::size_t>(open[k])];
      node.feature = best[k].feature;
      node.threshold = best[k].threshold;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      left_child[static_cast<std::size_t>(open[k])] = node.left;
      tree.nodes.push_back(TreeNode{});
      tree.nodes.push_back(TreeNode{});
      next.push_back(node.left);
      next.push_back(node.right);
    }
    std::vector<Stats> child(tree.nodes.size());
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const auto parent = static_cast<std::size_t>(node_of_[i]);
      if (parent >= n_nodes || left_child[parent] < 0) continue;
      const auto& p = tree.nodes[parent];
      const bool go_left = x_(static_cast<Eigen::Index>(i), p.feature) <= p.threshold;
      node_of_[i] = go_left ? p.left : p.right;
      auto& c = child[static_cast<std::size_t>(node_of_[i])];
      ++c.n;
      c.sum += y_[i];
    }
    for (int id : next) {
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      const auto& c = child[static_cast<std::size_t>(id)];
      node.samples = c.n;
      node.value = c.sum / static_cast<double>(c.n);
    }
    return next;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  CartConfig config_;
  const std::vector<std::vector<std::uint32_t>>& order_;
  std::vector<int> node_of_;
};

std::vector<std::vector<std::uint32_t>> presort(const Matrix& x) {
  std::vector<std::vector<std::uint32_t>> order(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(x.rows()));
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return order;
}

}  // namespace

CartTree cart_fit(const Matrix& x, const std::vector<double>& y, const CartConfig& config) {
  check_fit_inputs(x, y, "CART");
  const auto order = presort(x);
  return TreeBuilder(x, y, config, order).build();
}

double cart_predict(const CartTree& tree, const Vector& x) {
  if (tree.nodes.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tree");
  std::size_t i = 0;
  while (tree.nodes[i].feature >= 0) {
    const auto& n = tree.nodes[i];
    if (n.feature >= x.size()) throw Error(ErrorCode::kDimensionMismatch, "tree input too short");
    i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return tree.nodes[i].value;
}

// ---- gradient boosting ------------------------------------------------------------

GbdtModel gbdt_fit(const Matrix& x, const std::vector<double>& y, const GbdtConfig& config) {
  check_fit_inputs(x, y, "GBDT");
  if (config.n_estimators < 0) throw Error(ErrorCode::kInvalidArgument, "n_estimators must be non-negative");
  GbdtModel model;
  model.base = mean_of(y);
  model.learning_rate = config.learning_rate;
  const auto order = presort(x);
  std::vector<double> f(y.size(), model.base), residual(y.size());
  CartConfig cc;
  cc.max_depth = config.max_depth;
  for (int m = 0; m < config.n_estimators; ++m) {
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - f[i];
    CartTree tree = TreeBuilder(x, residual, cc, order).build();
    for (std::size_t i = 0; i < y.size(); ++i) {
      f[i] += config.learning_rate * cart_predict(tree, x.row(static_cast<Eigen::Index>(i)).transpose());
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double gbdt_predict(const GbdtModel& model, const Vector& x) {
  double s = model.base;
  for (const auto& t : model.trees) s += model.learning_rate * cart_predict(t, x);
  return s;
}

std::string gbdt_dump(const GbdtModel& model) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "base %.17g\nlearning_rate %.17g\ntrees %zu\n", model.base, model.learning_rate,
                model.trees.size());
  out += buf;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    std::snprintf(buf, sizeof buf, "tree %zu\n", t);
    out += buf;
    const auto& nodes = model.trees[t].nodes;
    // depth-first with explicit indentation
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
      const auto [id, depth] = stack.back();
      stack.pop_back();
      const auto& n = nodes[static_cast<std::size_t>(id)];
      out.append(static_cast<std::size_t>(2 * depth + 2), ' ');
      if (n.feature < 0) {
        std::snprintf(buf, sizeof buf, "leaf value=%.17g samples=%lld\n", n.value, static_cast<long long>(n.samples));
      } else {
        std::snprintf(buf, sizeof buf, "x[%d] <= %.17g samples=%lld\n", n.feature, n.threshold,
                      static_cast<long long>(n.samples));
        stack.emplace_back(n.right, depth + 1);
        stack.emplace_back(n.left, depth + 1);
      }
      out += buf;
    }
  }
  return out;
}

// ---- persistence ----------------------------------------------------------------

namespace {

constexpr std::size_t kNodeFields = 6;

void put_nodes(Archive& ar, const std::string& name, const std::vector<const CartTree*>& trees) {
  std::vector<double> flat, offsets;
  for (const auto* t : trees) {
    offsets.push_back(static_cast<double>(flat.size() / kNodeFields));
    for (const auto& n : t->nodes) {
      flat.insert(flat.end(), {static_cast<double>(n.feature), n.threshold, static_cast<double>(n.left),
                               static_cast<double>(n.right), n.value, static_cast<double>(n.samples)});
    }
  }
  const std::size_t rows = flat.size() / kNodeFields;
  offsets.push_back(static_cast<double>(rows));
  ar.put_array(name + ".nodes", {rows, kNodeFields}, std::move(flat));
  ar.put_array(name + ".offsets", offsets);
}

std::vector<CartTree> get_nodes(const Archive& ar, const std::string& name) {
  const auto& flat = ar.array(name + ".nodes").values;
  const auto& offsets = ar.array(name + ".offsets").values;
  std::vector<CartTree> trees;
  for (std::size_t t = 0; t + 1 < offsets.size(); ++t) {
    CartTree tree;
    for (auto i = static_cast<std::size_t>(offsets[t]); i < static_cast<std::size_t>(offsets[t + 1]); ++i) {
      const double* r = &flat[i * kNodeFields];
      tree.nodes.push_back({static_cast<int>(r[0]), r[1], static_cast<int>(r[2]), static_cast<int>(r[3]), r[4],
                            static_cast<std::int64_t>(r[5])});
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

void expect_kind(const Archive& ar, const char* kind) {
  if (ar.string("kind") != kind) {
    throw Error(ErrorCode::kConfigMismatch, "archive holds '" + ar.string("kind") + "', expected '" + kind + "'");
  }
}

}  // namespace

Archive to_archive(const LinearModel& m) {
  Archive ar;
  ar.put_string("kind", "lr");
  ar.put_array("weights", std::span<const double>(m.weights.data(), static_cast<std::size_t>(m.weights.size())));
  ar.put_scalar("bias", m.bias);
  return ar;
}

Archive to_archive(const SvrModel& m) {
  Archive ar;
  ar.put_string("kind", "svr");
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sv = m.support_vectors;
  ar.put_array("support_vectors", {static_cast<std::uint64_t>(sv.rows()), static_cast<std::uint64_t>(sv.cols())},
               std::vector<double>(sv.data(), sv.data() + sv.size()));
  ar.put_array("coefficients", m.coefficients);
  ar.put_scalar("bias", m.bias);
  ar.put_scalar("gamma", m.gamma);
  ar.put_scalar("objective", m.objective);
  ar.put_scalar("iterations", static_cast<double>(m.iterations));
  return ar;
}

Archive to_archive(const CartTree& m) {
  Archive ar;
  ar.put_string("kind", "dtr");
  put_nodes(ar, "tree", {&m});
  return ar;
}

Archive to_archive(const GbdtModel& m) {
  Archive ar;
  ar.put_string("kind", "gbdt");
  ar.put_scalar("base", m.base);
  ar.put_scalar("learning_rate", m.learning_rate);
  std::vector<const CartTree*> trees;
  for (const auto& t : m.trees) trees.push_back(&t);
  put_nodes(ar, "trees", trees);
  return ar;
}

LinearModel linear_from_archive(const Archive& ar) {
  expect_kind(ar, "lr");
  const auto& w = ar.array("weights").values;
  return {Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())), ar.scalar("bias")};
}

SvrModel svr_from_archive(const Archive& ar) {
  expect_kind(ar, "svr");
  SvrModel m;
  const auto& sv = ar.array("support_vectors");
  m.support_vectors = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      sv.values.data(), static_cast<Eigen::Index>(sv.shape.at(0)), static_cast<Eigen::Index>(sv.shape.at(1)));
  m.coefficients = ar.array("coefficients").values;
  m.bias = ar.scalar("bias");
  m.gamma = ar.scalar("gamma");
  m.objective = ar.scalar("objective");
  m.iterations = static_cast<std::int64_t>(ar.scalar("iterations"));
  return m;
}

CartTree cart_from_archive(const Archive& ar) {
  expect_kind(ar, "dtr");
  auto trees = get_nodes(ar, "tree");
  if (trees.size() != 1) throw Error(ErrorCode::kShapeMismatch, "tree archive must hold one tree");
  return std::move(trees[0]);
}

GbdtModel gbdt_from_archive(const Archive& ar) {
  expect_kind(ar, "gbdt");
  GbdtModel m;
  m.base = ar.scalar("base");
  m.learning_rate = ar.scalar("learning_rate");
  m.trees = get_nodes(ar, "trees");
  return m;
}

}  // namespace popnet
