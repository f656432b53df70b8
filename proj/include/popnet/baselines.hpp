#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popnet/binio.hpp"
#include "popnet/reduce.hpp"

namespace popnet {

// ---- linear regression ------------------------------------------------------

struct LinearConfig {
  double learning_rate = 0.01;
  int iterations = 10000;
};

struct LinearModel {
  Vector weights;  // in raw feature units
  double bias = 0.0;
};

/// Full-batch gradient descent on the MSE of standardized features; the
/// result is mapped back to raw feature units.
LinearModel lr_fit(const Matrix& x, const std::vector<double>& y, const LinearConfig& config = {});
double lr_predict(const LinearModel& model, const Vector& x);

// ---- epsilon-SVR ---------------------------------------------------------------

struct SvrConfig {
  double c = 3.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // <= 0 selects 1 / d
  double tolerance = 1e-3;
  std::int64_t max_iterations = 1000000;
};

struct SvrModel {
  Matrix support_vectors;
  std::vector<double> coefficients;  // alpha_i - alpha*_i, nonzero only
  double bias = 0.0;
  double gamma = 0.0;
  double objective = 0.0;  // dual objective at the solution
  std::int64_t iterations = 0;
};

double rbf_kernel(const Vector& u, const Vector& v, double gamma);
/// Dual coordinate descent with second-order working-set selection.
SvrModel svr_fit(const Matrix& x, const std::vector<double>& y, const SvrConfig& config = {});
double svr_predict(const SvrModel& model, const Vector& x);

// ---- CART -----------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the node's samples
  std::int64_t samples = 0;
};

struct CartConfig {
  int max_depth = 10;  // < 0 means unlimited
  std::int64_t min_samples_split = 2;
};

struct CartTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_count() const;
  int depth() const;
};

/// Greedy SSE splits over midpoints between consecutive distinct values.
/// Ties go to the lowest feature, then the lowest threshold. A node splits
/// only when the split strictly lowers its SSE.
CartTree cart_fit(const Matrix& x, const std::vector<double>& y, const CartConfig& config = {});
double cart_predict(const CartTree& tree, const Vector& x);

// ---- gradient boosting ------------------------------------------------------------

struct GbdtConfig {
  int n_estimators = 2000;
  double learning_rate = 0.01;
  int max_depth = 10;
};

struct GbdtModel {
  double base = 0.0;
  double learning_rate = 0.01;
  std::vector<CartTree> trees;
};

/// Squared-error boosting: each tree fits the residuals of the running sum.
GbdtModel gbdt_fit(const Matrix& x, const std::vector<double>& y, const GbdtConfig& config = {});
double gbdt_predict(const GbdtModel& model, const Vector& x);
std::string gbdt_dump(const GbdtModel& model);

// ---- persistence ----------------------------------------------------------------

Archive to_archive(const LinearModel& m);
Archive to_archive(const SvrModel& m);
Archive to_archive(const CartTree& m);
Archive to_archive(const GbdtModel& m);
LinearModel linear_from_archive(const Archive& ar);
SvrModel svr_from_archive(const Archive& ar);
CartTree cart_from_archive(const Archive& ar);
GbdtModel gbdt_from_archive(const Archive& ar);

}  // namespace popnet
