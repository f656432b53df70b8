#pragma once

#include <Eigen/Dense>

#include "popnet/binio.hpp"

namespace popnet {

using Matrix = Eigen::MatrixXd;  // rows are samples
using Vector = Eigen::VectorXd;

inline constexpr int kVisualPcaDim = 20;
inline constexpr int kSocialPcaDim = 14;
inline constexpr int kEarlyPcaDim = 20;

struct PcaModel {
  Vector mean;                 // d
  Matrix components;           // k x d, orthonormal rows
  Vector explained_variance;   // k, nonincreasing

  int k() const { return static_cast<int>(components.rows()); }
  int d() const { return static_cast<int>(components.cols()); }
};

/// Top-k right singular vectors of the centred data. Each component is
/// flipped so that its largest-magnitude entry (first on ties) is positive.
/// Requires n >= 2 and k <= min(n - 1, d).
PcaModel pca_fit(const Matrix& data, int k);
Vector pca_transform(const PcaModel& model, const Vector& x);
Matrix pca_transform_rows(const PcaModel& model, const Matrix& data);

struct Scaler {
  Vector min;
  Vector max;
};

Scaler scaler_fit(const Matrix& data);
/// (x - min) / (max - min) clamped to [0, 1]; constant dimensions give 0.
Vector scaler_transform(const Scaler& scaler, const Vector& x);
Matrix scaler_transform_rows(const Scaler& scaler, const Matrix& data);

void put_pca(Archive& ar, const std::string& prefix, const PcaModel& model);
PcaModel get_pca(const Archive& ar, const std::string& prefix);
void put_scaler(Archive& ar, const std::string& prefix, const Scaler& scaler);
Scaler get_scaler(const Archive& ar, const std::string& prefix);

enum class FusionMode { kLate, kEarly };
const char* fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(const std::string& name);

/// Reduction fitted on training rows only. Late mode keeps separate visual
/// (20-d) and social (14-d) projections; early mode projects the 4744-d
/// concatenation to 20 dimensions.
struct DescriptorModel {
  FusionMode mode = FusionMode::kLate;
  PcaModel visual_pca;
  Scaler visual_scaler;
  PcaModel social_pca;
  Scaler social_scaler;
  PcaModel fused_pca;
  Scaler fused_scaler;

  Archive to_archive() const;
  static DescriptorModel from_archive(const Archive& ar);
};

/// Late mode: x is 20-d visual, z is 14-d social. Early mode: x is the 20-d
/// fused descriptor and z has zero columns.
struct DescriptorSet {
  Matrix x;
  Matrix z;

  Eigen::Index size() const { return x.rows(); }
  /// [x, z] per row.
  Matrix joined() const;
};

DescriptorModel fit_descriptors(const Matrix& visual_train, const Matrix& social_train, FusionMode mode);
DescriptorSet apply_descriptors(const DescriptorModel& model, const Matrix& visual, const Matrix& social);

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace popnet
