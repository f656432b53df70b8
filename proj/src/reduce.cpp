#include "popnet/reduce.hpp"

#include <Eigen/SVD>

#include "popnet/error.hpp"
#include "popnet/imgfeat.hpp"
#include "popnet/socialfeat.hpp"

namespace popnet {
namespace {

void require_cols(const Matrix& m, Eigen::Index cols, const char* what) {
  if (m.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has " + std::to_string(m.cols()) +
                                                   " columns, expected " + std::to_string(cols));
  }
}

}  // namespace

PcaModel pca_fit(const Matrix& data, int k) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "PCA needs at least two rows");
  if (k < 1 || k > std::min<Eigen::Index>(n - 1, d)) {
    throw Error(ErrorCode::kRankDeficient, "cannot extract " + std::to_string(k) + " components from " +
                                               std::to_string(n) + "x" + std::to_string(d) + " data");
  }
  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Matrix centred = data.rowwise() - model.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centred, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(k).transpose();
  model.explained_variance = svd.singularValues().head(k).array().square() / static_cast<double>(n - 1);
  for (int i = 0; i < k; ++i) {
    Eigen::Index arg = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (model.components(i, arg) < 0) model.components.row(i) *= -1.0;
  }
  return model;
}

Vector pca_transform(const PcaModel& model, const Vector& x) {
  if (x.size() != model.d()) {
    throw Error(ErrorCode::kDimensionMismatch, "PCA input has length " + std::to_string(x.size()) +
                                                   ", expected " + std::to_string(model.d()));
  }
  return model.components * (x - model.mean);
}

Matrix pca_transform_rows(const PcaModel& model, const Matrix& data) {
  require_cols(data, model.d(), "PCA input");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Scaler scaler_fit(const Matrix& data) {
  if (data.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "scaler needs at least one row");
  return {data.colwise().minCoeff().transpose(), data.colwise().maxCoeff().transpose()};
}

Vector scaler_transform(const Scaler& scaler, const Vector& x) {
  if (x.size() != scaler.min.size()) throw Error(ErrorCode::kDimensionMismatch, "scaler input length differs");
  Vector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double range = scaler.max[j] - scaler.min[j];
    out[j] = range > 0 ? std::clamp((x[j] - scaler.min[j]) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

Matrix scaler_transform_rows(const Scaler& scaler, const Matrix& data) {
  require_cols(data, scaler.min.size(), "scaler input");
  Matrix out(data.rows(), data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) out.row(i) = scaler_transform(scaler, data.row(i).transpose());
  return out;
}

void put_pca(Archive& ar, const std::string& prefix, const PcaModel& model) {
  ar.put_array(prefix + ".mean", {static_cast<std::uint64_t>(model.d())},
               std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = model.components;
  ar.put_array(prefix + ".components", {static_cast<std::uint64_t>(model.k()), static_cast<std::uint64_t>(model.d())},
               std::vector<double>(rows.data(), rows.data() + rows.size()));
  ar.put_array(prefix + ".explained_variance", {static_cast<std::uint64_t>(model.k())},
               std::vector<double>(model.explained_variance.data(),
                                   model.explained_variance.data() + model.explained_variance.size()));
}

PcaModel get_pca(const Archive& ar, const std::string& prefix) {
  const auto& c = ar.array(prefix + ".components");
  if (c.shape.size() != 2) throw Error(ErrorCode::kShapeMismatch, prefix + ".components must be 2-d");
  const auto k = static_cast<Eigen::Index>(c.shape[0]);
  const auto d = static_cast<Eigen::Index>(c.shape[1]);
  const auto& mean = ar.array(prefix + ".mean").values;
  const auto& var = ar.array(prefix + ".explained_variance").values;
  if (static_cast<Eigen::Index>(mean.size()) != d || static_cast<Eigen::Index>(var.size()) != k) {
    throw Error(ErrorCode::kShapeMismatch, prefix + " arrays disagree on k or d");
  }
  PcaModel m;
  m.mean = Eigen::Map<const Vector>(mean.data(), d);
  m.components = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      c.values.data(), k, d);
  m.explained_variance = Eigen::Map<const Vector>(var.data(), k);
  return m;
}

void put_scaler(Archive& ar, const std::string& prefix, const Scaler& scaler) {
  ar.put_array(prefix + ".min", std::span<const double>(scaler.min.data(), static_cast<std::size_t>(scaler.min.size())));
  ar.put_array(prefix + ".max", std::span<const double>(scaler.max.data(), static_cast<std::size_t>(scaler.max.size())));
}

Scaler get_scaler(const Archive& ar, const std::string& prefix) {
  const auto& lo = ar.array(prefix + ".min").values;
  const auto& hi = ar.array(prefix + ".max").values;
  if (lo.size() != hi.size()) throw Error(ErrorCode::kShapeMismatch, prefix + " min/max lengths differ");
  return {Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
          Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
}

const char* fusion_mode_name(FusionMode mode) { return mode == FusionMode::kLate ? "late" : "early"; }

FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "late") return FusionMode::kLate;
  if (name == "early") return FusionMode::kEarly;
  throw Error(ErrorCode::kInvalidArgument, "fusion mode must be 'late' or 'early', got '" + name + "'");
}

Archive DescriptorModel::to_archive() const {
  Archive ar;
  ar.put_string("kind", "descriptor_model");
  ar.put_string("mode", fusion_mode_name(mode));
  if (mode == FusionMode::kLate) {
    put_pca(ar, "visual_pca", visual_pca);
    put_scaler(ar, "visual_scaler", visual_scaler);
    put_pca(ar, "social_pca", social_pca);
    put_scaler(ar, "social_scaler", social_scaler);
  } else {
    put_pca(ar, "fused_pca", fused_pca);
    put_scaler(ar, "fused_scaler", fused_scaler);
  }
  return ar;
}

DescriptorModel DescriptorModel::from_archive(const Archive& ar) {
  if (ar.string("kind") != "descriptor_model") throw Error(ErrorCode::kConfigMismatch, "not a descriptor model");
  DescriptorModel m;
  m.mode = parse_fusion_mode(ar.string("mode"));
  if (m.mode == FusionMode::kLate) {
    m.visual_pca = get_pca(ar, "visual_pca");
    m.visual_scaler = get_scaler(ar, "visual_scaler");
    m.social_pca = get_pca(ar, "social_pca");
    m.social_scaler = get_scaler(ar, "social_scaler");
  } else {
    m.fused_pca = get_pca(ar, "fused_pca");
    m.fused_scaler = get_scaler(ar, "fused_scaler");
  }
  return m;
}

Matrix DescriptorSet::joined() const {
  Matrix out(x.rows(), x.cols() + z.cols());
  out << x, z;
  return out;
}

DescriptorModel fit_descriptors(const Matrix& visual_train, const Matrix& social_train, FusionMode mode) {
  require_cols(visual_train, kVisualDim, "visual matrix");
  require_cols(social_train, kSocialDim, "social matrix");
  if (visual_train.rows() != social_train.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "visual and social matrices have different row counts");
  }
  DescriptorModel m;
  m.mode = mode;
  if (mode == FusionMode::kLate) {
    m.visual_pca = pca_fit(visual_train, kVisualPcaDim);
    m.visual_scaler = scaler_fit(pca_transform_rows(m.visual_pca, visual_train));
    m.social_pca = pca_fit(social_train, kSocialPcaDim);
    m.social_scaler = scaler_fit(pca_transform_rows(m.social_pca, social_train));
  } else {
    Matrix fused(visual_train.rows(), kVisualDim + kSocialDim);
    fused << visual_train, social_train;
    m.fused_pca = pca_fit(fused, kEarlyPcaDim);
    m.fused_scaler = scaler_fit(pca_transform_rows(m.fused_pca, fused));
  }
  return m;
}

DescriptorSet apply_descriptors(const DescriptorModel& model, const Matrix& visual, const Matrix& social) {
  require_cols(visual, kVisualDim, "visual matrix");
  require_cols(social, kSocialDim, "social matrix");
  if (visual.rows() != social.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "visual and social matrices have different row counts");
  }
  DescriptorSet out;
  if (model.mode == FusionMode::kLate) {
    out.x = scaler_transform_rows(model.visual_scaler, pca_transform_rows(model.visual_pca, visual));
    out.z = scaler_transform_rows(model.social_scaler, pca_transform_rows(model.social_pca, social));
  } else {
    Matrix fused(visual.rows(), kVisualDim + kSocialDim);
    fused << visual, social;
    out.x = scaler_transform_rows(model.fused_scaler, pca_transform_rows(model.fused_pca, fused));
    out.z = Matrix(visual.rows(), 0);
  }
  return out;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error(ErrorCode::kDimensionMismatch, "ragged row list");
    m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
  }
  return m;
}

}  // namespace popnet
