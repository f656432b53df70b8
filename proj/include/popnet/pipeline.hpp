#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "popnet/baselines.hpp"
#include "popnet/binio.hpp"
#include "popnet/dataset.hpp"
#include "popnet/eval.hpp"
#include "popnet/imgfeat.hpp"
#include "popnet/nn/optim.hpp"
#include "popnet/popmodels.hpp"
#include "popnet/reduce.hpp"

namespace popnet {

enum class ModelKind { kVscnn, kVcnn, kScnn, kVscnnEf, kLr, kSvr, kDtr, kGbdt };

/// CLI spelling: vscnn, vcnn, scnn, vscnn-ef, lr, svr, dtr, gbdt.
const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
const std::vector<ModelKind>& all_model_kinds();
bool is_network(ModelKind kind);

struct ExtractOptions {
  DeepSource deep = DeepSource::kSidecar;
  std::uint64_t stub_seed = 0;
  unsigned jobs = 1;
  /// Per-post visual vectors are cached here when set.
  std::optional<std::filesystem::path> cache_dir;
};

/// Raw per-post features, row i belonging to post_ids[i].
struct FeatureTable {
  std::vector<std::string> post_ids;
  std::vector<std::string> users;
  std::vector<double> scores;
  Matrix visual;  // n x 4710
  Matrix social;  // n x 34
  std::string source_hash;  // identifies dataset + extraction settings

  std::size_t size() const { return post_ids.size(); }
  Archive to_archive() const;
  static FeatureTable from_archive(const Archive& ar);
};

/// Cache key for one post: extractor version, deep source, and the bytes of
/// the image and sidecar it reads.
std::string visual_cache_key(const PostRecord& record, const ExtractOptions& options);
Matrix extract_visual_matrix(const std::vector<PostRecord>& records, const ExtractOptions& options);
Matrix extract_social_matrix(const std::vector<PostRecord>& records);
FeatureTable build_feature_table(const std::vector<PostRecord>& records, const ExtractOptions& options);

struct SplitDescriptors {
  DescriptorSet train;
  DescriptorSet val;
  DescriptorSet test;
};

/// Split indices, targets, and train-fitted descriptors for both fusion modes.
struct Experiment {
  SplitSpec spec;
  Partition<std::size_t> split;
  std::vector<double> y_train, y_val, y_test;
  DescriptorModel late_model;
  std::optional<DescriptorModel> early_model;
  SplitDescriptors late;
  std::optional<SplitDescriptors> early;
  std::string features_hash;

  /// Hash over the split and descriptor models; carried by downstream artifacts.
  std::string hash() const;
  Archive to_archive() const;
  /// Rebuilds descriptor sets from the stored models and the feature table.
  static Experiment from_archive(const Archive& ar, const FeatureTable& features);
};

Experiment prepare_experiment(const FeatureTable& features, const SplitSpec& spec, bool with_early = true);

struct ModelOptions {
  nn::TrainConfig train;
  NetworkConfig network;
  LinearConfig linear;
  SvrConfig svr;
  CartConfig cart;
  GbdtConfig gbdt;
  FusionMode fusion = FusionMode::kLate;
};

/// Kind after applying the fusion mode: early fusion turns vscnn into vscnn-ef.
ModelKind resolve_kind(ModelKind kind, FusionMode fusion);

class TrainedModel {
 public:
  ModelKind kind() const { return kind_; }
  FusionMode fusion() const { return fusion_; }
  const TrainResult& training() const { return training_; }
  std::vector<double> predict(const DescriptorSet& data) const;
  Archive to_archive() const;
  static TrainedModel from_archive(const Archive& ar);

  friend TrainedModel fit_model(ModelKind kind, const Experiment& exp, const ModelOptions& options);

 private:
  ModelKind kind_ = ModelKind::kLr;
  FusionMode fusion_ = FusionMode::kLate;
  std::shared_ptr<PopularityNet> net_;
  LinearModel linear_;
  SvrModel svr_;
  CartTree cart_;
  GbdtModel gbdt_;
  TrainResult training_;
};

/// Networks train with options.train (validation-based checkpointing);
/// baselines fit on the training rows of [X, Z] (or the fused X).
TrainedModel fit_model(ModelKind kind, const Experiment& exp, const ModelOptions& options);
const SplitDescriptors& descriptors_for(const Experiment& exp, FusionMode fusion);

/// Trains each kind on the same split and scores it on the test rows.
std::vector<ComparisonRow> compare_models(const Experiment& exp, const std::vector<ModelKind>& kinds,
                                          const ModelOptions& options);
/// VSCNN on late-fusion descriptors next to VSCNN-EF on early-fusion ones.
std::vector<ComparisonRow> compare_fusion(const Experiment& exp, const ModelOptions& options);

/// Mean avg_views per user, the input of the Pareto analysis.
std::map<std::string, double> user_average_views(const std::vector<PostRecord>& records);
ParetoReport pareto_from_records(const std::vector<PostRecord>& records);

}  // namespace popnet
