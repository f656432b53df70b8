#include "popnet/pipeline.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "popnet/error.hpp"
#include "popnet/socialfeat.hpp"

namespace popnet {
namespace {

constexpr std::string_view kCacheMagic = "PPNVIS01";

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<double> select(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

void put_matrix(Archive& ar, const std::string& name, const Matrix& m) {
  std::vector<double> values(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), m.rows(), m.cols()) = m;
  ar.put_array(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}, std::move(values));
}

Matrix get_matrix(const Archive& ar, const std::string& name) {
  const auto& a = ar.array(name);
  if (a.shape.size() != 2) throw Error(ErrorCode::kShapeMismatch, "'" + name + "' is not a matrix");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      a.values.data(), static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
}

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += s + "\n";
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    out.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

void put_indices(Archive& ar, const std::string& name, const std::vector<std::size_t>& idx) {
  ar.put_array(name, {idx.size()}, std::vector<double>(idx.begin(), idx.end()));
}

std::vector<std::size_t> get_indices(const Archive& ar, const std::string& name, std::size_t limit) {
  std::vector<std::size_t> out;
  for (double v : ar.array(name).values) {
    if (v < 0 || v >= static_cast<double>(limit)) {
      throw Error(ErrorCode::kConfigMismatch, "split index out of range in '" + name + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

SplitDescriptors apply_split(const DescriptorModel& model, const FeatureTable& f, const Partition<std::size_t>& p) {
  auto set = [&](const std::vector<std::size_t>& idx) {
    return apply_descriptors(model, select_rows(f.visual, idx), select_rows(f.social, idx));
  };
  return {set(p.train), set(p.val), set(p.test)};
}

std::vector<double> predict_rows(const Matrix& x, const auto& fn) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = fn(Vector(x.row(i).transpose()));
  return out;
}

NetKind net_kind(ModelKind kind) {
  switch (kind) {
    case ModelKind::kVscnn: return NetKind::kVscnn;
    case ModelKind::kVcnn: return NetKind::kVcnn;
    case ModelKind::kScnn: return NetKind::kScnn;
    case ModelKind::kVscnnEf: return NetKind::kVscnnEf;
    default: throw Error(ErrorCode::kInvalidArgument, "not a network kind");
  }
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kVscnn: return "vscnn";
    case ModelKind::kVcnn: return "vcnn";
    case ModelKind::kScnn: return "scnn";
    case ModelKind::kVscnnEf: return "vscnn-ef";
    case ModelKind::kLr: return "lr";
    case ModelKind::kSvr: return "svr";
    case ModelKind::kDtr: return "dtr";
    case ModelKind::kGbdt: return "gbdt";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  const std::string canon = name == "vscnn_ef" ? "vscnn-ef" : name;
  for (auto k : all_model_kinds()) {
    if (canon == model_kind_name(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind '" + name + "'");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {ModelKind::kLr,    ModelKind::kSvr,  ModelKind::kDtr,
                                               ModelKind::kGbdt,  ModelKind::kVcnn, ModelKind::kScnn,
                                               ModelKind::kVscnn, ModelKind::kVscnnEf};
  return kinds;
}

bool is_network(ModelKind kind) {
  return kind == ModelKind::kVscnn || kind == ModelKind::kVcnn || kind == ModelKind::kScnn ||
         kind == ModelKind::kVscnnEf;
}

Archive FeatureTable::to_archive() const {
  Archive ar;
  ar.put_string("kind", "features");
  ar.put_string("source_hash", source_hash);
  ar.put_string("post_ids", join_lines(post_ids));
  ar.put_string("users", join_lines(users));
  ar.put_array("scores", scores);
  put_matrix(ar, "visual", visual);
  put_matrix(ar, "social", social);
  return ar;
}

FeatureTable FeatureTable::from_archive(const Archive& ar) {
  if (ar.string("kind") != "features") throw Error(ErrorCode::kConfigMismatch, "archive does not hold features");
  FeatureTable f;
  f.source_hash = ar.string("source_hash");
  f.post_ids = split_lines(ar.string("post_ids"));
  f.users = split_lines(ar.string("users"));
  f.scores = ar.array("scores").values;
  f.visual = get_matrix(ar, "visual");
  f.social = get_matrix(ar, "social");
  const auto n = f.post_ids.size();
  if (f.users.size() != n || f.scores.size() != n || static_cast<std::size_t>(f.visual.rows()) != n ||
      static_cast<std::size_t>(f.social.rows()) != n) {
    throw Error(ErrorCode::kShapeMismatch, "feature archive row counts disagree");
  }
  return f;
}

std::string visual_cache_key(const PostRecord& record, const ExtractOptions& options) {
  std::uint64_t h = fnv1a64(visual_extractor_version());
  h = fnv1a64(record.post_id, h);
  h = fnv1a64(read_file_bytes(record.image_path), h);
  if (options.deep == DeepSource::kSidecar) {
    if (!record.deep_feature_path) {
      throw Error(ErrorCode::kMissingField, "post " + record.post_id + " has no deep feature sidecar");
    }
    h = fnv1a64(read_file_bytes(*record.deep_feature_path), h);
  } else {
    h = fnv1a64("stub:" + std::to_string(options.stub_seed), h);
  }
  return hex64(h);
}

Matrix extract_visual_matrix(const std::vector<PostRecord>& records, const ExtractOptions& options) {
  const std::size_t n = records.size();
  Matrix out(static_cast<Eigen::Index>(n), kVisualDim);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto& rec = records[i];
        std::vector<double> v;
        std::filesystem::path cached;
        if (options.cache_dir) {
          cached = *options.cache_dir / (rec.post_id + "-" + visual_cache_key(rec, options) + ".vis");
          if (std::filesystem::exists(cached)) {
            v = read_flat_block(cached, kCacheMagic);
            if (v.size() != kVisualDim) v.clear();
          }
        }
        if (v.empty()) {
          v = extract_visual(rec, options.deep, options.stub_seed).flatten();
          if (options.cache_dir) write_flat_block(cached, kCacheMagic, v);
        }
        out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(v.data(), kVisualDim).transpose();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Matrix extract_social_matrix(const std::vector<PostRecord>& records) {
  const auto ranks = build_user_ranks(records);
  Matrix out(static_cast<Eigen::Index>(records.size()), kSocialDim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto v = extract_social(records[i], ranks).flatten();
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(v.data(), kSocialDim).transpose();
  }
  return out;
}

FeatureTable build_feature_table(const std::vector<PostRecord>& records, const ExtractOptions& options) {
  FeatureTable f;
  std::uint64_t h = fnv1a64(visual_extractor_version());
  h = fnv1a64(options.deep == DeepSource::kSidecar ? "sidecar" : "stub:" + std::to_string(options.stub_seed), h);
  for (const auto& rec : records) {
    const auto s = label(rec);
    f.post_ids.push_back(rec.post_id);
    f.users.push_back(rec.user_id_raw);
    f.scores.push_back(s.score);
    h = fnv1a64(visual_cache_key(rec, options), h);
  }
  h = fnv1a64(serialize_dataset(records), h);
  f.source_hash = hex64(h);
  f.visual = extract_visual_matrix(records, options);
  f.social = extract_social_matrix(records);
  return f;
}

std::string Experiment::hash() const {
  std::uint64_t h = fnv1a64(features_hash);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    std::vector<double> v(part->begin(), part->end());
    h = fnv1a64(std::span<const double>(v), h);
    h = fnv1a64("|", h);
  }
  h = fnv1a64(late_model.to_archive().serialize(), h);
  if (early_model) h = fnv1a64(early_model->to_archive().serialize(), h);
  return hex64(h);
}

Archive Experiment::to_archive() const {
  Archive ar;
  ar.put_string("kind", "experiment");
  ar.put_string("features_hash", features_hash);
  ar.put_string("split.seed", std::to_string(spec.seed));
  ar.put_scalar("split.train", spec.train);
  ar.put_scalar("split.val", spec.val);
  ar.put_scalar("split.test", spec.test);
  put_indices(ar, "index.train", split.train);
  put_indices(ar, "index.val", split.val);
  put_indices(ar, "index.test", split.test);
  ar.put_string("late", late_model.to_archive().serialize());
  if (early_model) ar.put_string("early", early_model->to_archive().serialize());
  return ar;
}

Experiment Experiment::from_archive(const Archive& ar, const FeatureTable& features) {
  if (ar.string("kind") != "experiment") throw Error(ErrorCode::kConfigMismatch, "archive does not hold descriptors");
  Experiment e;
  e.features_hash = ar.string("features_hash");
  if (e.features_hash != features.source_hash) {
    throw Error(ErrorCode::kConfigMismatch, "descriptors were fitted on different features (" + e.features_hash +
                                                " vs " + features.source_hash + ")");
  }
  e.spec.seed = std::stoull(ar.string("split.seed"));
  e.spec.train = ar.scalar("split.train");
  e.spec.val = ar.scalar("split.val");
  e.spec.test = ar.scalar("split.test");
  e.split.train = get_indices(ar, "index.train", features.size());
  e.split.val = get_indices(ar, "index.val", features.size());
  e.split.test = get_indices(ar, "index.test", features.size());
  e.y_train = select(features.scores, e.split.train);
  e.y_val = select(features.scores, e.split.val);
  e.y_test = select(features.scores, e.split.test);
  e.late_model = DescriptorModel::from_archive(Archive::deserialize(ar.string("late")));
  e.late = apply_split(e.late_model, features, e.split);
  if (ar.has("early")) {
    e.early_model = DescriptorModel::from_archive(Archive::deserialize(ar.string("early")));
    e.early = apply_split(*e.early_model, features, e.split);
  }
  return e;
}

Experiment prepare_experiment(const FeatureTable& features, const SplitSpec& spec, bool with_early) {
  Experiment e;
  e.spec = spec;
  e.features_hash = features.source_hash;
  e.split = split_indices(features.size(), spec);
  e.y_train = select(features.scores, e.split.train);
  e.y_val = select(features.scores, e.split.val);
  e.y_test = select(features.scores, e.split.test);
  const Matrix vt = select_rows(features.visual, e.split.train);
  const Matrix st = select_rows(features.social, e.split.train);
  e.late_model = fit_descriptors(vt, st, FusionMode::kLate);
  e.late = apply_split(e.late_model, features, e.split);
  if (with_early) {
    e.early_model = fit_descriptors(vt, st, FusionMode::kEarly);
    e.early = apply_split(*e.early_model, features, e.split);
  }
  return e;
}

ModelKind resolve_kind(ModelKind kind, FusionMode fusion) {
  if (fusion == FusionMode::kLate || !is_network(kind)) return kind;
  if (kind == ModelKind::kVscnn || kind == ModelKind::kVscnnEf) return ModelKind::kVscnnEf;
  throw Error(ErrorCode::kInvalidArgument,
              std::string("early fusion needs both modalities; --model ") + model_kind_name(kind) + " uses one");
}

const SplitDescriptors& descriptors_for(const Experiment& exp, FusionMode fusion) {
  if (fusion == FusionMode::kLate) return exp.late;
  if (!exp.early) throw Error(ErrorCode::kConfigMismatch, "early-fusion descriptors were not fitted");
  return *exp.early;
}

TrainedModel fit_model(ModelKind kind, const Experiment& exp, const ModelOptions& options) {
  TrainedModel m;
  m.kind_ = resolve_kind(kind, options.fusion);
  m.fusion_ = m.kind_ == ModelKind::kVscnnEf ? FusionMode::kEarly
              : is_network(m.kind_)          ? FusionMode::kLate
                                             : options.fusion;
  const auto& d = descriptors_for(exp, m.fusion_);
  if (is_network(m.kind_)) {
    m.net_ = std::make_shared<PopularityNet>(net_kind(m.kind_), options.network, options.train.seed);
    m.training_ = train(*m.net_, d.train, exp.y_train, d.val, exp.y_val, options.train);
    return m;
  }
  const Matrix x = d.train.joined();
  switch (m.kind_) {
    case ModelKind::kLr: m.linear_ = lr_fit(x, exp.y_train, options.linear); break;
    case ModelKind::kSvr: m.svr_ = svr_fit(x, exp.y_train, options.svr); break;
    case ModelKind::kDtr: m.cart_ = cart_fit(x, exp.y_train, options.cart); break;
    case ModelKind::kGbdt: m.gbdt_ = gbdt_fit(x, exp.y_train, options.gbdt); break;
    default: break;
  }
  return m;
}

std::vector<double> TrainedModel::predict(const DescriptorSet& data) const {
  if (net_) return net_->predict(data);
  const Matrix x = data.joined();
  switch (kind_) {
    case ModelKind::kLr: return predict_rows(x, [&](const Vector& r) { return lr_predict(linear_, r); });
    case ModelKind::kSvr: return predict_rows(x, [&](const Vector& r) { return svr_predict(svr_, r); });
    case ModelKind::kDtr: return predict_rows(x, [&](const Vector& r) { return cart_predict(cart_, r); });
    case ModelKind::kGbdt: return predict_rows(x, [&](const Vector& r) { return gbdt_predict(gbdt_, r); });
    default: throw Error(ErrorCode::kGraphNotBuilt, "network model has no parameters loaded");
  }
}

Archive TrainedModel::to_archive() const {
  Archive ar;
  ar.put_string("kind", "trained_model");
  ar.put_string("model", model_kind_name(kind_));
  ar.put_string("fusion", fusion_mode_name(fusion_));
  Archive body;
  switch (kind_) {
    case ModelKind::kLr: body = popnet::to_archive(linear_); break;
    case ModelKind::kSvr: body = popnet::to_archive(svr_); break;
    case ModelKind::kDtr: body = popnet::to_archive(cart_); break;
    case ModelKind::kGbdt: body = popnet::to_archive(gbdt_); break;
    default: body = net_->to_archive(); break;
  }
  ar.put_string("body", body.serialize());
  std::vector<double> log;
  for (const auto& e : training_.log) {
    log.insert(log.end(), {static_cast<double>(e.epoch), e.lr, e.train_mse, e.val_mse});
  }
  ar.put_array("training_log", {training_.log.size(), 4}, std::move(log));
  ar.put_scalar("best_epoch", static_cast<double>(training_.best_epoch));
  ar.put_scalar("best_val_mse", training_.best_val_mse);
  return ar;
}

TrainedModel TrainedModel::from_archive(const Archive& ar) {
  if (ar.string("kind") != "trained_model") throw Error(ErrorCode::kConfigMismatch, "archive does not hold a model");
  TrainedModel m;
  m.kind_ = parse_model_kind(ar.string("model"));
  m.fusion_ = parse_fusion_mode(ar.string("fusion"));
  const Archive body = Archive::deserialize(ar.string("body"));
  switch (m.kind_) {
    case ModelKind::kLr: m.linear_ = linear_from_archive(body); break;
    case ModelKind::kSvr: m.svr_ = svr_from_archive(body); break;
    case ModelKind::kDtr: m.cart_ = cart_from_archive(body); break;
    case ModelKind::kGbdt: m.gbdt_ = gbdt_from_archive(body); break;
    default: m.net_ = PopularityNet::from_archive(body); break;
  }
  const auto& log = ar.array("training_log");
  for (std::size_t i = 0; i + 3 < log.values.size(); i += 4) {
    m.training_.log.push_back(EpochLog{static_cast<int>(log.values[i]), log.values[i + 1], log.values[i + 2],
                                       log.values[i + 3]});
  }
  m.training_.best_epoch = static_cast<std::size_t>(ar.scalar("best_epoch"));
  m.training_.best_val_mse = ar.scalar("best_val_mse");
  return m;
}

std::vector<ComparisonRow> compare_models(const Experiment& exp, const std::vector<ModelKind>& kinds,
                                          const ModelOptions& options) {
  std::vector<ComparisonRow> rows;
  for (auto kind : kinds) {
    ModelOptions opt = options;
    if (is_network(kind)) opt.fusion = FusionMode::kLate;
    const auto model = fit_model(kind, exp, opt);
    const auto pred = model.predict(descriptors_for(exp, model.fusion()).test);
    rows.push_back({model_kind_name(model.kind()), evaluate(pred, exp.y_test)});
  }
  return rows;
}

std::vector<ComparisonRow> compare_fusion(const Experiment& exp, const ModelOptions& options) {
  return compare_models(exp, {ModelKind::kVscnn, ModelKind::kVscnnEf}, options);
}

std::map<std::string, double> user_average_views(const std::vector<PostRecord>& records) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    auto& [sum, count] = acc[r.user_id_raw];
    sum += r.avg_views;
    ++count;
  }
  std::map<std::string, double> out;
  for (const auto& [user, a] : acc) out[user] = a.first / static_cast<double>(a.second);
  return out;
}

ParetoReport pareto_from_records(const std::vector<PostRecord>& records) {
  std::vector<ParetoSample> samples;
  for (const auto& s : label_all(records)) samples.push_back({s.record.user_id_raw, s.score});
  return pareto_analysis(samples, user_average_views(records));
}

}  // namespace popnet
