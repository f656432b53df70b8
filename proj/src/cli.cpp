#include "popnet/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "popnet/error.hpp"
#include "popnet/pipeline.hpp"

namespace popnet {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path dataset;
  fs::path out = "popnet-out";
  fs::path cache_dir;
  fs::path model_dir;
  fs::path report_dir;
  std::string model = "vscnn";
  std::string fusion = "late";
  std::string deep = "sidecar";
  std::uint64_t seed = 0;
  int epochs = 50;
  int batch_size = 20;
  double learning_rate = 0.001;
  std::string init = "uniform";
  int gbdt_rounds = 2000;
  unsigned jobs = 1;
  bool dry_run = false;
  double split_train = 0.6;
  double split_val = 0.2;
  double split_test = 0.2;
  std::string compare_set = "all";
  fs::path pred_file;
  fs::path truth_file;
  std::int64_t n_posts = 2000;
  std::int64_t n_users = 40;
  double noise_sigma = 0.3;
  double visual_gain = 0.6;
  int image_size = 64;
};

struct Paths {
  fs::path features, descriptors, cache, models, report;
};

Paths resolve_paths(const RunConfig& c) {
  Paths p;
  p.features = c.out / "features.bin";
  p.descriptors = c.out / "descriptors.bin";
  p.cache = c.cache_dir.empty() ? c.out / "cache" : c.cache_dir;
  p.models = c.model_dir.empty() ? c.out / "models" : c.model_dir;
  p.report = c.report_dir.empty() ? c.out / "report" : c.report_dir;
  return p;
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); }

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) invalid(what + " not found: " + path.string());
}

DeepSource parse_deep(const std::string& s) {
  if (s == "sidecar") return DeepSource::kSidecar;
  if (s == "stub") return DeepSource::kStub;
  invalid("--deep must be sidecar or stub, got '" + s + "'");
}

SplitSpec split_spec(const RunConfig& c) {
  SplitSpec s{c.seed, c.split_train, c.split_val, c.split_test};
  validate_split_spec(s);
  return s;
}

ModelOptions model_options(const RunConfig& c) {
  ModelOptions o;
  o.train.epochs = c.epochs;
  o.train.batch_size = c.batch_size;
  o.train.initial_lr = c.learning_rate;
  o.train.seed = c.seed;
  nn::validate_train_config(o.train);
  o.network.init = nn::parse_init_kind(c.init);
  o.fusion = parse_fusion_mode(c.fusion);
  o.gbdt.n_estimators = c.gbdt_rounds;
  if (c.gbdt_rounds < 1) invalid("--gbdt-rounds must be at least 1");
  return o;
}

std::string options_hash(const RunConfig& c) {
  std::ostringstream s;
  s << c.model << '|' << c.fusion << '|' << c.seed << '|' << c.epochs << '|' << c.batch_size << '|'
    << c.learning_rate << '|' << c.init << '|' << c.gbdt_rounds;
  return hex64(fnv1a64(s.str()));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, double> read_score_csv(const fs::path& path) {
  std::istringstream in(read_file_bytes(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kMissingField, path.string() + " is empty");
  std::map<std::string, double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kMissingField, path.string() + ":" + std::to_string(line_no) + ": expected post_id,score");
    }
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMissingField, path.string() + ":" + std::to_string(line_no) + ": bad score");
    }
  }
  return out;
}

std::string score_csv(const std::vector<std::string>& ids, const std::vector<double>& scores) {
  std::string s = "post_id,score\n";
  for (std::size_t i = 0; i < ids.size(); ++i) s += ids[i] + "," + fmt(scores[i]) + "\n";
  return s;
}

class Runner {
 public:
  Runner(const RunConfig& c, std::ostream& out) : c_(c), p_(resolve_paths(c)), out_(out) {}

  void synth() {
    SyntheticSpec spec;
    spec.n_posts = c_.n_posts;
    spec.n_users = c_.n_users;
    spec.seed = c_.seed;
    spec.noise_sigma = c_.noise_sigma;
    spec.visual_signal_gain = c_.visual_gain;
    spec.image_size = c_.image_size;
    if (spec.n_users < 1) invalid("--n-users must be positive");
    if (spec.n_posts < spec.n_users) invalid("--n-posts must be at least --n-users");
    if (spec.image_size < 16) invalid("--image-size must be at least 16");
    if (!(spec.noise_sigma >= 0)) invalid("--noise must be nonnegative");
    if (c_.dry_run) return;
    const auto m = generate_synthetic(spec, c_.out);
    out_ << "wrote " << m.dataset_path.string() << " (" << m.entries.size() << " posts, content " << m.content_hash
         << ")\n";
  }

  void extract() {
    if (c_.dataset.empty()) invalid("--dataset is required");
    require_file(c_.dataset, "--dataset");
    ExtractOptions opt{parse_deep(c_.deep), c_.seed, std::max(1u, c_.jobs), p_.cache};
    if (c_.dry_run) return;
    const auto records = load_dataset(c_.dataset);
    const auto f = build_feature_table(records, opt);
    f.to_archive().save(p_.features);
    out_ << "wrote " << p_.features.string() << " (" << f.size() << " posts, features " << f.source_hash << ")\n";
  }

  void reduce() {
    require_file(p_.features, "features (run extract first)");
    const auto spec = split_spec(c_);
    if (c_.dry_run) return;
    const auto f = load_features();
    const auto e = prepare_experiment(f, spec, true);
    auto ar = e.to_archive();
    ar.put_string("experiment_hash", e.hash());
    ar.save(p_.descriptors);
    out_ << "wrote " << p_.descriptors.string() << " (train " << e.split.train.size() << ", val "
         << e.split.val.size() << ", test " << e.split.test.size() << ", descriptors " << e.hash() << ")\n";
  }

  void train() {
    const auto kind = resolve_kind(parse_model_kind(c_.model), parse_fusion_mode(c_.fusion));
    const auto opt = model_options(c_);
    require_upstream();
    if (c_.dry_run) return;
    const auto f = load_features();
    const auto e = load_experiment(f);
    const auto m = fit_model(kind, e, opt);
    auto ar = m.to_archive();
    ar.put_string("experiment_hash", e.hash());
    ar.put_string("options_hash", options_hash(c_));
    const auto path = model_path(kind);
    ar.save(path);
    for (const auto& l : m.training().log) {
      out_ << "epoch " << l.epoch << " lr " << l.lr << " train_mse " << l.train_mse << " val_mse " << l.val_mse
           << "\n";
    }
    if (!m.training().log.empty()) write_file_bytes(path.string() + ".log.csv", training_log_csv(m.training().log));
    out_ << "wrote " << path.string() << "\n";
  }

  void predict() {
    const auto kind = resolve_kind(parse_model_kind(c_.model), parse_fusion_mode(c_.fusion));
    require_upstream();
    require_file(model_path(kind), "model (run train first)");
    if (c_.dry_run) return;
    const auto f = load_features();
    const auto e = load_experiment(f);
    const auto ar = Archive::load(model_path(kind));
    if (ar.string("experiment_hash") != e.hash()) {
      throw Error(ErrorCode::kConfigMismatch, "model " + model_path(kind).string() +
                                                  " was trained on different descriptors; rerun train");
    }
    const auto m = TrainedModel::from_archive(ar);
    const auto pred = m.predict(descriptors_for(e, m.fusion()).test);
    std::vector<std::string> ids;
    for (auto i : e.split.test) ids.push_back(f.post_ids[i]);
    write_file_bytes(p_.report / "predictions.csv", score_csv(ids, pred));
    write_file_bytes(p_.report / "truth.csv", score_csv(ids, e.y_test));
    out_ << "wrote " << (p_.report / "predictions.csv").string() << " (" << ids.size() << " test posts)\n";
  }

  void eval() {
    const auto pred_path = c_.pred_file.empty() ? p_.report / "predictions.csv" : c_.pred_file;
    const auto truth_path = c_.truth_file.empty() ? p_.report / "truth.csv" : c_.truth_file;
    require_file(pred_path, "--pred");
    require_file(truth_path, "--truth");
    if (c_.dry_run) return;
    const auto pred_map = read_score_csv(pred_path);
    const auto truth_map = read_score_csv(truth_path);
    std::vector<double> pred, truth;
    for (const auto& [id, t] : truth_map) {
      auto it = pred_map.find(id);
      if (it == pred_map.end()) throw Error(ErrorCode::kMissingField, "no prediction for post " + id);
      pred.push_back(it->second);
      truth.push_back(t);
    }
    if (pred_map.size() != truth_map.size()) {
      throw Error(ErrorCode::kLengthMismatch, "prediction and truth files cover different posts");
    }
    const std::vector<ComparisonRow> rows{{c_.model, evaluate(pred, truth)}};
    std::vector<double> residuals(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) residuals[i] = pred[i] - truth[i];
    const auto h = error_histogram(residuals);
    write_file_bytes(p_.report / "metrics.csv", metrics_csv(rows));
    write_file_bytes(p_.report / "scatter.csv", scatter_csv(truth, pred));
    write_file_bytes(p_.report / "hist.csv", histogram_csv(h));
    write_file_bytes(p_.report / "scatter.svg", scatter_svg(truth, pred, c_.model + " predictions"));
    write_file_bytes(p_.report / "hist.svg", histogram_svg(h, c_.model + " error distribution"));
    out_ << metrics_csv(rows);
  }

  void compare() {
    if (c_.compare_set != "all" && c_.compare_set != "fusion") invalid("--set must be all or fusion");
    auto opt = model_options(c_);
    require_upstream();
    if (c_.dry_run) return;
    const auto f = load_features();
    const auto e = load_experiment(f);
    opt.fusion = FusionMode::kLate;
    const bool fusion = c_.compare_set == "fusion";
    const auto rows = fusion ? compare_fusion(e, opt) : compare_models(e, all_model_kinds(), opt);
    const std::string stem = fusion ? "compare_fusion" : "compare";
    write_file_bytes(p_.report / (stem + ".csv"), metrics_csv(rows));
    write_file_bytes(p_.report / (stem + ".svg"),
                     comparison_svg(rows, fusion ? "Late vs early fusion (rho)" : "Model comparison (rho)"));
    out_ << metrics_csv(rows);
  }

  void report() {
    if (c_.dataset.empty()) invalid("--dataset is required");
    require_file(c_.dataset, "--dataset");
    if (c_.dry_run) return;
    const auto r = pareto_from_records(load_dataset(c_.dataset));
    write_file_bytes(p_.report / "pareto.csv", pareto_csv(r));
    out_ << pareto_csv(r);
  }

 private:
  void require_upstream() const {
    require_file(p_.features, "features (run extract first)");
    require_file(p_.descriptors, "descriptors (run reduce first)");
  }

  fs::path model_path(ModelKind kind) const { return p_.models / (std::string(model_kind_name(kind)) + ".model"); }

  FeatureTable load_features() const { return FeatureTable::from_archive(Archive::load(p_.features)); }

  Experiment load_experiment(const FeatureTable& f) const {
    const auto ar = Archive::load(p_.descriptors);
    auto e = Experiment::from_archive(ar, f);
    if (ar.string("experiment_hash") != e.hash()) {
      throw Error(ErrorCode::kConfigMismatch, p_.descriptors.string() + " failed its integrity check");
    }
    if (e.spec.seed != c_.seed) {
      throw Error(ErrorCode::kConfigMismatch, "descriptors were split with --seed " + std::to_string(e.spec.seed) +
                                                  ", not " + std::to_string(c_.seed) + "; rerun reduce");
    }
    return e;
  }

  const RunConfig& c_;
  Paths p_;
  std::ostream& out_;
};

void add_common(CLI::App& app, RunConfig& c) {
  app.add_option("--dataset", c.dataset, "Dataset JSONL file");
  app.add_option("--out", c.out, "Working directory for artifacts")->capture_default_str();
  app.add_option("--cache-dir", c.cache_dir, "Feature cache directory (default <out>/cache)");
  app.add_option("--model-dir", c.model_dir, "Model directory (default <out>/models)");
  app.add_option("--report-dir", c.report_dir, "Report directory (default <out>/report)");
  app.add_option("--model", c.model, "vscnn, vcnn, scnn, vscnn-ef, lr, svr, dtr or gbdt")->capture_default_str();
  app.add_option("--fusion", c.fusion, "late or early")->capture_default_str();
  app.add_option("--deep", c.deep, "Deep feature source: sidecar or stub")->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for every stochastic stage")->capture_default_str();
  app.add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  app.add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str();
  app.add_option("--learning-rate", c.learning_rate, "Initial learning rate")->capture_default_str();
  app.add_option("--init", c.init, "Weight init: uniform or scaled")->capture_default_str();
  app.add_option("--gbdt-rounds", c.gbdt_rounds, "Boosting rounds")->capture_default_str();
  app.add_option("--jobs", c.jobs, "Extraction worker threads")->capture_default_str();
  app.add_flag("--dry-run", c.dry_run, "Validate inputs without writing anything");
  app.add_option("--split-train", c.split_train)->capture_default_str();
  app.add_option("--split-val", c.split_val)->capture_default_str();
  app.add_option("--split-test", c.split_test)->capture_default_str();
  app.add_option("--set", c.compare_set, "compare: all or fusion")->capture_default_str();
  app.add_option("--pred", c.pred_file, "eval: predictions CSV (post_id,score)");
  app.add_option("--truth", c.truth_file, "eval: ground-truth CSV (post_id,score)");
  app.add_option("--n-posts", c.n_posts, "synth: number of posts")->capture_default_str();
  app.add_option("--n-users", c.n_users, "synth: number of users")->capture_default_str();
  app.add_option("--noise", c.noise_sigma, "synth: noise sigma")->capture_default_str();
  app.add_option("--visual-gain", c.visual_gain, "synth: visual signal gain")->capture_default_str();
  app.add_option("--image-size", c.image_size, "synth: image side in pixels")->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Multimodal image popularity toolkit"};
  app.set_config("--config", "", "TOML-style key = value file; flags override it");
  app.require_subcommand(1, 1);
  app.fallthrough();
  add_common(app, c);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "Generate a planted-signal synthetic dataset"},
      {"extract", "Extract visual and social features"},
      {"reduce", "Split and fit PCA descriptors on the training rows"},
      {"train", "Train one model"},
      {"predict", "Score the test split with a trained model"},
      {"eval", "Compute metrics, scatter and histogram reports"},
      {"compare", "Train every model kind on the same split"},
      {"report", "Pareto 80-20 analysis of a dataset"}};
  for (const auto& [name, desc] : commands) app.add_subcommand(name, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  out << "# popnet " << cmd << " effective configuration\n" << app.config_to_str(true, false);
  try {
    Runner r(c, out);
    if (cmd == "synth") r.synth();
    else if (cmd == "extract") r.extract();
    else if (cmd == "reduce") r.reduce();
    else if (cmd == "train") r.train();
    else if (cmd == "predict") r.predict();
    else if (cmd == "eval") r.eval();
    else if (cmd == "compare") r.compare();
    else r.report();
    if (c.dry_run) out << "dry run: configuration valid\n";
  } catch (const Error& e) {
    err << "popnet " << cmd << ": " << e.what() << "\n";
    const bool validation = e.code() == ErrorCode::kInvalidArgument || e.code() == ErrorCode::kConfigMismatch;
    return validation ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    err << "popnet " << cmd << ": " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace popnet
