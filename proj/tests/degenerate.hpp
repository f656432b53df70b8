#pragma once

// Degenerate-input checks shared by the unit tests and the acceptance binary.
// Each check names the documented value or error it expects.

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "popnet/baselines.hpp"
#include "popnet/dataset.hpp"
#include "popnet/error.hpp"
#include "popnet/eval.hpp"
#include "popnet/image.hpp"
#include "popnet/imgfeat.hpp"
#include "popnet/pipeline.hpp"
#include "popnet/socialfeat.hpp"

namespace testutil {

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

namespace degenerate_detail {

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const popnet::Matrix& m) { return m.allFinite(); }

inline popnet::Image flat_image(int side, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  popnet::Image img(side, side);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.pixels[3 * i] = r;
    img.pixels[3 * i + 1] = g;
    img.pixels[3 * i + 2] = b;
  }
  return img;
}

template <typename F>
bool throws_code(F&& f, popnet::ErrorCode code) {
  try {
    f();
  } catch (const popnet::Error& e) {
    return e.code() == code;
  }
  return false;
}

constexpr std::int64_t kRef = 1456876800;  // 2016-03-02 00:00 UTC
constexpr std::int64_t kDay = 86400;

/// One user, zero views everywhere, identical uniform gray images.
inline std::vector<popnet::PostRecord> degenerate_records(const std::filesystem::path& dir, int n) {
  std::filesystem::create_directories(dir);
  const auto image_path = dir / "gray.ppm";
  popnet::write_ppm(image_path, flat_image(32, 128, 128, 128));
  std::vector<popnet::PostRecord> out;
  for (int i = 0; i < n; ++i) {
    popnet::PostRecord r;
    r.post_id = "p" + std::to_string(i);
    r.user_id_raw = "only-user";
    r.image_path = image_path;
    r.views = 0;
    r.avg_views = 0.0;
    r.tag_count = i % 7;
    r.title_len = (i * 5) % 23;
    r.desc_len = (i * 11) % 97;
    r.has_people = i % 2 == 0;
    r.comment_count = (i * 3) % 5;
    r.reference_date = kRef;
    r.post_date = kRef - (1 + (i * 37) % 300) * kDay - (i * 3607) % kDay;
    out.push_back(r);
  }
  return out;
}

}  // namespace degenerate_detail

/// Runs every degenerate-input check; `dir` receives scratch files.
inline std::vector<Check> run_degenerate_suite(const std::filesystem::path& dir) {
  using namespace popnet;
  using namespace degenerate_detail;
  std::vector<Check> checks;
  auto check = [&](const std::string& name, const std::function<bool(std::string&)>& body) {
    Check c{name, false, ""};
    try {
      c.ok = body(c.detail);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("unexpected exception: ") + e.what();
    }
    checks.push_back(c);
  };

  // ---- uniform images ----
  check("uniform image: visual vector finite, documented histograms", [&](std::string& d) {
    const auto img = flat_image(48, 128, 128, 128);
    const auto f = extract_visual(img, stub_deep_feature("u", 1));
    const auto flat = f.flatten();
    if (flat.size() != 4710 || !all_finite(flat)) return d = "length or NaN", false;
    double color_sum = 0, color_max = 0;
    for (double v : f.color) color_sum += v, color_max = std::max(color_max, v);
    if (std::abs(color_sum - 1) > 1e-12 || color_max != 1.0) return d = "color histogram not one-hot", false;
    if (f.lbp[static_cast<std::size_t>(lbp_bin(0xff))] != 1.0) return d = "LBP not all in pattern 255", false;
    for (double v : f.gist)
      if (std::abs(v) > 1e-9) return d = "GIST energy on uniform image", false;
    return true;
  });
  check("uniform image: aesthetic vector equals documented constants", [&](std::string& d) {
    const auto a = aesthetic_vector(canonicalize(flat_image(40, 90, 90, 90)));
    const std::vector<double> expect = {1, 1, 0, 0, 0, 0, 0, 0, 0, 1.0 / 6.0, 1.0 - 1.0 / 4096.0};
    for (std::size_t i = 0; i < expect.size(); ++i)
      if (std::abs(a[i] - expect[i]) > 1e-9) return d = "entry " + std::to_string(i) + " = " + std::to_string(a[i]), false;
    return true;
  });
  check("uniform image: black and white extremes finite", [&](std::string& d) {
    for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{255}}) {
      if (!all_finite(extract_visual(flat_image(16, v, v, v), stub_deep_feature("x", 2)).flatten())) {
        d = "NaN at level " + std::to_string(v);
        return false;
      }
    }
    return subject_split(canonicalize(flat_image(16, 0, 0, 0)).gray).fallback;
  });

  // ---- constant targets ----
  check("constant targets: Spearman is DegenerateInput, evaluate marks rho undefined", [&](std::string& d) {
    const std::vector<double> c(10, 2.5), p = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    if (!throws_code([&] { spearman_rho(p, c); }, ErrorCode::kDegenerateInput)) return d = "no DegenerateInput", false;
    const auto m = evaluate(p, c);
    return !m.rho_defined && std::isfinite(m.mae) && std::isfinite(m.mse) && std::abs(m.mae - 3.4) < 1e-12;
  });
  check("constant targets: every baseline predicts the constant", [&](std::string& d) {
    Matrix x(30, 3);
    for (int i = 0; i < 30; ++i) x.row(i) << i, (i * 7) % 11, std::sin(i);
    const std::vector<double> y(30, 3.25);
    const Vector probe = Vector::Constant(3, 4.0);
    GbdtConfig g;
    g.n_estimators = 20;
    const double preds[] = {lr_predict(lr_fit(x, y), probe), cart_predict(cart_fit(x, y), probe),
                            gbdt_predict(gbdt_fit(x, y, g), probe)};
    for (double p : preds)
      if (std::abs(p - 3.25) > 1e-9) return d = "prediction " + std::to_string(p), false;
    const double s = svr_predict(svr_fit(x, y), probe);
    if (!(std::abs(s - 3.25) <= 0.1 + 1e-9)) return d = "svr " + std::to_string(s), false;
    return true;
  });
  check("constant targets: error histogram of zero residuals", [&](std::string& d) {
    const auto h = error_histogram(std::vector<double>(5, 0.0));
    d = "edges " + std::to_string(h.edges.size());
    return h.edges == std::vector<double>{-0.5, 0.0, 0.5} && h.counts == std::vector<std::size_t>{0, 5};
  });

  // ---- single user ----
  check("single user: rank 1 for every post, Pareto rejects one user", [&](std::string& d) {
    const auto recs = degenerate_records(dir / "single", 6);
    const auto ranks = build_user_ranks(recs);
    if (ranks.size() != 1 || ranks.rank("only-user") != 1) return d = "rank table", false;
    const auto s = extract_social(recs[0], ranks).flatten();
    if (s.size() != 34 || !all_finite(s) || s[0] != 1.0) return d = "social vector", false;
    return throws_code([&] { pareto_from_records(recs); }, ErrorCode::kInvalidArgument);
  });

  // ---- zero-view posts ----
  check("zero views: score clamps views to 1", [&](std::string& d) {
    const double one_day = popularity_score(0, kRef - kDay, kRef);
    const double four_days = popularity_score(0, kRef - 4 * kDay, kRef);
    d = std::to_string(one_day) + " " + std::to_string(four_days);
    return one_day == 1.0 && four_days == -1.0;
  });

  // ---- reduction on degenerate matrices ----
  check("constant matrix: PCA projects to zeros, scaler maps to 0", [&](std::string& d) {
    const Matrix c = Matrix::Constant(10, 4, 7.0);
    const auto pca = pca_fit(c, 3);
    const Matrix proj = pca_transform_rows(pca, c);
    if (!all_finite(proj) || proj.cwiseAbs().maxCoeff() != 0.0) return d = "projection", false;
    if (pca.explained_variance.cwiseAbs().maxCoeff() != 0.0) return d = "variance", false;
    const Matrix s = scaler_transform_rows(scaler_fit(c), c);
    return s.cwiseAbs().maxCoeff() == 0.0;
  });

  // ---- everything at once, end to end ----
  check("all-degenerate dataset: extraction, reduction and all eight models stay finite", [&](std::string& d) {
    const auto recs = degenerate_records(dir / "pipeline", 40);
    ExtractOptions eo;
    eo.deep = DeepSource::kStub;
    const auto table = build_feature_table(recs, eo);
    if (!all_finite(table.visual) || !all_finite(table.social) || !all_finite(table.scores)) return d = "features", false;
    for (double s : table.scores)
      if (s > 1.0) return d = "zero-view score above 1", false;
    auto exp = prepare_experiment(table, SplitSpec{1, 0.6, 0.2, 0.2});
    ModelOptions mo;
    mo.train.epochs = 3;
    mo.gbdt.n_estimators = 30;
    for (int pass = 0; pass < 2; ++pass) {
      if (pass == 1) {  // constant targets on the same descriptors
        std::fill(exp.y_train.begin(), exp.y_train.end(), 1.0);
        std::fill(exp.y_val.begin(), exp.y_val.end(), 1.0);
        std::fill(exp.y_test.begin(), exp.y_test.end(), 1.0);
      }
      for (auto kind : all_model_kinds()) {
        mo.fusion = kind == ModelKind::kVscnnEf ? FusionMode::kEarly : FusionMode::kLate;
        const auto model = fit_model(kind, exp, mo);
        const auto pred = model.predict(descriptors_for(exp, mo.fusion).test);
        if (!all_finite(pred)) return d = std::string("NaN from ") + model_kind_name(kind), false;
        const auto m = evaluate(pred, exp.y_test);
        if (!std::isfinite(m.mae) || !std::isfinite(m.mse) || (m.rho_defined && !std::isfinite(m.spearman_rho)))
          return d = std::string("metrics from ") + model_kind_name(kind), false;
        if (pass == 1 && m.rho_defined) return d = "rho defined on constant truth", false;
      }
    }
    return true;
  });
  return checks;
}

}  // namespace testutil
