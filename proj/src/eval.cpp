#include "popnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "popnet/error.hpp"

namespace popnet {
namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                                                std::to_string(b.size()));
  }
  if (a.empty()) throw Error(ErrorCode::kLengthMismatch, std::string(what) + " of empty vectors");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string svg_header(int w, int h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         "<text x=\"" + std::to_string(w / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  return r;
}

double spearman_rho(const std::vector<double>& pred, const std::vector<double>& truth) {
  check_lengths(pred, truth, "spearman_rho");
  if (pred.size() < 2) throw Error(ErrorCode::kDegenerateInput, "spearman_rho needs at least two samples");
  const auto rp = average_ranks(pred), rt = average_ranks(truth);
  const double n = static_cast<double>(rp.size());
  const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
  const double mt = std::accumulate(rt.begin(), rt.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    sxy += (rp[i] - mp) * (rt[i] - mt);
    sxx += (rp[i] - mp) * (rp[i] - mp);
    syy += (rt[i] - mt) * (rt[i] - mt);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kDegenerateInput, "spearman_rho: predictions are constant");
  if (syy == 0.0) throw Error(ErrorCode::kDegenerateInput, "spearman_rho: targets are constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mean_absolute_error(const std::vector<double>& pred, const std::vector<double>& truth) {
  check_lengths(pred, truth, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double mean_squared_error(const std::vector<double>& pred, const std::vector<double>& truth) {
  check_lengths(pred, truth, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

Metrics evaluate(const std::vector<double>& pred, const std::vector<double>& truth) {
  Metrics m;
  m.mae = mean_absolute_error(pred, truth);
  m.mse = mean_squared_error(pred, truth);
  m.n = pred.size();
  try {
    m.spearman_rho = spearman_rho(pred, truth);
    m.rho_defined = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateInput) throw;
  }
  return m;
}

Histogram error_histogram(const std::vector<double>& residuals, double bin_width) {
  if (residuals.empty()) throw Error(ErrorCode::kInvalidArgument, "histogram of no residuals");
  if (!(bin_width > 0)) throw Error(ErrorCode::kInvalidArgument, "bin width must be positive");
  double max_abs = 0.0;
  for (double r : residuals) {
    if (!std::isfinite(r)) throw Error(ErrorCode::kInvalidArgument, "non-finite residual");
    max_abs = std::max(max_abs, std::abs(r));
  }
  const auto half = static_cast<std::int64_t>(std::floor(max_abs / bin_width)) + 1;
  Histogram h;
  for (std::int64_t k = -half; k <= half; ++k) h.edges.push_back(static_cast<double>(k) * bin_width);
  h.counts.assign(static_cast<std::size_t>(2 * half), 0);
  for (double r : residuals) {
    auto k = static_cast<std::int64_t>(std::floor(r / bin_width)) + half;
    k = std::clamp<std::int64_t>(k, 0, 2 * half - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

std::string metrics_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "model,rho,mae,mse,n\n";
  for (const auto& r : rows) {
    out += r.model + "," + (r.metrics.rho_defined ? fmt(r.metrics.spearman_rho) : std::string("undefined")) + "," +
           fmt(r.metrics.mae) + "," + fmt(r.metrics.mse) + "," + std::to_string(r.metrics.n) + "\n";
  }
  return out;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "edge_lo,edge_hi,count\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    out += fmt(h.edges[k]) + "," + fmt(h.edges[k + 1]) + "," + std::to_string(h.counts[k]) + "\n";
  }
  return out;
}

std::string scatter_csv(const std::vector<double>& truth, const std::vector<double>& pred) {
  if (truth.size() != pred.size()) throw Error(ErrorCode::kLengthMismatch, "scatter: lengths differ");
  std::string out = "truth,pred\n";
  for (std::size_t i = 0; i < truth.size(); ++i) out += fmt(truth[i]) + "," + fmt(pred[i]) + "\n";
  return out;
}

std::string histogram_svg(const Histogram& h, const std::string& title) {
  constexpr int kW = 480, kH = 320, kL = 50, kB = 40, kT = 30;
  std::string s = svg_header(kW, kH, title);
  const std::size_t peak = h.counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  const double bar_w = static_cast<double>(kW - kL - 10) / static_cast<double>(std::max<std::size_t>(1, h.counts.size()));
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double bh = static_cast<double>(kH - kB - kT) * static_cast<double>(h.counts[k]) / static_cast<double>(peak);
    s += "<rect x=\"" + fmt_short(kL + bar_w * static_cast<double>(k)) + "\" y=\"" + fmt_short(kH - kB - bh) +
         "\" width=\"" + fmt_short(bar_w * 0.9) + "\" height=\"" + fmt_short(bh) + "\" fill=\"steelblue\"/>\n";
  }
  s += "<text x=\"" + std::to_string(kL) + "\" y=\"" + std::to_string(kH - 10) + "\">" + fmt_short(h.edges.front()) + "</text>\n";
  s += "<text x=\"" + std::to_string(kW - 10) + "\" y=\"" + std::to_string(kH - 10) + "\" text-anchor=\"end\">" +
       fmt_short(h.edges.back()) + "</text>\n";
  s += "<text x=\"5\" y=\"" + std::to_string(kT + 10) + "\">" + std::to_string(peak) + "</text>\n</svg>\n";
  return s;
}

std::string scatter_svg(const std::vector<double>& truth, const std::vector<double>& pred, const std::string& title) {
  if (truth.size() != pred.size()) throw Error(ErrorCode::kLengthMismatch, "scatter: lengths differ");
  constexpr int kW = 400, kH = 400, kM = 40;
  std::string s = svg_header(kW, kH, title);
  double lo = 0.0, hi = 1.0;
  if (!truth.empty()) {
    lo = std::min(*std::min_element(truth.begin(), truth.end()), *std::min_element(pred.begin(), pred.end()));
    hi = std::max(*std::max_element(truth.begin(), truth.end()), *std::max_element(pred.begin(), pred.end()));
    if (!(hi > lo)) hi = lo + 1.0;
  }
  auto px = [&](double v) { return kM + (kW - 2 * kM) * (v - lo) / (hi - lo); };
  auto py = [&](double v) { return kH - kM - (kH - 2 * kM) * (v - lo) / (hi - lo); };
  s += "<line x1=\"" + fmt_short(px(lo)) + "\" y1=\"" + fmt_short(py(lo)) + "\" x2=\"" + fmt_short(px(hi)) + "\" y2=\"" +
       fmt_short(py(hi)) + "\" stroke=\"gray\"/>\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    s += "<circle cx=\"" + fmt_short(px(truth[i])) + "\" cy=\"" + fmt_short(py(pred[i])) + "\" r=\"1.5\" fill=\"steelblue\"/>\n";
  }
  s += "<text x=\"" + std::to_string(kW / 2) + "\" y=\"" + std::to_string(kH - 8) + "\" text-anchor=\"middle\">true</text>\n";
  s += "<text x=\"10\" y=\"" + std::to_string(kH / 2) + "\">pred</text>\n</svg>\n";
  return s;
}

std::string comparison_svg(const std::vector<ComparisonRow>& rows, const std::string& title) {
  constexpr int kRow = 24, kL = 90, kW = 420;
  const int height = 40 + kRow * static_cast<int>(rows.size());
  std::string s = svg_header(kW, height, title);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int y = 30 + kRow * static_cast<int>(i);
    const double rho = rows[i].metrics.rho_defined ? std::max(0.0, rows[i].metrics.spearman_rho) : 0.0;
    s += "<text x=\"5\" y=\"" + std::to_string(y + 15) + "\">" + rows[i].model + "</text>\n";
    s += "<rect x=\"" + std::to_string(kL) + "\" y=\"" + std::to_string(y + 4) + "\" width=\"" +
         fmt_short((kW - kL - 60) * rho) + "\" height=\"" + std::to_string(kRow - 8) + "\" fill=\"steelblue\"/>\n";
    s += "<text x=\"" + fmt_short(kL + (kW - kL - 60) * rho + 4) + "\" y=\"" + std::to_string(y + 15) + "\">" +
         (rows[i].metrics.rho_defined ? fmt_short(rows[i].metrics.spearman_rho) : std::string("n/a")) + "</text>\n";
  }
  return s + "</svg>\n";
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of no values");
  if (!(p > 0 && p <= 100)) throw Error(ErrorCode::kInvalidArgument, "percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size()) - 1e-9));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

ParetoReport pareto_analysis(const std::vector<ParetoSample>& samples,
                             const std::map<std::string, double>& user_avg_views) {
  if (samples.size() < 5 || user_avg_views.size() < 5) {
    throw Error(ErrorCode::kInvalidArgument, "Pareto analysis needs at least 5 samples and 5 users");
  }
  std::vector<double> scores, views;
  for (const auto& s : samples) scores.push_back(s.score);
  for (const auto& [user, v] : user_avg_views) views.push_back(v);
  ParetoReport r;
  r.image_threshold = percentile_nearest_rank(scores, 80.0);
  r.user_threshold = percentile_nearest_rank(views, 80.0);
  for (double v : views) r.popular_users += v > r.user_threshold ? 1 : 0;
  std::size_t popular_by_popular = 0, popular_by_common = 0;
  for (const auto& s : samples) {
    auto it = user_avg_views.find(s.user);
    if (it == user_avg_views.end()) throw Error(ErrorCode::kUnknownUser, "user '" + s.user + "' has no average views");
    const bool popular_image = s.score > r.image_threshold;
    if (it->second > r.user_threshold) {
      ++r.images_by_popular_users;
      popular_by_popular += popular_image ? 1 : 0;
    } else {
      ++r.images_by_common_users;
      popular_by_common += popular_image ? 1 : 0;
    }
  }
  if (r.images_by_popular_users) {
    r.popular_user_fraction = static_cast<double>(popular_by_popular) / static_cast<double>(r.images_by_popular_users);
  }
  if (r.images_by_common_users) {
    r.common_user_fraction = static_cast<double>(popular_by_common) / static_cast<double>(r.images_by_common_users);
  }
  return r;
}

std::string pareto_csv(const ParetoReport& r) {
  return "image_threshold,user_threshold,popular_users,images_by_popular_users,images_by_common_users,"
         "popular_user_fraction,common_user_fraction\n" +
         fmt(r.image_threshold) + "," + fmt(r.user_threshold) + "," + std::to_string(r.popular_users) + "," +
         std::to_string(r.images_by_popular_users) + "," + std::to_string(r.images_by_common_users) + "," +
         fmt(r.popular_user_fraction) + "," + fmt(r.common_user_fraction) + "\n";
}

}  // namespace popnet
