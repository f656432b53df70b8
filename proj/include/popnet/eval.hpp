#pragma once

#include <map>
#include <string>
#include <vector>

namespace popnet {

/// Average ranks, 1-based; tied values share the mean of their rank range.
std::vector<double> average_ranks(const std::vector<double>& v);

/// Pearson correlation of average ranks. Throws DegenerateInput when
/// either input is constant and LengthMismatch on unequal lengths.
double spearman_rho(const std::vector<double>& pred, const std::vector<double>& truth);
double mean_absolute_error(const std::vector<double>& pred, const std::vector<double>& truth);
double mean_squared_error(const std::vector<double>& pred, const std::vector<double>& truth);

struct Metrics {
  double spearman_rho = 0.0;
  bool rho_defined = false;  // false when predictions are constant
  double mae = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

Metrics evaluate(const std::vector<double>& pred, const std::vector<double>& truth);

/// Bins [k*w, (k+1)*w) spanning [-W, W) with W the smallest multiple of w
/// strictly above max|r|.
struct Histogram {
  std::vector<double> edges;  // counts.size() + 1
  std::vector<std::size_t> counts;
};

Histogram error_histogram(const std::vector<double>& residuals, double bin_width = 0.5);

struct ComparisonRow {
  std::string model;
  Metrics metrics;
};

std::string metrics_csv(const std::vector<ComparisonRow>& rows);
std::string histogram_csv(const Histogram& h);
std::string scatter_csv(const std::vector<double>& truth, const std::vector<double>& pred);
std::string histogram_svg(const Histogram& h, const std::string& title);
std::string scatter_svg(const std::vector<double>& truth, const std::vector<double>& pred, const std::string& title);
std::string comparison_svg(const std::vector<ComparisonRow>& rows, const std::string& title);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
double percentile_nearest_rank(std::vector<double> values, double p);

struct ParetoSample {
  std::string user;
  double score = 0.0;
};

struct ParetoReport {
  double image_threshold = 0.0;
  double user_threshold = 0.0;
  std::size_t popular_users = 0;
  std::size_t images_by_popular_users = 0;
  std::size_t images_by_common_users = 0;
  /// Share of images scoring strictly above image_threshold among images by
  /// users strictly above user_threshold (0 when that class is empty).
  double popular_user_fraction = 0.0;
  double common_user_fraction = 0.0;
};

/// 80-20 split of images by score and users by average views.
ParetoReport pareto_analysis(const std::vector<ParetoSample>& samples,
                             const std::map<std::string, double>& user_avg_views);
std::string pareto_csv(const ParetoReport& r);

}  // namespace popnet
