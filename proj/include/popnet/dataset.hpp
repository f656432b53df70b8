#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace popnet {

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// One social-media post as ingested from a JSONL line.
///
/// Relative `image_path` / `deep_feature_path` values are resolved against the
/// directory of the JSONL file by load_dataset().
struct PostRecord {
  std::string post_id;
  std::string user_id_raw;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> deep_feature_path;
  double avg_views = 0.0;
  std::int64_t group_count = 0;
  double member_count = 0.0;
  std::int64_t image_count = 1;
  std::int64_t tag_count = 0;
  std::int64_t title_len = 0;
  std::int64_t desc_len = 0;
  bool has_people = false;
  std::int64_t comment_count = 0;
  std::int64_t post_date = 0;       // epoch seconds, UTC
  std::int64_t reference_date = 0;  // epoch seconds, UTC (crawl time)
  std::int64_t views = 0;

  bool operator==(const PostRecord&) const = default;
};

struct LabeledSample {
  PostRecord record;
  double score = 0.0;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

template <typename T>
struct Partition {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
};

/// Days online: ceil((reference - post) / 1 day), never below one day.
std::int64_t online_days(std::int64_t post_date, std::int64_t reference_date);

/// log2(max(views, 1) / days) + 1.
double popularity_score(std::int64_t views, std::int64_t post_date,
                        std::int64_t reference_date);

LabeledSample label(const PostRecord& record);
std::vector<LabeledSample> label_all(const std::vector<PostRecord>& records);

/// Parses a JSONL file, one PostRecord per non-blank line. Errors name the
/// 1-based line number and the offending field.
std::vector<PostRecord> load_dataset(const std::filesystem::path& path);
std::vector<PostRecord> parse_dataset(const std::string& text,
                                      const std::filesystem::path& base_dir = {});

/// Serializes records as JSONL. Paths are written relative to `base_dir`
/// when they live beneath it.
std::string serialize_dataset(const std::vector<PostRecord>& records,
                              const std::filesystem::path& base_dir = {});
void write_dataset(const std::filesystem::path& path,
                   const std::vector<PostRecord>& records);

void validate_split_spec(const SplitSpec& spec);

/// Index partition for n items. Seeded shuffle, floor allocation for val and
/// test, remainder to train.
Partition<std::size_t> split_indices(std::size_t n, const SplitSpec& spec);
Partition<LabeledSample> split(const std::vector<LabeledSample>& samples,
                               const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic datasets

inline constexpr int kImageClassCount = 4;
enum class ImageClass { kGradient = 0, kStripes = 1, kPatches = 2, kNoise = 3 };

/// Class effect g(c); zero mean and unit variance over the four classes.
double image_class_effect(ImageClass c);

struct SyntheticSpec {
  std::int64_t n_users = 40;
  std::int64_t n_posts = 2000;
  std::uint64_t seed = 7;
  double noise_sigma = 0.3;
  /// Planted coefficients applied to the min-max normalized 34-d social
  /// vector. Empty selects default_social_weights().
  std::vector<double> social_weights;
  double visual_signal_gain = 0.6;
  /// Added to every planted score so emitted view counts stay well above 1.
  double base_score = 8.0;
  int image_size = 64;
  bool write_deep_sidecars = true;
};

std::vector<double> default_social_weights();

struct SyntheticEntry {
  std::string post_id;
  ImageClass image_class = ImageClass::kGradient;
  double planted_score = 0.0;  // before rounding views to an integer
  double score = 0.0;          // popularity_score of the emitted record
  double social_component = 0.0;
  double visual_component = 0.0;
};

struct SyntheticManifest {
  std::filesystem::path dataset_path;
  std::vector<SyntheticEntry> entries;
  double social_signal_scale = 0.0;  // std of the social component
  std::string content_hash;          // FNV-1a over every emitted file
};

/// Writes images/, deep/ (optional), posts.jsonl and manifest.json under
/// out_dir. Output is a pure function of the SyntheticSpec.
SyntheticManifest generate_synthetic(const SyntheticSpec& spec,
                                     const std::filesystem::path& out_dir);

SyntheticManifest load_manifest(const std::filesystem::path& manifest_path);

}  // namespace popnet
