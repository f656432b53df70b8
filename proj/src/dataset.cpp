#include "popnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "popnet/binio.hpp"
#include "popnet/error.hpp"

namespace popnet {
namespace {

using nlohmann::json;

std::string at_line(std::size_t line, const std::string& field) {
  return "line " + std::to_string(line) + ", field '" + field + "'";
}

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorCode::kMissingField, at_line(line, field));
  }
  return *it;
}

std::int64_t get_count(const json& obj, const char* field, std::size_t line, std::int64_t min_value) {
  const json& v = require(obj, field, line);
  std::int64_t out = 0;
  if (v.is_number_integer()) {
    out = v.get<std::int64_t>();
  } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
    out = static_cast<std::int64_t>(v.get<double>());
  } else {
    throw Error(ErrorCode::kInvalidArgument, at_line(line, field) + " must be an integer");
  }
  if (out < min_value) {
    throw Error(ErrorCode::kInvalidArgument,
                at_line(line, field) + " must be >= " + std::to_string(min_value));
  }
  return out;
}

double get_real(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_number()) throw Error(ErrorCode::kInvalidArgument, at_line(line, field) + " must be a number");
  const double out = v.get<double>();
  if (!std::isfinite(out) || out < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, at_line(line, field) + " must be finite and >= 0");
  }
  return out;
}

std::int64_t get_timestamp(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d) return static_cast<std::int64_t>(d);
  }
  throw Error(ErrorCode::kBadTimestamp, at_line(line, field) + " is not integer epoch seconds");
}

std::string get_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw Error(ErrorCode::kInvalidArgument, at_line(line, field) + " must be a string");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

std::string relativize(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (base.empty()) return p.generic_string();
  auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

}  // namespace

std::int64_t online_days(std::int64_t post_date, std::int64_t reference_date) {
  const std::int64_t seconds = std::max<std::int64_t>(0, reference_date - post_date);
  const std::int64_t days = (seconds + kSecondsPerDay - 1) / kSecondsPerDay;
  return std::max<std::int64_t>(1, days);
}

double popularity_score(std::int64_t views, std::int64_t post_date,
                        std::int64_t reference_date) {
  const double p = static_cast<double>(std::max<std::int64_t>(views, 1));
  const double d = static_cast<double>(online_days(post_date, reference_date));
  return std::log2(p / d) + 1.0;
}

LabeledSample label(const PostRecord& record) {
  return LabeledSample{record, popularity_score(record.views, record.post_date, record.reference_date)};
}

std::vector<LabeledSample> label_all(const std::vector<PostRecord>& records) {
  std::vector<LabeledSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(label(r));
  return out;
}

std::vector<PostRecord> parse_dataset(const std::string& text,
                                      const std::filesystem::path& base_dir) {
  std::vector<PostRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kIoError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::kIoError, "line " + std::to_string(line_no) + ": not an object");

    PostRecord r;
    r.post_id = get_string(obj, "post_id", line_no);
    r.user_id_raw = get_string(obj, "user_id_raw", line_no);
    r.image_path = resolve(base_dir, get_string(obj, "image_path", line_no));
    if (auto it = obj.find("deep_feature_path"); it != obj.end() && !it->is_null()) {
      r.deep_feature_path = resolve(base_dir, it->get<std::string>());
    }
    r.avg_views = get_real(obj, "avg_views", line_no);
    r.group_count = get_count(obj, "group_count", line_no, 0);
    r.member_count = get_real(obj, "member_count", line_no);
    r.image_count = get_count(obj, "image_count", line_no, 1);
    r.tag_count = get_count(obj, "tag_count", line_no, 0);
    r.title_len = get_count(obj, "title_len", line_no, 0);
    r.desc_len = get_count(obj, "desc_len", line_no, 0);
    const json& people = require(obj, "has_people", line_no);
    if (people.is_boolean()) {
      r.has_people = people.get<bool>();
    } else if (people.is_number_integer() && (people == 0 || people == 1)) {
      r.has_people = people.get<int>() == 1;
    } else {
      throw Error(ErrorCode::kInvalidArgument, at_line(line_no, "has_people") + " must be boolean");
    }
    r.comment_count = get_count(obj, "comment_count", line_no, 0);
    r.post_date = get_timestamp(obj, "post_date", line_no);
    r.reference_date = get_timestamp(obj, "reference_date", line_no);
    if (r.post_date > r.reference_date) {
      throw Error(ErrorCode::kBadTimestamp, at_line(line_no, "post_date") + " is after reference_date");
    }
    r.views = get_count(obj, "views", line_no, 0);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PostRecord> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file_bytes(path), path.parent_path());
}

std::string serialize_dataset(const std::vector<PostRecord>& records,
                              const std::filesystem::path& base_dir) {
  std::string out;
  for (const auto& r : records) {
    json obj = json::object();
    obj["post_id"] = r.post_id;
    obj["user_id_raw"] = r.user_id_raw;
    obj["image_path"] = relativize(base_dir, r.image_path);
    obj["deep_feature_path"] =
        r.deep_feature_path ? json(relativize(base_dir, *r.deep_feature_path)) : json(nullptr);
    obj["avg_views"] = r.avg_views;
    obj["group_count"] = r.group_count;
    obj["member_count"] = r.member_count;
    obj["image_count"] = r.image_count;
    obj["tag_count"] = r.tag_count;
    obj["title_len"] = r.title_len;
    obj["desc_len"] = r.desc_len;
    obj["has_people"] = r.has_people;
    obj["comment_count"] = r.comment_count;
    obj["post_date"] = r.post_date;
    obj["reference_date"] = r.reference_date;
    obj["views"] = r.views;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<PostRecord>& records) {
  write_file_bytes(path, serialize_dataset(records, path.parent_path()));
}

void validate_split_spec(const SplitSpec& spec) {
  if (spec.train < 0 || spec.val < 0 || spec.test < 0) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must be non-negative");
  }
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must sum to 1");
  }
}

Partition<std::size_t> split_indices(std::size_t n, const SplitSpec& spec) {
  validate_split_spec(spec);
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "cannot split an empty sample list");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  // Fisher-Yates with an explicit modulus draw keeps the permutation
  // independent of the standard library's distribution implementation.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    std::swap(order[i], order[draw % bound]);
  }
  // Small slack so 0.2 * 10 does not floor to 1.
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test + 1e-9));
  const std::size_t n_train = n - n_val - n_test;

  Partition<std::size_t> p;
  p.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  p.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return p;
}

Partition<LabeledSample> split(const std::vector<LabeledSample>& samples, const SplitSpec& spec) {
  const auto idx = split_indices(samples.size(), spec);
  Partition<LabeledSample> out;
  for (auto i : idx.train) out.train.push_back(samples[i]);
  for (auto i : idx.val) out.val.push_back(samples[i]);
  for (auto i : idx.test) out.test.push_back(samples[i]);
  return out;
}

}  // namespace popnet
