#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "popnet/binio.hpp"
#include "popnet/dataset.hpp"
#include "popnet/error.hpp"
#include "popnet/image.hpp"
#include "popnet/imgfeat.hpp"
#include "popnet/socialfeat.hpp"

namespace popnet {
namespace {

using json = nlohmann::json;

constexpr std::int64_t kReferenceDate = 1464739200;  // 2016-06-01T00:00:00Z
constexpr std::int64_t kMaxAgeSeconds = 730 * kSecondsPerDay;

// Distribution code is written out so the output does not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint8_t byte() { return static_cast<std::uint8_t>(uniform_int(0, 255)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Rgb {
  double r, g, b;
};

Rgb random_colour(Rng& rng) { return {rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)}; }

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void put(Image& img, int x, int y, const Rgb& c) {
  auto* p = img.at(x, y);
  p[0] = to_byte(c.r);
  p[1] = to_byte(c.g);
  p[2] = to_byte(c.b);
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Image render(ImageClass cls, int side, Rng& rng) {
  Image img(side, side);
  switch (cls) {
    case ImageClass::kGradient: {
      const Rgb a = random_colour(rng), b = random_colour(rng);
      const double angle = rng.uniform(0, 2 * std::numbers::pi);
      const double dx = std::cos(angle), dy = std::sin(angle);
      const double half = 0.5 * side * (std::abs(dx) + std::abs(dy));
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const double proj = (x + 0.5 - 0.5 * side) * dx + (y + 0.5 - 0.5 * side) * dy;
          put(img, x, y, mix(a, b, 0.5 + 0.5 * proj / half));
        }
      }
      break;
    }
    case ImageClass::kStripes: {
      const Rgb a = random_colour(rng), b = random_colour(rng);
      const double period = rng.uniform(4.0, 12.0);
      const bool horizontal = rng.uniform() < 0.5;
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const double t = horizontal ? y : x;
          put(img, x, y, std::fmod(t, period) < 0.5 * period ? a : b);
        }
      }
      break;
    }
    case ImageClass::kPatches: {
      const int cells = static_cast<int>(rng.uniform_int(2, 4));
      std::vector<Rgb> colours(static_cast<std::size_t>(cells * cells));
      for (auto& c : colours) c = random_colour(rng);
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          put(img, x, y, colours[static_cast<std::size_t>((y * cells / side) * cells + x * cells / side)]);
        }
      }
      break;
    }
    case ImageClass::kNoise:
      for (auto& v : img.pixels) v = rng.byte();
      break;
  }
  return img;
}

std::vector<double> deep_vector(const std::vector<double>& prototype, Rng& rng) {
  std::vector<double> v(prototype.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = prototype[i] + 0.5 * rng.normal();
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::string post_id_of(std::int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%06lld", static_cast<long long>(i));
  return buf;
}

std::string user_id_of(std::int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%04lld", static_cast<long long>(i));
  return buf;
}

const char* class_name(ImageClass c) {
  switch (c) {
    case ImageClass::kGradient: return "gradient";
    case ImageClass::kStripes: return "stripes";
    case ImageClass::kPatches: return "patches";
    case ImageClass::kNoise: return "noise";
  }
  return "?";
}

ImageClass class_from_name(const std::string& s) {
  for (int i = 0; i < kImageClassCount; ++i) {
    if (s == class_name(static_cast<ImageClass>(i))) return static_cast<ImageClass>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown image class '" + s + "'");
}

double std_dev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double image_class_effect(ImageClass c) {
  static const double kScale = 1.0 / std::sqrt(1.25);
  switch (c) {
    case ImageClass::kGradient: return -1.5 * kScale;
    case ImageClass::kStripes: return -0.5 * kScale;
    case ImageClass::kPatches: return 0.5 * kScale;
    case ImageClass::kNoise: return 1.5 * kScale;
  }
  return 0.0;
}

std::vector<double> default_social_weights() {
  std::vector<double> w(kSocialDim, 0.0);
  // user block: rank, avg_views, group_count, member_count, image_count
  w[0] = 2.6;
  w[1] = -1.6;
  w[2] = 1.6;
  w[3] = 1.3;
  w[4] = -1.4;
  // post block: tags, title, description, has_people, comments
  w[5] = 2.2;
  w[6] = -1.8;
  w[7] = 1.4;
  w[9] = 2.1;
  w[social_layout::kDuration] = -1.3;
  w[social_layout::kDay + 5] = 0.3;
  w[social_layout::kDay + 6] = 0.3;
  return w;
}

SyntheticManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.n_posts < 0 || spec.n_users < 1) throw Error(ErrorCode::kInvalidArgument, "n_users must be positive");
  if (spec.n_posts > 0 && spec.n_posts < spec.n_users) {
    throw Error(ErrorCode::kInvalidArgument, "n_posts must be at least n_users");
  }
  if (spec.noise_sigma < 0) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be non-negative");
  if (spec.image_size < 16) throw Error(ErrorCode::kInvalidArgument, "image_size must be at least 16");
  const std::vector<double> weights = spec.social_weights.empty() ? default_social_weights() : spec.social_weights;
  if (weights.size() != kSocialDim) {
    throw Error(ErrorCode::kDimensionMismatch, "social_weights must have 34 entries");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (spec.write_deep_sidecars) std::filesystem::create_directories(out_dir / "deep", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string());

  Rng rng(spec.seed);
  const auto n = static_cast<std::size_t>(spec.n_posts);

  struct UserProfile {
    double avg_views, member_count;
    std::int64_t group_count, image_count;
  };
  std::vector<UserProfile> users(static_cast<std::size_t>(spec.n_users));
  for (auto& u : users) {
    u.avg_views = std::round(std::exp(5.0 + rng.normal()) * 100.0) / 100.0;
    u.group_count = rng.uniform_int(0, 50);
    u.member_count = std::round(rng.uniform(10.0, 5000.0) * 10.0) / 10.0;
    u.image_count = rng.uniform_int(1, 2000);
  }

  std::vector<PostRecord> records(n);
  std::vector<ImageClass> classes(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    const auto user = i < users.size() ? static_cast<std::int64_t>(i) : rng.uniform_int(0, spec.n_users - 1);
    const auto& u = users[static_cast<std::size_t>(user)];
    r.post_id = post_id_of(static_cast<std::int64_t>(i));
    r.user_id_raw = user_id_of(user);
    r.avg_views = u.avg_views;
    r.group_count = u.group_count;
    r.member_count = u.member_count;
    r.image_count = u.image_count;
    r.tag_count = rng.uniform_int(0, 30);
    r.title_len = rng.uniform_int(0, 80);
    r.desc_len = rng.uniform_int(0, 500);
    r.has_people = rng.uniform() < 0.3;
    r.comment_count = rng.uniform_int(0, 100);
    r.reference_date = kReferenceDate;
    r.post_date = kReferenceDate - rng.uniform_int(kSecondsPerDay, kMaxAgeSeconds);
    r.image_path = out_dir / "images" / (r.post_id + ".ppm");
    if (spec.write_deep_sidecars) r.deep_feature_path = out_dir / "deep" / (r.post_id + ".vgg19.bin");
    classes[i] = static_cast<ImageClass>(rng.uniform_int(0, kImageClassCount - 1));
  }

  // Planted social component on the min-max normalized social matrix.
  std::vector<double> social_component(n, 0.0);
  if (n > 0) {
    const UserRankTable ranks = build_user_ranks(records);
    std::vector<std::vector<double>> social(n);
    for (std::size_t i = 0; i < n; ++i) social[i] = extract_social(records[i], ranks).flatten();
    for (std::size_t j = 0; j < kSocialDim; ++j) {
      double lo = social[0][j], hi = social[0][j];
      for (const auto& s : social) {
        lo = std::min(lo, s[j]);
        hi = std::max(hi, s[j]);
      }
      const double range = hi - lo;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = range > 0 ? (social[i][j] - lo) / range : 0.0;
        social_component[i] += weights[j] * v;
      }
    }
  }

  std::vector<std::vector<double>> prototypes(kImageClassCount, std::vector<double>(kDeepDim));
  for (auto& p : prototypes) {
    for (auto& v : p) v = rng.normal() / std::sqrt(static_cast<double>(kDeepDim)) * 8.0;
  }

  SyntheticManifest manifest;
  manifest.dataset_path = out_dir / "posts.jsonl";
  manifest.entries.resize(n);
  std::uint64_t hash = fnv1a64(std::string_view{});

  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    const double visual = spec.visual_signal_gain * image_class_effect(classes[i]);
    const double planted = spec.base_score + social_component[i] + visual + spec.noise_sigma * rng.normal();
    const auto days = online_days(r.post_date, r.reference_date);
    r.views = std::max<std::int64_t>(0, std::llround(std::exp2(planted - 1.0) * static_cast<double>(days)));

    const std::string ppm = encode_ppm(render(classes[i], spec.image_size, rng));
    write_file_bytes(r.image_path, ppm);
    hash = fnv1a64(ppm, hash);
    if (spec.write_deep_sidecars) {
      write_deep_feature(*r.deep_feature_path, deep_vector(prototypes[static_cast<std::size_t>(classes[i])], rng));
      hash = fnv1a64(read_file_bytes(*r.deep_feature_path), hash);
    }

    auto& e = manifest.entries[i];
    e.post_id = r.post_id;
    e.image_class = classes[i];
    e.planted_score = planted;
    e.score = popularity_score(r.views, r.post_date, r.reference_date);
    e.social_component = social_component[i];
    e.visual_component = visual;
  }

  const std::string jsonl = serialize_dataset(records, out_dir);
  write_file_bytes(manifest.dataset_path, jsonl);
  hash = fnv1a64(jsonl, hash);
  manifest.social_signal_scale = std_dev(social_component);
  manifest.content_hash = hex64(hash);

  json m;
  m["dataset"] = "posts.jsonl";
  m["content_hash"] = manifest.content_hash;
  m["social_signal_scale"] = manifest.social_signal_scale;
  m["spec"] = {{"n_users", spec.n_users},
               {"n_posts", spec.n_posts},
               {"seed", spec.seed},
               {"noise_sigma", spec.noise_sigma},
               {"social_weights", weights},
               {"visual_signal_gain", spec.visual_signal_gain},
               {"base_score", spec.base_score},
               {"image_size", spec.image_size},
               {"write_deep_sidecars", spec.write_deep_sidecars}};
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"post_id", e.post_id},
                       {"image_class", class_name(e.image_class)},
                       {"planted_score", e.planted_score},
                       {"score", e.score},
                       {"social_component", e.social_component},
                       {"visual_component", e.visual_component}});
  }
  m["entries"] = std::move(entries);
  write_file_bytes(out_dir / "manifest.json", m.dump(1) + "\n");
  return manifest;
}

SyntheticManifest load_manifest(const std::filesystem::path& manifest_path) {
  json m;
  try {
    m = json::parse(read_file_bytes(manifest_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIoError, manifest_path.string() + ": " + e.what());
  }
  SyntheticManifest out;
  try {
    out.dataset_path = manifest_path.parent_path() / m.at("dataset").get<std::string>();
    out.content_hash = m.at("content_hash").get<std::string>();
    out.social_signal_scale = m.at("social_signal_scale").get<double>();
    for (const auto& e : m.at("entries")) {
      SyntheticEntry s;
      s.post_id = e.at("post_id").get<std::string>();
      s.image_class = class_from_name(e.at("image_class").get<std::string>());
      s.planted_score = e.at("planted_score").get<double>();
      s.score = e.at("score").get<double>();
      s.social_component = e.at("social_component").get<double>();
      s.visual_component = e.at("visual_component").get<double>();
      out.entries.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMissingField, manifest_path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace popnet
