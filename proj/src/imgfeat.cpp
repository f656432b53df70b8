#include "popnet/imgfeat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "popnet/binio.hpp"
#include "popnet/error.hpp"

namespace popnet {
namespace {

void l1_normalize(std::vector<double>& h) {
  const double total = std::accumulate(h.begin(), h.end(), 0.0);
  if (total > 0) {
    for (auto& v : h) v /= total;
  }
}

double entropy_bits(const std::array<std::size_t, 256>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double e = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    e -= p * std::log2(p);
  }
  return e;
}

void require_same_size(const Plane& gray, const SubjectMask& mask) {
  if (gray.width != mask.width || gray.height != mask.height) {
    throw Error(ErrorCode::kDimensionMismatch, "mask and image sizes differ");
  }
}

double srgb_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3 * kDelta * kDelta) + 4.0 / 29.0;
}

std::array<std::uint8_t, 58> compute_uniform_codes() {
  std::array<std::uint8_t, 58> codes{};
  std::size_t n = 0;
  for (int c = 0; c < 256; ++c) {
    const auto code = static_cast<std::uint8_t>(c);
    const auto rotated = static_cast<std::uint8_t>(std::rotl(code, 1));
    if (std::popcount(static_cast<unsigned>(code ^ rotated)) <= 2) codes[n++] = code;
  }
  return codes;
}

std::array<int, 256> compute_lbp_bins() {
  std::array<int, 256> bins;
  bins.fill(58);
  const auto& codes = uniform_lbp_codes();
  for (std::size_t i = 0; i < codes.size(); ++i) bins[codes[i]] = static_cast<int>(i);
  return bins;
}

}  // namespace

std::vector<double> VisualFeatures::flatten() const {
  std::vector<double> v;
  v.reserve(kVisualDim);
  for (const auto* block : {&color, &lbp, &gist, &aesthetic, &deep}) {
    v.insert(v.end(), block->begin(), block->end());
  }
  if (v.size() != kVisualDim) throw Error(ErrorCode::kShapeMismatch, "visual blocks do not sum to 4710");
  return v;
}

std::vector<double> color_histogram(const Image& img) {
  std::vector<double> h(kColorDim, 0.0);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.pixels[3 * i];
    h[static_cast<std::size_t>((p[0] >> 6) * 8 + (p[1] >> 6) * 2 + (p[2] >> 7))] += 1.0;
  }
  l1_normalize(h);
  return h;
}

const std::array<std::uint8_t, 58>& uniform_lbp_codes() {
  static const auto codes = compute_uniform_codes();
  return codes;
}

int lbp_bin(std::uint8_t code) {
  static const auto bins = compute_lbp_bins();
  return bins[code];
}

std::uint8_t lbp_code(const Plane& gray, int x, int y) {
  static constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  static constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  const double centre = gray(x, y);
  unsigned code = 0;
  for (int i = 0; i < 8; ++i) {
    if (gray(x + kDx[i], y + kDy[i]) >= centre) code |= 1u << i;
  }
  return static_cast<std::uint8_t>(code);
}

std::vector<double> lbp_uniform(const Plane& gray) {
  std::vector<double> h(kLbpDim, 0.0);
  for (int y = 1; y + 1 < gray.height; ++y) {
    for (int x = 1; x + 1 < gray.width; ++x) h[static_cast<std::size_t>(lbp_bin(lbp_code(gray, x, y)))] += 1.0;
  }
  l1_normalize(h);
  return h;
}

std::size_t SubjectMask::subject_count() const {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
}

Plane laplacian(const Plane& gray) {
  Plane out(gray.width, gray.height);
  auto px = [&](int x, int y) {
    return gray(std::clamp(x, 0, gray.width - 1), std::clamp(y, 0, gray.height - 1));
  };
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      out(x, y) = px(x - 1, y) + px(x + 1, y) + px(x, y - 1) + px(x, y + 1) - 4.0 * gray(x, y);
    }
  }
  return out;
}

Plane box_smooth(const Plane& plane, int size) {
  const int r = size / 2;
  Plane tmp(plane.width, plane.height);
  Plane out(plane.width, plane.height);
  const double inv = 1.0 / size;
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < plane.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += plane(std::clamp(x + k, 0, plane.width - 1), y);
      tmp(x, y) = s * inv;
    }
  }
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < plane.width; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += tmp(x, std::clamp(y + k, 0, plane.height - 1));
      out(x, y) = s * inv;
    }
  }
  return out;
}

double otsu_threshold(const std::vector<double>& values) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return hi;
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  const double width = (hi - lo) / kBins;
  for (double v : values) {
    const int b = std::min(kBins - 1, static_cast<int>((v - lo) / width));
    hist[static_cast<std::size_t>(b)] += 1.0;
  }
  const double total = static_cast<double>(values.size());
  double sum_all = 0.0;
  for (int b = 0; b < kBins; ++b) sum_all += b * hist[static_cast<std::size_t>(b)];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_bin = 0;
  for (int b = 0; b < kBins - 1; ++b) {
    w0 += hist[static_cast<std::size_t>(b)];
    sum0 += b * hist[static_cast<std::size_t>(b)];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = b;
    }
  }
  return lo + (best_bin + 1) * width;
}

SubjectMask make_mask(int width, int height, std::vector<std::uint8_t> inside) {
  SubjectMask m;
  m.width = width;
  m.height = height;
  m.inside = std::move(inside);
  m.subject_area_fraction = static_cast<double>(m.subject_count()) / static_cast<double>(m.inside.size());
  return m;
}

SubjectMask centre_mask(int width, int height) {
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(width) * height, 0);
  const int x0 = width / 3, x1 = width - width / 3;
  const int y0 = height / 3, y1 = height - height / 3;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) inside[static_cast<std::size_t>(y) * width + x] = 1;
  }
  auto m = make_mask(width, height, std::move(inside));
  m.fallback = true;
  return m;
}

SubjectMask full_mask(int width, int height) {
  return make_mask(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1));
}

SubjectMask subject_split(const Plane& gray) {
  Plane energy = laplacian(gray);
  for (auto& v : energy.values) v *= v;
  energy = box_smooth(energy, 9);
  const auto [lo, hi] = std::minmax_element(energy.values.begin(), energy.values.end());
  if (*hi - *lo < 1e-9) return centre_mask(gray.width, gray.height);
  const double t = otsu_threshold(energy.values);
  std::vector<std::uint8_t> inside(energy.values.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    inside[i] = energy.values[i] > t ? 1 : 0;
    count += inside[i];
  }
  if (count == 0) return centre_mask(gray.width, gray.height);
  return make_mask(gray.width, gray.height, std::move(inside));
}

double clarity_contrast(const Plane& gray, const SubjectMask& mask) {
  require_same_size(gray, mask);
  const Plane lap = laplacian(gray);
  double all = 0.0, subject = 0.0;
  std::size_t n_subject = 0;
  for (std::size_t i = 0; i < lap.values.size(); ++i) {
    const double a = std::abs(lap.values[i]);
    all += a;
    if (mask.inside[i]) {
      subject += a;
      ++n_subject;
    }
  }
  const double mean_all = all / static_cast<double>(lap.values.size());
  const double mean_subject = n_subject ? subject / static_cast<double>(n_subject) : 0.0;
  if (mean_subject < 1e-9 && mean_all < 1e-9) return 1.0;
  return mean_subject / (mean_all + 1e-12);
}

double hue_count(const Image& img, const HueCountParams& params) {
  if (!(params.beta > 0.0 && params.beta < 1.0) || params.bins < 1) {
    throw Error(ErrorCode::kInvalidArgument, "hue count needs 0 < beta < 1 and bins >= 1");
  }
  std::vector<double> hist(static_cast<std::size_t>(params.bins), 0.0);
  bool any = false;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.pixels[3 * i];
    const double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    const double s = mx > 0 ? delta / mx : 0.0;
    if (!(s > params.saturation_min) || mx < params.value_min || mx > params.value_max) continue;
    double h;
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0) h += 360.0;
    const int bin = std::min(params.bins - 1, static_cast<int>(h / 360.0 * params.bins));
    hist[static_cast<std::size_t>(bin)] += 1.0;
    any = true;
  }
  if (!any) return static_cast<double>(params.bins);
  const double m = *std::max_element(hist.begin(), hist.end());
  const auto occupied = std::count_if(hist.begin(), hist.end(), [&](double v) { return v > params.beta * m; });
  return static_cast<double>(params.bins - occupied);
}

double brightness_contrast(const Plane& gray, const SubjectMask& mask) {
  require_same_size(gray, mask);
  double s = 0.0, b = 0.0;
  std::size_t ns = 0, nb = 0;
  for (std::size_t i = 0; i < gray.values.size(); ++i) {
    if (mask.inside[i]) {
      s += gray.values[i];
      ++ns;
    } else {
      b += gray.values[i];
      ++nb;
    }
  }
  if (nb == 0 || ns == 0) return 0.0;
  return std::abs(s / static_cast<double>(ns) - b / static_cast<double>(nb)) / 255.0;
}

std::array<double, 3> srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_linear(r8 / 255.0);
  const double g = srgb_linear(g8 / 255.0);
  const double b = srgb_linear(b8 / 255.0);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.0;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 6> color_entropy(const Image& img) {
  std::array<std::array<std::size_t, 256>, 6> hist{};
  auto bin = [](double v) { return static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(v)), 0, 255)); };
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.pixels[3 * i];
    ++hist[0][p[0]];
    ++hist[1][p[1]];
    ++hist[2][p[2]];
    const auto lab = srgb_to_lab(p[0], p[1], p[2]);
    ++hist[3][bin(lab[0] * 2.55)];
    ++hist[4][bin(lab[1] + 128.0)];
    ++hist[5][bin(lab[2] + 128.0)];
  }
  std::array<double, 6> out{};
  for (std::size_t c = 0; c < 6; ++c) out[c] = entropy_bits(hist[c], img.pixel_count());
  return out;
}

double composition_geometry(const SubjectMask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      sx += x + 0.5;
      sy += y + 0.5;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "composition needs a nonempty subject mask");
  const double cx = sx / static_cast<double>(n), cy = sy / static_cast<double>(n);
  const double w = mask.width, h = mask.height;
  double best = std::numeric_limits<double>::infinity();
  for (double px : {w / 3.0, 2.0 * w / 3.0}) {
    for (double py : {h / 3.0, 2.0 * h / 3.0}) best = std::min(best, std::hypot(cx - px, cy - py));
  }
  return best / std::hypot(w, h);
}

double background_simplicity(const Image& img, const SubjectMask& mask) {
  if (img.width != mask.width || img.height != mask.height) {
    throw Error(ErrorCode::kDimensionMismatch, "mask and image sizes differ");
  }
  std::vector<std::size_t> hist(4096, 0);
  std::size_t nb = 0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (mask.inside[i]) continue;
    const auto* p = &img.pixels[3 * i];
    ++hist[static_cast<std::size_t>((p[0] >> 4) * 256 + (p[1] >> 4) * 16 + (p[2] >> 4))];
    ++nb;
  }
  if (nb == 0) return 0.0;
  const double m = static_cast<double>(*std::max_element(hist.begin(), hist.end()));
  const auto s = std::count_if(hist.begin(), hist.end(),
                               [&](std::size_t c) { return static_cast<double>(c) >= 0.01 * m; });
  return 1.0 - static_cast<double>(s) / 4096.0;
}

std::vector<double> aesthetic_vector(const CanonicalImage& img) {
  const SubjectMask mask = subject_split(img.gray);
  std::vector<double> v;
  v.reserve(kAestheticDim);
  v.push_back(clarity_contrast(img.gray, mask));
  v.push_back(hue_count(img.rgb) / 20.0);
  v.push_back(brightness_contrast(img.gray, mask));
  for (double e : color_entropy(img.rgb)) v.push_back(e / 8.0);
  v.push_back(composition_geometry(mask));
  v.push_back(background_simplicity(img.rgb, mask));
  return v;
}

std::vector<double> load_deep_feature(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() != kDeepDim * 4) {
    throw Error(ErrorCode::kWrongLength, path.string() + " holds " + std::to_string(bytes.size() / 4) +
                                             " floats, expected 4096");
  }
  std::vector<double> out(kDeepDim);
  for (std::size_t i = 0; i < kDeepDim; ++i) {
    std::uint32_t bits = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[4 * i + b])) << (8 * b);
    }
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

void write_deep_feature(const std::filesystem::path& path, const std::vector<double>& values) {
  if (values.size() != kDeepDim) throw Error(ErrorCode::kWrongLength, "deep feature must have 4096 values");
  std::string out;
  out.reserve(kDeepDim * 4);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  write_file_bytes(path, out);
}

std::vector<double> stub_deep_feature(const std::string& post_id, std::uint64_t seed) {
  std::mt19937_64 rng(fnv1a64(post_id) ^ (seed * 0x9e3779b97f4a7c15ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(kDeepDim);
  double norm = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

VisualFeatures extract_visual(const Image& img, const std::vector<double>& deep) {
  if (deep.size() != kDeepDim) throw Error(ErrorCode::kWrongLength, "deep feature must have 4096 values");
  const CanonicalImage c = canonicalize(img);
  VisualFeatures f;
  f.color = color_histogram(c.rgb);
  f.lbp = lbp_uniform(c.gray);
  f.gist = gist(c.gray);
  f.aesthetic = aesthetic_vector(c);
  f.deep = deep;
  return f;
}

VisualFeatures extract_visual(const PostRecord& record, DeepSource source, std::uint64_t stub_seed) {
  std::vector<double> deep;
  if (source == DeepSource::kSidecar) {
    if (!record.deep_feature_path) {
      throw Error(ErrorCode::kMissingField, "post '" + record.post_id + "' has no deep_feature_path");
    }
    deep = load_deep_feature(*record.deep_feature_path);
  } else {
    deep = stub_deep_feature(record.post_id, stub_seed);
  }
  return extract_visual(read_ppm(record.image_path), deep);
}

std::string visual_extractor_version() { return "popnet-visual-v1"; }

}  // namespace popnet
