#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "popnet/dataset.hpp"
#include "popnet/gist.hpp"
#include "popnet/image.hpp"

namespace popnet {

inline constexpr std::size_t kColorDim = 32;
inline constexpr std::size_t kLbpDim = 59;
inline constexpr std::size_t kAestheticDim = 11;
inline constexpr std::size_t kDeepDim = 4096;
inline constexpr std::size_t kVisualDim = kColorDim + kLbpDim + kGistDim + kAestheticDim + kDeepDim;
static_assert(kVisualDim == 4710);

// Offsets into the 4710-d visual vector.
namespace visual_layout {
inline constexpr std::size_t kColor = 0;
inline constexpr std::size_t kLbp = kColor + kColorDim;
inline constexpr std::size_t kGist = kLbp + kLbpDim;
inline constexpr std::size_t kAesthetic = kGist + kGistDim;
inline constexpr std::size_t kDeep = kAesthetic + kAestheticDim;
}  // namespace visual_layout

struct VisualFeatures {
  std::vector<double> color;      // 32
  std::vector<double> lbp;        // 59
  std::vector<double> gist;       // 512
  std::vector<double> aesthetic;  // 11
  std::vector<double> deep;       // 4096

  std::vector<double> flatten() const;
};

// ---- low-level descriptors ------------------------------------------------

/// Joint RGB histogram with 4 levels for R and G and 2 for B;
/// bin = (r >> 6) * 8 + (g >> 6) * 2 + (b >> 7). L1-normalized.
std::vector<double> color_histogram(const Image& img);

/// The 58 8-bit codes with at most two circular 0/1 transitions, ascending.
const std::array<std::uint8_t, 58>& uniform_lbp_codes();
/// Histogram bin of an 8-bit LBP code: index among uniform codes, or 58.
int lbp_bin(std::uint8_t code);
/// Radius-1 LBP code at interior pixel (x, y); bit i is set when neighbour i
/// (clockwise from top-left) is >= the centre.
std::uint8_t lbp_code(const Plane& gray, int x, int y);
/// Uniform LBP histogram over interior pixels, L1-normalized.
std::vector<double> lbp_uniform(const Plane& gray);

// ---- subject / background split -----------------------------------------

struct SubjectMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> inside;  // 1 = subject
  double subject_area_fraction = 0.0;
  bool fallback = false;

  bool at(int x, int y) const { return inside[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t subject_count() const;
  std::size_t background_count() const { return inside.size() - subject_count(); }
};

/// 3x3 Laplacian (4-neighbour) with replicated borders.
Plane laplacian(const Plane& gray);
/// Box filter of odd size with replicated borders.
Plane box_smooth(const Plane& plane, int size);
/// Otsu threshold over a 256-bin histogram spanning [min, max] of values.
double otsu_threshold(const std::vector<double>& values);

/// Subject = pixels whose 9x9-smoothed squared Laplacian exceeds the Otsu
/// threshold. A flat energy map (or an empty result) selects the centre
/// rectangle covering the middle third in each direction.
SubjectMask subject_split(const Plane& gray);
SubjectMask centre_mask(int width, int height);
SubjectMask full_mask(int width, int height);
SubjectMask make_mask(int width, int height, std::vector<std::uint8_t> inside);

// ---- aesthetic measures --------------------------------------------------

struct HueCountParams {
  double beta = 0.05;
  int bins = 20;
  double saturation_min = 0.2;
  double value_min = 0.15;
  double value_max = 0.95;
};

/// Mean |Laplacian| over the subject divided by the mean over the whole
/// image; 1.0 when both are below 1e-9.
double clarity_contrast(const Plane& gray, const SubjectMask& mask);
/// bins - |{i : H(i) > beta * max H}| over pixels with usable hue; `bins`
/// when no pixel qualifies.
double hue_count(const Image& img, const HueCountParams& params = {});
/// |mean luminance(subject) - mean luminance(background)| / 255, 0 when the
/// background is empty.
double brightness_contrast(const Plane& gray, const SubjectMask& mask);
/// Shannon entropies (bits) of R, G, B, L, a, b over 256-bin histograms.
std::array<double, 6> color_entropy(const Image& img);
/// Distance from the subject centroid to the nearest rule-of-thirds
/// intersection, divided by the image diagonal.
double composition_geometry(const SubjectMask& mask);
/// 1 - S/4096 where S counts 16x16x16 background colour bins holding at
/// least 1% of the fullest bin; 0 when the background is empty.
double background_simplicity(const Image& img, const SubjectMask& mask);

/// sRGB (8-bit) to CIE Lab under D65.
std::array<double, 3> srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// [clarity, hue_count/20, brightness, entropies/8 (R,G,B,L,a,b),
///  composition, simplicity].
std::vector<double> aesthetic_vector(const CanonicalImage& img);

// ---- deep features --------------------------------------------------------

enum class DeepSource { kSidecar, kStub };

/// Exactly 4096 little-endian float32 values.
std::vector<double> load_deep_feature(const std::filesystem::path& path);
void write_deep_feature(const std::filesystem::path& path, const std::vector<double>& values);
/// Unit-norm pseudo-features seeded from a hash of post_id.
std::vector<double> stub_deep_feature(const std::string& post_id, std::uint64_t seed);

// ---- assembly --------------------------------------------------------------

VisualFeatures extract_visual(const Image& img, const std::vector<double>& deep);
/// Loads the record's image and deep feature (sidecar or stub).
VisualFeatures extract_visual(const PostRecord& record, DeepSource source,
                              std::uint64_t stub_seed = 0);

/// Identifies the extractor implementation; part of feature cache keys.
std::string visual_extractor_version();

}  // namespace popnet
