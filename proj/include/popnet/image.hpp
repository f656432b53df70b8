#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace popnet {

inline constexpr int kMinImageSide = 16;
inline constexpr int kCanonicalSide = 224;

/// Row-major interleaved RGB, 8 bits per channel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::uint8_t* at(int x, int y) { return &pixels[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[3 * (static_cast<std::size_t>(y) * width + x)];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  bool operator==(const Image&) const = default;
};

/// Single-channel double plane, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& operator()(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double operator()(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Throws InvalidArgument when dimensions are below kMinImageSide or the
/// pixel buffer has the wrong length.
void validate_image(const Image& img);

Image read_ppm(const std::filesystem::path& path);
Image parse_ppm(std::string_view bytes);
std::string encode_ppm(const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);

/// Bilinear resampling with half-pixel centres and edge clamping.
Image resize_bilinear(const Image& img, int width, int height);
Plane resize_bilinear(const Plane& plane, int width, int height);

/// 0.299 R + 0.587 G + 0.114 B.
Plane to_gray(const Image& img);

struct CanonicalImage {
  Image rgb;   // 224 x 224
  Plane gray;  // luminance of rgb
};

CanonicalImage canonicalize(const Image& img);

}  // namespace popnet
