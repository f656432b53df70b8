#include "popnet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "popnet/binio.hpp"
#include "popnet/error.hpp"

namespace popnet {
namespace {

// Source coordinate and blend weight for one output sample.
struct Tap {
  int lo;
  int hi;
  double w;  // weight of hi
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, src - 1);
    taps[static_cast<std::size_t>(i)] = Tap{lo, hi, s - lo};
  }
  return taps;
}

}  // namespace

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(3 * static_cast<std::size_t>(w) * h, fill) {}

void validate_image(const Image& img) {
  if (img.width < kMinImageSide || img.height < kMinImageSide) {
    throw Error(ErrorCode::kInvalidArgument,
                "image must be at least 16x16, got " + std::to_string(img.width) + "x" +
                    std::to_string(img.height));
  }
  if (img.pixels.size() != 3 * img.pixel_count()) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer length does not match 3*w*h");
  }
}

Image parse_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_ws();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
      if (v > 1'000'000) break;
    }
    if (!any) throw Error(ErrorCode::kIoError, "malformed PPM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(ErrorCode::kIoError, "not a binary PPM (P6)");
  }
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (maxval != 255) throw Error(ErrorCode::kIoError, "only 8-bit PPM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::kIoError, "malformed PPM header");
  }
  ++pos;
  Image img(static_cast<int>(w), static_cast<int>(h));
  if (bytes.size() - pos < img.pixels.size()) throw Error(ErrorCode::kIoError, "truncated PPM data");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
  return img;
}

Image read_ppm(const std::filesystem::path& path) {
  return parse_ppm(read_file_bytes(path));
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  write_file_bytes(path, encode_ppm(img));
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (img.width == width && img.height == height) return img;
  const auto tx = make_taps(img.width, width);
  const auto ty = make_taps(img.height, height);
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      const auto* p00 = img.at(vx.lo, vy.lo);
      const auto* p01 = img.at(vx.hi, vy.lo);
      const auto* p10 = img.at(vx.lo, vy.hi);
      const auto* p11 = img.at(vx.hi, vy.hi);
      auto* o = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + vx.w * (p01[c] - p00[c]);
        const double bot = p10[c] + vx.w * (p11[c] - p10[c]);
        const double v = top + vy.w * (bot - top);
        o[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Plane resize_bilinear(const Plane& plane, int width, int height) {
  if (plane.width == width && plane.height == height) return plane;
  const auto tx = make_taps(plane.width, width);
  const auto ty = make_taps(plane.height, height);
  Plane out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      const double top = plane(vx.lo, vy.lo) + vx.w * (plane(vx.hi, vy.lo) - plane(vx.lo, vy.lo));
      const double bot = plane(vx.lo, vy.hi) + vx.w * (plane(vx.hi, vy.hi) - plane(vx.lo, vy.hi));
      out(x, y) = top + vy.w * (bot - top);
    }
  }
  return out;
}

Plane to_gray(const Image& img) {
  Plane g(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto* p = &img.pixels[3 * i];
    g.values[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return g;
}

CanonicalImage canonicalize(const Image& img) {
  validate_image(img);
  CanonicalImage c;
  c.rgb = resize_bilinear(img, kCanonicalSide, kCanonicalSide);
  c.gray = to_gray(c.rgb);
  return c;
}

}  // namespace popnet
