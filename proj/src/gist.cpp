#include "popnet/gist.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace popnet {
namespace {

constexpr double kRadialWidth = 0.35;   // controls the radial bandwidth
constexpr double kFinestFrequency = 0.3;
constexpr double kScaleStep = 1.85;
constexpr double kAngularWidth = 16.0 * kGistOrientations * kGistOrientations / (32.0 * 32.0);

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Forward and inverse complex plans of one fixed size. Only execution with
// the new-array interface happens concurrently, which FFTW allows.
class FftPair {
 public:
  explicit FftPair(int side) : side_(side) {
    std::lock_guard lock(fftw_planner_mutex());
    const auto n = static_cast<std::size_t>(side) * side;
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    forward_ = fftw_plan_dft_2d(side, side, a, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_ = fftw_plan_dft_2d(side, side, a, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
  }
  ~FftPair() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  void forward(std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) const {
    fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }
  void inverse(std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) const {
    fftw_execute_dft(inverse_, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  int side_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

const FftPair& shared_fft(int side) {
  static const FftPair fft(side);
  return fft;
}

}  // namespace

GaborBank::GaborBank() : side_(kGistSide + 2 * kGistPad) {
  const auto n = static_cast<std::size_t>(side_) * side_;
  filters_.reserve(static_cast<std::size_t>(kGistScales * kGistOrientations));
  for (int s = 0; s < kGistScales; ++s) {
    const double f0 = centre_frequency(s);
    for (int o = 0; o < kGistOrientations; ++o) {
      const double theta0 = centre_orientation(o);
      std::vector<double> g(n);
      for (int ky = 0; ky < side_; ++ky) {
        const double fy = frequency_of_index(ky);
        for (int kx = 0; kx < side_; ++kx) {
          const double fx = frequency_of_index(kx);
          const double fr = std::hypot(fx, fy);
          double dt = std::atan2(fy, fx) - theta0;
          if (dt < -std::numbers::pi) dt += 2.0 * std::numbers::pi;
          if (dt > std::numbers::pi) dt -= 2.0 * std::numbers::pi;
          const double radial = fr / f0 - 1.0;
          g[static_cast<std::size_t>(ky) * side_ + kx] =
              std::exp(-10.0 * kRadialWidth * radial * radial -
                       2.0 * kAngularWidth * std::numbers::pi * dt * dt);
        }
      }
      g[0] = 0.0;
      filters_.push_back(std::move(g));
    }
  }
}

double GaborBank::centre_frequency(int scale) const {
  return kFinestFrequency / std::pow(kScaleStep, scale);
}

double GaborBank::centre_orientation(int orientation) const {
  return std::numbers::pi * orientation / kGistOrientations;
}

double GaborBank::frequency_of_index(int k) const {
  const int signed_k = k < side_ / 2 ? k : k - side_;
  return static_cast<double>(signed_k) / side_;
}

const GaborBank& shared_gabor_bank() {
  static const GaborBank bank;
  return bank;
}

Plane pad_symmetric(const Plane& plane, int pad) {
  Plane out(plane.width + 2 * pad, plane.height + 2 * pad);
  auto mirror = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  for (int y = 0; y < out.height; ++y) {
    const int sy = mirror(y - pad, plane.height);
    for (int x = 0; x < out.width; ++x) out(x, y) = plane(mirror(x - pad, plane.width), sy);
  }
  return out;
}

std::vector<double> gist(const Plane& gray, const GaborBank& bank) {
  const Plane small = resize_bilinear(gray, kGistSide, kGistSide);
  const Plane padded = pad_symmetric(small, kGistPad);
  const int side = bank.grid_side();
  const auto n = static_cast<std::size_t>(side) * side;
  const FftPair& fft = shared_fft(side);

  std::vector<std::complex<double>> buf(n), spectrum(n), filtered(n), response(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = padded.values[i];
  fft.forward(buf, spectrum);

  constexpr int kBlock = kGistSide / kGistGrid;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> out(kGistDim, 0.0);
  for (int s = 0; s < kGistScales; ++s) {
    for (int o = 0; o < kGistOrientations; ++o) {
      const auto& g = bank.transfer(s, o);
      for (std::size_t i = 0; i < n; ++i) filtered[i] = spectrum[i] * g[i];
      fft.inverse(filtered, response);
      const std::size_t base = static_cast<std::size_t>(s * kGistOrientations + o) * kGistGrid * kGistGrid;
      for (int by = 0; by < kGistGrid; ++by) {
        for (int bx = 0; bx < kGistGrid; ++bx) {
          double sum = 0.0;
          for (int y = 0; y < kBlock; ++y) {
            const std::size_t row = static_cast<std::size_t>(kGistPad + by * kBlock + y) * side;
            for (int x = 0; x < kBlock; ++x) {
              sum += std::abs(response[row + static_cast<std::size_t>(kGistPad + bx * kBlock + x)]);
            }
          }
          out[base + static_cast<std::size_t>(by * kGistGrid + bx)] = sum * inv_n / (kBlock * kBlock);
        }
      }
    }
  }
  return out;
}

}  // namespace popnet
