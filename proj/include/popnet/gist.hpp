#pragma once

#include <complex>
#include <vector>

#include "popnet/image.hpp"

namespace popnet {

inline constexpr int kGistSide = 128;
inline constexpr int kGistPad = 16;
inline constexpr int kGistScales = 4;
inline constexpr int kGistOrientations = 8;
inline constexpr int kGistGrid = 4;
inline constexpr std::size_t kGistDim =
    static_cast<std::size_t>(kGistScales) * kGistOrientations * kGistGrid * kGistGrid;

/// Frequency-domain Gabor bank in the style of the Oliva-Torralba GIST
/// descriptor: radial Gaussian around a centre frequency per scale, angular
/// Gaussian around a centre orientation. The DC coefficient of every filter
/// is forced to zero.
///
/// Filters live on a (kGistSide + 2*kGistPad)^2 grid. Built once and shared
/// read-only across threads.
class GaborBank {
 public:
  GaborBank();

  int grid_side() const { return side_; }
  /// Centre frequency in cycles/pixel of scale s (s = 0 is the finest).
  double centre_frequency(int scale) const;
  /// Centre orientation in radians of the spectral lobe (0 = +x axis,
  /// pi/2 = +y axis, image rows growing downwards).
  double centre_orientation(int orientation) const;
  /// Orientation whose spectral lobe sits on the vertical frequency axis,
  /// i.e. the filter that responds to horizontal stripes.
  int horizontal_structure_orientation() const { return kGistOrientations / 2; }

  /// Transfer function of filter (scale, orientation), row-major over the
  /// unshifted FFT grid.
  const std::vector<double>& transfer(int scale, int orientation) const {
    return filters_[static_cast<std::size_t>(scale * kGistOrientations + orientation)];
  }

  /// Signed frequency (cycles/pixel) of FFT index k on this grid.
  double frequency_of_index(int k) const;

 private:
  int side_;
  std::vector<std::vector<double>> filters_;
};

const GaborBank& shared_gabor_bank();

/// Symmetric (mirror) padding by kGistPad on each side.
Plane pad_symmetric(const Plane& plane, int pad);

/// 512-d descriptor. The grayscale plane is resized to 128x128, mirror
/// padded, filtered in the frequency domain, and the magnitude of each
/// response is averaged over a 4x4 grid of 32x32 blocks.
/// Layout: ((scale * 8 + orientation) * 16 + block_row * 4 + block_col).
std::vector<double> gist(const Plane& gray, const GaborBank& bank = shared_gabor_bank());

}  // namespace popnet
