#pragma once

#include <utility>
#include <vector>

#include "restorl/image.hpp"

namespace restorl {

/// Per-channel 2-D DFT with the DC bin shifted to the grid center
/// (cy = height/2, cx = width/2). Forward transform is unnormalized,
/// the inverse divides by height*width.
struct Spectrum {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> re;
  std::vector<double> im;

  Spectrum() = default;
  Spectrum(int h, int w, int c);

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  /// Sum over all bins of re^2 + im^2 (Parseval energy, = H*W * signal energy).
  double energy() const;
};

Spectrum fft2(const Image& img);
Image ifft2(const Spectrum& spec);

/// Rectangle side in bins for a mask ratio: round-half-up of ratio*dim,
/// clamped to [1, dim].
int mask_bins(double ratio, int dim);

struct BandSplit {
  Spectrum low;
  Spectrum high;
};

/// Splits a spectrum into the centered low-frequency rectangle
/// (round(r_h*H) x round(r_l*W), minimum 1x1) and its exact complement;
/// low + high reproduces the input bin-for-bin. Ratios must lie in (0,1).
BandSplit lowfreq_mask(const Spectrum& spec, double r_h, double r_l);

}  // namespace restorl
