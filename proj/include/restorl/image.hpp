#pragma once

#include <cstddef>
#include <vector>

namespace restorl {

/// Dense row-major H x W x C intensity grid, the pixel container shared by
/// the whole pipeline. Values are nominally unit-interval; training paths
/// may carry values outside [0,1] (see backbone), every metric entry point
/// clamps first.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  int pixel_count() const { return height * width; }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// Throws std::invalid_argument unless h >= 8, w >= 8 and c in {1, 3}.
void validate_image_shape(int height, int width, int channels);

/// Throws std::invalid_argument on shape mismatch; ctx names the caller.
void require_same_shape(const Image& a, const Image& b, const char* ctx);

Image clamp01(const Image& img);

/// Y = 0.299 R + 0.587 G + 0.114 B. Single-channel input passes through.
Image luminance(const Image& img);

/// Signed Sobel responses plus magnitude; same spatial dims as the source.
struct GradientField {
  int height = 0;
  int width = 0;
  std::vector<double> gx;         // derivative along width (x)
  std::vector<double> gy;         // derivative along height (y)
  std::vector<double> magnitude;  // sqrt(gx^2 + gy^2 + 1e-12)
};

/// 3x3 Sobel with replicate padding at the borders; single-channel input only.
GradientField sobel(const Image& gray);

/// 10*log10(1/MSE) with peak 1.0; exact match returns the 60 dB cap.
double psnr(const Image& y, const Image& t);

/// Mean of local SSIM over non-overlapping 8x8 luminance windows,
/// C1 = (0.01)^2, C2 = (0.03)^2. Requires at least one full window.
double ssim(const Image& y, const Image& t);

inline constexpr double kPsnrCapDb = 60.0;
inline constexpr int kSsimWindow = 8;

}  // namespace restorl
