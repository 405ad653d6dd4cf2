#include "restorl/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace restorl {

Image::Image(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
  validate_image_shape(h, w, c);
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

void validate_image_shape(int height, int width, int channels) {
  if (height < 8 || width < 8) {
    throw std::invalid_argument("image too small: " + std::to_string(height) + "x" +
                                std::to_string(width) + " (minimum 8x8)");
  }
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("channel count must be 1 or 3, got " +
                                std::to_string(channels));
  }
}

void require_same_shape(const Image& a, const Image& b, const char* ctx) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(ctx) + ": shape mismatch " +
                                std::to_string(a.height) + "x" + std::to_string(a.width) +
                                "x" + std::to_string(a.channels) + " vs " +
                                std::to_string(b.height) + "x" + std::to_string(b.width) +
                                "x" + std::to_string(b.channels));
  }
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image luminance(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) {
    throw std::invalid_argument("luminance: channel count must be 1 or 3");
  }
  Image out(img.height, img.width, 1);
  const double* src = img.data.data();
  double* dst = out.data.data();
  const int n = img.pixel_count();
  for (int p = 0; p < n; ++p) {
    dst[p] = 0.299 * src[3 * p] + 0.587 * src[3 * p + 1] + 0.114 * src[3 * p + 2];
  }
  return out;
}

GradientField sobel(const Image& gray) {
  if (gray.channels != 1) {
    throw std::invalid_argument("sobel: expects a single-channel image");
  }
  const int h = gray.height;
  const int w = gray.width;
  GradientField f;
  f.height = h;
  f.width = w;
  f.gx.resize(static_cast<std::size_t>(h) * w);
  f.gy.resize(static_cast<std::size_t>(h) * w);
  f.magnitude.resize(static_cast<std::size_t>(h) * w);

  auto px = [&](int y, int x) {
    // replicate padding
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return gray.data[static_cast<std::size_t>(y) * w + x];
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tl = px(y - 1, x - 1), tc = px(y - 1, x), tr = px(y - 1, x + 1);
      const double ml = px(y, x - 1), mr = px(y, x + 1);
      const double bl = px(y + 1, x - 1), bc = px(y + 1, x), br = px(y + 1, x + 1);
      const double gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      const double gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      f.gx[i] = gx;
      f.gy[i] = gy;
      f.magnitude[i] = std::sqrt(gx * gx + gy * gy + 1e-12);
    }
  }
  return f;
}

double psnr(const Image& y, const Image& t) {
  require_same_shape(y, t, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double d = y.data[i] - t.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(y.data.size());
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& y, const Image& t) {
  require_same_shape(y, t, "ssim");
  if (y.height < kSsimWindow || y.width < kSsimWindow) {
    throw std::invalid_argument("ssim: image smaller than one 8x8 window");
  }
  const Image ly = luminance(y);
  const Image lt = luminance(t);

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const int rows = y.height / kSsimWindow;
  const int cols = y.width / kSsimWindow;
  constexpr double inv_n = 1.0 / (kSsimWindow * kSsimWindow);

  double total = 0.0;
  for (int by = 0; by < rows; ++by) {
    for (int bx = 0; bx < cols; ++bx) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int dy = 0; dy < kSsimWindow; ++dy) {
        for (int dx = 0; dx < kSsimWindow; ++dx) {
          mu_a += ly.at(by * kSsimWindow + dy, bx * kSsimWindow + dx, 0);
          mu_b += lt.at(by * kSsimWindow + dy, bx * kSsimWindow + dx, 0);
        }
      }
      mu_a *= inv_n;
      mu_b *= inv_n;
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int dy = 0; dy < kSsimWindow; ++dy) {
        for (int dx = 0; dx < kSsimWindow; ++dx) {
          const double da = ly.at(by * kSsimWindow + dy, bx * kSsimWindow + dx, 0) - mu_a;
          const double db = lt.at(by * kSsimWindow + dy, bx * kSsimWindow + dx, 0) - mu_b;
          var_a += da * da;
          var_b += db * db;
          cov += da * db;
        }
      }
      var_a *= inv_n;
      var_b *= inv_n;
      cov *= inv_n;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
    }
  }
  return total / (static_cast<double>(rows) * cols);
}

}  // namespace restorl
