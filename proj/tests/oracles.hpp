#pragma once

// Test-only oracles, deliberately independent of the library implementations
// they check: quadrature instead of digamma closed forms, libm lgamma instead
// of the Lanczos fit, straight-line scalar recomputation instead of the
// vectorized ops.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "restorl/image.hpp"

namespace oracle {

// --- tanh-sinh (double exponential) quadrature of Beta expectations ---
// Works in log space so the x^(a-1) endpoint singularities of shapes as
// small as 1e-2 keep their tail mass instead of underflowing. Everything
// here leans on libm lgamma only, never on the library's special functions.

inline double log_sigmoid(double z) {  // ln(1 / (1 + e^-z))
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

// integral over (0,1) of p_{a,b}(x) * factor(lp, lnx, ln1mx) dx, where lp is
// the Beta log-density at the node
inline double beta_weighted_integral(
    double a, double b, const std::function<double(double, double, double)>& factor,
    double tol = 1e-9) {
  const double log_b = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double t_max = 7.5;

  auto eval = [&](double t) {
    const double u = 0.5 * M_PI * std::sinh(t);
    const double lnx = log_sigmoid(2.0 * u);      // x = sigmoid(2u)
    const double ln1mx = log_sigmoid(-2.0 * u);
    // dx/dt = (pi/4) cosh(t) sech^2(u)
    const double ln_sech =
        std::log(2.0) - std::fabs(u) - std::log1p(std::exp(-2.0 * std::fabs(u)));
    const double log_w = std::log(M_PI / 4.0) + std::log(std::cosh(t)) + 2.0 * ln_sech;
    const double lp = (a - 1.0) * lnx + (b - 1.0) * ln1mx - log_b;
    const double mass = std::exp(lp + log_w);
    if (mass == 0.0 || !std::isfinite(mass)) return 0.0;
    const double v = mass * factor(lp, lnx, ln1mx);
    return std::isfinite(v) ? v : 0.0;
  };

  double h = 0.75;
  double sum = eval(0.0);
  for (double t = h; t <= t_max; t += h) sum += eval(t) + eval(-t);
  double integral = sum * h;

  for (int level = 0; level < 11; ++level) {
    h *= 0.5;
    double extra = 0.0;
    for (double t = h; t <= t_max; t += 2.0 * h) extra += eval(t) + eval(-t);
    sum += extra;
    const double refined = sum * h;
    if (level > 2 && std::fabs(refined - integral) <= tol * std::max(1.0, std::fabs(refined))) {
      return refined;
    }
    integral = refined;
  }
  return integral;
}

// Beta log-density via libm lgamma only.
inline double beta_logpdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

inline double beta_normalization(double a, double b) {
  return beta_weighted_integral(a, b, [](double, double, double) { return 1.0; });
}

// Differential entropy by quadrature: -int p ln p.
inline double beta_entropy_quadrature(double a, double b) {
  return beta_weighted_integral(a, b, [](double lp, double, double) { return -lp; });
}

// KL(p||q) for two Beta densities by quadrature.
inline double beta_kl_quadrature(double a1, double b1, double a2, double b2) {
  const double log_b2 = std::lgamma(a2) + std::lgamma(b2) - std::lgamma(a2 + b2);
  return beta_weighted_integral(a1, b1, [&](double lp, double lnx, double ln1mx) {
    const double lq = (a2 - 1.0) * lnx + (b2 - 1.0) * ln1mx - log_b2;
    return lp - lq;
  });
}

// --- central finite differences over a flat parameter vector ---
inline std::vector<double> fd_gradient(std::vector<double> params,
                                       const std::function<double(const std::vector<double>&)>& f,
                                       double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double fp = f(params);
    params[i] = orig - h;
    const double fm = f(params);
    params[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// max_i |a_i - b_i| / (max(|a_i|, |b_i|) + atol/rtol floor)
inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                          double atol = 1e-7) {
  if (a.size() != b.size()) throw std::runtime_error("max_rel_err: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), atol});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

// --- deterministic random helpers for fixtures ---
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline restorl::Image random_image(int h, int w, int c, std::mt19937_64& rng, double lo = 0.0,
                                   double hi = 1.0) {
  restorl::Image img(h, w, c);
  for (double& v : img.data) v = uniform(rng, lo, hi);
  return img;
}

// --- straight-line scalar references ---

// replicate-padded 3x3 Sobel, written out longhand
struct RefSobel {
  std::vector<double> gx, gy, mag;
};

inline RefSobel ref_sobel(const restorl::Image& gray) {
  const int h = gray.height, w = gray.width;
  RefSobel out;
  out.gx.resize(static_cast<std::size_t>(h) * w);
  out.gy.resize(static_cast<std::size_t>(h) * w);
  out.mag.resize(static_cast<std::size_t>(h) * w);
  auto px = [&](int y, int x) {
    if (y < 0) y = 0;
    if (y >= h) y = h - 1;
    if (x < 0) x = 0;
    if (x >= w) x = w - 1;
    return gray.data[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
      const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          gx += kx[dy + 1][dx + 1] * px(y + dy, x + dx);
          gy += ky[dy + 1][dx + 1] * px(y + dy, x + dx);
        }
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.gx[i] = gx;
      out.gy[i] = gy;
      out.mag[i] = std::sqrt(gx * gx + gy * gy + 1e-12);
    }
  }
  return out;
}

inline std::vector<double> ref_luminance(const restorl::Image& img) {
  std::vector<double> out(static_cast<std::size_t>(img.height) * img.width);
  for (int p = 0; p < img.pixel_count(); ++p) {
    if (img.channels == 1) {
      out[p] = img.data[p];
    } else {
      out[p] = 0.299 * img.data[3 * static_cast<std::size_t>(p)] +
               0.587 * img.data[3 * static_cast<std::size_t>(p) + 1] +
               0.114 * img.data[3 * static_cast<std::size_t>(p) + 2];
    }
  }
  return out;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// naive O(N^4) DFT energy of the centered low-frequency rectangle, used to
// cross-check the fft-based feature
inline double ref_low_energy_ratio(const std::vector<double>& lum, int h, int w, double ratio) {
  auto bins = [](double r, int dim) {
    const int n = static_cast<int>(std::floor(r * dim + 0.5));
    return std::max(1, std::min(dim, n));
  };
  const int mh = bins(ratio, h), mw = bins(ratio, w);
  const int cy = h / 2, cx = w / 2;
  const int y0 = cy - mh / 2, x0 = cx - mw / 2;
  double low = 0.0, total = 0.0;
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      double re = 0.0, im = 0.0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double phase =
              -2.0 * M_PI * (static_cast<double>(ky) * y / h + static_cast<double>(kx) * x / w);
          re += lum[static_cast<std::size_t>(y) * w + x] * std::cos(phase);
          im += lum[static_cast<std::size_t>(y) * w + x] * std::sin(phase);
        }
      }
      const double e = re * re + im * im;
      total += e;
      const int sy = (ky + cy) % h;  // shifted position of this raw bin
      const int sx = (kx + cx) % w;
      if (sy >= y0 && sy < y0 + mh && sx >= x0 && sx < x0 + mw) low += e;
    }
  }
  return total > 1e-12 ? low / total : 1.0;
}

}  // namespace oracle
