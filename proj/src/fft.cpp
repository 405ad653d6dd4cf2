#include "restorl/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace restorl {

namespace {

// FFTW's planner is not thread-safe; executing a cached plan on fresh
// buffers is. Plans are created with FFTW_UNALIGNED so they accept any
// heap buffer.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int h, int w, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    const Key key{h, w, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> scratch_in(static_cast<std::size_t>(h) * w);
    std::vector<fftw_complex> scratch_out(static_cast<std::size_t>(h) * w);
    fftw_plan plan = fftw_plan_dft_2d(h, w, scratch_in.data(), scratch_out.data(), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fft2: planner failed for " + std::to_string(h) +
                                        "x" + std::to_string(w));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  struct Key {
    int h, w, sign;
    bool operator<(const Key& o) const {
      if (h != o.h) return h < o.h;
      if (w != o.w) return w < o.w;
      return sign < o.sign;
    }
  };
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

}  // namespace

Spectrum::Spectrum(int h, int w, int c) : height(h), width(w), channels(c) {
  re.assign(static_cast<std::size_t>(h) * w * c, 0.0);
  im.assign(static_cast<std::size_t>(h) * w * c, 0.0);
}

double Spectrum::energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < re.size(); ++i) e += re[i] * re[i] + im[i] * im[i];
  return e;
}

Spectrum fft2(const Image& img) {
  const int h = img.height, w = img.width, ch = img.channels;
  Spectrum out(h, w, ch);
  fftw_plan plan = PlanCache::instance().get(h, w, FFTW_FORWARD);
  const int cy = h / 2, cx = w / 2;
  std::vector<fftw_complex> in(static_cast<std::size_t>(h) * w);
  std::vector<fftw_complex> raw(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        in[static_cast<std::size_t>(y) * w + x][0] = img.at(y, x, c);
        in[static_cast<std::size_t>(y) * w + x][1] = 0.0;
      }
    }
    fftw_execute_dft(plan, in.data(), raw.data());
    // shift DC to the center: centered[j] = raw[(j - cy) mod h]
    for (int y = 0; y < h; ++y) {
      const int sy = (y - cy + h) % h;
      for (int x = 0; x < w; ++x) {
        const int sx = (x - cx + w) % w;
        const std::size_t src = static_cast<std::size_t>(sy) * w + sx;
        out.re[out.index(y, x, c)] = raw[src][0];
        out.im[out.index(y, x, c)] = raw[src][1];
      }
    }
  }
  return out;
}

Image ifft2(const Spectrum& spec) {
  const int h = spec.height, w = spec.width, ch = spec.channels;
  Image out(h, w, ch);
  fftw_plan plan = PlanCache::instance().get(h, w, FFTW_BACKWARD);
  const int cy = h / 2, cx = w / 2;
  const double scale = 1.0 / (static_cast<double>(h) * w);
  std::vector<fftw_complex> in(static_cast<std::size_t>(h) * w);
  std::vector<fftw_complex> raw(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < ch; ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = (y - cy + h) % h;
      for (int x = 0; x < w; ++x) {
        const int sx = (x - cx + w) % w;
        const std::size_t dst = static_cast<std::size_t>(sy) * w + sx;
        in[dst][0] = spec.re[spec.index(y, x, c)];
        in[dst][1] = spec.im[spec.index(y, x, c)];
      }
    }
    fftw_execute_dft(plan, in.data(), raw.data());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(y, x, c) = raw[static_cast<std::size_t>(y) * w + x][0] * scale;
      }
    }
  }
  return out;
}

int mask_bins(double ratio, int dim) {
  const int n = static_cast<int>(std::floor(ratio * dim + 0.5));  // round half up
  return std::max(1, std::min(dim, n));
}

BandSplit lowfreq_mask(const Spectrum& spec, double r_h, double r_l) {
  if (!(r_h > 0.0 && r_h < 1.0 && r_l > 0.0 && r_l < 1.0)) {
    throw std::invalid_argument("lowfreq_mask: ratios must lie in (0,1), got r_h=" +
                                std::to_string(r_h) + " r_l=" + std::to_string(r_l));
  }
  const int h = spec.height, w = spec.width;
  const int mh = mask_bins(r_h, h);
  const int mw = mask_bins(r_l, w);
  const int y0 = h / 2 - mh / 2;
  const int x0 = w / 2 - mw / 2;

  BandSplit split{Spectrum(h, w, spec.channels), Spectrum(h, w, spec.channels)};
  for (int y = 0; y < h; ++y) {
    const bool in_rows = (y >= y0 && y < y0 + mh);
    for (int x = 0; x < w; ++x) {
      const bool inside = in_rows && x >= x0 && x < x0 + mw;
      for (int c = 0; c < spec.channels; ++c) {
        const std::size_t i = spec.index(y, x, c);
        if (inside) {
          split.low.re[i] = spec.re[i];
          split.low.im[i] = spec.im[i];
        } else {
          split.high.re[i] = spec.re[i];
          split.high.im[i] = spec.im[i];
        }
      }
    }
  }
  return split;
}

}  // namespace restorl
