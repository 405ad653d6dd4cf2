#include "restorl/backbone.hpp"

#include <cmath>
#include <stdexcept>

#include "restorl/fft.hpp"

namespace restorl {

BackboneParams BackboneParams::init(int channels) {
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("backbone channels must be 1 or 3");
  }
  BackboneParams p;
  p.w_low.assign(channels, 1.0);
  p.w_high.assign(channels, 0.5);
  p.s.assign(channels, 1.0);
  p.b.assign(channels, 0.0);
  return p;
}

Image restore(const Image& x, const Action& a, const BackboneParams& p,
              RestoreTrace* trace) {
  if (p.channels() != x.channels) {
    throw std::invalid_argument("restore: backbone channel count does not match input");
  }
  const Spectrum spec = fft2(x);
  const BandSplit split = lowfreq_mask(spec, a.r_h, a.r_l);
  const Image low_band = ifft2(split.low);
  const Image high_band = ifft2(split.high);

  Image out(x.height, x.width, x.channels);
  for (int c = 0; c < x.channels; ++c) {
    const int n = x.pixel_count();
    for (int pix = 0; pix < n; ++pix) {
      const std::size_t i = static_cast<std::size_t>(pix) * x.channels + c;
      const double intermediate = p.w_low[c] * low_band.data[i] + p.w_high[c] * high_band.data[i];
      const double latent = p.s[c] * x.data[i] + p.b[c];
      out.data[i] = a.g_f * latent + a.g_o * intermediate;
    }
  }
  if (trace) {
    trace->low_band = low_band;
    trace->high_band = high_band;
  }
  return out;
}

Image restore_deterministic(const Image& x, const BackboneParams& p,
                            const PolicyParams& policy) {
  const BetaHeadOutput out = head_forward(policy, extract_features(x));
  return restore(x, deterministic_action(out), p);
}

BackboneGrads BackboneGrads::zeros(int channels) {
  BackboneGrads g;
  g.w_low.assign(channels, 0.0);
  g.w_high.assign(channels, 0.0);
  g.s.assign(channels, 0.0);
  g.b.assign(channels, 0.0);
  return g;
}

void BackboneGrads::accumulate(const BackboneGrads& other, double scale) {
  for (std::size_t c = 0; c < w_low.size(); ++c) {
    w_low[c] += scale * other.w_low[c];
    w_high[c] += scale * other.w_high[c];
    s[c] += scale * other.s[c];
    b[c] += scale * other.b[c];
  }
}

bool BackboneGrads::finite() const {
  for (const std::vector<double>* v : {&w_low, &w_high, &s, &b}) {
    for (double x : *v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

BackboneGrads backbone_grads(const Image& x, const Action& a, const RestoreTrace& trace,
                             const Image& upstream) {
  require_same_shape(x, upstream, "backbone_grads");
  require_same_shape(x, trace.low_band, "backbone_grads(trace)");
  BackboneGrads g = BackboneGrads::zeros(x.channels);
  const int n = x.pixel_count();
  for (int c = 0; c < x.channels; ++c) {
    double gw_low = 0.0, gw_high = 0.0, gs = 0.0, gb = 0.0;
    for (int pix = 0; pix < n; ++pix) {
      const std::size_t i = static_cast<std::size_t>(pix) * x.channels + c;
      const double u = upstream.data[i];
      gw_low += u * trace.low_band.data[i];
      gw_high += u * trace.high_band.data[i];
      gs += u * x.data[i];
      gb += u;
    }
    g.w_low[c] = a.g_o * gw_low;
    g.w_high[c] = a.g_o * gw_high;
    g.s[c] = a.g_f * gs;
    g.b[c] = a.g_f * gb;
  }
  return g;
}

std::vector<double> flatten(const BackboneParams& p) {
  std::vector<double> out;
  out.insert(out.end(), p.w_low.begin(), p.w_low.end());
  out.insert(out.end(), p.w_high.begin(), p.w_high.end());
  out.insert(out.end(), p.s.begin(), p.s.end());
  out.insert(out.end(), p.b.begin(), p.b.end());
  return out;
}

std::vector<double> flatten(const BackboneGrads& g) {
  std::vector<double> out;
  out.insert(out.end(), g.w_low.begin(), g.w_low.end());
  out.insert(out.end(), g.w_high.begin(), g.w_high.end());
  out.insert(out.end(), g.s.begin(), g.s.end());
  out.insert(out.end(), g.b.begin(), g.b.end());
  return out;
}

void unflatten(const std::vector<double>& flat, BackboneParams& p) {
  const std::size_t c = p.w_low.size();
  if (flat.size() != 4 * c) {
    throw std::invalid_argument("backbone unflatten: size mismatch");
  }
  for (std::size_t i = 0; i < c; ++i) {
    p.w_low[i] = flat[i];
    p.w_high[i] = flat[c + i];
    p.s[i] = flat[2 * c + i];
    p.b[i] = flat[3 * c + i];
  }
}

nlohmann::json backbone_to_json(const BackboneParams& p) {
  return nlohmann::json{
      {"channels", p.channels()}, {"w_low", p.w_low}, {"w_high", p.w_high}, {"s", p.s}, {"b", p.b}};
}

BackboneParams backbone_from_json(const nlohmann::json& j) {
  BackboneParams p;
  j.at("w_low").get_to(p.w_low);
  j.at("w_high").get_to(p.w_high);
  j.at("s").get_to(p.s);
  j.at("b").get_to(p.b);
  const auto c = p.w_low.size();
  if (j.at("channels") != c || p.w_high.size() != c || p.s.size() != c || p.b.size() != c) {
    throw std::runtime_error("backbone checkpoint shape mismatch");
  }
  return p;
}

}  // namespace restorl
