#include "restorl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "restorl/fft.hpp"
#include "restorl/special.hpp"

namespace restorl {

namespace {

double softplus(double x) {
  // overflow-safe: ln(1 + e^x)
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// uniform in the open interval (0,1), straight from the engine bits
double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// standard normal via Marsaglia polar; the pair's second value is discarded
double standard_normal(std::mt19937_64& rng) {
  while (true) {
    const double u = 2.0 * uniform_open(rng) - 1.0;
    const double v = 2.0 * uniform_open(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

// Marsaglia-Tsang Gamma(shape, 1); shapes below one go through the
// boost identity Gamma(a) = Gamma(a+1) * U^(1/a).
double sample_gamma(double shape, std::mt19937_64& rng) {
  if (shape < 1.0) {
    const double u = uniform_open(rng);
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = standard_normal(rng);
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = uniform_open(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void forward_one(const MlpHead& head, const std::array<double, kFeatureDim>& f,
                 double* alpha2, double* beta2, HeadTrace* trace) {
  std::array<double, kHiddenDim> hidden;
  for (int i = 0; i < kHiddenDim; ++i) {
    double acc = head.b1[i];
    for (int j = 0; j < kFeatureDim; ++j) acc += head.w1[i * kFeatureDim + j] * f[j];
    hidden[i] = std::tanh(acc);
  }
  for (int o = 0; o < 4; ++o) {
    double acc = head.b2[o];
    for (int i = 0; i < kHiddenDim; ++i) acc += head.w2[o * kHiddenDim + i] * hidden[i];
    if (!std::isfinite(acc)) {
      throw std::runtime_error("head_forward: non-finite pre-activation");
    }
    const double sp = softplus(acc);
    const double clamped = std::clamp(sp, kBetaParamFloor, kBetaParamCap);
    // outputs alternate (alpha, beta) per action pair
    if (o % 2 == 0) {
      alpha2[o / 2] = clamped;
    } else {
      beta2[o / 2] = clamped;
    }
    if (trace) {
      trace->raw[o] = acc;
      trace->saturated[o] = (sp != clamped);
    }
  }
  if (trace) trace->hidden = hidden;
}

void backprop_one(const MlpHead& head, const std::array<double, kFeatureDim>& f,
                  const HeadTrace& trace, const double* d_alpha2, const double* d_beta2,
                  MlpHead& grads, double scale) {
  std::array<double, 4> d_raw{};
  for (int o = 0; o < 4; ++o) {
    const double upstream = (o % 2 == 0) ? d_alpha2[o / 2] : d_beta2[o / 2];
    // zero subgradient where the clamp is pinned
    d_raw[o] = trace.saturated[o] ? 0.0 : upstream * sigmoid(trace.raw[o]);
  }
  std::array<double, kHiddenDim> d_hidden{};
  for (int o = 0; o < 4; ++o) {
    grads.b2[o] += scale * d_raw[o];
    for (int i = 0; i < kHiddenDim; ++i) {
      grads.w2[o * kHiddenDim + i] += scale * d_raw[o] * trace.hidden[i];
      d_hidden[i] += d_raw[o] * head.w2[o * kHiddenDim + i];
    }
  }
  for (int i = 0; i < kHiddenDim; ++i) {
    const double d_pre = d_hidden[i] * (1.0 - trace.hidden[i] * trace.hidden[i]);
    grads.b1[i] += scale * d_pre;
    for (int j = 0; j < kFeatureDim; ++j) {
      grads.w1[i * kFeatureDim + j] += scale * d_pre * f[j];
    }
  }
}

void append(std::vector<double>& out, const std::vector<double>& v) {
  out.insert(out.end(), v.begin(), v.end());
}

void head_sizes_check(const MlpHead& h, const char* what) {
  if (h.w1.size() != kHiddenDim * kFeatureDim || h.b1.size() != kHiddenDim ||
      h.w2.size() != 4 * kHiddenDim || h.b2.size() != 4) {
    throw std::invalid_argument(std::string(what) + ": bad head shapes");
  }
}

}  // namespace

MlpHead MlpHead::zeros() {
  MlpHead h;
  h.w1.assign(kHiddenDim * kFeatureDim, 0.0);
  h.b1.assign(kHiddenDim, 0.0);
  h.w2.assign(4 * kHiddenDim, 0.0);
  h.b2.assign(4, 0.0);
  return h;
}

PolicyParams init_policy(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
  const double bias = std::log(std::exp(2.0) - 1.0);  // softplus^-1(2)
  PolicyParams p{MlpHead::zeros(), MlpHead::zeros()};
  for (MlpHead* head : {&p.rate, &p.fuse}) {
    for (double& w : head->w1) w = (2.0 * uniform_open(rng) - 1.0) * bound;
    for (double& b : head->b2) b = bias;
  }
  return p;
}

std::array<double, kFeatureDim> extract_features(const Image& x) {
  const Image lum = luminance(x);
  const int n = lum.pixel_count();

  double mean_lum = 0.0;
  for (double v : lum.data) mean_lum += v;
  mean_lum /= n;
  double var_lum = 0.0;
  for (double v : lum.data) var_lum += (v - mean_lum) * (v - mean_lum);
  const double std_lum = std::sqrt(var_lum / n);

  const GradientField g = sobel(lum);
  double mean_gx = 0.0, mean_gy = 0.0, mean_mag = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_gx += std::fabs(g.gx[i]);
    mean_gy += std::fabs(g.gy[i]);
    mean_mag += g.magnitude[i];
  }
  mean_gx /= n;
  mean_gy /= n;
  mean_mag /= n;

  const Spectrum spec = fft2(lum);
  const BandSplit split = lowfreq_mask(spec, 0.25, 0.25);
  const double total_energy = spec.energy();
  const double low_ratio = total_energy > 1e-12 ? split.low.energy() / total_energy : 1.0;

  double rb_gap = 0.0;
  double spread = 0.0;
  if (x.channels == 3) {
    double mean_r = 0.0, mean_b = 0.0;
    for (int p = 0; p < n; ++p) {
      const double r = x.data[3 * static_cast<std::size_t>(p)];
      const double gch = x.data[3 * static_cast<std::size_t>(p) + 1];
      const double b = x.data[3 * static_cast<std::size_t>(p) + 2];
      mean_r += r;
      mean_b += b;
      spread += std::max({r, gch, b}) - std::min({r, gch, b});
    }
    rb_gap = std::fabs(mean_r - mean_b) / n;
    spread /= n;
  }

  std::array<double, kFeatureDim> f = {mean_lum, std_lum,   mean_gx, mean_gy,
                                       mean_mag, low_ratio, rb_gap,  spread};
  for (double& v : f) v = std::clamp(v, 0.0, 4.0);
  return f;
}

BetaHeadOutput head_forward(const PolicyParams& params,
                            const std::array<double, kFeatureDim>& features,
                            PolicyTrace* trace) {
  head_sizes_check(params.rate, "head_forward(rate)");
  head_sizes_check(params.fuse, "head_forward(fuse)");
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("head_forward: non-finite feature");
  }
  BetaHeadOutput out;
  if (trace) trace->features = features;
  // rate head fills (h, l), fuse head fills (f, o)
  forward_one(params.rate, features, &out.alpha[0], &out.beta[0],
              trace ? &trace->rate : nullptr);
  forward_one(params.fuse, features, &out.alpha[2], &out.beta[2],
              trace ? &trace->fuse : nullptr);
  return out;
}

double beta_sample(double alpha, double beta, std::mt19937_64& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("beta_sample: shapes must be positive");
  }
  const double x = sample_gamma(alpha, rng);
  const double y = sample_gamma(beta, rng);
  const double value = x / (x + y);
  return std::clamp(value, kActionFloor, kActionCeil);
}

Action sample_action(const BetaHeadOutput& out, std::mt19937_64& rng) {
  std::array<double, kActionDim> a;
  for (int k = 0; k < kActionDim; ++k) a[k] = beta_sample(out.alpha[k], out.beta[k], rng);
  return Action::from_array(a);
}

double joint_logprob(const BetaHeadOutput& out, const Action& action) {
  const auto a = action.as_array();
  double lp = 0.0;
  for (int k = 0; k < kActionDim; ++k) {
    if (!(a[k] > 0.0 && a[k] < 1.0)) {
      throw std::invalid_argument("joint_logprob: action component outside (0,1)");
    }
    lp += (out.alpha[k] - 1.0) * std::log(a[k]) + (out.beta[k] - 1.0) * std::log1p(-a[k]) -
          log_beta(out.alpha[k], out.beta[k]);
  }
  if (!std::isfinite(lp)) throw std::runtime_error("joint_logprob: non-finite result");
  return lp;
}

double entropy(const BetaHeadOutput& out) {
  double h = 0.0;
  for (int k = 0; k < kActionDim; ++k) {
    const double a = out.alpha[k], b = out.beta[k];
    h += log_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
         (a + b - 2.0) * digamma(a + b);
  }
  return h;
}

Action deterministic_action(const BetaHeadOutput& out) {
  std::array<double, kActionDim> a;
  for (int k = 0; k < kActionDim; ++k) a[k] = out.alpha[k] / (out.alpha[k] + out.beta[k]);
  return Action::from_array(a);
}

void BetaGrads::accumulate(const BetaGrads& other, double scale) {
  for (int k = 0; k < kActionDim; ++k) {
    d_alpha[k] += scale * other.d_alpha[k];
    d_beta[k] += scale * other.d_beta[k];
  }
}

BetaGrads logprob_grads(const BetaHeadOutput& out, const Action& action) {
  const auto a = action.as_array();
  BetaGrads g;
  for (int k = 0; k < kActionDim; ++k) {
    const double psi_sum = digamma(out.alpha[k] + out.beta[k]);
    g.d_alpha[k] = std::log(a[k]) - digamma(out.alpha[k]) + psi_sum;
    g.d_beta[k] = std::log1p(-a[k]) - digamma(out.beta[k]) + psi_sum;
  }
  return g;
}

BetaGrads entropy_grads(const BetaHeadOutput& out) {
  BetaGrads g;
  for (int k = 0; k < kActionDim; ++k) {
    const double a = out.alpha[k], b = out.beta[k];
    const double tri_sum = (a + b - 2.0) * trigamma(a + b);
    g.d_alpha[k] = -(a - 1.0) * trigamma(a) + tri_sum;
    g.d_beta[k] = -(b - 1.0) * trigamma(b) + tri_sum;
  }
  return g;
}

void PolicyGrads::scale(double s) {
  for (MlpHead* h : {&rate, &fuse}) {
    for (double& v : h->w1) v *= s;
    for (double& v : h->b1) v *= s;
    for (double& v : h->w2) v *= s;
    for (double& v : h->b2) v *= s;
  }
}

void PolicyGrads::accumulate(const PolicyGrads& other, double s) {
  auto add = [s](std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
  };
  add(rate.w1, other.rate.w1);
  add(rate.b1, other.rate.b1);
  add(rate.w2, other.rate.w2);
  add(rate.b2, other.rate.b2);
  add(fuse.w1, other.fuse.w1);
  add(fuse.b1, other.fuse.b1);
  add(fuse.w2, other.fuse.w2);
  add(fuse.b2, other.fuse.b2);
}

bool PolicyGrads::finite() const {
  for (const MlpHead* h : {&rate, &fuse}) {
    for (const std::vector<double>* v : {&h->w1, &h->b1, &h->w2, &h->b2}) {
      for (double x : *v) {
        if (!std::isfinite(x)) return false;
      }
    }
  }
  return true;
}

void backprop_head(const PolicyParams& params, const PolicyTrace& trace,
                   const BetaGrads& upstream, PolicyGrads& grads, double scale) {
  // rate head owns actions 0..1, fuse head actions 2..3
  backprop_one(params.rate, trace.features, trace.rate, &upstream.d_alpha[0],
               &upstream.d_beta[0], grads.rate, scale);
  backprop_one(params.fuse, trace.features, trace.fuse, &upstream.d_alpha[2],
               &upstream.d_beta[2], grads.fuse, scale);
}

std::vector<double> flatten(const PolicyParams& p) {
  std::vector<double> out;
  out.reserve(policy_param_count());
  for (const MlpHead* h : {&p.rate, &p.fuse}) {
    append(out, h->w1);
    append(out, h->b1);
    append(out, h->w2);
    append(out, h->b2);
  }
  return out;
}

std::vector<double> flatten(const PolicyGrads& g) {
  std::vector<double> out;
  out.reserve(policy_param_count());
  for (const MlpHead* h : {&g.rate, &g.fuse}) {
    append(out, h->w1);
    append(out, h->b1);
    append(out, h->w2);
    append(out, h->b2);
  }
  return out;
}

void unflatten(const std::vector<double>& flat, PolicyParams& p) {
  if (flat.size() != policy_param_count()) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(policy_param_count()) +
                                " values, got " + std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  auto take = [&](std::vector<double>& dst, std::size_t n) {
    dst.assign(flat.begin() + pos, flat.begin() + pos + n);
    pos += n;
  };
  for (MlpHead* h : {&p.rate, &p.fuse}) {
    take(h->w1, kHiddenDim * kFeatureDim);
    take(h->b1, kHiddenDim);
    take(h->w2, 4 * kHiddenDim);
    take(h->b2, 4);
  }
}

std::size_t policy_param_count() {
  return 2 * (kHiddenDim * kFeatureDim + kHiddenDim + 4 * kHiddenDim + 4);
}

nlohmann::json policy_to_json(const PolicyParams& p) {
  auto head = [](const MlpHead& h) {
    return nlohmann::json{{"w1", h.w1}, {"b1", h.b1}, {"w2", h.w2}, {"b2", h.b2}};
  };
  return nlohmann::json{
      {"shape", {{"features", kFeatureDim}, {"hidden", kHiddenDim}, {"actions", kActionDim}}},
      {"rate", head(p.rate)},
      {"fuse", head(p.fuse)}};
}

PolicyParams policy_from_json(const nlohmann::json& j) {
  const auto& shape = j.at("shape");
  if (shape.at("features") != kFeatureDim || shape.at("hidden") != kHiddenDim ||
      shape.at("actions") != kActionDim) {
    throw std::runtime_error("policy checkpoint shape mismatch");
  }
  auto head = [](const nlohmann::json& h) {
    MlpHead m;
    h.at("w1").get_to(m.w1);
    h.at("b1").get_to(m.b1);
    h.at("w2").get_to(m.w2);
    h.at("b2").get_to(m.b2);
    head_sizes_check(m, "policy_from_json");
    return m;
  };
  return PolicyParams{head(j.at("rate")), head(j.at("fuse"))};
}

}  // namespace restorl
