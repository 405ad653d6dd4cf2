#include "restorl/rewards.hpp"

#include <algorithm>
#include <cmath>

namespace restorl {

namespace {

constexpr double kEps = 1e-6;

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double mean_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double clamp01d(double v) { return std::clamp(v, 0.0, 1.0); }

double channel_mean(const Image& img, int c) {
  double s = 0.0;
  const int n = img.pixel_count();
  for (int p = 0; p < n; ++p) s += img.data[static_cast<std::size_t>(p) * img.channels + c];
  return s / n;
}

double lum_std(const Image& img) {
  const Image lum = luminance(img);
  const double mu = mean(lum.data);
  double acc = 0.0;
  for (double v : lum.data) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(lum.data.size()));
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("combine: non-finite component ") + what);
  }
}

}  // namespace

std::string to_string(Degradation kind) {
  switch (kind) {
    case Degradation::Denoise: return "denoise";
    case Degradation::Derain: return "derain";
    case Degradation::Dehaze: return "dehaze";
    case Degradation::Deblur: return "deblur";
    case Degradation::LowLight: return "lowlight";
  }
  throw std::invalid_argument("to_string: bad degradation kind");
}

Degradation degradation_from_string(const std::string& name) {
  for (Degradation k : kAllDegradations) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown degradation kind: " + name);
}

int degradation_label(Degradation kind, int noise_sigma) {
  switch (kind) {
    case Degradation::Denoise:
      if (noise_sigma == 15) return 0;
      if (noise_sigma == 25) return 1;
      if (noise_sigma == 50) return 2;
      throw std::invalid_argument("denoise sigma must be 15, 25 or 50, got " +
                                  std::to_string(noise_sigma));
    case Degradation::Derain: return 3;
    case Degradation::Dehaze: return 4;
    case Degradation::Deblur: return 5;
    case Degradation::LowLight: return 6;
  }
  throw std::invalid_argument("degradation_label: bad kind");
}

void ScorerRegistry::add(std::unique_ptr<PerceptualScorer> scorer) {
  const std::string n = scorer->name();
  if (n != "clip" && n != "lpips" && n != "aes") {
    throw std::invalid_argument("scorer name must be clip, lpips or aes, got " + n);
  }
  for (const auto& s : scorers_) {
    if (s->name() == n) throw std::invalid_argument("scorer already registered: " + n);
  }
  scorers_.push_back(std::move(scorer));
}

double r_gen(const Image& y, const Image& t, const ScorerRegistry& scorers,
             const RewardWeights& w, std::map<std::string, double>* terms) {
  require_same_shape(y, t, "r_gen");

  // Always-on analytic metrics.
  const double psnr_score =
      clamp01d((psnr(y, t) - w.tau_min_db) / (w.tau_max_db - w.tau_min_db));
  const double ssim_score = clamp01d(ssim(y, t));

  std::vector<std::pair<double, double>> weighted;  // (weight, score)
  weighted.emplace_back(w.w_psnr, psnr_score);
  weighted.emplace_back(w.w_ssim, ssim_score);
  if (terms) {
    (*terms)["psnr"] = psnr_score;
    (*terms)["ssim"] = ssim_score;
  }

  for (const auto& scorer : scorers.scorers()) {
    double v;
    try {
      v = scorer->score(y, t);
    } catch (const std::exception& e) {
      throw std::runtime_error("scorer '" + scorer->name() + "' failed: " + e.what());
    }
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::runtime_error("scorer '" + scorer->name() + "' returned out-of-range score " +
                               std::to_string(v));
    }
    const std::string n = scorer->name();
    const double weight = (n == "clip") ? w.w_clip : (n == "lpips") ? w.w_lpips : w.w_aes;
    weighted.emplace_back(weight, v);
    if (terms) (*terms)[n] = v;
  }

  double wsum = 0.0;
  for (const auto& [weight, _] : weighted) wsum += weight;
  double score = 0.0;
  for (const auto& [weight, value] : weighted) score += (weight / wsum) * value;
  return clamp01d(score);
}

double r_grad(const Image& y, const Image& t) {
  require_same_shape(y, t, "r_grad");
  const GradientField gy = sobel(luminance(y));
  const GradientField gt = sobel(luminance(t));
  const double baseline = mean(gt.magnitude);
  double dev = 0.0;
  for (std::size_t i = 0; i < gy.magnitude.size(); ++i) {
    dev += std::fabs(gy.magnitude[i] - gt.magnitude[i]);
  }
  dev /= static_cast<double>(gy.magnitude.size());
  return clamp01d(1.0 - dev / (baseline + kEps));
}

double r_aniso(const Image& y) {
  const GradientField g = sobel(luminance(y));
  const double ex = mean_abs(g.gx);
  const double ey = mean_abs(g.gy);
  const double aniso = std::fabs(ex - ey) / std::max(ex + ey, kEps);
  return 1.0 - clamp01d(aniso);
}

double r_contrast(const Image& y, const Image& t) {
  require_same_shape(y, t, "r_contrast");
  const double cy = lum_std(y);
  const double ct = lum_std(t);
  return clamp01d(std::min(cy / (ct + kEps), ct / (cy + kEps)));
}

double r_sharp(const Image& y, const Image& t) {
  require_same_shape(y, t, "r_sharp");
  const double sy = mean(sobel(luminance(y)).magnitude);
  const double st = mean(sobel(luminance(t)).magnitude);
  return clamp01d(std::min(sy / (st + kEps), st / (sy + kEps)));
}

std::pair<double, double> r_lowlight(const Image& y, const Image& t) {
  require_same_shape(y, t, "r_lowlight");
  const double exp_gap = std::fabs(mean(luminance(y).data) - mean(luminance(t).data));
  const double r_exp = clamp01d(1.0 - exp_gap / 0.5);
  double color_gap = 0.0;
  for (int c = 0; c < y.channels; ++c) {
    color_gap += std::fabs(channel_mean(y, c) - channel_mean(t, c));
  }
  const double r_color = clamp01d(1.0 - color_gap / 0.6);
  return {r_exp, r_color};
}

double r_task(Degradation kind, const Image& y, const Image& t,
              std::map<std::string, double>* terms) {
  switch (kind) {
    case Degradation::Denoise: {
      const double v = r_grad(y, t);
      if (terms) (*terms)["grad"] = v;
      return v;
    }
    case Degradation::Derain: {
      const double v = r_aniso(y);
      if (terms) (*terms)["aniso"] = v;
      return v;
    }
    case Degradation::Dehaze: {
      const double v = r_contrast(y, t);
      if (terms) (*terms)["contrast"] = v;
      return v;
    }
    case Degradation::Deblur: {
      const double v = r_sharp(y, t);
      if (terms) (*terms)["sharp"] = v;
      return v;
    }
    case Degradation::LowLight: {
      // literal weights, deliberately not renormalized: max 0.3
      const auto [r_exp, r_color] = r_lowlight(y, t);
      if (terms) {
        (*terms)["exp"] = r_exp;
        (*terms)["color"] = r_color;
      }
      return 0.2 * r_exp + 0.1 * r_color;
    }
  }
  throw std::invalid_argument("r_task: bad degradation kind");
}

RewardBreakdown combine(double gen, double qwen, double task, const RewardWeights& w) {
  check_finite(gen, "r_gen");
  check_finite(qwen, "r_qwen");
  check_finite(task, "r_task");
  RewardBreakdown b;
  b.r_gen = gen;
  b.r_qwen = qwen;
  b.r_task = task;
  b.combined = w.lambda_gen * gen + w.lambda_qwen * qwen + w.lambda_task * task;
  return b;
}

nlohmann::json reward_report(const std::string& sample_id, Degradation kind,
                             const RewardBreakdown& b) {
  nlohmann::json components{{"r_gen", b.r_gen}, {"r_qwen", b.r_qwen}, {"r_task", b.r_task}};
  if (!b.gen_terms.empty()) components["gen"] = b.gen_terms;
  if (!b.task_terms.empty()) components["task"] = b.task_terms;
  return nlohmann::json{{"sample_id", sample_id},
                        {"kind", to_string(kind)},
                        {"components", components},
                        {"combined", b.combined}};
}

}  // namespace restorl
