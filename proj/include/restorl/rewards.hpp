#pragma once

#include <array>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "restorl/image.hpp"

namespace restorl {

/// The five degradation families a training sample can carry. Denoise
/// samples additionally carry a noise sigma in {15, 25, 50}.
enum class Degradation { Denoise, Derain, Dehaze, Deblur, LowLight };

inline constexpr std::array<Degradation, 5> kAllDegradations = {
    Degradation::Denoise, Degradation::Derain, Degradation::Dehaze,
    Degradation::Deblur, Degradation::LowLight};

std::string to_string(Degradation kind);
Degradation degradation_from_string(const std::string& name);

/// Prompt index of a sample (0/1/2 for sigma 15/25/50 denoising, 3 derain,
/// 4 dehaze, 5 deblur, 6 low-light).
int degradation_label(Degradation kind, int noise_sigma);

/// Fixed balancing weights of the composite reward plus the generic-blend
/// internals. The lambda triplet always sums to 1; the generic weights of
/// whichever scorers are enabled renormalize to sum to 1.
struct RewardWeights {
  double lambda_gen = 0.6;
  double lambda_qwen = 0.1;
  double lambda_task = 0.3;
  double w_clip = 0.25;
  double w_lpips = 0.25;
  double w_aes = 0.15;
  double w_psnr = 0.20;
  double w_ssim = 0.15;
  double tau_min_db = 15.0;  // PSNR score hits 0 here
  double tau_max_db = 40.0;  // and saturates at 1 here
};

struct RewardBreakdown {
  double r_gen = 0.0;
  double r_qwen = 0.0;
  double r_task = 0.0;
  double combined = 0.0;
  std::map<std::string, double> gen_terms;
  std::map<std::string, double> task_terms;
};

/// Pluggable perceptual metric slot (clip / lpips / aes). Implementations
/// must be deterministic and return scores in [0,1]; failures must throw.
class PerceptualScorer {
 public:
  virtual ~PerceptualScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const Image& restored, const Image& reference) const = 0;
};

/// Scorers registered here are enabled; names must be one of the weighted
/// slots ("clip", "lpips", "aes").
class ScorerRegistry {
 public:
  void add(std::unique_ptr<PerceptualScorer> scorer);
  bool empty() const { return scorers_.empty(); }
  const std::vector<std::unique_ptr<PerceptualScorer>>& scorers() const { return scorers_; }

 private:
  std::vector<std::unique_ptr<PerceptualScorer>> scorers_;
};

/// Generic quality blend over the enabled metrics (PSNR and SSIM are always
/// on) with weights renormalized to the enabled set. If terms is non-null it
/// receives the raw per-metric scores.
double r_gen(const Image& y, const Image& t, const ScorerRegistry& scorers,
             const RewardWeights& w, std::map<std::string, double>* terms = nullptr);

/// Gradient consistency: 1 - mean|M(y) - M(t)| / (mean M(t) + 1e-6), on luminance.
double r_grad(const Image& y, const Image& t);

/// One minus the normalized anisotropy |Ex - Ey| / max(Ex + Ey, 1e-6) of the
/// restored image's Sobel responses.
double r_aniso(const Image& y);

/// Symmetric closeness of luminance standard deviations.
double r_contrast(const Image& y, const Image& t);

/// Symmetric closeness of mean gradient magnitudes.
double r_sharp(const Image& y, const Image& t);

/// (exposure, color) pair: 1 - |mean luminance gap|/0.5 and
/// 1 - sum of per-channel mean gaps / 0.6, both clamped to [0,1].
std::pair<double, double> r_lowlight(const Image& y, const Image& t);

/// Task-aware shaping term for the sample's degradation. LowLight combines
/// 0.2*r_exp + 0.1*r_color and therefore tops out at 0.3.
double r_task(Degradation kind, const Image& y, const Image& t,
              std::map<std::string, double>* terms = nullptr);

RewardBreakdown combine(double gen, double qwen, double task, const RewardWeights& w);

/// JSON reward report: {sample_id, kind, components: {...}, combined}.
nlohmann::json reward_report(const std::string& sample_id, Degradation kind,
                             const RewardBreakdown& b);

}  // namespace restorl
