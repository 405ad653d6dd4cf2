#pragma once

#include <vector>

#include "json.hpp"
#include "restorl/image.hpp"
#include "restorl/policy.hpp"
#include "restorl/rewards.hpp"

namespace restorl {

/// Filter stages in the pipeline. One stage at this scale; a multi-stage
/// build would carry one (rate, fuse) policy head pair and one gain set per
/// stage, chained through the latent path.
inline constexpr int kBackboneStages = 1;

/// Learnable restoration parameters: per-channel spectral gains for the two
/// frequency bands plus a per-channel affine latent map. Gains are
/// unconstrained in sign.
struct BackboneParams {
  std::vector<double> w_low;   // init 1.0
  std::vector<double> w_high;  // init 0.5
  std::vector<double> s;       // init 1.0
  std::vector<double> b;       // init 0.0

  static BackboneParams init(int channels);
  int channels() const { return static_cast<int>(w_low.size()); }
};

/// Band images cached by restore() so parameter gradients can reuse them:
/// the map is linear in every parameter once the action is fixed.
struct RestoreTrace {
  Image low_band;   // Re(ifft2(masked low)) per channel
  Image high_band;  // Re(ifft2(masked high)) per channel
};

/// Per channel c: split fft2(x_c) with the action's mask ratios,
/// O_c = w_low[c]*lowband + w_high[c]*highband, y_c = s[c]*x_c + b[c],
/// output_c = g_f*y_c + g_o*O_c. Output is intentionally unclamped.
Image restore(const Image& x, const Action& a, const BackboneParams& p,
              RestoreTrace* trace = nullptr);

/// restore() with the Beta-mean action of the policy evaluated on x.
Image restore_deterministic(const Image& x, const BackboneParams& p,
                            const PolicyParams& policy);

struct BackboneGrads {
  std::vector<double> w_low, w_high, s, b;

  static BackboneGrads zeros(int channels);
  void accumulate(const BackboneGrads& other, double scale);
  bool finite() const;
};

/// Analytic parameter gradients for sum_p upstream(p) * output(p):
/// d/dw_low[c] = g_o * lowband_c, d/dw_high[c] = g_o * highband_c,
/// d/ds[c] = g_f * x_c, d/db[c] = g_f.
BackboneGrads backbone_grads(const Image& x, const Action& a, const RestoreTrace& trace,
                             const Image& upstream);

/// One stochastic restoration candidate inside a rollout group.
struct Candidate {
  Action action;
  Image output_raw;      // unclamped training copy
  Image output_clamped;  // metric copy, clamp01(output_raw)
  double logprob_old = 0.0;
  RewardBreakdown reward;
};

std::vector<double> flatten(const BackboneParams& p);
std::vector<double> flatten(const BackboneGrads& g);
void unflatten(const std::vector<double>& flat, BackboneParams& p);

nlohmann::json backbone_to_json(const BackboneParams& p);
BackboneParams backbone_from_json(const nlohmann::json& j);

}  // namespace restorl
