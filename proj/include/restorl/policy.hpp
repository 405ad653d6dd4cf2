#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"
#include "restorl/image.hpp"

namespace restorl {

inline constexpr int kFeatureDim = 8;
inline constexpr int kHiddenDim = 16;
inline constexpr int kActionDim = 4;
inline constexpr double kActionFloor = 1e-4;
inline constexpr double kActionCeil = 1.0 - 1e-4;
inline constexpr double kBetaParamFloor = 1e-2;
inline constexpr double kBetaParamCap = 50.0;

/// The four continuous controls: low-frequency mask height/width ratios and
/// the two fusion gains. Components live in (0,1) and are clamped to
/// [1e-4, 1-1e-4] after sampling.
struct Action {
  double r_h = 0.5;
  double r_l = 0.5;
  double g_f = 0.5;
  double g_o = 0.5;

  std::array<double, kActionDim> as_array() const { return {r_h, r_l, g_f, g_o}; }
  static Action from_array(const std::array<double, kActionDim>& a) {
    return Action{a[0], a[1], a[2], a[3]};
  }
};

/// Per-action Beta shape parameters, already softplus-mapped and clamped to
/// [1e-2, 50]. Index order matches Action: h, l, f, o.
struct BetaHeadOutput {
  std::array<double, kActionDim> alpha{};
  std::array<double, kActionDim> beta{};
};

/// One policy head: 8 features -> 16 tanh units -> 4 raw outputs that become
/// (alpha, beta) for its two actions via softplus + clamp.
struct MlpHead {
  std::vector<double> w1;  // kHiddenDim x kFeatureDim, row-major
  std::vector<double> b1;  // kHiddenDim
  std::vector<double> w2;  // 4 x kHiddenDim, row-major
  std::vector<double> b2;  // 4

  static MlpHead zeros();
};

/// Rate head emits (alpha_h, beta_h, alpha_l, beta_l), fuse head
/// (alpha_f, beta_f, alpha_o, beta_o); together the 8 raw scalars form the
/// four Beta parameter pairs. One stage at toy scale; a multi-stage
/// configuration would carry one pair of heads per stage.
struct PolicyParams {
  MlpHead rate;
  MlpHead fuse;
};

/// Hidden weights uniform in +-1/sqrt(8), output weights zero, output bias
/// softplus^-1(2): every action starts as Beta(2, 2).
PolicyParams init_policy(std::mt19937_64& rng);

/// Pooled statistics of the degraded input feeding both heads:
/// [mean lum, std lum, mean|gx|, mean|gy|, mean magnitude,
///  low-frequency energy ratio at r = 0.25, |mean R - mean B|,
///  mean per-pixel channel spread], each clamped to [0, 4].
std::array<double, kFeatureDim> extract_features(const Image& x);

/// Cached forward activations for backprop.
struct HeadTrace {
  std::array<double, kHiddenDim> hidden{};       // tanh outputs
  std::array<double, 4> raw{};                   // pre-softplus
  std::array<bool, 4> saturated{};               // clamp bound hit
};
struct PolicyTrace {
  std::array<double, kFeatureDim> features{};
  HeadTrace rate;
  HeadTrace fuse;
};

BetaHeadOutput head_forward(const PolicyParams& params,
                            const std::array<double, kFeatureDim>& features,
                            PolicyTrace* trace = nullptr);

/// Gamma-ratio Beta sampler (Marsaglia-Tsang gammas), deterministic for a
/// fixed engine state; the result is clamped to the Action bounds.
double beta_sample(double alpha, double beta, std::mt19937_64& rng);
Action sample_action(const BetaHeadOutput& out, std::mt19937_64& rng);

/// Sum over actions of (a-1) ln a_k + (b-1) ln(1-a_k) - log B(a, b).
double joint_logprob(const BetaHeadOutput& out, const Action& a);

/// Sum over actions of the closed-form Beta differential entropy (nats).
double entropy(const BetaHeadOutput& out);

/// Beta means alpha/(alpha+beta) per action.
Action deterministic_action(const BetaHeadOutput& out);

/// Gradients with respect to the (alpha, beta) arrays.
struct BetaGrads {
  std::array<double, kActionDim> d_alpha{};
  std::array<double, kActionDim> d_beta{};

  void accumulate(const BetaGrads& other, double scale);
};

/// d logpi / d alpha_k = ln a_k - psi(alpha_k) + psi(alpha_k + beta_k);
/// symmetric in beta with ln(1 - a_k).
BetaGrads logprob_grads(const BetaHeadOutput& out, const Action& a);

/// dH/d alpha_k = -(alpha_k - 1) psi'(alpha_k) + (alpha_k + beta_k - 2) psi'(alpha_k + beta_k).
BetaGrads entropy_grads(const BetaHeadOutput& out);

/// Gradient buffers shaped like PolicyParams.
struct PolicyGrads {
  MlpHead rate = MlpHead::zeros();
  MlpHead fuse = MlpHead::zeros();

  void scale(double s);
  void accumulate(const PolicyGrads& other, double s);
  bool finite() const;
};

/// Chains (d/d alpha, d/d beta) through clamp, softplus and both MLPs and
/// accumulates scale * dL/dparams into grads. Clamp-saturated outputs
/// receive zero gradient.
void backprop_head(const PolicyParams& params, const PolicyTrace& trace,
                   const BetaGrads& upstream, PolicyGrads& grads, double scale = 1.0);

/// Flat parameter order: rate.w1, rate.b1, rate.w2, rate.b2, then fuse in
/// the same order. Shared by the optimizer, checkpoints and gradient tests.
std::vector<double> flatten(const PolicyParams& p);
std::vector<double> flatten(const PolicyGrads& g);
void unflatten(const std::vector<double>& flat, PolicyParams& p);
std::size_t policy_param_count();

nlohmann::json policy_to_json(const PolicyParams& p);
PolicyParams policy_from_json(const nlohmann::json& j);

}  // namespace restorl
