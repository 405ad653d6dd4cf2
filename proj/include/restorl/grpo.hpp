#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "restorl/backbone.hpp"
#include "restorl/judge.hpp"
#include "restorl/policy.hpp"
#include "restorl/rewards.hpp"

namespace restorl {

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// G stochastic candidates for one input plus their group-normalized
/// advantages; best_index is the argmax reward (ties -> lowest index).
struct RolloutGroup {
  std::string input_id;
  std::vector<Candidate> candidates;
  std::vector<double> advantages;
  int best_index = 0;
};

/// Training hyperparameters; defaults follow the published recipe
/// (group size 4, Adam 3e-5 with 6x policy-head multiplier, 30 epochs,
/// lambda_sup 0.35->0.1, lambda_cons 0.2->0.05, mining ratio 0.3).
struct TrainConfig {
  int group_size = 4;
  double clip_eps = 0.2;
  double kl_beta = 0.01;
  double entropy_tau = 0.01;
  double adv_eps = 1e-8;
  double learning_rate = 3e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double head_lr_mult = 6.0;
  int epochs = 30;
  double lambda_sup_start = 0.35;
  double lambda_sup_end = 0.1;
  double lambda_cons_start = 0.2;
  double lambda_cons_end = 0.05;
  double hard_ratio = 0.3;
  int patch_size = 128;
  std::uint64_t seed = 1;
};

struct StepMetrics {
  int step = 0;
  int epoch = 0;
  double total_loss = 0.0;
  double rl_loss = 0.0;
  double sup_loss = 0.0;
  double cons_loss = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "step,epoch,total_loss,rl_loss,sup_loss,cons_loss,reward_mean,reward_std,kl,entropy,clip_frac";

std::string metrics_csv(const std::vector<StepMetrics>& rows);
std::vector<StepMetrics> parse_metrics_csv(const std::string& text);

/// Frozen deep copy of policy parameters (behavior policy or KL reference).
struct PolicySnapshot {
  enum class Role { old_policy, reference };
  PolicyParams params;
  Role role = Role::old_policy;
};

using JudgeFn =
    std::function<JudgeVerdict(const Image& degraded, const Image& restored, const Image& reference)>;

JudgeFn make_mock_judge_fn();

/// Composite reward evaluation shared by rollouts, curation and eval.
struct RewardSystem {
  RewardWeights weights;
  ScorerRegistry scorers;
  JudgeFn judge = make_mock_judge_fn();

  RewardBreakdown score(Degradation kind, const Image& degraded, const Image& restored_clamped,
                        const Image& truth) const;
};

/// Policy initialization for a run seed; shared by training, curation and
/// the CLI so baseline evaluations reproduce bit-for-bit across commands.
PolicyParams initial_policy_for_seed(std::uint64_t seed);

/// A_i = (r_i - mean) / sqrt(population variance + eps_adv).
std::vector<double> advantages(const std::vector<double>& rewards, double eps_adv);

/// Samples group_size actions from the old policy on x, restores and scores
/// each, records old log-probs, computes advantages and the best candidate.
RolloutGroup group_rollout(const std::string& input_id, const Image& x, const Image& truth,
                           Degradation kind, const PolicyParams& old_policy,
                           const BackboneParams& backbone, const RewardSystem& rewards,
                           int group_size, double adv_eps, std::mt19937_64& rng);

struct SurrogateResult {
  double value = 0.0;
  double clip_fraction = 0.0;
  PolicyGrads grads;  // of the surrogate itself (to be maximized)
};

/// (1/G) sum min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i); gradient flows
/// only through candidates whose unclipped branch is active.
SurrogateResult surrogate(const RolloutGroup& group, const PolicyParams& policy,
                          const std::array<double, kFeatureDim>& features, double clip_eps);

struct KlResult {
  double value = 0.0;
  PolicyGrads grads;
};

/// Ratio-weighted sample KL against the frozen reference:
/// (1/G) sum rho_i [log pi(a_i) - log pi_ref(a_i)].
KlResult kl_estimate(const RolloutGroup& group, const PolicyParams& policy,
                     const PolicyParams& reference, const std::array<double, kFeatureDim>& features);

struct RlLossResult {
  double value = 0.0;
  double surrogate_value = 0.0;
  double kl = 0.0;
  double entropy_value = 0.0;
  double clip_fraction = 0.0;
  PolicyGrads grads;
};

/// -surrogate + beta*KL - tau*H with the policy entropy taken per input.
RlLossResult rl_loss(const RolloutGroup& group, const PolicyParams& policy,
                     const PolicySnapshot& reference, const TrainConfig& cfg,
                     const std::array<double, kFeatureDim>& features);

struct SupLossResult {
  double sup_loss = 0.0;
  double cons_loss = 0.0;
  BackboneGrads sup_grads;   // through the best candidate's restoration
  BackboneGrads cons_grads;  // through the deterministic output only
};

/// L_sup = mean|restore(x, best_action, backbone) - truth| with gradients
/// through the restoration; L_cons = mean|best_target - y_det| where
/// best_target is the frozen best-candidate output (a stop-gradient
/// constant), so the consistency gradient flows through y_det alone.
SupLossResult sup_losses(const Image& x, const Action& best_action, const Image& best_target,
                         const BackboneParams& backbone, const Image& y_det,
                         const RestoreTrace& det_trace, const Action& det_action,
                         const Image& truth);

/// Linear schedule hitting both endpoints: start + (end-start)*epoch/(total-1).
double anneal(double start, double end, int epoch, int total_epochs);

struct TotalLossResult {
  double value = 0.0;
  RlLossResult rl;
  SupLossResult sup;
  double lambda_sup = 0.0;
  double lambda_cons = 0.0;
  PolicyGrads policy_grads;
  BackboneGrads backbone_grads;
};

/// Assembles the hybrid objective on a frozen group: the RL term updates the
/// policy, the annealed l1 terms update the backbone; the deterministic
/// output is recomputed from det_action so backbone perturbations flow
/// through the consistency term.
TotalLossResult total_loss(const Image& x, const Image& truth, const RolloutGroup& group,
                           const PolicyParams& policy, const BackboneParams& backbone,
                           const PolicySnapshot& reference, const Action& det_action,
                           double lambda_sup, double lambda_cons, const TrainConfig& cfg);

struct AdamParams {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  static AdamState zeros(std::size_t n);
};

/// One bias-corrected Adam update, in place.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const AdamParams& ap);

struct TrainSample {
  std::string id;
  Degradation kind = Degradation::Denoise;
  int noise_sigma = 0;
  Image degraded;
  Image truth;
};

struct Checkpoint {
  int version = 1;
  std::string config_hash;
  int next_epoch = 0;
  int next_step = 0;
  PolicyParams policy;
  PolicyParams reference_policy;
  BackboneParams backbone;
  AdamState adam_policy;
  AdamState adam_backbone;
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TrainResult {
  PolicyParams policy;
  PolicyParams reference_policy;
  BackboneParams backbone;
  AdamState adam_policy;
  AdamState adam_backbone;
  std::vector<StepMetrics> metrics;
  int skipped_steps = 0;
  int steps_done = 0;  // steps executed by this invocation
  int next_step = 0;   // cumulative step counter for checkpointing
};

/// Called after each completed epoch with a resumable checkpoint and the
/// metrics accumulated so far.
using EpochCallback = std::function<void(const Checkpoint&, const std::vector<StepMetrics>&)>;

/// Full post-training loop: per sample per step, snapshot the behavior
/// policy, roll out a group, assemble the hybrid loss and update both
/// parameter sets. Deterministic under cfg.seed (per-epoch derived RNG
/// streams, so resuming from a checkpoint replays the same draws).
/// Any non-finite loss aborts with the offending sample id.
TrainResult train(const std::vector<TrainSample>& corpus, const TrainConfig& cfg,
                  const RewardSystem& rewards, const Checkpoint* resume = nullptr,
                  const std::string& config_hash = "",
                  const EpochCallback& on_epoch = nullptr);

}  // namespace restorl
