#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "restorl/grpo.hpp"
#include "restorl/judge.hpp"
#include "restorl/rewards.hpp"

namespace restorl {

/// Flat run configuration covering training, reward weights, judge endpoint
/// and corpus parameters. Defaults mirror the module-level defaults; loading
/// rejects unknown keys so hyperparameter typos cannot pass silently.
struct RunConfig {
  std::uint64_t seed = 1;

  // training
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

  // rewards
  double lambda_gen = 0.6;
  double lambda_qwen = 0.1;
  double lambda_task = 0.3;
  double weight_clip = 0.25;
  double weight_lpips = 0.25;
  double weight_aes = 0.15;
  double weight_psnr = 0.20;
  double weight_ssim = 0.15;
  double psnr_tau_min = 15.0;
  double psnr_tau_max = 40.0;

  // judge endpoint ("" -> deterministic mock)
  std::string judge_endpoint;
  int judge_timeout_ms = 2000;
  int judge_retries = 2;

  // corpus
  int per_kind = 10;
  int image_size = 32;
  bool stratified_mining = true;

  TrainConfig train_config() const;
  RewardWeights reward_weights() const;
  JudgeEndpoint judge_config() const;
};

nlohmann::json config_to_json(const RunConfig& c);

/// Strict parse: every key must be known, types must match.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& c, const std::string& path);

/// FNV-1a hash of the canonical JSON dump; stamped into checkpoints.
std::string config_hash(const RunConfig& c);

/// Built-in overlays ("smoke": 32px corpus, 8 per kind, 20 epochs).
void apply_preset(RunConfig& c, const std::string& name);

}  // namespace restorl
