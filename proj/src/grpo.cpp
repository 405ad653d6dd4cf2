#include "restorl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace restorl {

namespace {

constexpr double kL1SmoothDelta = 1e-8;

// derivative of |d| with the tiny linear smoothing band around zero
double smoothed_sign(double d) {
  if (d > kL1SmoothDelta) return 1.0;
  if (d < -kL1SmoothDelta) return -1.0;
  return d / kL1SmoothDelta;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Image center_crop(const Image& img, int patch) {
  if (img.height <= patch && img.width <= patch) return img;
  const int h = std::min(img.height, patch);
  const int w = std::min(img.width, patch);
  const int y0 = (img.height - h) / 2;
  const int x0 = (img.width - w) / 2;
  Image out(h, w, img.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    }
  }
  return out;
}

nlohmann::json adam_to_json(const AdamState& s) {
  return nlohmann::json{{"m", s.m}, {"v", s.v}, {"t", s.t}};
}

AdamState adam_from_json(const nlohmann::json& j) {
  AdamState s;
  j.at("m").get_to(s.m);
  j.at("v").get_to(s.v);
  j.at("t").get_to(s.t);
  if (s.m.size() != s.v.size()) throw std::runtime_error("adam state size mismatch");
  return s;
}

}  // namespace

std::string metrics_csv(const std::vector<StepMetrics>& rows) {
  std::ostringstream out;
  out << kMetricsCsvHeader << "\n";
  for (const StepMetrics& m : rows) {
    out << m.step << ',' << m.epoch << ',' << fmt(m.total_loss) << ',' << fmt(m.rl_loss)
        << ',' << fmt(m.sup_loss) << ',' << fmt(m.cons_loss) << ',' << fmt(m.reward_mean)
        << ',' << fmt(m.reward_std) << ',' << fmt(m.kl) << ',' << fmt(m.entropy) << ','
        << fmt(m.clip_frac) << "\n";
  }
  return out.str();
}

std::vector<StepMetrics> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsCsvHeader) {
    throw std::runtime_error("metrics csv: unexpected header '" + line + "'");
  }
  std::vector<StepMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw std::runtime_error("metrics csv: malformed row '" + line + "'");
    StepMetrics m;
    m.step = std::stoi(cells[0]);
    m.epoch = std::stoi(cells[1]);
    m.total_loss = std::stod(cells[2]);
    m.rl_loss = std::stod(cells[3]);
    m.sup_loss = std::stod(cells[4]);
    m.cons_loss = std::stod(cells[5]);
    m.reward_mean = std::stod(cells[6]);
    m.reward_std = std::stod(cells[7]);
    m.kl = std::stod(cells[8]);
    m.entropy = std::stod(cells[9]);
    m.clip_frac = std::stod(cells[10]);
    rows.push_back(m);
  }
  return rows;
}

PolicyParams initial_policy_for_seed(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  return init_policy(rng);
}

JudgeFn make_mock_judge_fn() {
  return [](const Image&, const Image& restored, const Image& reference) {
    return mock_judge(restored, reference);
  };
}

RewardBreakdown RewardSystem::score(Degradation kind, const Image& degraded,
                                    const Image& restored_clamped, const Image& truth) const {
  std::map<std::string, double> gen_terms;
  const double gen = r_gen(restored_clamped, truth, scorers, weights, &gen_terms);
  const JudgeVerdict verdict = judge(degraded, restored_clamped, truth);
  std::map<std::string, double> task_terms;
  const double task = r_task(kind, restored_clamped, truth, &task_terms);
  RewardBreakdown b = combine(gen, verdict.rescaled, task, weights);
  b.gen_terms = std::move(gen_terms);
  b.task_terms = std::move(task_terms);
  return b;
}

std::vector<double> advantages(const std::vector<double>& rewards, double eps_adv) {
  const int g = static_cast<int>(rewards.size());
  if (g < 2) throw std::invalid_argument("advantages: group size must be >= 2");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= g;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= g;  // population variance
  const double s = std::sqrt(var + eps_adv);
  std::vector<double> a(rewards.size());
  for (int i = 0; i < g; ++i) a[i] = (rewards[i] - mean) / s;
  return a;
}

RolloutGroup group_rollout(const std::string& input_id, const Image& x, const Image& truth,
                           Degradation kind, const PolicyParams& old_policy,
                           const BackboneParams& backbone, const RewardSystem& rewards,
                           int group_size, double adv_eps, std::mt19937_64& rng) {
  if (group_size < 2) throw std::invalid_argument("group_rollout: group size must be >= 2");
  const auto features = extract_features(x);
  const BetaHeadOutput out_old = head_forward(old_policy, features);

  RolloutGroup group;
  group.input_id = input_id;
  group.candidates.reserve(group_size);
  std::vector<double> combined;
  combined.reserve(group_size);

  for (int i = 0; i < group_size; ++i) {
    Candidate c;
    c.action = sample_action(out_old, rng);
    c.logprob_old = joint_logprob(out_old, c.action);
    c.output_raw = restore(x, c.action, backbone);
    c.output_clamped = clamp01(c.output_raw);
    try {
      c.reward = rewards.score(kind, x, c.output_clamped, truth);
    } catch (const std::exception& e) {
      throw std::runtime_error("group_rollout: reward failed for sample '" + input_id +
                               "' candidate " + std::to_string(i) + ": " + e.what());
    }
    combined.push_back(c.reward.combined);
    group.candidates.push_back(std::move(c));
  }

  group.advantages = advantages(combined, adv_eps);
  group.best_index = 0;
  for (int i = 1; i < group_size; ++i) {
    if (combined[i] > combined[group.best_index]) group.best_index = i;  // ties keep lowest
  }
  return group;
}

SurrogateResult surrogate(const RolloutGroup& group, const PolicyParams& policy,
                          const std::array<double, kFeatureDim>& features, double clip_eps) {
  const int g = static_cast<int>(group.candidates.size());
  PolicyTrace trace;
  const BetaHeadOutput out = head_forward(policy, features, &trace);

  SurrogateResult res;
  BetaGrads upstream;
  int clipped_count = 0;
  for (int i = 0; i < g; ++i) {
    const Candidate& c = group.candidates[i];
    const double lp = joint_logprob(out, c.action);
    const double rho = std::exp(lp - c.logprob_old);
    if (!std::isfinite(rho)) {
      throw std::runtime_error("surrogate: non-finite likelihood ratio for candidate " +
                               std::to_string(i) + " of '" + group.input_id + "'");
    }
    const double adv = group.advantages[i];
    const double unclipped = rho * adv;
    const double clipped = std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
    res.value += std::min(unclipped, clipped);
    if (std::fabs(rho - 1.0) > clip_eps) ++clipped_count;
    if (unclipped <= clipped) {
      // d/dtheta rho*A = rho*A * dlogpi; the clipped branch is flat
      upstream.accumulate(logprob_grads(out, c.action), rho * adv / g);
    }
  }
  res.value /= g;
  res.clip_fraction = static_cast<double>(clipped_count) / g;
  backprop_head(policy, trace, upstream, res.grads);
  return res;
}

KlResult kl_estimate(const RolloutGroup& group, const PolicyParams& policy,
                     const PolicyParams& reference,
                     const std::array<double, kFeatureDim>& features) {
  const int g = static_cast<int>(group.candidates.size());
  PolicyTrace trace;
  const BetaHeadOutput out = head_forward(policy, features, &trace);
  const BetaHeadOutput out_ref = head_forward(reference, features);

  KlResult res;
  BetaGrads upstream;
  for (int i = 0; i < g; ++i) {
    const Candidate& c = group.candidates[i];
    const double lp = joint_logprob(out, c.action);
    const double lp_ref = joint_logprob(out_ref, c.action);
    const double rho = std::exp(lp - c.logprob_old);
    const double delta = lp - lp_ref;
    res.value += rho * delta;
    // d/dtheta rho*(lp - lp_ref) = rho*(delta + 1) * dlogpi
    upstream.accumulate(logprob_grads(out, c.action), rho * (delta + 1.0) / g);
  }
  res.value /= g;
  backprop_head(policy, trace, upstream, res.grads);
  return res;
}

RlLossResult rl_loss(const RolloutGroup& group, const PolicyParams& policy,
                     const PolicySnapshot& reference, const TrainConfig& cfg,
                     const std::array<double, kFeatureDim>& features) {
  const SurrogateResult surr = surrogate(group, policy, features, cfg.clip_eps);
  const KlResult kl = kl_estimate(group, policy, reference.params, features);

  PolicyTrace trace;
  const BetaHeadOutput out = head_forward(policy, features, &trace);
  const double h = entropy(out);
  PolicyGrads h_grads;
  backprop_head(policy, trace, entropy_grads(out), h_grads);

  RlLossResult res;
  res.surrogate_value = surr.value;
  res.kl = kl.value;
  res.entropy_value = h;
  res.clip_fraction = surr.clip_fraction;
  res.value = -surr.value + cfg.kl_beta * kl.value - cfg.entropy_tau * h;
  res.grads.accumulate(surr.grads, -1.0);
  res.grads.accumulate(kl.grads, cfg.kl_beta);
  res.grads.accumulate(h_grads, -cfg.entropy_tau);
  return res;
}

SupLossResult sup_losses(const Image& x, const Action& best_action, const Image& best_target,
                         const BackboneParams& backbone, const Image& y_det,
                         const RestoreTrace& det_trace, const Action& det_action,
                         const Image& truth) {
  require_same_shape(best_target, truth, "sup_losses");
  require_same_shape(y_det, truth, "sup_losses(y_det)");
  const std::size_t n = truth.data.size();

  // live recomputation of the best candidate keeps the supervised gradient
  // attached to the current backbone parameters
  RestoreTrace best_trace;
  const Image best_out = restore(x, best_action, backbone, &best_trace);

  SupLossResult res;
  Image upstream_sup(truth.height, truth.width, truth.channels);
  Image upstream_cons(truth.height, truth.width, truth.channels);
  double sup = 0.0, cons = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d_sup = best_out.data[i] - truth.data[i];
    sup += std::fabs(d_sup);
    upstream_sup.data[i] = smoothed_sign(d_sup) / static_cast<double>(n);
    // frozen stop-gradient target: gradient only via y_det
    const double d_cons = y_det.data[i] - best_target.data[i];
    cons += std::fabs(d_cons);
    upstream_cons.data[i] = smoothed_sign(d_cons) / static_cast<double>(n);
  }
  res.sup_loss = sup / static_cast<double>(n);
  res.cons_loss = cons / static_cast<double>(n);
  res.sup_grads = backbone_grads(x, best_action, best_trace, upstream_sup);
  res.cons_grads = backbone_grads(x, det_action, det_trace, upstream_cons);
  return res;
}

double anneal(double start, double end, int epoch, int total_epochs) {
  if (epoch < 0 || epoch >= total_epochs) {
    throw std::invalid_argument("anneal: epoch " + std::to_string(epoch) +
                                " outside [0, " + std::to_string(total_epochs) + ")");
  }
  if (total_epochs == 1) return start;
  return start + (end - start) * static_cast<double>(epoch) /
                     static_cast<double>(total_epochs - 1);
}

TotalLossResult total_loss(const Image& x, const Image& truth, const RolloutGroup& group,
                           const PolicyParams& policy, const BackboneParams& backbone,
                           const PolicySnapshot& reference, const Action& det_action,
                           double lambda_sup, double lambda_cons, const TrainConfig& cfg) {
  const auto features = extract_features(x);

  TotalLossResult res;
  res.lambda_sup = lambda_sup;
  res.lambda_cons = lambda_cons;
  res.rl = rl_loss(group, policy, reference, cfg, features);

  RestoreTrace det_trace;
  const Image y_det = restore(x, det_action, backbone, &det_trace);
  const Candidate& best = group.candidates[group.best_index];
  res.sup = sup_losses(x, best.action, best.output_raw, backbone, y_det, det_trace, det_action,
                       truth);

  res.value = res.rl.value + lambda_sup * res.sup.sup_loss + lambda_cons * res.sup.cons_loss;
  res.policy_grads = res.rl.grads;
  res.backbone_grads = BackboneGrads::zeros(backbone.channels());
  res.backbone_grads.accumulate(res.sup.sup_grads, lambda_sup);
  res.backbone_grads.accumulate(res.sup.cons_grads, lambda_cons);
  return res;
}

AdamState AdamState::zeros(std::size_t n) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const AdamParams& ap) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = ap.beta1 * state.m[i] + (1.0 - ap.beta1) * g;
    state.v[i] = ap.beta2 * state.v[i] + (1.0 - ap.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= ap.lr * mhat / (std::sqrt(vhat) + ap.eps);
  }
}

nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  return nlohmann::json{{"version", c.version},
                        {"config_hash", c.config_hash},
                        {"next_epoch", c.next_epoch},
                        {"next_step", c.next_step},
                        {"policy", policy_to_json(c.policy)},
                        {"reference_policy", policy_to_json(c.reference_policy)},
                        {"backbone", backbone_to_json(c.backbone)},
                        {"adam_policy", adam_to_json(c.adam_policy)},
                        {"adam_backbone", adam_to_json(c.adam_backbone)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  j.at("version").get_to(c.version);
  if (c.version != 1) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(c.version));
  }
  j.at("config_hash").get_to(c.config_hash);
  j.at("next_epoch").get_to(c.next_epoch);
  j.at("next_step").get_to(c.next_step);
  c.policy = policy_from_json(j.at("policy"));
  c.reference_policy = policy_from_json(j.at("reference_policy"));
  c.backbone = backbone_from_json(j.at("backbone"));
  c.adam_policy = adam_from_json(j.at("adam_policy"));
  c.adam_backbone = adam_from_json(j.at("adam_backbone"));
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << checkpoint_to_json(c).dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move " + tmp + " to " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  nlohmann::json j;
  in >> j;
  return checkpoint_from_json(j);
}

TrainResult train(const std::vector<TrainSample>& corpus, const TrainConfig& cfg,
                  const RewardSystem& rewards, const Checkpoint* resume,
                  const std::string& config_hash, const EpochCallback& on_epoch) {
  if (corpus.empty()) throw TrainError("train: empty corpus");
  const int channels = corpus.front().degraded.channels;
  for (const TrainSample& s : corpus) {
    require_same_shape(s.degraded, s.truth, "train corpus");
    if (s.degraded.channels != channels) {
      throw TrainError("train: mixed channel counts in corpus");
    }
  }

  TrainResult result;
  int start_epoch = 0;
  int step = 0;
  int start_step = 0;
  if (resume) {
    result.policy = resume->policy;
    result.reference_policy = resume->reference_policy;
    result.backbone = resume->backbone;
    result.adam_policy = resume->adam_policy;
    result.adam_backbone = resume->adam_backbone;
    start_epoch = resume->next_epoch;
    step = resume->next_step;
    start_step = step;
  } else {
    result.policy = initial_policy_for_seed(cfg.seed);
    result.reference_policy = result.policy;  // frozen at step 0
    result.backbone = BackboneParams::init(channels);
    result.adam_policy = AdamState::zeros(policy_param_count());
    result.adam_backbone = AdamState::zeros(flatten(result.backbone).size());
  }

  auto snapshot_checkpoint = [&](int next_epoch, int next_step) {
    Checkpoint c;
    c.config_hash = config_hash;
    c.next_epoch = next_epoch;
    c.next_step = next_step;
    c.policy = result.policy;
    c.reference_policy = result.reference_policy;
    c.backbone = result.backbone;
    c.adam_policy = result.adam_policy;
    c.adam_backbone = result.adam_backbone;
    return c;
  };

  const PolicySnapshot reference{result.reference_policy, PolicySnapshot::Role::reference};
  const AdamParams policy_adam{cfg.learning_rate * cfg.head_lr_mult, cfg.adam_beta1,
                               cfg.adam_beta2, cfg.adam_eps};
  const AdamParams backbone_adam{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                                 cfg.adam_eps};

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    // per-epoch derived stream keeps resumed runs identical to straight runs
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(epoch) + 1)));
    std::vector<int> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    // explicit Fisher-Yates: std::shuffle draws engine values in an
    // implementation-defined way
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          ((static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53) * static_cast<double>(i));
      std::swap(order[i - 1], order[j]);
    }

    const double lambda_sup = anneal(cfg.lambda_sup_start, cfg.lambda_sup_end, epoch, cfg.epochs);
    const double lambda_cons =
        anneal(cfg.lambda_cons_start, cfg.lambda_cons_end, epoch, cfg.epochs);

    for (int idx : order) {
      const TrainSample& sample = corpus[idx];
      const Image x = center_crop(sample.degraded, cfg.patch_size);
      const Image truth = center_crop(sample.truth, cfg.patch_size);

      // behavior policy snapshot, refreshed every optimization step
      const PolicySnapshot old_snapshot{result.policy, PolicySnapshot::Role::old_policy};
      const RolloutGroup group =
          group_rollout(sample.id, x, truth, sample.kind, old_snapshot.params, result.backbone,
                        rewards, cfg.group_size, cfg.adv_eps, rng);

      const BetaHeadOutput head_out = head_forward(result.policy, extract_features(x));
      const Action det_action = deterministic_action(head_out);
      const TotalLossResult loss =
          total_loss(x, truth, group, result.policy, result.backbone, reference, det_action,
                     lambda_sup, lambda_cons, cfg);

      if (!std::isfinite(loss.value)) {
        throw TrainError("train: non-finite loss at step " + std::to_string(step) +
                         " on sample '" + sample.id + "'");
      }

      if (!loss.policy_grads.finite() || !loss.backbone_grads.finite()) {
        ++result.skipped_steps;
        std::cerr << "[train] step " << step << ": non-finite gradient on sample '"
                  << sample.id << "', update skipped (total skipped "
                  << result.skipped_steps << ")\n";
      } else {
        std::vector<double> p = flatten(result.policy);
        adam_step(p, flatten(loss.policy_grads), result.adam_policy, policy_adam);
        unflatten(p, result.policy);
        std::vector<double> bb = flatten(result.backbone);
        adam_step(bb, flatten(loss.backbone_grads), result.adam_backbone, backbone_adam);
        unflatten(bb, result.backbone);
      }

      StepMetrics m;
      m.step = step;
      m.epoch = epoch;
      m.total_loss = loss.value;
      m.rl_loss = loss.rl.value;
      m.sup_loss = loss.sup.sup_loss;
      m.cons_loss = loss.sup.cons_loss;
      double mean = 0.0;
      for (const Candidate& c : group.candidates) mean += c.reward.combined;
      mean /= static_cast<double>(group.candidates.size());
      double var = 0.0;
      for (const Candidate& c : group.candidates) {
        var += (c.reward.combined - mean) * (c.reward.combined - mean);
      }
      m.reward_mean = mean;
      m.reward_std = std::sqrt(var / static_cast<double>(group.candidates.size()));
      m.kl = loss.rl.kl;
      m.entropy = loss.rl.entropy_value;
      m.clip_frac = loss.rl.clip_fraction;
      result.metrics.push_back(m);
      ++step;
    }
    if (on_epoch) on_epoch(snapshot_checkpoint(epoch + 1, step), result.metrics);
  }
  result.steps_done = step - start_step;
  result.next_step = step;
  return result;
}

}  // namespace restorl
