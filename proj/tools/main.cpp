#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "json.hpp"
#include "restorl/config.hpp"
#include "restorl/data.hpp"
#include "restorl/grpo.hpp"
#include "restorl/image_io.hpp"

namespace fs = std::filesystem;
using namespace restorl;

namespace {

// exit codes: 0 ok, 1 user error, 2 internal error
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed_override;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) {
    try {
      cfg = load_config(opts.config_path);
    } catch (const std::exception& e) {
      throw UserError(e.what());
    }
  }
  if (!opts.preset.empty()) {
    try {
      apply_preset(cfg, opts.preset);
    } catch (const std::exception& e) {
      throw UserError(e.what());
    }
  }
  if (opts.seed_override) cfg.seed = *opts.seed_override;
  return cfg;
}

void echo_config(const RunConfig& cfg, const fs::path& out_dir) {
  save_config(cfg, (out_dir / "effective_config.json").string());
}

JudgeFn resolve_judge(const RunConfig& cfg, const std::string& endpoint_flag,
                      std::string* mode_out) {
  std::string endpoint = cfg.judge_endpoint;
  if (const char* env = std::getenv("RESTORL_JUDGE_ENDPOINT"); env && *env) endpoint = env;
  if (!endpoint_flag.empty()) endpoint = endpoint_flag;
  if (endpoint.empty()) {
    if (mode_out) *mode_out = "mock";
    return make_mock_judge_fn();
  }
  if (mode_out) *mode_out = endpoint;
  auto judge = std::make_shared<HttpJudge>(
      JudgeEndpoint{endpoint, cfg.judge_timeout_ms, cfg.judge_retries});
  return [judge](const Image& degraded, const Image& restored, const Image& reference) {
    return judge->evaluate(make_judge_request(degraded, restored, reference));
  };
}

RewardSystem make_reward_system(const RunConfig& cfg, const JudgeFn& judge) {
  RewardSystem rs;
  rs.weights = cfg.reward_weights();
  rs.judge = judge;
  return rs;
}

void require_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UserError("cannot create directory " + dir.string() + ": " + ec.message());
}

// deterministic initial model for curation and training start
std::pair<PolicyParams, BackboneParams> initial_model(std::uint64_t seed, int channels) {
  return {initial_policy_for_seed(seed), BackboneParams::init(channels)};
}

int cmd_synth(const CommonOpts& common, const std::string& out_dir, int per_kind, int size) {
  RunConfig cfg = resolve_config(common);
  if (per_kind > 0) cfg.per_kind = per_kind;
  if (size > 0) cfg.image_size = size;
  if (cfg.image_size < 32) {
    throw UserError("--size must be at least 32, got " + std::to_string(cfg.image_size));
  }
  if (cfg.per_kind < 1) throw UserError("--per-kind must be positive");

  const fs::path root(out_dir);
  require_dir(root);

  CorpusManifest manifest;
  manifest.seed = cfg.seed;
  manifest.image_size = cfg.image_size;
  manifest.ratio = cfg.hard_ratio;
  manifest.stratified = cfg.stratified_mining;

  const int sigmas[3] = {15, 25, 50};
  for (std::size_t kind_idx = 0; kind_idx < kAllDegradations.size(); ++kind_idx) {
    const Degradation kind = kAllDegradations[kind_idx];
    const std::string kind_name = to_string(kind);
    require_dir(root / kind_name);
    for (int i = 0; i < cfg.per_kind; ++i) {
      SampleRecord rec;
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", kind_name.c_str(), i);
      rec.id = idbuf;
      rec.kind = kind;
      rec.noise_sigma = (kind == Degradation::Denoise) ? sigmas[i % 3] : 0;

      const std::uint64_t clean_seed = derive_seed(cfg.seed, kind_idx * 2, i);
      const std::uint64_t deg_seed = derive_seed(cfg.seed, kind_idx * 2 + 1, i);
      const Image clean = gen_clean(cfg.image_size, clean_seed);
      const Image degraded = degrade(clean, kind, rec.noise_sigma, deg_seed);

      rec.truth_path = kind_name + "/" + rec.id + "_gt.png";
      rec.degraded_path = kind_name + "/" + rec.id + "_deg.png";
      save_image(clean, (root / rec.truth_path).string());
      save_image(degraded, (root / rec.degraded_path).string());
      manifest.records.push_back(std::move(rec));
    }
  }

  save_manifest(manifest, (root / "manifest.json").string());
  echo_config(cfg, root);
  std::cout << "synth: wrote " << manifest.records.size() << " pairs under " << root
            << "\n";
  return 0;
}

int cmd_mine(const CommonOpts& common, const std::string& corpus_dir, double ratio,
             bool global_mining, const std::string& endpoint_flag) {
  RunConfig cfg = resolve_config(common);
  const fs::path root(corpus_dir);
  const std::string manifest_path = (root / "manifest.json").string();
  if (!fs::exists(manifest_path)) throw UserError("no manifest at " + manifest_path);
  CorpusManifest manifest = load_manifest(manifest_path);

  std::string judge_mode;
  const RewardSystem rewards = make_reward_system(cfg, resolve_judge(cfg, endpoint_flag, &judge_mode));
  auto [policy, backbone] = initial_model(cfg.seed, 3);

  evaluate_baseline(manifest, corpus_dir, policy, backbone, rewards);
  const double use_ratio = ratio > 0.0 ? ratio : cfg.hard_ratio;
  try {
    mine_hard(manifest, use_ratio, !global_mining);
  } catch (const std::invalid_argument& e) {
    throw UserError(e.what());
  }
  manifest.seed = cfg.seed;
  save_manifest(manifest, manifest_path);

  // per-kind reward histograms (10 bins over [0,1]) plus selection counts
  nlohmann::json report;
  report["judge"] = judge_mode;
  report["ratio"] = use_ratio;
  report["stratified"] = !global_mining;
  for (Degradation k : kAllDegradations) {
    const auto idx = manifest.indices_of(k);
    if (idx.empty()) continue;
    std::vector<int> hist(10, 0);
    int selected = 0;
    for (std::size_t i : idx) {
      const SampleRecord& r = manifest.records[i];
      const int bin = std::min(9, static_cast<int>(r.baseline_reward * 10.0));
      hist[bin]++;
      if (r.selected) ++selected;
    }
    report["kinds"][to_string(k)] = {
        {"count", idx.size()}, {"selected", selected}, {"reward_histogram", hist}};
  }
  {
    std::ofstream out((root / "mining_report.json").string());
    out << report.dump(2) << "\n";
  }
  echo_config(cfg, root);

  std::size_t total_selected = 0;
  for (const SampleRecord& r : manifest.records) total_selected += r.selected ? 1 : 0;
  std::cout << "mine: selected " << total_selected << " of " << manifest.records.size()
            << " records (ratio " << use_ratio << (global_mining ? ", global" : ", per kind")
            << ", judge " << judge_mode << ")\n";
  return 0;
}

double mean_psnr_of_kind(const std::vector<TrainSample>& samples, Degradation kind,
                         const PolicyParams& policy, const BackboneParams& backbone) {
  double acc = 0.0;
  int count = 0;
  for (const TrainSample& s : samples) {
    if (s.kind != kind) continue;
    const Image restored = clamp01(restore_deterministic(s.degraded, backbone, policy));
    acc += psnr(restored, s.truth);
    ++count;
  }
  return count ? acc / count : 0.0;
}

int cmd_train(const CommonOpts& common, const std::string& corpus_dir,
              const std::string& out_dir, const std::string& endpoint_flag,
              const std::string& resume_path) {
  RunConfig cfg = resolve_config(common);
  const fs::path root(corpus_dir);
  const fs::path out(out_dir);
  require_dir(out);

  const std::string manifest_path = (root / "manifest.json").string();
  if (!fs::exists(manifest_path)) throw UserError("no manifest at " + manifest_path);
  const CorpusManifest manifest = load_manifest(manifest_path);
  if (!manifest.mined) {
    throw UserError("corpus has not been mined yet; run `restorl mine` first");
  }
  const std::vector<TrainSample> corpus = load_samples(manifest, corpus_dir, true);
  if (corpus.empty()) throw UserError("no selected records in manifest");

  std::string judge_mode;
  const RewardSystem rewards = make_reward_system(cfg, resolve_judge(cfg, endpoint_flag, &judge_mode));
  const TrainConfig tc = cfg.train_config();
  const std::string hash = config_hash(cfg);

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    if (resume->config_hash != hash) {
      throw UserError("checkpoint config hash " + resume->config_hash +
                      " does not match current config " + hash);
    }
  }

  // initial checkpoint: lets eval reproduce the curation baseline exactly
  if (!resume) {
    auto [policy0, backbone0] = initial_model(cfg.seed, corpus.front().degraded.channels);
    Checkpoint init;
    init.config_hash = hash;
    init.policy = policy0;
    init.reference_policy = policy0;
    init.backbone = backbone0;
    init.adam_policy = AdamState::zeros(policy_param_count());
    init.adam_backbone = AdamState::zeros(flatten(backbone0).size());
    save_checkpoint(init, (out / "checkpoint_init.json").string());
  }

  const std::vector<double> psnr_before = [&] {
    auto [p0, b0] = initial_model(cfg.seed, corpus.front().degraded.channels);
    const PolicyParams& p = resume ? resume->policy : p0;
    const BackboneParams& b = resume ? resume->backbone : b0;
    std::vector<double> v;
    for (Degradation k : kAllDegradations) v.push_back(mean_psnr_of_kind(corpus, k, p, b));
    return v;
  }();

  // checkpoint and metrics refresh after every epoch so interrupted runs
  // resume from the last completed epoch with the same config
  const std::string metrics_path = (out / "metrics.csv").string();
  const std::string checkpoint_path = (out / "checkpoint.json").string();

  // keep the already-logged rows when resuming into the same directory
  std::vector<StepMetrics> prior_metrics;
  if (resume && fs::exists(metrics_path)) {
    std::ifstream in(metrics_path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      for (const StepMetrics& m : parse_metrics_csv(buf.str())) {
        if (m.step < resume->next_step) prior_metrics.push_back(m);
      }
    } catch (const std::exception& e) {
      std::cerr << "warning: ignoring unreadable metrics.csv (" << e.what() << ")\n";
      prior_metrics.clear();
    }
  }

  const auto write_metrics = [&](const std::vector<StepMetrics>& metrics) {
    std::ofstream csv(metrics_path);
    if (!csv) throw UserError("cannot write metrics.csv under " + out.string());
    std::vector<StepMetrics> all = prior_metrics;
    all.insert(all.end(), metrics.begin(), metrics.end());
    csv << metrics_csv(all);
  };
  const auto on_epoch = [&](const Checkpoint& ckpt, const std::vector<StepMetrics>& metrics) {
    save_checkpoint(ckpt, checkpoint_path);
    write_metrics(metrics);
  };

  TrainResult result;
  try {
    result = train(corpus, tc, rewards, resume ? &*resume : nullptr, hash, on_epoch);
  } catch (const TrainError& e) {
    throw UserError(e.what());
  }

  if (resume && result.steps_done == 0) {
    std::cout << "train: checkpoint already covers all " << tc.epochs
              << " epochs, nothing to do\n";
    return 0;
  }

  Checkpoint final_ckpt;
  final_ckpt.config_hash = hash;
  final_ckpt.next_epoch = tc.epochs;
  final_ckpt.next_step = result.next_step;
  final_ckpt.policy = result.policy;
  final_ckpt.reference_policy = result.reference_policy;
  final_ckpt.backbone = result.backbone;
  final_ckpt.adam_policy = result.adam_policy;
  final_ckpt.adam_backbone = result.adam_backbone;
  save_checkpoint(final_ckpt, checkpoint_path);

  // summary: first/last epoch mean reward and per-kind psnr deltas
  std::vector<StepMetrics> full_metrics = prior_metrics;
  full_metrics.insert(full_metrics.end(), result.metrics.begin(), result.metrics.end());
  double first_sum = 0.0, last_sum = 0.0;
  int first_n = 0, last_n = 0;
  const int first_epoch = full_metrics.empty() ? 0 : full_metrics.front().epoch;
  const int last_epoch = full_metrics.empty() ? 0 : full_metrics.back().epoch;
  for (const StepMetrics& m : full_metrics) {
    if (m.epoch == first_epoch) {
      first_sum += m.reward_mean;
      ++first_n;
    }
    if (m.epoch == last_epoch) {
      last_sum += m.reward_mean;
      ++last_n;
    }
  }
  nlohmann::json summary;
  summary["judge"] = judge_mode;
  summary["config_hash"] = hash;
  summary["steps"] = result.next_step;
  summary["epochs"] = tc.epochs;
  summary["skipped_steps"] = result.skipped_steps;
  summary["reward_mean_first_epoch"] = first_n ? first_sum / first_n : 0.0;
  summary["reward_mean_last_epoch"] = last_n ? last_sum / last_n : 0.0;
  for (std::size_t i = 0; i < kAllDegradations.size(); ++i) {
    const Degradation k = kAllDegradations[i];
    const double after = mean_psnr_of_kind(corpus, k, result.policy, result.backbone);
    if (psnr_before[i] != 0.0 || after != 0.0) {
      summary["per_kind_psnr_delta"][to_string(k)] = after - psnr_before[i];
    }
  }
  {
    std::ofstream js((out / "summary.json").string());
    js << summary.dump(2) << "\n";
  }
  echo_config(cfg, out);
  std::cout << "train: " << result.steps_done << " steps, reward "
            << summary["reward_mean_first_epoch"].get<double>() << " -> "
            << summary["reward_mean_last_epoch"].get<double>() << ", judge " << judge_mode
            << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& corpus_dir,
             const std::string& checkpoint_path, const std::string& out_dir,
             const std::string& split, const std::string& endpoint_flag) {
  RunConfig cfg = resolve_config(common);
  const fs::path root(corpus_dir);
  const fs::path out(out_dir);
  require_dir(out);

  const CorpusManifest manifest = load_manifest((root / "manifest.json").string());
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(checkpoint_path);
  } catch (const std::exception& e) {
    throw UserError(e.what());
  }

  std::string judge_mode;
  const RewardSystem rewards = make_reward_system(cfg, resolve_judge(cfg, endpoint_flag, &judge_mode));

  bool want_selected, want_unselected;
  if (split == "held-out") {
    want_selected = false;
    want_unselected = true;
  } else if (split == "selected") {
    want_selected = true;
    want_unselected = false;
  } else if (split == "all") {
    want_selected = want_unselected = true;
  } else {
    throw UserError("--split must be held-out, selected or all");
  }

  std::ostringstream csv;
  csv << "id,kind,psnr,ssim,r_gen,r_qwen,r_task,combined\n";
  nlohmann::json per_record = nlohmann::json::array();
  std::map<std::string, std::vector<double>> kind_psnr, kind_ssim, kind_reward;

  for (const SampleRecord& r : manifest.records) {
    if ((r.selected && !want_selected) || (!r.selected && !want_unselected)) continue;
    const Image degraded = load_image((root / r.degraded_path).string());
    const Image truth = load_image((root / r.truth_path).string());
    const Image restored = clamp01(restore_deterministic(degraded, ckpt.backbone, ckpt.policy));
    const double psnr_db = psnr(restored, truth);
    const double ssim_v = ssim(restored, truth);
    const RewardBreakdown b = rewards.score(r.kind, degraded, restored, truth);
    const std::string kind_name = to_string(r.kind);
    csv << r.id << ',' << kind_name << ',' << psnr_db << ',' << ssim_v << ',' << b.r_gen
        << ',' << b.r_qwen << ',' << b.r_task << ',' << b.combined << "\n";
    nlohmann::json rec = reward_report(r.id, r.kind, b);
    rec["psnr"] = psnr_db;
    rec["ssim"] = ssim_v;
    per_record.push_back(std::move(rec));
    kind_psnr[kind_name].push_back(psnr_db);
    kind_ssim[kind_name].push_back(ssim_v);
    kind_reward[kind_name].push_back(b.combined);
  }
  if (per_record.empty()) throw UserError("eval: split '" + split + "' matched no records");

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  nlohmann::json aggregates;
  double psnr_acc = 0.0, ssim_acc = 0.0, reward_acc = 0.0;
  for (const auto& [kind_name, values] : kind_psnr) {
    const double kp = mean_of(values);
    const double ks = mean_of(kind_ssim[kind_name]);
    const double kr = mean_of(kind_reward[kind_name]);
    aggregates["per_kind"][kind_name] = {{"psnr", kp}, {"ssim", ks}, {"reward", kr}};
    psnr_acc += kp;
    ssim_acc += ks;
    reward_acc += kr;
  }
  const double kinds = static_cast<double>(kind_psnr.size());
  aggregates["average"] = {{"psnr", psnr_acc / kinds},
                           {"ssim", ssim_acc / kinds},
                           {"reward", reward_acc / kinds}};
  aggregates["split"] = split;
  aggregates["judge"] = judge_mode;
  aggregates["records"] = per_record;

  {
    std::ofstream f((out / "eval.csv").string());
    f << csv.str();
  }
  {
    std::ofstream f((out / "eval.json").string());
    f << aggregates.dump(2) << "\n";
  }
  echo_config(cfg, out);
  std::cout << "eval: " << per_record.size() << " records, avg psnr "
            << aggregates["average"]["psnr"].get<double>() << " dB\n";
  return 0;
}

int cmd_report(const std::string& metrics_path, const std::string& out_dir) {
  std::ifstream in(metrics_path);
  if (!in) throw UserError("cannot open metrics file " + metrics_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::vector<StepMetrics> rows;
  try {
    rows = parse_metrics_csv(buffer.str());
  } catch (const std::exception& e) {
    throw UserError(e.what());
  }
  if (rows.empty()) throw UserError("metrics file has no data rows: " + metrics_path);

  const fs::path out(out_dir);
  require_dir(out);

  std::map<int, std::vector<const StepMetrics*>> by_epoch;
  for (const StepMetrics& m : rows) by_epoch[m.epoch].push_back(&m);

  auto stats = [](const std::vector<const StepMetrics*>& v, auto field) {
    double mean = 0.0;
    for (const StepMetrics* m : v) mean += field(*m);
    mean /= static_cast<double>(v.size());
    double var = 0.0;  // population convention over the epoch's steps
    for (const StepMetrics* m : v) var += (field(*m) - mean) * (field(*m) - mean);
    return std::pair<double, double>{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };

  std::ostringstream csv;
  csv << "epoch,steps,reward_mean,reward_std,total_loss_mean,total_loss_std\n";
  nlohmann::json series;
  for (const auto& [epoch, steps] : by_epoch) {
    const auto [rm, rs] = stats(steps, [](const StepMetrics& m) { return m.reward_mean; });
    const auto [lm, ls] = stats(steps, [](const StepMetrics& m) { return m.total_loss; });
    csv << epoch << ',' << steps.size() << ',' << rm << ',' << rs << ',' << lm << ',' << ls
        << "\n";
    series["epoch"].push_back(epoch);
    series["reward_mean"].push_back(rm);
    series["reward_std"].push_back(rs);
    series["total_loss_mean"].push_back(lm);
    series["total_loss_std"].push_back(ls);
  }
  {
    std::ofstream f((out / "report.csv").string());
    f << csv.str();
  }
  {
    std::ofstream f((out / "report.json").string());
    f << series.dump(2) << "\n";
  }
  std::cout << "report: " << by_epoch.size() << " epochs aggregated\n";
  return 0;
}

int cmd_judge_check(const CommonOpts& common, const std::string& endpoint_flag,
                    bool print_prompt) {
  RunConfig cfg = resolve_config(common);
  if (print_prompt) {
    std::cout << build_prompt();
    return 0;
  }
  std::string judge_mode;
  const JudgeFn judge = resolve_judge(cfg, endpoint_flag, &judge_mode);
  const Image truth = gen_clean(32, cfg.seed);
  const Image degraded = degrade(truth, Degradation::Denoise, 25, cfg.seed);
  const JudgeVerdict v = judge(degraded, degraded, truth);
  std::cout << "judge: " << judge_mode << "\nscore: " << v.score << " (rescaled "
            << v.rescaled << ")\nlabel: " << v.degradation_label
            << "\nfallback: " << (v.fallback ? "yes" : "no") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic frequency-restoration training and evaluation"};
  app.require_subcommand(1);

  CommonOpts common;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file");
    sub->add_option("--preset", common.preset, "named preset (smoke)");
    sub->add_option("--seed", seed_flag, "seed override")->each([&](const std::string&) {
      common.seed_override = seed_flag;
    });
  };

  // synth
  std::string out_dir, corpus_dir, endpoint_flag, checkpoint_path, metrics_path;
  std::string split = "held-out", resume_path;
  int per_kind = 0, size = 0;
  double ratio = 0.0;
  bool global_mining = false, print_prompt = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic degradation corpus");
  synth->add_option("--out", out_dir, "output corpus directory")->required();
  synth->add_option("--per-kind", per_kind, "pairs per degradation kind")
      ->check(CLI::PositiveNumber);
  synth->add_option("--size", size, "square image size (>= 32)")->check(CLI::PositiveNumber);
  add_common(synth);

  CLI::App* mine = app.add_subcommand("mine", "score the corpus and select hard samples");
  mine->add_option("--corpus", corpus_dir, "corpus directory")->required();
  mine->add_option("--ratio", ratio, "hard fraction in (0,1]")
      ->check(CLI::Range(1e-9, 1.0));
  mine->add_flag("--global-mining", global_mining, "mine across kinds instead of per kind");
  mine->add_option("--judge-endpoint", endpoint_flag, "expert judge HTTP endpoint");
  add_common(mine);

  CLI::App* train_cmd = app.add_subcommand("train", "post-train on the mined hard subset");
  train_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--judge-endpoint", endpoint_flag, "expert judge HTTP endpoint");
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  add_common(train_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  eval_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--out", out_dir, "output directory")->required();
  eval_cmd->add_option("--split", split, "held-out (default), selected or all");
  eval_cmd->add_option("--judge-endpoint", endpoint_flag, "expert judge HTTP endpoint");
  add_common(eval_cmd);

  CLI::App* report = app.add_subcommand("report", "aggregate per-epoch training curves");
  report->add_option("--metrics", metrics_path, "metrics.csv from train")->required();
  report->add_option("--out", out_dir, "output directory")->required();

  CLI::App* judge_check = app.add_subcommand("judge-check", "judge diagnostics");
  judge_check->add_option("--endpoint", endpoint_flag, "judge HTTP endpoint");
  judge_check->add_flag("--print-prompt", print_prompt, "print the verifier prompt and exit");
  add_common(judge_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, out_dir, per_kind, size);
    if (mine->parsed()) return cmd_mine(common, corpus_dir, ratio, global_mining, endpoint_flag);
    if (train_cmd->parsed())
      return cmd_train(common, corpus_dir, out_dir, endpoint_flag, resume_path);
    if (eval_cmd->parsed())
      return cmd_eval(common, corpus_dir, checkpoint_path, out_dir, split, endpoint_flag);
    if (report->parsed()) return cmd_report(metrics_path, out_dir);
    if (judge_check->parsed()) return cmd_judge_check(common, endpoint_flag, print_prompt);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
