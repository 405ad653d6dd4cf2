#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "restorl/backbone.hpp"
#include "restorl/grpo.hpp"
#include "restorl/image.hpp"
#include "restorl/rewards.hpp"

namespace restorl {

/// Procedural clean scene: layered smooth gradients, checkerboards,
/// blur-filtered noise and random rectangles, normalized into [0.02, 0.98].
/// Deterministic per seed. size >= 32.
Image gen_clean(int size, std::uint64_t seed);

/// Stable per-image seed derivation for corpus generation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Applies one parametric degradation. noise_sigma (15/25/50) only matters
/// for Denoise; other kinds draw their parameters from the seed.
Image degrade(const Image& clean, Degradation kind, int noise_sigma, std::uint64_t seed);

struct SampleRecord {
  std::string id;
  Degradation kind = Degradation::Denoise;
  int noise_sigma = 0;
  std::string degraded_path;  // relative to the corpus root
  std::string truth_path;
  double baseline_reward = -1.0;  // -1 marks "not yet evaluated"
  bool selected = false;
};

struct CorpusManifest {
  int version = 1;
  std::uint64_t seed = 0;
  int image_size = 0;
  double ratio = 0.3;
  bool stratified = true;
  bool mined = false;
  std::vector<SampleRecord> records;

  std::vector<std::size_t> indices_of(Degradation kind) const;
};

nlohmann::json manifest_to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const nlohmann::json& j);

/// Atomic write (temp file + rename).
void save_manifest(const CorpusManifest& m, const std::string& path);
CorpusManifest load_manifest(const std::string& path);

/// Scores every record with the deterministic restoration of the given
/// model under the composite reward. A restoration failure tags the record
/// with reward 0 and a stderr warning instead of aborting.
void evaluate_baseline(CorpusManifest& manifest, const std::string& corpus_root,
                       const PolicyParams& policy, const BackboneParams& backbone,
                       const RewardSystem& rewards);

/// Selects the worst-scoring ceil(ratio * count) records, per degradation
/// kind when stratified (default) or over the whole corpus otherwise.
/// Ties order by id. Requires every record to be scored; ratio in (0, 1].
void mine_hard(CorpusManifest& manifest, double ratio, bool stratified);

/// Loads the images of the given records into training samples.
std::vector<TrainSample> load_samples(const CorpusManifest& manifest,
                                      const std::string& corpus_root, bool selected_only);

}  // namespace restorl
