#include "restorl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "restorl/image_io.hpp"

namespace restorl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_open(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
  return lo + static_cast<int>(uniform_open(rng) * (hi - lo + 1));
}

double standard_normal(std::mt19937_64& rng) {
  while (true) {
    const double u = 2.0 * uniform_open(rng) - 1.0;
    const double v = 2.0 * uniform_open(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

// separable box blur, replicate borders, run per channel
void box_blur(Image& img, int radius, int passes) {
  if (radius <= 0) return;
  Image tmp = img;
  for (int pass = 0; pass < passes; ++pass) {
    // horizontal
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < img.channels; ++c) {
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            acc += img.at(y, std::clamp(x + k, 0, img.width - 1), c);
          }
          tmp.at(y, x, c) = acc / (2 * radius + 1);
        }
      }
    }
    // vertical
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < img.channels; ++c) {
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            acc += tmp.at(std::clamp(y + k, 0, img.height - 1), x, c);
          }
          img.at(y, x, c) = acc / (2 * radius + 1);
        }
      }
    }
  }
}

void gaussian_blur(Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += kernel[k + radius];
  }
  for (double& w : kernel) w /= sum;

  Image tmp = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * img.at(y, std::clamp(x + k, 0, img.width - 1), c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * tmp.at(std::clamp(y + k, 0, img.height - 1), x, c);
        }
        img.at(y, x, c) = acc;
      }
    }
  }
}

void clamp_inplace(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(stream * 0x100000001b3ULL + index));
}

Image gen_clean(int size, std::uint64_t seed) {
  if (size < 32) {
    throw std::invalid_argument("gen_clean: size must be >= 32, got " + std::to_string(size));
  }
  std::mt19937_64 rng(splitmix64(seed));
  Image img(size, size, 3);

  // smooth base gradient, independent slope per channel
  for (int c = 0; c < 3; ++c) {
    const double base = uniform(rng, 0.2, 0.8);
    const double dx = uniform(rng, -0.5, 0.5);
    const double dy = uniform(rng, -0.5, 0.5);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        img.at(y, x, c) = base + dx * (static_cast<double>(x) / size - 0.5) +
                          dy * (static_cast<double>(y) / size - 0.5);
      }
    }
  }

  // checkerboard layer
  if (uniform_open(rng) < 0.8) {
    const int period = uniform_int(rng, 4, std::max(4, size / 4));
    const double amp = uniform(rng, 0.15, 0.45);
    const int phase = uniform_int(rng, 0, period - 1);
    std::array<double, 3> tint{uniform(rng, 0.5, 1.0), uniform(rng, 0.5, 1.0),
                               uniform(rng, 0.5, 1.0)};
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const int cell = (((y + phase) / period) + ((x + phase) / period)) % 2;
        const double v = (cell ? amp : -amp);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += v * tint[c];
      }
    }
  }

  // filtered-noise texture
  {
    Image noise(size, size, 3);
    const double amp = uniform(rng, 0.2, 0.5);
    for (double& v : noise.data) v = uniform(rng, -1.0, 1.0);
    box_blur(noise, uniform_int(rng, 1, 2), 2);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] += amp * noise.data[i];
  }

  // random rectangles
  const int rects = uniform_int(rng, 2, 5);
  for (int r = 0; r < rects; ++r) {
    const int rw = uniform_int(rng, size / 8, size / 2);
    const int rh = uniform_int(rng, size / 8, size / 2);
    const int x0 = uniform_int(rng, 0, size - rw);
    const int y0 = uniform_int(rng, 0, size - rh);
    const double alpha = uniform(rng, 0.4, 0.9);
    std::array<double, 3> color{uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0),
                                uniform(rng, 0.0, 1.0)};
    for (int y = y0; y < y0 + rh; ++y) {
      for (int x = x0; x < x0 + rw; ++x) {
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) = (1.0 - alpha) * img.at(y, x, c) + alpha * color[c];
        }
      }
    }
  }

  // normalize to [0.02, 0.98]
  double lo = img.data[0], hi = img.data[0];
  for (double v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  if (span > 1e-12) {
    for (double& v : img.data) v = 0.02 + 0.96 * (v - lo) / span;
  } else {
    for (double& v : img.data) v = 0.5;
  }
  return img;
}

Image degrade(const Image& clean, Degradation kind, int noise_sigma, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0xdeadbeefULL));
  Image out = clean;

  switch (kind) {
    case Degradation::Denoise: {
      if (noise_sigma != 15 && noise_sigma != 25 && noise_sigma != 50) {
        throw std::invalid_argument("degrade: denoise sigma must be 15, 25 or 50");
      }
      const double sigma = noise_sigma / 255.0;
      for (double& v : out.data) v += sigma * standard_normal(rng);
      clamp_inplace(out);
      return out;
    }

    case Degradation::Derain: {
      // sparse impulses smeared into near-vertical streaks
      Image layer(clean.height, clean.width, 1);
      const double angle_deg = uniform(rng, 70.0, 110.0);
      const int count = std::max(6, static_cast<int>(uniform(rng, 0.015, 0.035) *
                                                     clean.pixel_count()));
      for (int i = 0; i < count; ++i) {
        const double cy = uniform(rng, 0.0, clean.height - 1.0);
        const double cx = uniform(rng, 0.0, clean.width - 1.0);
        const double len = uniform(rng, 8.0, 24.0);
        const double intensity = uniform(rng, 0.2, 0.6);
        const double a = (angle_deg + uniform(rng, -3.0, 3.0)) * M_PI / 180.0;
        const double dy = std::sin(a), dx = std::cos(a);
        for (double t = -len / 2.0; t <= len / 2.0; t += 0.5) {
          const int py = static_cast<int>(std::lround(cy + t * dy));
          const int px = static_cast<int>(std::lround(cx + t * dx));
          if (py < 0 || py >= clean.height || px < 0 || px >= clean.width) continue;
          double& cell = layer.at(py, px, 0);
          cell = std::max(cell, intensity);
        }
      }
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
          for (int c = 0; c < 3; ++c) out.at(y, x, c) += layer.at(y, x, 0);
        }
      }
      clamp_inplace(out);
      return out;
    }

    case Degradation::Dehaze: {
      // I = J*t + A*(1 - t), transmission from a smooth random field
      const double airlight = uniform(rng, 0.7, 0.95);
      const int grid = 4;
      std::vector<double> coarse(static_cast<std::size_t>(grid) * grid);
      for (double& v : coarse) v = uniform_open(rng);
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
          // bilinear upsample of the coarse field
          const double fy = static_cast<double>(y) / (out.height - 1) * (grid - 1);
          const double fx = static_cast<double>(x) / (out.width - 1) * (grid - 1);
          const int y0 = std::min(static_cast<int>(fy), grid - 2);
          const int x0 = std::min(static_cast<int>(fx), grid - 2);
          const double wy = fy - y0, wx = fx - x0;
          const double field =
              (1 - wy) * ((1 - wx) * coarse[y0 * grid + x0] + wx * coarse[y0 * grid + x0 + 1]) +
              wy * ((1 - wx) * coarse[(y0 + 1) * grid + x0] +
                    wx * coarse[(y0 + 1) * grid + x0 + 1]);
          const double t = 0.3 + 0.5 * field;
          for (int c = 0; c < 3; ++c) {
            out.at(y, x, c) = clean.at(y, x, c) * t + airlight * (1.0 - t);
          }
        }
      }
      clamp_inplace(out);
      return out;
    }

    case Degradation::Deblur: {
      gaussian_blur(out, uniform(rng, 1.0, 2.5));
      clamp_inplace(out);
      return out;
    }

    case Degradation::LowLight: {
      const double scale = uniform(rng, 0.1, 0.4);
      const double gamma = uniform(rng, 1.5, 2.5);
      const double noise = 5.0 / 255.0;
      for (double& v : out.data) {
        v = std::pow(std::max(0.0, v * scale), gamma) + noise * standard_normal(rng);
      }
      clamp_inplace(out);
      return out;
    }
  }
  throw std::invalid_argument("degrade: bad degradation kind");
}

std::vector<std::size_t> CorpusManifest::indices_of(Degradation kind) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].kind == kind) out.push_back(i);
  }
  return out;
}

nlohmann::json manifest_to_json(const CorpusManifest& m) {
  nlohmann::json records = nlohmann::json::array();
  for (const SampleRecord& r : m.records) {
    records.push_back({{"id", r.id},
                       {"kind", to_string(r.kind)},
                       {"noise_sigma", r.noise_sigma},
                       {"degraded_path", r.degraded_path},
                       {"truth_path", r.truth_path},
                       {"baseline_reward", r.baseline_reward},
                       {"selected", r.selected}});
  }
  nlohmann::json per_kind;
  for (Degradation k : kAllDegradations) {
    per_kind[to_string(k)] = m.indices_of(k).size();
  }
  return nlohmann::json{{"version", m.version},   {"seed", m.seed},
                        {"image_size", m.image_size}, {"ratio", m.ratio},
                        {"stratified", m.stratified}, {"mined", m.mined},
                        {"per_kind_counts", per_kind}, {"records", records}};
}

CorpusManifest manifest_from_json(const nlohmann::json& j) {
  CorpusManifest m;
  j.at("version").get_to(m.version);
  if (m.version != 1) {
    throw std::runtime_error("unsupported manifest version " + std::to_string(m.version));
  }
  j.at("seed").get_to(m.seed);
  j.at("image_size").get_to(m.image_size);
  j.at("ratio").get_to(m.ratio);
  j.at("stratified").get_to(m.stratified);
  j.at("mined").get_to(m.mined);
  for (const auto& rj : j.at("records")) {
    SampleRecord r;
    rj.at("id").get_to(r.id);
    r.kind = degradation_from_string(rj.at("kind").get<std::string>());
    rj.at("noise_sigma").get_to(r.noise_sigma);
    rj.at("degraded_path").get_to(r.degraded_path);
    rj.at("truth_path").get_to(r.truth_path);
    rj.at("baseline_reward").get_to(r.baseline_reward);
    rj.at("selected").get_to(r.selected);
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const CorpusManifest& m, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << manifest_to_json(m).dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move " + tmp + " into place at " + path);
  }
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  nlohmann::json j;
  in >> j;
  return manifest_from_json(j);
}

void evaluate_baseline(CorpusManifest& manifest, const std::string& corpus_root,
                       const PolicyParams& policy, const BackboneParams& backbone,
                       const RewardSystem& rewards) {
  namespace fs = std::filesystem;
  for (SampleRecord& r : manifest.records) {
    try {
      const Image degraded = load_image((fs::path(corpus_root) / r.degraded_path).string());
      const Image truth = load_image((fs::path(corpus_root) / r.truth_path).string());
      const Image restored = clamp01(restore_deterministic(degraded, backbone, policy));
      r.baseline_reward = rewards.score(r.kind, degraded, restored, truth).combined;
    } catch (const std::exception& e) {
      std::cerr << "[mine] baseline evaluation failed for '" << r.id << "': " << e.what()
                << " (scored 0)\n";
      r.baseline_reward = 0.0;
    }
  }
}

void mine_hard(CorpusManifest& manifest, double ratio, bool stratified) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("mine_hard: ratio must lie in (0, 1], got " +
                                std::to_string(ratio));
  }
  for (const SampleRecord& r : manifest.records) {
    if (r.baseline_reward < 0.0) {
      throw std::runtime_error("mine_hard: record '" + r.id + "' has no baseline score");
    }
  }
  for (SampleRecord& r : manifest.records) r.selected = false;

  auto select_worst = [&](std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const SampleRecord& ra = manifest.records[a];
      const SampleRecord& rb = manifest.records[b];
      if (ra.baseline_reward != rb.baseline_reward) {
        return ra.baseline_reward < rb.baseline_reward;
      }
      return ra.id < rb.id;
    });
    const std::size_t take =
        static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < take && i < idx.size(); ++i) {
      manifest.records[idx[i]].selected = true;
    }
  };

  if (stratified) {
    for (Degradation k : kAllDegradations) {
      auto idx = manifest.indices_of(k);
      if (!idx.empty()) select_worst(std::move(idx));
    }
  } else {
    std::vector<std::size_t> all(manifest.records.size());
    std::iota(all.begin(), all.end(), 0);
    select_worst(std::move(all));
  }
  manifest.ratio = ratio;
  manifest.stratified = stratified;
  manifest.mined = true;
}

std::vector<TrainSample> load_samples(const CorpusManifest& manifest,
                                      const std::string& corpus_root, bool selected_only) {
  namespace fs = std::filesystem;
  std::vector<TrainSample> samples;
  for (const SampleRecord& r : manifest.records) {
    if (selected_only && !r.selected) continue;
    TrainSample s;
    s.id = r.id;
    s.kind = r.kind;
    s.noise_sigma = r.noise_sigma;
    s.degraded = load_image((fs::path(corpus_root) / r.degraded_path).string());
    s.truth = load_image((fs::path(corpus_root) / r.truth_path).string());
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace restorl
