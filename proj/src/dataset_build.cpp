#include <algorithm>
#include <cstdio>
#include <future>

#include "rlrn/config_json.hpp"
#include "rlrn/dataset.hpp"
#include "rlrn/errors.hpp"
#include "rlrn/rng.hpp"

namespace rlrn::data {

namespace {

// Every usable sample from one recorded episode, in slot order.
std::vector<SceneSample> episode_samples(const DatasetConfig& cfg, const Combination& combo, std::uint64_t episode_seed) {
  const int h = cfg.sample.history;
  const int length = h + (cfg.samples_per_episode - 1) * cfg.sample_stride;
  sim::RecordOptions opts;
  opts.warmup_steps = cfg.warmup_steps;
  const EpisodeLog log = sim::record_episode(cfg.world, cfg.n_vehicles, length, episode_seed, opts);

  std::vector<SceneSample> out;
  GhostSpec ghost = cfg.ghost;
  ghost.count = combo.n_ghost;
  for (int k = 0; k < cfg.samples_per_episode; ++k) {
    const int t = h - 1 + k * cfg.sample_stride;
    const std::uint64_t sample_seed = derive_seed(episode_seed, static_cast<std::uint64_t>(k));
    try {
      const EpisodeLog window = inject_ghosts(slice_episode(log, t - h + 1, t + 1), ghost, h - 1, sample_seed);
      SceneSample s = assemble_sample(window, h - 1, combo.n_normal, cfg.sample);
      s.seed = sample_seed;
      rasterize_all(s, cfg.sample.raster);
      out.push_back(std::move(s));
    } catch (const SelectionError&) {
      // too few neighbours in range at this slot
    } catch (const PlacementError&) {
    }
  }
  return out;
}

}  // namespace

std::string config_hash(const DatasetConfig& config) {
  json j = config;
  j.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

std::vector<SceneSample> generate_combination(const DatasetConfig& config, const Combination& combo, std::uint64_t seed) {
  if (combo.count < 0 || combo.n_normal < 0) throw UsageError("generate_combination: negative count");
  if (config.samples_per_episode < 1 || config.sample_stride < 1) throw UsageError("generate_combination: bad episode layout");
  if (combo.n_ghost > config.ghost.max_count)
    throw UsageError("generate_combination: n_ghost above configured maximum");
  std::vector<SceneSample> out;
  out.reserve(static_cast<std::size_t>(combo.count));
  const int threads = std::max(1, config.threads);
  // Bounded so an impossible combination fails instead of spinning.
  const std::uint64_t max_episodes = 20 + 10ULL * static_cast<std::uint64_t>(combo.count);
  std::uint64_t episode = 0;
  while (static_cast<int>(out.size()) < combo.count) {
    if (episode >= max_episodes)
      throw SelectionError("generate_combination: could not collect " + std::to_string(combo.count) +
                           " samples with n_normal = " + std::to_string(combo.n_normal));
    std::vector<std::future<std::vector<SceneSample>>> batch;
    for (int k = 0; k < threads; ++k, ++episode)
      batch.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, episode_samples,
                                 std::cref(config), std::cref(combo), derive_seed(seed, episode)));
    for (auto& f : batch)
      for (auto& s : f.get())
        if (static_cast<int>(out.size()) < combo.count) out.push_back(std::move(s));
  }
  return out;
}

DatasetManifest build_dataset(const DatasetConfig& config, const fs::path& path) {
  DatasetManifest manifest;
  manifest.config_hash = config_hash(config);
  DatasetWriter writer(path);
  for (const Combination& combo : config.combos) {
    const std::uint64_t seed =
        derive_seed(config.seed, "n" + std::to_string(combo.n_normal) + "g" + std::to_string(combo.n_ghost));
    for (const SceneSample& s : generate_combination(config, combo, seed)) writer.write(s);
    manifest.combos.push_back({combo.n_normal, combo.n_ghost, combo.count, seed});
  }
  return writer.finish(manifest);
}

}  // namespace rlrn::data
