#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlrn/sample.hpp"

namespace rlrn::data {

namespace fs = std::filesystem;

std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(std::string_view text);  // throws CorruptDatasetError

nlohmann::json sample_to_json(const SceneSample& s);
SceneSample sample_from_json(const nlohmann::json& j);  // throws CorruptDatasetError

struct Combination {
  int n_normal = 3;
  int n_ghost = 0;
  int count = 0;
  friend bool operator==(const Combination&, const Combination&) = default;
};

struct ComboRecord {
  int n_normal = 0;
  int n_ghost = 0;
  int count = 0;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::string format = "rlrn-dataset-v1";
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  std::string checksum;     // FNV-1a 64 of the whole data file, hex
  std::string config_hash;  // FNV-1a 64 of the canonical generating config, hex
  std::vector<ComboRecord> combos;
};

fs::path manifest_path_for(const fs::path& data_path);
void write_manifest(const fs::path& data_path, const DatasetManifest& m);
DatasetManifest read_manifest(const fs::path& data_path);  // throws CorruptDatasetError / StagingError
std::string file_checksum(const fs::path& path);

// JSON-lines writer; the data file appears atomically on finish().
class DatasetWriter {
 public:
  explicit DatasetWriter(fs::path path);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void write(const SceneSample& s);
  // Fills records / bytes / checksum and writes the manifest.
  DatasetManifest finish(DatasetManifest manifest);

 private:
  fs::path path_, tmp_;
  std::ofstream out_;
  std::uint64_t records_ = 0;
  bool finished_ = false;
};

// Streams samples one line at a time. The constructor checks the manifest
// and the whole-file checksum (in fixed-size chunks) before any record is
// handed out.
class DatasetReader {
 public:
  explicit DatasetReader(fs::path path);
  bool next(SceneSample& out);
  const DatasetManifest& manifest() const { return manifest_; }
  std::uint64_t records_read() const { return read_; }

 private:
  fs::path path_;
  DatasetManifest manifest_;
  std::ifstream in_;
  std::string line_;
  std::uint64_t read_ = 0;
};

std::vector<SceneSample> read_dataset(const fs::path& path);
void for_each_sample(const fs::path& path, const std::function<void(const SceneSample&)>& fn);

struct DatasetConfig {
  sim::WorldConfig world;
  int n_vehicles = 48;
  int warmup_steps = 50;
  int samples_per_episode = 8;
  int sample_stride = 25;  // steps between samples drawn from one episode
  GhostSpec ghost;
  SampleConfig sample;
  std::vector<Combination> combos;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Canonical fingerprint of everything that influences generated bytes
// (thread count excluded).
std::string config_hash(const DatasetConfig& config);

// Samples for one combination, in a fixed order that depends only on
// (config, combo seed). Episodes lacking enough neighbours are skipped.
std::vector<SceneSample> generate_combination(const DatasetConfig& config, const Combination& combo, std::uint64_t seed);

DatasetManifest build_dataset(const DatasetConfig& config, const fs::path& path);

}  // namespace rlrn::data
