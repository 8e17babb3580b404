#pragma once

// Run configuration and the artifact-producing commands behind the CLI:
// dataset generation, stage pre-training, variant training, evaluation and
// report rendering. Every stage writes a descriptor from which its
// checkpoint can be regenerated.
//
// Output layout under RunConfig::out_dir:
//   datasets/{train,val,eval}.jsonl (+ manifests)
//   checkpoints/<name>.{json,bin}, checkpoints/<name>.descriptor.json
//   logs/<name>.csv
//   reports/report.{csv,json,md}, reports/gates.json, reports/manifest.json

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlrn/benchmark.hpp"
#include "rlrn/dataset.hpp"
#include "rlrn/training.hpp"

namespace rlrn::pipeline {

namespace fs = std::filesystem;
using model::GhostCombo;
using model::Variant;

struct RunConfig {
  std::uint64_t seed = 1;
  fs::path out_dir = "rlrn-out";
  data::DatasetConfig dataset;  // combos and seed are set per split
  int train_per_combo = 2000;
  int val_per_combo = 300;
  int eval_per_condition = 500;
  std::vector<GhostCombo> train_combos{{3, 0}, {3, 1}, {3, 2}};
  std::vector<int> eval_normals{1, 2, 3, 4, 5, 6};
  std::vector<int> eval_ghosts{0, 1, 2};
  model::ModelDims dims;
  train::TrainConfig lstm_ae, vae, confidence, end_to_end;  // seeds derive from `seed`
  std::vector<Variant> variants = model::all_variants();
  std::vector<std::string> gates = bench::gate_names();
};

void validate(const RunConfig& c);  // ConfigError
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const fs::path& path);  // missing or malformed file -> ConfigError

enum class Stage { LstmAe, Vae, Confidence };
const char* stage_name(Stage s);  // "lstm-ae", "vae", "confidence"
Stage parse_stage(const std::string& name);  // ConfigError

std::string variant_slug(Variant v);  // file-name form, e.g. "rlrn-t"

struct ArtifactRef {
  std::string path;  // relative to out_dir
  std::string checksum;
};

// Everything needed to regenerate one checkpoint.
struct Descriptor {
  std::string name;   // checkpoint stem under checkpoints/
  std::string stage;  // lstm-ae | vae | confidence | end-to-end
  std::string variant;
  std::string wiring;
  model::ModelDims dims;
  train::TrainConfig train;
  std::uint64_t model_seed = 0;
  ArtifactRef train_data, val_data;
  std::vector<GhostCombo> data_policy;  // samples outside these combinations are skipped
  std::vector<std::pair<std::string, ArtifactRef>> init;  // (parameter prefix, source checkpoint blob)
  std::vector<std::string> saved_prefixes;  // empty: every parameter
};

nlohmann::json descriptor_to_json(const Descriptor& d);
Descriptor descriptor_from_json(const nlohmann::json& j);

// Trains from a descriptor and writes <stem>.{json,bin}. Inputs are resolved
// against `base` and must match their recorded checksums (StagingError).
train::TrainLog run_descriptor(const Descriptor& d, const fs::path& base, const fs::path& stem);

// Same parameter bytes and manifest (ignoring the blob file name).
bool checkpoints_identical(const fs::path& a, const fs::path& b);

fs::path dataset_path(const RunConfig& c, const std::string& split);
fs::path checkpoint_stem(const RunConfig& c, const std::string& name);
fs::path descriptor_path(const RunConfig& c, const std::string& name);

void cmd_gen(const RunConfig& c);
train::TrainLog cmd_pretrain(const RunConfig& c, Stage stage);
train::TrainLog cmd_train(const RunConfig& c, Variant v);

struct EvalResult {
  bench::Report report;
  std::vector<bench::GateResult> gates;
  bool gates_pass() const;
};
EvalResult cmd_eval(const RunConfig& c);    // evaluates checkpoints, writes reports/
EvalResult cmd_report(const RunConfig& c);  // re-renders reports/ from report.json

}  // namespace rlrn::pipeline
