#include "rlrn/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "rlrn/checkpoint.hpp"
#include "rlrn/config_json.hpp"
#include "rlrn/errors.hpp"

namespace rlrn::model {

void to_json(nlohmann::json& j, const ModelDims& d) {
  j = {{"history", d.history},
       {"lstm_hidden", d.lstm_hidden},
       {"raster_size", d.raster_size},
       {"conv1", d.conv1},
       {"conv2", d.conv2},
       {"conv3", d.conv3},
       {"behaviour", d.behaviour},
       {"conf_heads", d.conf_heads},
       {"conf_head_dim", d.conf_head_dim},
       {"rel_heads", d.rel_heads},
       {"rel_head_dim", d.rel_head_dim},
       {"vae_latent", d.vae_latent},
       {"route_points", d.route_points},
       {"route_hidden", d.route_hidden},
       {"route_dim", d.route_dim},
       {"action_hidden", d.action_hidden},
       {"classifier_hidden", d.classifier_hidden},
       {"graph_range", d.graph_range},
       {"position_scale", d.position_scale},
       {"velocity_scale", d.velocity_scale},
       {"route_scale", d.route_scale},
       {"normalized_attention", d.normalized_attention}};
}

void from_json(const nlohmann::json& j, ModelDims& d) {
  StrictReader r(j, "");
  r.get("history", d.history).get("lstm_hidden", d.lstm_hidden).get("raster_size", d.raster_size);
  r.get("conv1", d.conv1).get("conv2", d.conv2).get("conv3", d.conv3).get("behaviour", d.behaviour);
  r.get("conf_heads", d.conf_heads).get("conf_head_dim", d.conf_head_dim);
  r.get("rel_heads", d.rel_heads).get("rel_head_dim", d.rel_head_dim).get("vae_latent", d.vae_latent);
  r.get("route_points", d.route_points).get("route_hidden", d.route_hidden).get("route_dim", d.route_dim);
  r.get("action_hidden", d.action_hidden).get("classifier_hidden", d.classifier_hidden);
  r.get("graph_range", d.graph_range).get("position_scale", d.position_scale);
  r.get("velocity_scale", d.velocity_scale).get("route_scale", d.route_scale);
  r.get("normalized_attention", d.normalized_attention);
  r.finish();
}

void to_json(nlohmann::json& j, const GhostCombo& c) { j = nlohmann::json::array({c.n_normal, c.n_ghost}); }

void from_json(const nlohmann::json& j, GhostCombo& c) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(": expected [n_normal, n_ghost]");
  c = {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace rlrn::model

namespace rlrn::train {

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lr", c.lr}, {"batch", c.batch}, {"epochs", c.epochs}, {"seed", c.seed}, {"vae_beta", c.vae_beta}, {"keep_best", c.keep_best}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  StrictReader r(j, "");
  r.get("lr", c.lr).get("batch", c.batch).get("epochs", c.epochs).get("seed", c.seed);
  r.get("vae_beta", c.vae_beta).get("keep_best", c.keep_best);
  r.finish();
}

}  // namespace rlrn::train

namespace rlrn::pipeline {

using nlohmann::json;

namespace {

// Stage configs in a run file omit the seed; it is derived from the run seed.
void read_stage(const json& j, const char* key, train::TrainConfig& c) {
  if (!j.contains(key)) return;
  if (j.at(key).contains("seed")) throw ConfigError(std::string("config.train.") + key + ": seed derives from the run seed");
  StrictReader(j, "config.train").get(key, c);
}

json stage_json(const train::TrainConfig& c) {
  json j = c;
  j.erase("seed");
  return j;
}

bool clean(const GhostCombo& g) { return g.n_ghost == 0; }

std::vector<GhostCombo> filter(const std::vector<GhostCombo>& in, bool ghosts) {
  std::vector<GhostCombo> out;
  for (const auto& g : in)
    if (clean(g) != ghosts) out.push_back(g);
  return out;
}

std::string rel(const RunConfig& c, const fs::path& p) { return fs::relative(p, c.out_dir).generic_string(); }

ArtifactRef dataset_ref(const RunConfig& c, const std::string& split) {
  const fs::path p = dataset_path(c, split);
  if (!fs::exists(p)) throw StagingError("missing dataset " + p.string() + " (run `gen` first)");
  return {rel(c, p), data::file_checksum(p)};
}

ArtifactRef checkpoint_ref(const RunConfig& c, const std::string& name) {
  const fs::path stem = checkpoint_stem(c, name);
  return {rel(c, stem), data::file_checksum(blob_path(stem))};
}

void require_checkpoints(const RunConfig& c, const std::vector<std::string>& names) {
  std::vector<std::string> missing;
  for (const auto& n : names)
    if (!checkpoint_exists(checkpoint_stem(c, n))) missing.push_back(n);
  if (missing.empty()) return;
  std::string msg = "missing prerequisites:";
  for (const auto& n : missing) {
    const bool stage = n == "lstm-ae" || n == "vae" || n == "confidence";
    msg += " checkpoints/" + n + " (run `" + (stage ? "pretrain " : "train ") + n + "`)";
  }
  throw StagingError(msg);
}

void verify(const fs::path& file, const std::string& checksum) {
  const std::string actual = data::file_checksum(file);
  if (actual != checksum)
    throw StagingError(file.string() + " has checksum " + actual + ", descriptor expects " + checksum);
}

std::string wiring(Variant v) {
  switch (v) {
    case Variant::CilNet:
      return "head([z_0, r_m, r_n]); no graph, no confidence stage";
    case Variant::NoConfidence:
      return "p_i = v_i; relation graph over p; head([v_0, r_m, r_o, r_n])";
    case Variant::NoResidual:
      return "p_i = k_i; relation graph over p; head([v_0, r_m, r_o, r_n])";
    case Variant::FrozenConfidence:
      return "p_i = [k_i, v_i] with cnn/fuse/conf frozen at pre-trained values; head([v_0, r_m, r_o, r_n])";
    default:
      return "p_i = [k_i, v_i]; relation graph over p; head([v_0, r_m, r_o, r_n])";
  }
}

train::TrainLog run_and_record(const RunConfig& c, const Descriptor& d) {
  write_file_atomic(descriptor_path(c, d.name), descriptor_to_json(d).dump(2) + "\n");
  auto log = run_descriptor(d, c.out_dir, checkpoint_stem(c, d.name));
  write_file_atomic(c.out_dir / "logs" / (d.name + ".csv"), log.csv());
  return log;
}

void write_reports(const RunConfig& c, const EvalResult& r) {
  const fs::path dir = c.out_dir / "reports";
  write_file_atomic(dir / "report.csv", r.report.csv());
  write_file_atomic(dir / "report.json", r.report.to_json().dump(2) + "\n");
  std::ostringstream md;
  md << r.report.markdown() << "## Ordering gates\n\n| gate | result | detail |\n|---|---|---|\n";
  for (const auto& g : r.gates) md << "| " << g.name << " | " << (g.pass ? "pass" : "FAIL") << " | " << g.detail << " |\n";
  write_file_atomic(dir / "report.md", md.str());
  write_file_atomic(dir / "gates.json", bench::gates_to_json(r.gates).dump(2) + "\n");
  json manifest{{"files", json::object()}};
  for (const char* f : {"report.csv", "report.json", "report.md", "gates.json"})
    manifest["files"][f] = data::file_checksum(dir / f);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

void validate(const RunConfig& c) {
  try {
    model::validate_dims(c.dims);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  const auto& s = c.dataset.sample;
  if (s.raster.width != c.dims.raster_size || s.raster.height != c.dims.raster_size)
    throw ConfigError("model.raster_size must equal dataset.sample.raster width and height");
  if (s.history != c.dims.history) throw ConfigError("model.history must equal dataset.sample.history");
  if (s.route_points != c.dims.route_points) throw ConfigError("model.route_points must equal dataset.sample.route_points");
  if (c.train_per_combo <= 0 || c.val_per_combo <= 0 || c.eval_per_condition <= 0)
    throw ConfigError("splits: sample counts must be positive");
  if (c.eval_normals.empty() || c.eval_ghosts.empty()) throw ConfigError("splits: empty test matrix");
  for (int n : c.eval_normals)
    if (n < 1) throw ConfigError("splits.eval_normals: entries must be >= 1");
  for (int g : c.eval_ghosts)
    if (g < 0 || g > c.dataset.ghost.max_count) throw ConfigError("splits.eval_ghosts: entries must lie in [0, ghost.max_count]");
  for (const auto& g : c.train_combos)
    if (g.n_normal < 1 || g.n_ghost < 0 || g.n_ghost > c.dataset.ghost.max_count)
      throw ConfigError("splits.train_combos: invalid combination");
  if (filter(c.train_combos, false).empty()) throw ConfigError("splits.train_combos: need a clean combination for pre-training");
  for (const auto* t : {&c.lstm_ae, &c.vae, &c.confidence, &c.end_to_end}) train::validate(*t);
  if (c.variants.empty()) throw ConfigError("variants: empty");
  if (std::find(c.variants.begin(), c.variants.end(), Variant::Baseline) == c.variants.end())
    throw ConfigError("variants: Baseline is required to normalise corruption errors");
  for (Variant v : c.variants) {
    for (const auto& g : model::data_policy(v))
      if (std::find(c.train_combos.begin(), c.train_combos.end(), g) == c.train_combos.end())
        throw ConfigError("variants: " + model::variant_name(v) + " trains on a combination missing from splits.train_combos");
  }
  for (const auto& g : c.gates)
    if (std::find(bench::gate_names().begin(), bench::gate_names().end(), g) == bench::gate_names().end())
      throw ConfigError("gates: unknown gate '" + g + "'");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictReader r(j, "config");
  r.get("seed", c.seed);
  std::string out = c.out_dir.string();
  r.get("out_dir", out);
  c.out_dir = out;
  r.get("dataset", c.dataset);
  if (j.contains("dataset") && (j["dataset"].contains("combos") || j["dataset"].contains("seed")))
    throw ConfigError("config.dataset: combos and seed are set by splits and the run seed");
  json splits = json::object();
  r.get("splits", splits);
  {
    StrictReader sp(splits, "config.splits");
    sp.get("train_per_combo", c.train_per_combo).get("val_per_combo", c.val_per_combo);
    sp.get("eval_per_condition", c.eval_per_condition).get("train_combos", c.train_combos);
    sp.get("eval_normals", c.eval_normals).get("eval_ghosts", c.eval_ghosts);
    sp.finish();
  }
  r.get("model", c.dims);
  json stages = json::object();
  r.get("train", stages);
  if (!stages.is_object()) throw ConfigError("config.train: expected an object");
  for (auto [key, cfg] : {std::pair{"lstm_ae", &c.lstm_ae}, {"vae", &c.vae}, {"confidence", &c.confidence},
                          {"end_to_end", &c.end_to_end}})
    read_stage(stages, key, *cfg);
  StrictReader tr(stages, "config.train");
  for (const char* k : {"lstm_ae", "vae", "confidence", "end_to_end"}) {
    json ignored;
    tr.get(k, ignored);
  }
  tr.finish();
  std::vector<std::string> variants;
  r.get("variants", variants);
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : variants) c.variants.push_back(model::parse_variant(v));
  }
  r.get("gates", c.gates);
  r.finish();
  validate(c);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json dataset = c.dataset;
  dataset.erase("combos");
  dataset.erase("seed");
  json variants = json::array();
  for (Variant v : c.variants) variants.push_back(model::variant_name(v));
  return {{"seed", c.seed},
          {"out_dir", c.out_dir.generic_string()},
          {"dataset", dataset},
          {"splits",
           {{"train_per_combo", c.train_per_combo},
            {"val_per_combo", c.val_per_combo},
            {"eval_per_condition", c.eval_per_condition},
            {"train_combos", c.train_combos},
            {"eval_normals", c.eval_normals},
            {"eval_ghosts", c.eval_ghosts}}},
          {"model", c.dims},
          {"train",
           {{"lstm_ae", stage_json(c.lstm_ae)},
            {"vae", stage_json(c.vae)},
            {"confidence", stage_json(c.confidence)},
            {"end_to_end", stage_json(c.end_to_end)}}},
          {"variants", variants},
          {"gates", c.gates}};
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::LstmAe:
      return "lstm-ae";
    case Stage::Vae:
      return "vae";
    default:
      return "confidence";
  }
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::LstmAe, Stage::Vae, Stage::Confidence})
    if (name == stage_name(s)) return s;
  throw ConfigError("unknown stage '" + name + "' (expected lstm-ae, vae or confidence)");
}

std::string variant_slug(Variant v) {
  std::string s = model::variant_name(v);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

json descriptor_to_json(const Descriptor& d) {
  auto ref = [](const ArtifactRef& a) { return json{{"path", a.path}, {"checksum", a.checksum}}; };
  json init = json::array();
  for (const auto& [prefix, a] : d.init) init.push_back({{"prefix", prefix}, {"checkpoint", ref(a)}});
  return {{"format", "rlrn-descriptor-v1"},
          {"name", d.name},
          {"stage", d.stage},
          {"variant", d.variant},
          {"wiring", d.wiring},
          {"model", d.dims},
          {"train", d.train},
          {"model_seed", d.model_seed},
          {"train_data", ref(d.train_data)},
          {"val_data", ref(d.val_data)},
          {"data_policy", d.data_policy},
          {"init", init},
          {"saved_prefixes", d.saved_prefixes}};
}

Descriptor descriptor_from_json(const json& j) {
  Descriptor d;
  try {
    if (j.at("format") != "rlrn-descriptor-v1") throw StagingError("unknown descriptor format");
    auto ref = [](const json& a) { return ArtifactRef{a.at("path").get<std::string>(), a.at("checksum").get<std::string>()}; };
    d.name = j.at("name").get<std::string>();
    d.stage = j.at("stage").get<std::string>();
    d.variant = j.at("variant").get<std::string>();
    d.wiring = j.at("wiring").get<std::string>();
    d.dims = j.at("model").get<model::ModelDims>();
    d.train = j.at("train").get<train::TrainConfig>();
    d.model_seed = j.at("model_seed").get<std::uint64_t>();
    d.train_data = ref(j.at("train_data"));
    d.val_data = ref(j.at("val_data"));
    d.data_policy = j.at("data_policy").get<std::vector<GhostCombo>>();
    for (const auto& e : j.at("init")) d.init.emplace_back(e.at("prefix").get<std::string>(), ref(e.at("checkpoint")));
    d.saved_prefixes = j.at("saved_prefixes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw StagingError(std::string("malformed descriptor: ") + e.what());
  } catch (const ConfigError& e) {
    throw StagingError(std::string("malformed descriptor: ") + e.what());
  }
  return d;
}

train::TrainLog run_descriptor(const Descriptor& d, const fs::path& base, const fs::path& stem) {
  verify(base / d.train_data.path, d.train_data.checksum);
  verify(base / d.val_data.path, d.val_data.checksum);
  const Variant variant = d.variant.empty() ? Variant::RlrnT : model::parse_variant(d.variant);
  model::RlrnModel m(variant, d.dims, d.model_seed);
  for (const auto& [prefix, a] : d.init) {
    const fs::path src = base / a.path;
    verify(blob_path(src), a.checksum);
    if (m.params().copy_values_from(load_checkpoint(src).params, prefix) == 0)
      throw StagingError("checkpoint " + a.path + " holds no parameters under '" + prefix + "'");
  }
  const auto keep = [&](int n, int g) {
    return std::find(d.data_policy.begin(), d.data_policy.end(), GhostCombo{n, g}) != d.data_policy.end();
  };
  auto train_set = train::load_prepared(base / d.train_data.path, d.dims, keep);
  auto val_set = train::load_prepared(base / d.val_data.path, d.dims, keep);
  if (train_set.empty() || val_set.empty()) throw StagingError(d.name + ": no samples match the data policy");

  train::TrainLog log;
  if (d.stage == "lstm-ae") {
    log = train::pretrain_lstm_autoencoder(m, train_set, val_set, d.train);
  } else if (d.stage == "vae") {
    log = train::pretrain_vae(m, train_set, val_set, d.train);
  } else if (d.stage == "confidence" || d.stage == "end-to-end") {
    train::cache_frozen_features(m, train_set);
    train::cache_frozen_features(m, val_set);
    log = d.stage == "confidence" ? train::pretrain_confidence(m, train_set, val_set, d.train)
                                  : train::train_end_to_end(m, train_set, val_set, d.train);
  } else {
    throw StagingError("unknown stage '" + d.stage + "' in descriptor");
  }

  ad::ParameterSet out;
  for (const auto& p : m.params()) {
    const bool saved = d.saved_prefixes.empty() ||
                       std::any_of(d.saved_prefixes.begin(), d.saved_prefixes.end(),
                                   [&](const std::string& pre) { return p.name.rfind(pre, 0) == 0; });
    if (saved) out.add(p.name, p.value).frozen = p.frozen;
  }
  const auto batches = (static_cast<std::int64_t>(train_set.size()) + d.train.batch - 1) / d.train.batch;
  save_checkpoint(stem, out, {d.stage, d.model_seed, batches * d.train.epochs});
  return log;
}

bool checkpoints_identical(const fs::path& a, const fs::path& b) {
  if (read_file(blob_path(a)) != read_file(blob_path(b))) return false;
  json ma = json::parse(read_file(manifest_path(a))), mb = json::parse(read_file(manifest_path(b)));
  ma.erase("blob");
  mb.erase("blob");
  return ma == mb;
}

fs::path dataset_path(const RunConfig& c, const std::string& split) { return c.out_dir / "datasets" / (split + ".jsonl"); }
fs::path checkpoint_stem(const RunConfig& c, const std::string& name) { return c.out_dir / "checkpoints" / name; }
fs::path descriptor_path(const RunConfig& c, const std::string& name) {
  return c.out_dir / "checkpoints" / (name + ".descriptor.json");
}

void cmd_gen(const RunConfig& c) {
  validate(c);
  fs::create_directories(c.out_dir / "datasets");
  write_file_atomic(c.out_dir / "run_config.json", run_config_to_json(c).dump(2) + "\n");
  auto split = [&](const std::string& name, std::vector<data::Combination> combos) {
    data::DatasetConfig dc = c.dataset;
    dc.seed = derive_seed(c.seed, "data:" + name);
    dc.combos = std::move(combos);
    data::build_dataset(dc, dataset_path(c, name));
  };
  std::vector<data::Combination> train, val, eval;
  for (const auto& g : c.train_combos) {
    train.push_back({g.n_normal, g.n_ghost, c.train_per_combo});
    val.push_back({g.n_normal, g.n_ghost, c.val_per_combo});
  }
  for (const auto& cond : bench::test_matrix(c.eval_normals, c.eval_ghosts))
    eval.push_back({cond.n_normal, cond.n_ghost, c.eval_per_condition});
  split("train", train);
  split("val", val);
  split("eval", eval);
}

train::TrainLog cmd_pretrain(const RunConfig& c, Stage stage) {
  validate(c);
  Descriptor d;
  d.name = d.stage = stage_name(stage);
  d.dims = c.dims;
  d.train_data = dataset_ref(c, "train");
  d.val_data = dataset_ref(c, "val");
  d.model_seed = derive_seed(c.seed, "model:" + d.name);
  switch (stage) {
    case Stage::LstmAe:
      d.train = c.lstm_ae;
      d.data_policy = filter(c.train_combos, false);
      d.saved_prefixes = {"lstm."};
      d.wiring = "LSTM encoder/decoder on clean histories";
      break;
    case Stage::Vae:
      d.train = c.vae;
      d.data_policy = filter(c.train_combos, false);
      d.saved_prefixes = {"vae."};
      d.wiring = "VAE on clean ego rasters";
      break;
    case Stage::Confidence:
      require_checkpoints(c, {"lstm-ae", "vae"});
      d.train = c.confidence;
      d.data_policy = filter(c.train_combos, true);
      if (d.data_policy.empty()) throw ConfigError("splits.train_combos: confidence pre-training needs ghost combinations");
      d.init = {{"lstm.", checkpoint_ref(c, "lstm-ae")}, {"vae.", checkpoint_ref(c, "vae")}};
      d.saved_prefixes = {"cnn.", "fuse.", "conf.", "cls."};
      d.wiring = "ghost classifier on p_i = [k_i, v_i] over the local graph";
      break;
  }
  d.train.seed = derive_seed(c.seed, "train:" + d.name);
  return run_and_record(c, d);
}

train::TrainLog cmd_train(const RunConfig& c, Variant v) {
  validate(c);
  std::vector<std::string> prereq{"lstm-ae", "vae"};
  if (model::uses_confidence_init(v)) prereq.push_back("confidence");
  require_checkpoints(c, prereq);
  Descriptor d;
  d.name = variant_slug(v);
  d.stage = "end-to-end";
  d.variant = model::variant_name(v);
  d.wiring = wiring(v);
  d.dims = c.dims;
  d.train = c.end_to_end;
  d.train.seed = derive_seed(c.seed, "train:" + d.name);
  d.model_seed = derive_seed(c.seed, "model:" + d.name);
  d.train_data = dataset_ref(c, "train");
  d.val_data = dataset_ref(c, "val");
  d.data_policy = model::data_policy(v);
  d.init = {{"lstm.", checkpoint_ref(c, "lstm-ae")}, {"vae.", checkpoint_ref(c, "vae")}};
  if (model::uses_confidence_init(v))
    for (const char* prefix : {"cnn.", "fuse.", "conf."}) d.init.emplace_back(prefix, checkpoint_ref(c, "confidence"));
  return run_and_record(c, d);
}

bool EvalResult::gates_pass() const {
  return std::all_of(gates.begin(), gates.end(), [](const auto& g) { return g.pass; });
}

EvalResult cmd_eval(const RunConfig& c) {
  validate(c);
  std::vector<std::string> names;
  for (Variant v : c.variants) names.push_back(variant_slug(v));
  require_checkpoints(c, names);
  const fs::path eval_path = dataset_path(c, "eval");
  if (!fs::exists(eval_path)) throw StagingError("missing dataset " + eval_path.string() + " (run `gen` first)");

  const auto matrix = bench::test_matrix(c.eval_normals, c.eval_ghosts);
  std::map<bench::Condition, std::vector<model::PreparedSample>> groups;
  data::for_each_sample(eval_path, [&](const data::SceneSample& s) {
    const bench::Condition cond{s.n_normal, s.n_ghost};
    if (std::binary_search(matrix.begin(), matrix.end(), cond)) groups[cond].push_back(model::prepare_sample(s, c.dims));
  });
  for (const auto& cond : matrix)
    if (groups[cond].empty()) throw StagingError("eval dataset has no samples for " + bench::condition_name(cond));

  EvalResult result;
  for (Variant v : c.variants) {
    model::RlrnModel m(v, c.dims, 0);
    const auto ckpt = load_checkpoint(checkpoint_stem(c, variant_slug(v)));
    if (m.params().copy_values_from(ckpt.params) != m.params().size() || ckpt.params.size() != m.params().size())
      throw StagingError("checkpoint " + variant_slug(v) + " does not match the " + model::variant_name(v) + " wiring");
    for (const auto& cond : matrix) {
      auto& samples = groups[cond];
      train::cache_frozen_features(m, samples);
      const auto predicted = train::predict_all(m, samples);
      const auto truth = train::ground_truth(samples);
      result.report.add(bench::evaluate_cell(model::variant_name(v), cond, predicted, truth));
    }
  }
  result.report.normalize("Baseline");
  result.gates = bench::check_gates(result.report, c.gates);
  write_reports(c, result);
  return result;
}

EvalResult cmd_report(const RunConfig& c) {
  validate(c);
  const fs::path path = c.out_dir / "reports" / "report.json";
  if (!fs::exists(path)) throw StagingError("missing " + path.string() + " (run `eval` first)");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw StagingError(path.string() + ": " + e.what());
  }
  EvalResult result;
  result.report = bench::Report::from_json(j);
  result.gates = bench::check_gates(result.report, c.gates);
  write_reports(c, result);
  return result;
}

}  // namespace rlrn::pipeline
