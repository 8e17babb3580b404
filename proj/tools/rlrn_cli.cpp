// rlrn: dataset generation, staged training, evaluation and reports.
//
// Exit codes: 0 success, 2 configuration error, 3 staging error (missing or
// stale artifact), 4 acceptance-gate failure, 1 anything else.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rlrn/checkpoint.hpp"
#include "rlrn/errors.hpp"
#include "rlrn/pipeline.hpp"

namespace {

using namespace rlrn;
using namespace rlrn::pipeline;

constexpr int kConfigExit = 2;
constexpr int kStagingExit = 3;
constexpr int kGateExit = 4;

struct Options {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (const char* env = std::getenv("RLRN_OUT_DIR"); env && *env) c.out_dir = env;
  if (const char* env = std::getenv("RLRN_THREADS"); env && *env) {
    try {
      c.dataset.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("RLRN_THREADS: not an integer: ") + env);
    }
    if (c.dataset.threads < 1) throw ConfigError("RLRN_THREADS must be >= 1");
  }
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.seed_set) c.seed = o.seed;
  validate(c);
  return c;
}

void print_log(const std::string& name, const train::TrainLog& log) {
  const auto& last = log.epochs.back();
  std::cout << name << " (" << log.stage << "): " << log.epochs.size() - 1 << " epochs, held-out loss " << log.epochs.front().val_loss << " -> "
            << last.val_loss << ", kept epoch " << log.best_epoch << '\n';
}

int report_gates(const EvalResult& r, const RunConfig& c) {
  std::cout << "report: " << r.report.cells().size() << " cells written to " << (c.out_dir / "reports").string() << '\n';
  for (const auto& g : r.gates) std::cout << (g.pass ? "[pass] " : "[FAIL] ") << g.name << ": " << g.detail << '\n';
  return r.gates_pass() ? 0 : kGateExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relation-learning robust navigation: data, training, benchmark"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("-c,--config", opt.config, "run configuration (JSON)");
  app.add_option("-o,--out", opt.out_dir, "output directory (overrides config and RLRN_OUT_DIR)");
  app.add_option_function<std::uint64_t>(
      "-s,--seed",
      [&](const std::uint64_t& s) {
        opt.seed = s;
        opt.seed_set = true;
      },
      "global seed (overrides config)");

  auto* gen = app.add_subcommand("gen", "generate train/val/eval datasets");
  auto* pretrain = app.add_subcommand("pretrain", "pre-train one stage: lstm-ae, vae or confidence");
  std::string stage;
  pretrain->add_option("stage", stage)->required();
  auto* train_cmd = app.add_subcommand("train", "train one variant end to end");
  std::string variant;
  train_cmd->add_option("variant", variant)->required();
  auto* eval = app.add_subcommand("eval", "evaluate every configured variant and write reports");
  auto* report = app.add_subcommand("report", "re-render reports from reports/report.json");
  auto* reproduce = app.add_subcommand("reproduce", "retrain from a descriptor and compare with its checkpoint");
  std::string descriptor, to;
  reproduce->add_option("descriptor", descriptor)->required();
  reproduce->add_option("--to", to, "output stem for the regenerated checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig c = resolve(opt);
    if (gen->parsed()) {
      cmd_gen(c);
      std::cout << "datasets written to " << (c.out_dir / "datasets").string() << '\n';
    } else if (pretrain->parsed()) {
      print_log(stage, cmd_pretrain(c, parse_stage(stage)));
    } else if (train_cmd->parsed()) {
      print_log(variant, cmd_train(c, model::parse_variant(variant)));
    } else if (eval->parsed()) {
      return report_gates(cmd_eval(c), c);
    } else if (report->parsed()) {
      return report_gates(cmd_report(c), c);
    } else if (reproduce->parsed()) {
      const Descriptor d = descriptor_from_json(nlohmann::json::parse(read_file(descriptor)));
      print_log(d.name, run_descriptor(d, c.out_dir, to));
      const bool same = checkpoints_identical(checkpoint_stem(c, d.name), to);
      std::cout << d.name << (same ? ": regenerated checkpoint is bit-identical\n" : ": regenerated checkpoint DIFFERS\n");
      return same ? 0 : kGateExit;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const StagingError& e) {
    std::cerr << "staging error: " << e.what() << '\n';
    return kStagingExit;
  } catch (const CorruptDatasetError& e) {
    std::cerr << "staging error: " << e.what() << '\n';
    return kStagingExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
