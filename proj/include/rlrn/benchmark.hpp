#pragma once

// Per-(variant, condition) metric cells, the four table layouts built from
// them, and the qualitative ordering gates checked against a report.

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlrn/world.hpp"

namespace rlrn::bench {

struct Condition {
  int n_normal = 0;
  int n_ghost = 0;
  friend auto operator<=>(const Condition&, const Condition&) = default;
};

std::vector<Condition> test_matrix(std::span<const int> normals, std::span<const int> ghosts);
std::string condition_name(const Condition& c);  // "n3g1"

struct Cell {
  std::string variant;
  Condition condition;
  std::size_t count = 0;
  double mAcc = 0.0;
  double mA = 0.0;
  double mB = 0.0;
  double ce = 0.0;  // (1 - mAcc) / (1 - mAcc of the baseline), filled by Report::normalize
};

Cell evaluate_cell(const std::string& variant, const Condition& c, std::span<const sim::Action> predicted,
                   std::span<const sim::Action> truth);

class Report {
 public:
  void add(Cell cell);  // duplicate (variant, condition) -> UsageError
  bool has(const std::string& variant, const Condition& c) const;
  const Cell& at(const std::string& variant, const Condition& c) const;  // missing -> StagingError
  const std::vector<Cell>& cells() const { return cells_; }
  std::vector<std::string> variants() const;   // first-seen order
  std::vector<Condition> conditions() const;   // sorted

  // Fills every cell's ce against `baseline`; zero baseline error -> NormalizationError.
  void normalize(const std::string& baseline = "Baseline");

  // Uniform means over the listed conditions.
  double mean_accuracy(const std::string& variant, std::span<const Condition> conds) const;
  double mean_corruption_error(const std::string& variant, std::span<const Condition> conds) const;

  std::string csv() const;
  nlohmann::json to_json() const;  // cells plus table layouts
  static Report from_json(const nlohmann::json& j);
  std::string markdown() const;

 private:
  std::vector<Cell> cells_;
  std::string baseline_ = "Baseline";
};

// Layouts: table1 (mAcc per n_normal over n_ghost 1..2), table2 (n_normal=3
// mAcc plus mCE per other n_normal), table3 (n_normal 3,4 x n_ghost 0..2),
// table4 (mA/mB at n_normal=3, n_ghost 0 and 1), ablation (mAcc per n_normal).
nlohmann::json tables(const Report& r);

struct GateResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

const std::vector<std::string>& gate_names();  // table1, table2, table3, table4, ablation
std::vector<GateResult> check_gates(const Report& r, std::span<const std::string> gates);
nlohmann::json gates_to_json(std::span<const GateResult> results);

}  // namespace rlrn::bench
