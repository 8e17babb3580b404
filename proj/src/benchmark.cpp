#include "rlrn/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "rlrn/errors.hpp"
#include "rlrn/metrics.hpp"

namespace rlrn::bench {

using nlohmann::json;

namespace {

const char* const kBaseline = "Baseline";
const char* const kFull = "RLRN-T";
const char* const kCil = "CIL-Net";
const char* const kNoC = "RLRN-no-C";
const char* const kFrozen = "RLRN-frozen-conf";

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<Condition> select(const Report& r, bool (*keep)(const Condition&)) {
  std::vector<Condition> out;
  for (const Condition& c : r.conditions())
    if (keep(c)) out.push_back(c);
  return out;
}

bool with_ghosts(const Condition& c) { return c.n_ghost == 1 || c.n_ghost == 2; }

std::vector<int> normals_of(std::span<const Condition> conds) {
  std::set<int> s;
  for (const auto& c : conds) s.insert(c.n_normal);
  return {s.begin(), s.end()};
}

std::vector<Condition> at_normal(std::span<const Condition> conds, int n) {
  std::vector<Condition> out;
  for (const auto& c : conds)
    if (c.n_normal == n) out.push_back(c);
  return out;
}

bool has_all(const Report& r, const std::string& v, std::span<const Condition> conds) {
  return !conds.empty() && std::all_of(conds.begin(), conds.end(), [&](const Condition& c) { return r.has(v, c); });
}

}  // namespace

std::vector<Condition> test_matrix(std::span<const int> normals, std::span<const int> ghosts) {
  std::vector<Condition> out;
  for (int n : normals)
    for (int g : ghosts) out.push_back({n, g});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string condition_name(const Condition& c) {
  return "n" + std::to_string(c.n_normal) + "g" + std::to_string(c.n_ghost);
}

Cell evaluate_cell(const std::string& variant, const Condition& c, std::span<const sim::Action> predicted,
                   std::span<const sim::Action> truth) {
  Cell cell;
  cell.variant = variant;
  cell.condition = c;
  cell.count = predicted.size();
  cell.mAcc = metrics::mean_accuracy(predicted, truth);
  cell.mA = metrics::mean_throttle(predicted);
  cell.mB = metrics::mean_brake(predicted);
  return cell;
}

void Report::add(Cell cell) {
  if (has(cell.variant, cell.condition))
    throw UsageError("report: duplicate cell " + cell.variant + " " + condition_name(cell.condition));
  cells_.push_back(std::move(cell));
}

bool Report::has(const std::string& variant, const Condition& c) const {
  return std::any_of(cells_.begin(), cells_.end(), [&](const Cell& x) { return x.variant == variant && x.condition == c; });
}

const Cell& Report::at(const std::string& variant, const Condition& c) const {
  for (const Cell& x : cells_)
    if (x.variant == variant && x.condition == c) return x;
  throw StagingError("report: no cell for " + variant + " " + condition_name(c));
}

std::vector<std::string> Report::variants() const {
  std::vector<std::string> out;
  for (const Cell& c : cells_)
    if (std::find(out.begin(), out.end(), c.variant) == out.end()) out.push_back(c.variant);
  return out;
}

std::vector<Condition> Report::conditions() const {
  std::set<Condition> s;
  for (const Cell& c : cells_) s.insert(c.condition);
  return {s.begin(), s.end()};
}

void Report::normalize(const std::string& baseline) {
  baseline_ = baseline;
  for (Cell& c : cells_) {
    const double base_err = 1.0 - at(baseline, c.condition).mAcc;
    if (base_err == 0.0)
      throw NormalizationError("report: baseline error is zero at " + condition_name(c.condition));
    c.ce = (1.0 - c.mAcc) / base_err;
  }
}

double Report::mean_accuracy(const std::string& variant, std::span<const Condition> conds) const {
  if (conds.empty()) throw UsageError("report: no conditions selected");
  double total = 0.0;
  for (const auto& c : conds) total += at(variant, c).mAcc;
  return total / static_cast<double>(conds.size());
}

double Report::mean_corruption_error(const std::string& variant, std::span<const Condition> conds) const {
  std::vector<double> model, base;
  for (const auto& c : conds) {
    model.push_back(1.0 - at(variant, c).mAcc);
    base.push_back(1.0 - at(baseline_, c).mAcc);
  }
  return metrics::mean_corruption_error(model, base);
}

std::string Report::csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "variant,n_normal,n_ghost,count,mAcc,ce,mA,mB\n";
  for (const Cell& c : cells_)
    out << c.variant << ',' << c.condition.n_normal << ',' << c.condition.n_ghost << ',' << c.count << ',' << c.mAcc << ','
        << c.ce << ',' << c.mA << ',' << c.mB << '\n';
  return out.str();
}

json Report::to_json() const {
  json cells = json::array();
  for (const Cell& c : cells_)
    cells.push_back({{"variant", c.variant},
                     {"n_normal", c.condition.n_normal},
                     {"n_ghost", c.condition.n_ghost},
                     {"count", c.count},
                     {"mAcc", c.mAcc},
                     {"ce", c.ce},
                     {"mA", c.mA},
                     {"mB", c.mB}});
  return {{"baseline", baseline_}, {"cells", cells}, {"tables", tables(*this)}};
}

Report Report::from_json(const json& j) {
  Report r;
  try {
    r.baseline_ = j.at("baseline").get<std::string>();
    for (const auto& c : j.at("cells")) {
      Cell cell;
      cell.variant = c.at("variant").get<std::string>();
      cell.condition = {c.at("n_normal").get<int>(), c.at("n_ghost").get<int>()};
      cell.count = c.at("count").get<std::size_t>();
      cell.mAcc = c.at("mAcc").get<double>();
      cell.ce = c.at("ce").get<double>();
      cell.mA = c.at("mA").get<double>();
      cell.mB = c.at("mB").get<double>();
      r.add(std::move(cell));
    }
  } catch (const json::exception& e) {
    throw StagingError(std::string("report: malformed document: ") + e.what());
  }
  return r;
}

json tables(const Report& r) {
  const auto ghost = select(r, with_ghosts);
  const auto variants = r.variants();
  json out = json::object();

  // Table I and the ablation curve share the layout: mAcc per n_normal, pooled over n_ghost 1..2.
  auto per_normal = [&](const std::vector<std::string>& rows) {
    json t{{"columns", normals_of(ghost)}, {"rows", json::array()}};
    for (const auto& v : rows) {
      json values = json::array();
      for (int n : normals_of(ghost)) {
        const auto cs = at_normal(ghost, n);
        values.push_back(has_all(r, v, cs) ? json(r.mean_accuracy(v, cs)) : json(nullptr));
      }
      t["rows"].push_back({{"variant", v}, {"mAcc", values}});
    }
    return t;
  };
  std::vector<std::string> main_rows, ablation_rows;
  for (const char* v : {kBaseline, kCil, "RLRN-S", kFull})
    if (std::find(variants.begin(), variants.end(), v) != variants.end()) main_rows.push_back(v);
  for (const char* v : {kFull, kNoC, "RLRN-no-R", kFrozen})
    if (std::find(variants.begin(), variants.end(), v) != variants.end()) ablation_rows.push_back(v);
  out["table1"] = per_normal(main_rows);
  out["ablation"] = per_normal(ablation_rows);

  const bool normalized = std::find(variants.begin(), variants.end(), kBaseline) != variants.end();
  json t2{{"columns", normals_of(ghost)}, {"rows", json::array()}};
  for (const auto& v : main_rows) {
    json row{{"variant", v}};
    const auto c3 = at_normal(ghost, 3);
    row["mAcc_n3"] = has_all(r, v, c3) ? json(r.mean_accuracy(v, c3)) : json(nullptr);
    json mce = json::array();
    for (int n : normals_of(ghost)) {
      const auto cs = at_normal(ghost, n);
      mce.push_back(normalized && has_all(r, v, cs) && has_all(r, kBaseline, cs) ? json(r.mean_corruption_error(v, cs))
                                                                                  : json(nullptr));
    }
    row["mCE"] = mce;
    t2["rows"].push_back(row);
  }
  out["table2"] = t2;

  json t3{{"columns", json::array()}, {"rows", json::array()}};
  std::vector<Condition> c3;
  for (int n : {3, 4})
    for (int g : {0, 1, 2})
      if (std::any_of(variants.begin(), variants.end(), [&](const auto& v) { return r.has(v, {n, g}); })) {
        c3.push_back({n, g});
        t3["columns"].push_back(condition_name({n, g}));
      }
  for (const auto& v : main_rows) {
    json values = json::array();
    for (const auto& c : c3) values.push_back(r.has(v, c) ? json(r.at(v, c).mAcc) : json(nullptr));
    t3["rows"].push_back({{"variant", v}, {"mAcc", values}});
  }
  out["table3"] = t3;

  json t4{{"columns", {"n3g0", "n3g1"}}, {"rows", json::array()}};
  for (const auto& v : main_rows) {
    json row{{"variant", v}};
    for (int g : {0, 1}) {
      const Condition c{3, g};
      row["mA_" + condition_name(c)] = r.has(v, c) ? json(r.at(v, c).mA) : json(nullptr);
      row["mB_" + condition_name(c)] = r.has(v, c) ? json(r.at(v, c).mB) : json(nullptr);
    }
    t4["rows"].push_back(row);
  }
  out["table4"] = t4;
  return out;
}

std::string Report::markdown() const {
  const json t = tables(*this);
  auto cell = [](const json& v) { return v.is_null() ? std::string("-") : fixed(v.get<double>()); };
  std::ostringstream out;
  auto per_normal = [&](const char* title, const json& table) {
    out << "## " << title << "\n\n| variant |";
    for (int n : table["columns"]) out << " n_normal=" << n << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < table["columns"].size(); ++i) out << "---|";
    out << '\n';
    for (const auto& row : table["rows"]) {
      out << "| " << row["variant"].get<std::string>() << " |";
      for (const auto& v : row["mAcc"]) out << ' ' << cell(v) << " |";
      out << '\n';
    }
    out << '\n';
  };
  per_normal("mAcc with 1-2 ghosts", t["table1"]);

  out << "## mCE with 1-2 ghosts (n_normal=3 column is mAcc)\n\n| variant | mAcc n_normal=3 |";
  for (int n : t["table2"]["columns"]) out << " mCE n_normal=" << n << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < t["table2"]["columns"].size(); ++i) out << "---|";
  out << '\n';
  for (const auto& row : t["table2"]["rows"]) {
    out << "| " << row["variant"].get<std::string>() << " | " << cell(row["mAcc_n3"]) << " |";
    for (const auto& v : row["mCE"]) out << ' ' << cell(v) << " |";
    out << '\n';
  }
  out << '\n';

  out << "## mAcc with 0-2 ghosts\n\n| variant |";
  for (const auto& c : t["table3"]["columns"]) out << ' ' << c.get<std::string>() << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < t["table3"]["columns"].size(); ++i) out << "---|";
  out << '\n';
  for (const auto& row : t["table3"]["rows"]) {
    out << "| " << row["variant"].get<std::string>() << " |";
    for (const auto& v : row["mAcc"]) out << ' ' << cell(v) << " |";
    out << '\n';
  }
  out << '\n';

  out << "## Throttle and brake at n_normal=3\n\n| variant | mA n3g0 | mB n3g0 | mA n3g1 | mB n3g1 |\n|---|---|---|---|---|\n";
  for (const auto& row : t["table4"]["rows"])
    out << "| " << row["variant"].get<std::string>() << " | " << cell(row["mA_n3g0"]) << " | " << cell(row["mB_n3g0"]) << " | "
        << cell(row["mA_n3g1"]) << " | " << cell(row["mB_n3g1"]) << " |\n";
  out << '\n';
  per_normal("Ablation: mAcc with 1-2 ghosts", t["ablation"]);
  return out.str();
}

const std::vector<std::string>& gate_names() {
  static const std::vector<std::string> names{"table1", "table2", "table3", "table4", "ablation"};
  return names;
}

namespace {

GateResult gate_table1(const Report& r) {
  const auto ghost = select(r, with_ghosts);
  GateResult g{"table1", true, ""};
  std::ostringstream d;
  for (int n : normals_of(ghost)) {
    const auto cs = at_normal(ghost, n);
    const double t = r.mean_accuracy(kFull, cs), b = r.mean_accuracy(kBaseline, cs);
    g.pass = g.pass && t > b;
    d << "n" << n << ": " << fixed(t) << (t > b ? " > " : " <= ") << fixed(b) << "; ";
  }
  const double t = r.mean_accuracy(kFull, ghost), c = r.mean_accuracy(kCil, ghost);
  g.pass = g.pass && t >= c;
  d << "aggregate vs CIL-Net: " << fixed(t) << (t >= c ? " >= " : " < ") << fixed(c);
  g.detail = d.str();
  return g;
}

GateResult gate_table2(const Report& r) {
  const auto ghost = select(r, with_ghosts);
  const double m = r.mean_corruption_error(kFull, ghost);
  return {"table2", m < 1.0, "mCE(RLRN-T) = " + fixed(m)};
}

GateResult gate_table3(const Report& r) {
  const std::vector<Condition> clean{{3, 0}, {4, 0}}, one{{3, 1}, {4, 1}};
  const double drop_b = r.mean_accuracy(kBaseline, clean) - r.mean_accuracy(kBaseline, one);
  const double drop_t = std::abs(r.mean_accuracy(kFull, clean) - r.mean_accuracy(kFull, one));
  return {"table3", drop_b >= 0.10 && drop_t <= drop_b,
          "Baseline drop " + fixed(drop_b) + " (needs >= 0.10), |RLRN-T change| " + fixed(drop_t)};
}

GateResult gate_table4(const Report& r) {
  const Condition clean{3, 0}, one{3, 1};
  auto shift = [&](const char* v, double Cell::*field) { return std::abs(r.at(v, clean).*field - r.at(v, one).*field); };
  const double ta = shift(kFull, &Cell::mA), ba = shift(kBaseline, &Cell::mA);
  const double tb = shift(kFull, &Cell::mB), bb = shift(kBaseline, &Cell::mB);
  return {"table4", ta < ba && tb < bb,
          "mA shift " + fixed(ta, 5) + " vs " + fixed(ba, 5) + ", mB shift " + fixed(tb, 5) + " vs " + fixed(bb, 5)};
}

GateResult gate_ablation(const Report& r) {
  const auto ghost = select(r, with_ghosts);
  std::vector<Condition> small;
  for (const auto& c : ghost)
    if (c.n_normal <= 2) small.push_back(c);
  const double t = r.mean_accuracy(kFull, ghost), nc = r.mean_accuracy(kNoC, ghost);
  const double ts = r.mean_accuracy(kFull, small), fs = r.mean_accuracy(kFrozen, small);
  return {"ablation", t > nc && ts > fs,
          "vs no-C " + fixed(t) + " / " + fixed(nc) + ", vs frozen-conf at n_normal<=2 " + fixed(ts) + " / " + fixed(fs)};
}

}  // namespace

std::vector<GateResult> check_gates(const Report& r, std::span<const std::string> gates) {
  std::vector<GateResult> out;
  for (const auto& name : gates) {
    try {
      if (name == "table1") out.push_back(gate_table1(r));
      else if (name == "table2") out.push_back(gate_table2(r));
      else if (name == "table3") out.push_back(gate_table3(r));
      else if (name == "table4") out.push_back(gate_table4(r));
      else if (name == "ablation") out.push_back(gate_ablation(r));
      else throw ConfigError("unknown gate '" + name + "'");
    } catch (const StagingError& e) {
      out.push_back({name, false, e.what()});
    } catch (const UsageError& e) {
      out.push_back({name, false, e.what()});
    }
  }
  return out;
}

json gates_to_json(std::span<const GateResult> results) {
  json out = json::array();
  for (const auto& g : results) out.push_back({{"gate", g.name}, {"pass", g.pass}, {"detail", g.detail}});
  return out;
}

}  // namespace rlrn::bench
