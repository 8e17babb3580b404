#include "rlrn/metrics.hpp"

#include <cmath>
#include <string>

#include "rlrn/errors.hpp"

namespace rlrn::metrics {

namespace {

void check_pairs(std::span<const Action> p, std::span<const Action> t, const char* what) {
  if (p.empty()) throw UsageError(std::string(what) + ": empty input");
  if (p.size() != t.size()) throw UsageError(std::string(what) + ": prediction and truth lengths differ");
}

}  // namespace

double control_deviation(const Action& a, const Action& b) {
  return std::abs(static_cast<double>(a.st) - b.st) + std::abs(static_cast<double>(a.ac) - b.ac) +
         std::abs(static_cast<double>(a.br) - b.br);
}

double imitation_loss(std::span<const Action> predicted, std::span<const Action> truth) {
  check_pairs(predicted, truth, "imitation_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double ds = predicted[i].st - truth[i].st, da = predicted[i].ac - truth[i].ac, db = predicted[i].br - truth[i].br;
    total += (ds * ds + da * da + db * db) / 3.0;
  }
  return total / static_cast<double>(predicted.size());
}

double accuracy_at(std::span<const Action> predicted, std::span<const Action> truth, double tau) {
  check_pairs(predicted, truth, "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += control_deviation(predicted[i], truth[i]) < tau;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double mean_accuracy(std::span<const Action> predicted, std::span<const Action> truth, std::span<const double> thresholds) {
  check_pairs(predicted, truth, "mAcc");
  if (thresholds.empty()) throw UsageError("mAcc: no thresholds");
  std::vector<double> dev(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) dev[i] = control_deviation(predicted[i], truth[i]);
  double total = 0.0;
  for (double tau : thresholds) {
    std::size_t hits = 0;
    for (double d : dev) hits += d < tau;
    total += static_cast<double>(hits) / static_cast<double>(dev.size());
  }
  return total / static_cast<double>(thresholds.size());
}

double mean_corruption_error(std::span<const double> model_errors, std::span<const double> baseline_errors) {
  if (model_errors.empty()) throw UsageError("mCE: no conditions");
  if (model_errors.size() != baseline_errors.size()) throw UsageError("mCE: condition sets differ");
  double total = 0.0;
  for (std::size_t i = 0; i < model_errors.size(); ++i) {
    if (baseline_errors[i] == 0.0) throw NormalizationError("mCE: baseline error is zero in condition " + std::to_string(i));
    total += model_errors[i] / baseline_errors[i];
  }
  return total / static_cast<double>(model_errors.size());
}

double mean_throttle(std::span<const Action> predicted) {
  if (predicted.empty()) throw UsageError("mA: empty input");
  double s = 0.0;
  for (const auto& a : predicted) s += a.ac;
  return s / static_cast<double>(predicted.size());
}

double mean_brake(std::span<const Action> predicted) {
  if (predicted.empty()) throw UsageError("mB: empty input");
  double s = 0.0;
  for (const auto& a : predicted) s += a.br;
  return s / static_cast<double>(predicted.size());
}

}  // namespace rlrn::metrics
