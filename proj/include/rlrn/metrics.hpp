#pragma once

#include <span>
#include <vector>

#include "rlrn/world.hpp"

namespace rlrn::metrics {

using sim::Action;

inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> g{0.2, 0.4, 0.8, 1.6};
  return g;
}

// Mean over the batch of (1/3) * squared action difference summed over st, ac, br.
double imitation_loss(std::span<const Action> predicted, std::span<const Action> truth);

// |st - st_g| + |ac - ac_g| + |br - br_g|
double control_deviation(const Action& a, const Action& b);

// Fraction of cases with deviation strictly below tau.
double accuracy_at(std::span<const Action> predicted, std::span<const Action> truth, double tau);
double mean_accuracy(std::span<const Action> predicted, std::span<const Action> truth,
                     std::span<const double> thresholds = default_thresholds());

// Mean over conditions of err_model / err_baseline; errors are 1 - mAcc.
double mean_corruption_error(std::span<const double> model_errors, std::span<const double> baseline_errors);

double mean_throttle(std::span<const Action> predicted);
double mean_brake(std::span<const Action> predicted);

}  // namespace rlrn::metrics
