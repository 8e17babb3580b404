#pragma once

#include <stdexcept>
#include <string>

namespace rlrn {

// Shape or dimension-chain mismatch between tensors, parameters or records.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. backward() on a non-scalar loss or metrics on empty input.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Softmax / attention over a neighbourhood with no active entry.
struct EmptyNeighborhoodError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlacementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WindowingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorruptDatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loss became NaN/Inf during optimisation.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A prerequisite artifact (dataset, stage checkpoint) is missing.
struct StagingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Baseline error rate of zero makes a normalised error undefined.
struct NormalizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rlrn
