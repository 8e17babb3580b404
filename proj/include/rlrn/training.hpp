#pragma once

// Staged optimisation: LSTM-AE and VAE reconstruction, ghost-classification
// pre-training of the confidence stage, end-to-end imitation.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rlrn/rlrn_model.hpp"
#include "rlrn/world.hpp"

namespace rlrn::train {

using model::ModelBatch;
using model::PreparedSample;
using model::RlrnModel;

struct TrainConfig {
  double lr = 1e-3;
  int batch = 64;
  int epochs = 20;
  std::uint64_t seed = 0;
  float vae_beta = 1e-4f;
  // Keep the parameters of the epoch with the lowest held-out loss.
  bool keep_best = true;
};

void validate(const TrainConfig& c);  // throws ConfigError

struct EpochRecord {
  int epoch = 0;  // 0 = before any update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;  // stage-specific (classifier accuracy, ...)
};

struct TrainLog {
  std::string stage;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::string csv() const;
};

// Reads every sample of a dataset file whose (n_normal, n_ghost) passes `keep`.
std::vector<PreparedSample> load_prepared(const std::filesystem::path& path, const model::ModelDims& dims,
                                          const std::function<bool(int n_normal, int n_ghost)>& keep = {});

TrainLog pretrain_lstm_autoencoder(RlrnModel& m, const std::vector<PreparedSample>& train,
                                   const std::vector<PreparedSample>& val, const TrainConfig& c);
TrainLog pretrain_vae(RlrnModel& m, const std::vector<PreparedSample>& train, const std::vector<PreparedSample>& val,
                      const TrainConfig& c);

// Fills PreparedSample::v and ::scene from the frozen LSTM encoder and VAE mean.
void cache_frozen_features(RlrnModel& m, std::vector<PreparedSample>& samples);

// Trains cnn, fuse, conf and cls on ghost labels (ego rows excluded).
TrainLog pretrain_confidence(RlrnModel& m, const std::vector<PreparedSample>& train, const std::vector<PreparedSample>& val,
                             const TrainConfig& c);

TrainLog train_end_to_end(RlrnModel& m, const std::vector<PreparedSample>& train, const std::vector<PreparedSample>& val,
                          const TrainConfig& c);

struct ClassifierScore {
  double accuracy = 0.0;
  double majority = 0.0;  // accuracy of always predicting the majority class
  std::size_t count = 0;
};
ClassifierScore classifier_accuracy(RlrnModel& m, const std::vector<PreparedSample>& samples);

std::vector<sim::Action> predict_all(RlrnModel& m, const std::vector<PreparedSample>& samples, int batch = 256);
std::vector<sim::Action> ground_truth(const std::vector<PreparedSample>& samples);

}  // namespace rlrn::train
