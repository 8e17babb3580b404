#include "rlrn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rlrn/dataset.hpp"
#include "rlrn/errors.hpp"
#include "rlrn/metrics.hpp"

namespace rlrn::train {

using namespace rlrn::ad;
using model::BatchOptions;
using model::make_batch;

void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw ConfigError("train: lr must be positive");
  if (c.batch <= 0) throw ConfigError("train: batch must be positive");
  if (c.epochs <= 0) throw ConfigError("train: epochs must be positive");
  if (!(c.vae_beta >= 0.0f)) throw ConfigError("train: vae_beta must be nonnegative");
}

std::string TrainLog::csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,train_loss,val_loss,val_metric\n";
  for (const auto& e : epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_metric << '\n';
  return out.str();
}

std::vector<PreparedSample> load_prepared(const std::filesystem::path& path, const model::ModelDims& dims,
                                          const std::function<bool(int, int)>& keep) {
  std::vector<PreparedSample> out;
  data::for_each_sample(path, [&](const data::SceneSample& s) {
    if (!keep || keep(s.n_normal, s.n_ghost)) out.push_back(model::prepare_sample(s, dims));
  });
  return out;
}

namespace {

using LossFn = std::function<Var(Tape&, const ModelBatch&)>;
// Held-out (loss, metric) of the current parameters.
using EvalFn = std::function<std::pair<double, double>()>;

std::vector<const PreparedSample*> pointers(const std::vector<PreparedSample>& s, std::span<const std::size_t> idx) {
  std::vector<const PreparedSample*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&s[i]);
  return out;
}

// Mean of `loss` over `samples`, weighted by `weight(batch)`.
double mean_loss(const std::vector<PreparedSample>& samples, const model::ModelDims& dims, const BatchOptions& opts,
                 const LossFn& loss, const std::function<double(const ModelBatch&)>& weight) {
  if (samples.empty()) throw UsageError("held-out set is empty");
  double total = 0.0, count = 0.0;
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t b = 0; b < idx.size(); b += 256) {
    const auto ptrs = pointers(samples, std::span(idx).subspan(b, std::min<std::size_t>(256, idx.size() - b)));
    const ModelBatch batch = make_batch(ptrs, dims, opts);
    Tape tape;
    const double w = weight(batch);
    total += w * loss(tape, batch).value().item();
    count += w;
  }
  return total / count;
}

void train_only(ParameterSet& params, std::initializer_list<const char*> prefixes) {
  for (auto& p : params) {
    p.frozen = true;
    for (const char* prefix : prefixes)
      if (p.name.rfind(prefix, 0) == 0) p.frozen = false;
  }
}

std::vector<Tensor> snapshot(const ParameterSet& params) {
  std::vector<Tensor> out;
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

void restore(ParameterSet& params, const std::vector<Tensor>& values) {
  std::size_t i = 0;
  for (auto& p : params) p.value = values[i++];
}

TrainLog run_stage(const std::string& stage, RlrnModel& m, const std::vector<PreparedSample>& train, const TrainConfig& c,
                   const BatchOptions& opts, const LossFn& loss, const EvalFn& evaluate) {
  validate(c);
  if (train.empty()) throw UsageError(stage + ": empty training set");
  ParameterSet& params = m.params();
  AdamState adam;
  adam.config.lr = static_cast<float>(c.lr);
  TrainLog log;
  log.stage = stage;

  auto [v0, m0] = evaluate();
  log.epochs.push_back({0, std::nan(""), v0, m0});
  double best = v0;
  std::vector<Tensor> best_values = snapshot(params);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    Rng rng(derive_seed(derive_seed(c.seed, stage), static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(c.batch)) {
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(c.batch), order.size() - b);
      const auto ptrs = pointers(train, std::span(order).subspan(b, n));
      const ModelBatch batch = make_batch(ptrs, m.dims(), opts);
      params.zero_grad();
      Tape tape;
      const Var l = loss(tape, batch);
      const float value = l.value().item();
      if (!std::isfinite(value))
        throw TrainingError(stage + ": loss became non-finite at epoch " + std::to_string(epoch));
      tape.backward(l);
      adam_step(params, adam);
      total += value;
      ++batches;
    }
    auto [vl, vm] = evaluate();
    if (!std::isfinite(vl)) throw TrainingError(stage + ": held-out loss became non-finite at epoch " + std::to_string(epoch));
    log.epochs.push_back({epoch, total / static_cast<double>(batches), vl, vm});
    if (vl < best) {
      best = vl;
      best_values = snapshot(params);
      log.best_epoch = epoch;
    }
  }
  if (c.keep_best) {
    restore(params, best_values);
  } else {
    log.best_epoch = c.epochs;
  }
  params.zero_grad();
  return log;
}

Tensor history_target(const ModelBatch& b) {
  const int h = static_cast<int>(b.steps.size());
  Tensor t({b.rows, h * data::kStateDim});
  for (int k = 0; k < h; ++k)
    for (int r = 0; r < b.rows; ++r)
      for (int c = 0; c < data::kStateDim; ++c) t.at(r, k * data::kStateDim + c) = b.steps[static_cast<std::size_t>(k)].at(r, c);
  return t;
}

}  // namespace

TrainLog pretrain_lstm_autoencoder(RlrnModel& m, const std::vector<PreparedSample>& train,
                                   const std::vector<PreparedSample>& val, const TrainConfig& c) {
  train_only(m.params(), {"lstm."});
  const BatchOptions opts{true, false, false};
  const int h = m.dims().history;
  const LossFn loss = [&m, h](Tape& tape, const ModelBatch& b) {
    if (b.steps.empty()) throw UsageError("lstm-ae: batch without histories");
    const Var v = model::lstm_encode(tape, m.params(), b.steps);
    return mse(model::lstm_decode(tape, m.params(), v, h), history_target(b));
  };
  const auto rows = [](const ModelBatch& b) { return static_cast<double>(b.rows); };
  for (const auto* set : {&train, &val})
    if (std::any_of(set->begin(), set->end(), [](const auto& s) { return !s.v.empty(); }))
      throw UsageError("lstm-ae: samples already carry cached features");
  const EvalFn eval = [&] { return std::pair{mean_loss(val, m.dims(), opts, loss, rows), 0.0}; };
  return run_stage("lstm-ae", m, train, c, opts, loss, eval);
}

TrainLog pretrain_vae(RlrnModel& m, const std::vector<PreparedSample>& train, const std::vector<PreparedSample>& val,
                      const TrainConfig& c) {
  train_only(m.params(), {"vae."});
  const BatchOptions opts{false, true, false};
  auto noise = std::make_shared<Rng>(derive_seed(c.seed, "vae-noise"));
  const LossFn loss = [&m, &c, noise](Tape& tape, const ModelBatch& b) {
    return model::vae_loss(tape, m.params(), tape.constant(b.ego_rasters), m.dims(), c.vae_beta, *noise).total;
  };
  // Held-out: reconstruction from the posterior mean plus the weighted KL; metric = reconstruction MSE.
  const EvalFn eval = [&] {
    double recon = 0.0, kl = 0.0, n = 0.0;
    std::vector<std::size_t> idx(val.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t b = 0; b < idx.size(); b += 256) {
      const auto ptrs = pointers(val, std::span(idx).subspan(b, std::min<std::size_t>(256, idx.size() - b)));
      const ModelBatch batch = make_batch(ptrs, m.dims(), opts);
      Tape tape;
      const Var x = tape.constant(batch.ego_rasters);
      const auto q = model::vae_encode(tape, m.params(), x);
      const double w = batch.samples;
      recon += w * mse(model::vae_decode(tape, m.params(), q.mean, m.dims()), batch.ego_rasters).value().item();
      const Var kt = add_scalar(sub(add(square(q.mean), exp(q.logvar)), q.logvar), -1.0f);
      kl += 0.5 * sum(kt).value().item();
      n += w;
    }
    return std::pair{recon / n + c.vae_beta * kl / n, recon / n};
  };
  return run_stage("vae", m, train, c, opts, loss, eval);
}

void cache_frozen_features(RlrnModel& m, std::vector<PreparedSample>& samples) {
  const int hidden = m.dims().lstm_hidden, latent = m.dims().vae_latent;
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t b = 0; b < idx.size(); b += 256) {
    const auto span = std::span(idx).subspan(b, std::min<std::size_t>(256, idx.size() - b));
    std::vector<const PreparedSample*> ptrs;
    for (std::size_t i : span) {
      samples[i].v.clear();
      samples[i].scene.clear();
      ptrs.push_back(&samples[i]);
    }
    const ModelBatch batch = make_batch(ptrs, m.dims(), BatchOptions{true, true, false});
    Tape tape;
    const Tensor& v = model::lstm_encode(tape, m.params(), batch.steps).value();
    const Tensor& z = model::vae_encode(tape, m.params(), tape.constant(batch.ego_rasters)).mean.value();
    for (std::size_t k = 0; k < span.size(); ++k) {
      PreparedSample& s = samples[span[k]];
      const float* vr = v.ptr() + static_cast<std::size_t>(batch.offsets[k]) * hidden;
      s.v.assign(vr, vr + static_cast<std::size_t>(s.vehicles) * hidden);
      const float* zr = z.ptr() + k * static_cast<std::size_t>(latent);
      s.scene.assign(zr, zr + latent);
    }
  }
}

ClassifierScore classifier_accuracy(RlrnModel& m, const std::vector<PreparedSample>& samples) {
  std::size_t correct = 0, count = 0, ghosts = 0;
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t b = 0; b < idx.size(); b += 256) {
    const auto ptrs = pointers(samples, std::span(idx).subspan(b, std::min<std::size_t>(256, idx.size() - b)));
    const ModelBatch batch = make_batch(ptrs, m.dims());
    Tape tape;
    const Tensor& logits = m.ghost_logits(tape, batch).value();
    for (int r = 0; r < batch.rows; ++r) {
      if (batch.label_weights.at(r, 0) == 0.0f) continue;
      const bool ghost = batch.labels.at(r, 0) > 0.5f;
      correct += (logits.at(r, 0) > 0.0f) == ghost;
      ghosts += ghost;
      ++count;
    }
  }
  if (count == 0) throw UsageError("classifier accuracy: no non-ego vehicles");
  const double g = static_cast<double>(ghosts) / static_cast<double>(count);
  return {static_cast<double>(correct) / static_cast<double>(count), std::max(g, 1.0 - g), count};
}

TrainLog pretrain_confidence(RlrnModel& m, const std::vector<PreparedSample>& train, const std::vector<PreparedSample>& val,
                             const TrainConfig& c) {
  if (!model::uses_confidence_stage(m.variant())) throw UsageError("pretrain_confidence: variant has no confidence stage");
  train_only(m.params(), {"cnn.", "fuse.", "conf.", "cls."});
  const BatchOptions opts{true, true, true};
  const LossFn loss = [&m](Tape& tape, const ModelBatch& b) {
    return bce_with_logits(m.ghost_logits(tape, b), b.labels, b.label_weights);
  };
  const auto non_ego = [](const ModelBatch& b) { return static_cast<double>(b.rows - b.samples); };
  const EvalFn eval = [&] {
    return std::pair{mean_loss(val, m.dims(), opts, loss, non_ego), classifier_accuracy(m, val).accuracy};
  };
  return run_stage("confidence", m, train, c, opts, loss, eval);
}

std::vector<sim::Action> predict_all(RlrnModel& m, const std::vector<PreparedSample>& samples, int batch) {
  std::vector<sim::Action> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto step = static_cast<std::size_t>(batch);
  for (std::size_t b = 0; b < idx.size(); b += step) {
    const auto ptrs = pointers(samples, std::span(idx).subspan(b, std::min(step, idx.size() - b)));
    const auto part = model::predict(m, make_batch(ptrs, m.dims()));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<sim::Action> ground_truth(const std::vector<PreparedSample>& samples) {
  std::vector<sim::Action> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.action[0], s.action[1], s.action[2]});
  return out;
}

TrainLog train_end_to_end(RlrnModel& m, const std::vector<PreparedSample>& train, const std::vector<PreparedSample>& val,
                          const TrainConfig& c) {
  m.freeze_for_end_to_end();
  const BatchOptions opts{true, true, true};
  const LossFn loss = [&m](Tape& tape, const ModelBatch& b) { return mse(m.actions(tape, b), b.actions); };
  const auto per_sample = [](const ModelBatch& b) { return static_cast<double>(b.samples); };
  const auto truth = ground_truth(val);
  const EvalFn eval = [&] {
    const double l = mean_loss(val, m.dims(), opts, loss, per_sample);
    return std::pair{l, metrics::mean_accuracy(predict_all(m, val), truth)};
  };
  return run_stage("end-to-end", m, train, c, opts, loss, eval);
}

}  // namespace rlrn::train
