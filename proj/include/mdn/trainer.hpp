#pragma once

// Optimization: Adam with bias correction, global-norm clipping, step
// learning-rate drops, seeded shuffling, per-epoch logging and evaluation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdn/eval.hpp"
#include "mdn/network.hpp"
#include "mdn/synthdata.hpp"

namespace mdn {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 2.5e-4;
  std::vector<std::size_t> drop_epochs;  // lr /= drop_factor when an epoch index reaches each entry
  double drop_factor = 10.0;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 10.0;  // 0 disables clipping
  std::size_t eval_every = 1;  // epochs between AP evaluations; 0 disables

  void validate() const;
  double learning_rate_at(std::size_t epoch) const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const std::vector<Parameter>& params);
};

// One Adam update. Throws NumericError naming the first parameter whose
// gradient is not finite; parameters and state are untouched in that case.
void adam_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               const TrainConfig& hyper);

// Scales gradients in place so their global L2 norm is at most max_norm
// (no-op when max_norm <= 0). Returns the norm before clipping.
double clip_gradients(std::vector<Tensor>& grads, double max_norm);

// Scenes with their dense targets.
struct Dataset {
  SynthConfig synth;
  std::vector<Scene> scenes;
  std::vector<DenseTargets> targets;

  std::size_t size() const { return scenes.size(); }
};
Dataset make_dataset(const SynthConfig& synth, std::size_t count, std::uint64_t seed);

// Loss and gradient of the mean scene loss over a batch. Scene gradients are
// summed in batch order, so results do not depend on the thread count.
struct BatchResult {
  LossTerms terms;  // batch means
  std::vector<Tensor> grads;
};
BatchResult batch_gradient(const Network& net, const Dataset& data, std::span<const std::size_t> batch);

// Threads used for per-scene work, from MDN_THREADS (default 1).
std::size_t worker_threads();

struct EvalOptions {
  DecodeMode mode = DecodeMode::MaxComponent;
  std::size_t top_k = 100;
  double threshold = 0.05;
  std::vector<double> oks_constants = std::vector<double>(kPoseKeypoints, 0.25);
};

std::vector<Prediction> predict_dataset(const Network& net, const Dataset& data);
std::vector<Detection> detect_dataset(const Network& net, const Dataset& data, const EvalOptions& options,
                                      const std::vector<Prediction>* cached = nullptr);
std::vector<GroundTruth> ground_truth_of(const Dataset& data);
EvalReport evaluate_dataset(const Network& net, const Dataset& data, const EvalOptions& options);
EvalReport evaluate_detections(const std::vector<Detection>& dets, const Dataset& data, const EvalOptions& options);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double classification = 0.0;
  double center_offset = 0.0;
  double pose = 0.0;
  double total = 0.0;
  std::optional<double> ap;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::string to_csv() const;
};

// Raised when a loss or gradient goes non-finite. The network holds the
// parameters from before the failing step.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, std::size_t epoch, std::uint64_t step)
      : NumericError(what), epoch(epoch), step(step) {}
  std::size_t epoch;
  std::uint64_t step;
};

struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  AdamState adam;
};

struct TrainHooks {
  // Called after each epoch with the state that would be checkpointed.
  std::function<void(const Network&, const TrainState&, const EpochLog&)> on_epoch;
};

// Runs epochs state.epoch+1 .. config.epochs. Deterministic for a fixed
// seed: the shuffle of epoch e depends only on (seed, e).
TrainLog train(Network& net, const Dataset& train_set, const Dataset* eval_set, const TrainConfig& config,
               const EvalOptions& eval_options, TrainState& state, const TrainHooks& hooks = {});

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

}  // namespace mdn
