#include "mdn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

namespace mdn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train.epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("train.learning_rate must be finite and non-negative");
  }
  for (std::size_t d : drop_epochs) {
    if (d >= epochs) throw ValidationError("train.drop_epochs entries must be smaller than train.epochs");
  }
  if (!(drop_factor > 0.0)) throw ValidationError("train.drop_factor must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("train.beta1 and train.beta2 must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("train.epsilon must be positive");
  if (!(clip_norm >= 0.0)) throw ValidationError("train.clip_norm must be >= 0");
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  double lr = learning_rate;
  for (std::size_t d : drop_epochs) {
    if (epoch > d) lr /= drop_factor;
  }
  return lr;
}

AdamState AdamState::zeros_like(const std::vector<Parameter>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.shape(), 0.0);
    s.v.emplace_back(p.value.shape(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               const TrainConfig& hyper) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape()) {
      throw ShapeError("adam_step: gradient shape mismatch for " + params[i].name);
    }
    if (!grads[i].all_finite()) throw NumericError("non-finite gradient for parameter " + params[i].name);
  }
  ++state.step;
  const double b1 = hyper.beta1, b2 = hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, double(state.step));
  const double c2 = 1.0 - std::pow(b2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value.data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + hyper.epsilon);
    }
  }
}

double clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  double ss = 0.0;
  for (const auto& g : grads) {
    for (double v : g.data()) ss += v * v;
  }
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) {
      for (double& v : g.data()) v *= s;
    }
  }
  return norm;
}

Dataset make_dataset(const SynthConfig& synth, std::size_t count, std::uint64_t seed) {
  synth.validate();
  Dataset d;
  d.synth = synth;
  d.scenes = gen_dataset(synth, count, seed);
  const GridShape grid = synth.grid();
  for (const Scene& s : d.scenes) d.targets.push_back(build_targets(s, grid, synth.task, synth.num_classes));
  return d;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("MDN_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1 && n <= 256) return std::size_t(n);
    throw ValidationError(std::string("MDN_THREADS must be an integer in [1, 256], got '") + env + "'");
  }
  return 1;
}

namespace {

// Runs fn(i) for i in [0, n) on up to worker_threads() threads.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t threads = std::min(worker_threads(), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct SceneGrad {
  LossTerms terms;
  std::vector<Tensor> grads;
};

SceneGrad scene_gradient(const Network& net, const Scene& scene, const DenseTargets& targets) {
  Tape tape;
  const std::vector<Var> vars = net.bind(tape);
  const auto heads = net.forward(tape, vars, tape.constant(scene.image));
  const SceneLoss loss = scene_loss(heads, targets, net.config());
  tape.backward(loss.total);
  SceneGrad out;
  out.terms = loss.terms;
  for (const Var& v : vars) out.grads.push_back(tape.grad(v));
  return out;
}

}  // namespace

BatchResult batch_gradient(const Network& net, const Dataset& data, std::span<const std::size_t> batch) {
  if (batch.empty()) throw ValidationError("batch_gradient: empty batch");
  std::vector<SceneGrad> parts(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    parts[i] = scene_gradient(net, data.scenes.at(batch[i]), data.targets.at(batch[i]));
  });
  BatchResult r;
  const double inv = 1.0 / double(batch.size());
  for (const auto& p : net.parameters()) r.grads.emplace_back(p.value.shape(), 0.0);
  for (const SceneGrad& part : parts) {
    r.terms.classification += part.terms.classification * inv;
    r.terms.center_offset += part.terms.center_offset * inv;
    r.terms.pose += part.terms.pose * inv;
    r.terms.total += part.terms.total * inv;
    for (std::size_t k = 0; k < r.grads.size(); ++k) {
      auto dst = r.grads[k].data();
      auto src = part.grads[k].data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j] * inv;
    }
  }
  return r;
}

std::vector<Prediction> predict_dataset(const Network& net, const Dataset& data) {
  std::vector<Prediction> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) { out[i] = net.predict(data.scenes[i].image); });
  return out;
}

std::vector<Detection> detect_dataset(const Network& net, const Dataset& data, const EvalOptions& options,
                                      const std::vector<Prediction>* cached) {
  std::vector<Prediction> local;
  if (!cached) {
    local = predict_dataset(net, data);
    cached = &local;
  }
  DecodeOptions opt;
  opt.task = data.synth.task;
  opt.mode = options.mode;
  opt.top_k = options.top_k;
  opt.threshold = options.threshold;
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Prediction& p = (*cached)[i];
    for (Detection& d : decode(p.heatmap, p.offset, p.field, data.synth.downsample, opt)) {
      d.image_id = i;
      dets.push_back(std::move(d));
    }
  }
  return dets;
}

std::vector<GroundTruth> ground_truth_of(const Dataset& data) {
  std::vector<GroundTruth> gts;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const Instance& in : data.scenes[i].instances) {
      gts.push_back(ground_truth_of(in, i, data.synth.task, data.synth.downsample));
    }
  }
  return gts;
}

EvalReport evaluate_detections(const std::vector<Detection>& dets, const Dataset& data, const EvalOptions& options) {
  const auto gts = ground_truth_of(data);
  if (data.synth.task == Task::Detection) return evaluate_boxes(dets, gts);
  return evaluate_keypoints(dets, gts, options.oks_constants);
}

EvalReport evaluate_dataset(const Network& net, const Dataset& data, const EvalOptions& options) {
  return evaluate_detections(detect_dataset(net, data, options), data, options);
}

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,L_C,L_Coff,L_T,total,AP,lr,seconds\n";
  for (const EpochLog& e : epochs) {
    os << e.epoch << ',' << e.classification << ',' << e.center_offset << ',' << e.pose << ',' << e.total << ',';
    if (e.ap) os << *e.ap;
    os << ',' << e.learning_rate << ',' << e.seconds << '\n';
  }
  return os.str();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(scene_seed(seed ^ 0x5EEDF00Dull, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TrainLog train(Network& net, const Dataset& train_set, const Dataset* eval_set, const TrainConfig& config,
               const EvalOptions& eval_options, TrainState& state, const TrainHooks& hooks) {
  config.validate();
  if (train_set.size() == 0) throw ValidationError("train: dataset is empty");
  if (train_set.synth.task != net.config().task) throw ValidationError("train: dataset task differs from network task");
  if (state.adam.m.empty()) state.adam = AdamState::zeros_like(net.parameters());
  TrainLog log;
  for (std::size_t epoch = state.epoch + 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = config.learning_rate_at(epoch);
    const auto order = epoch_order(train_set.size(), config.seed, epoch);
    EpochLog e;
    e.epoch = epoch;
    e.learning_rate = lr;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      BatchResult r;
      try {
        r = batch_gradient(net, train_set, batch);
        if (!std::isfinite(r.terms.total)) throw NumericError("non-finite training loss");
        clip_gradients(r.grads, config.clip_norm);
        adam_step(net.parameters(), r.grads, state.adam, lr, config);
      } catch (const NumericError& err) {
        throw TrainingAborted(std::string("training aborted at epoch ") + std::to_string(epoch) + ", step " +
                                  std::to_string(state.adam.step + 1) + ": " + err.what(),
                              epoch, state.adam.step + 1);
      }
      e.classification += r.terms.classification;
      e.center_offset += r.terms.center_offset;
      e.pose += r.terms.pose;
      e.total += r.terms.total;
      ++batches;
    }
    e.classification /= double(batches);
    e.center_offset /= double(batches);
    e.pose /= double(batches);
    e.total /= double(batches);
    if (eval_set && config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      e.ap = evaluate_dataset(net, *eval_set, eval_options).ap;
    }
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    state.epoch = epoch;
    log.epochs.push_back(e);
    if (hooks.on_epoch) hooks.on_epoch(net, state, e);
  }
  return log;
}

}  // namespace mdn
