#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>

#include "mdn/trainer.hpp"
#include "test_util.hpp"

namespace mdn {
namespace {

std::vector<Parameter> one_param(std::vector<double> values) {
  const std::size_t n = values.size();
  return {Parameter{"w", Tensor({n}, std::move(values))}};
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto params = one_param({1.0, -2.0, 3.0});
  AdamState s = AdamState::zeros_like(params);
  TrainConfig hyper;
  for (int i = 0; i < 5; ++i) adam_step(params, {Tensor({3}, 0.0)}, s, 0.1, hyper);
  EXPECT_EQ(params[0].value.data()[0], 1.0);
  EXPECT_EQ(params[0].value.data()[1], -2.0);
  EXPECT_EQ(params[0].value.data()[2], 3.0);
  EXPECT_EQ(s.step, 5u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps).
  auto params = one_param({0.0, 0.0, 0.0});
  AdamState s = AdamState::zeros_like(params);
  TrainConfig hyper;
  adam_step(params, {Tensor({3}, std::vector<double>{0.3, -50.0, 1e-3})}, s, 0.01, hyper);
  EXPECT_NEAR(params[0].value.data()[0], -0.01, 1e-9);
  EXPECT_NEAR(params[0].value.data()[1], 0.01, 1e-9);
  EXPECT_NEAR(params[0].value.data()[2], -0.01, 1e-6);
}

TEST(Adam, MinimizesQuadraticBowl) {
  const std::vector<double> center{1.5, -0.5, 2.0, 0.0};
  auto params = one_param({0.0, 0.0, 0.0, 0.0});
  AdamState s = AdamState::zeros_like(params);
  TrainConfig hyper;
  const std::vector<double> curvature{1.0, 10.0, 0.1, 3.0};
  for (int it = 0; it < 3000; ++it) {
    Tensor g({4});
    for (std::size_t i = 0; i < 4; ++i) g.data()[i] = 2.0 * curvature[i] * (params[0].value.data()[i] - center[i]);
    adam_step(params, {g}, s, it < 2000 ? 0.05 : 0.005, hyper);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(params[0].value.data()[i], center[i], 1e-2) << i;
}

TEST(Adam, NonFiniteGradientIsRejectedWithoutSideEffects) {
  auto params = one_param({1.0, 2.0});
  AdamState s = AdamState::zeros_like(params);
  TrainConfig hyper;
  Tensor g({2}, std::vector<double>{0.5, std::numeric_limits<double>::quiet_NaN()});
  try {
    adam_step(params, {g}, s, 0.1, hyper);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("w"), std::string::npos);
  }
  EXPECT_EQ(params[0].value.data()[0], 1.0);
  EXPECT_EQ(s.step, 0u);
  EXPECT_EQ(s.m[0].data()[0], 0.0);
}

TEST(ClipGradients, ScalesToMaxNorm) {
  std::vector<Tensor> grads{Tensor({2}, std::vector<double>{3.0, 0.0}), Tensor({1}, std::vector<double>{4.0})};
  EXPECT_DOUBLE_EQ(clip_gradients(grads, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(grads[0].data()[0], 3.0);
  EXPECT_DOUBLE_EQ(clip_gradients(grads, 1.0), 5.0);
  EXPECT_NEAR(grads[0].data()[0], 0.6, 1e-15);
  EXPECT_NEAR(grads[1].data()[0], 0.8, 1e-15);
  std::vector<Tensor> big{Tensor({1}, std::vector<double>{100.0})};
  clip_gradients(big, 0.0);
  EXPECT_EQ(big[0].data()[0], 100.0);
}

TEST(TrainConfigTest, LearningRateDrops) {
  TrainConfig c;
  c.epochs = 30;
  c.learning_rate = 1e-3;
  c.drop_epochs = {10, 20};
  EXPECT_DOUBLE_EQ(c.learning_rate_at(1), 1e-3);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(10), 1e-3);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(11), 1e-4);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(21), 1e-5);
  c.drop_epochs = {30};
  EXPECT_THROW(c.validate(), ValidationError);
  c.drop_epochs = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(EpochOrder, IsSeededPermutation) {
  const auto a = epoch_order(50, 7, 1);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_EQ(a, epoch_order(50, 7, 1));
  EXPECT_NE(a, epoch_order(50, 7, 2));
  EXPECT_NE(a, epoch_order(50, 8, 1));
}

SynthConfig tiny_synth(Task task) {
  SynthConfig s = SynthConfig::defaults(task);
  s.height = 32;
  s.width = 32;
  if (task == Task::Detection) {
    s.scale_modes = {{6.0, 0.2, 0.5}, {14.0, 0.2, 0.5}};
    s.max_instances = 2;
  } else {
    s.figure_min_px = 14.0;
    s.figure_max_px = 20.0;
    s.max_instances = 1;
  }
  return s;
}

NetworkConfig tiny_net(Task task, std::size_t m) {
  NetworkConfig c;
  c.task = task;
  c.components = m;
  c.width1 = 4;
  c.width2 = 8;
  if (task == Task::Pose) c.pose.scale_factors = std::vector<double>(kPoseKeypoints, 1.0);
  return c;
}

std::vector<double> flatten(const Network& net) {
  std::vector<double> out;
  for (const auto& p : net.parameters()) out.insert(out.end(), p.value.data().begin(), p.value.data().end());
  return out;
}

TEST(Train, OverfitsSingleScene) {
  const Dataset data = make_dataset(tiny_synth(Task::Detection), 1, 3);
  Network net(tiny_net(Task::Detection, 1));
  net.initialize(1);
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = 1;
  c.learning_rate = 1e-2;
  c.eval_every = 0;
  TrainState state;
  const TrainLog log = train(net, data, nullptr, c, EvalOptions{}, state);
  ASSERT_EQ(log.epochs.size(), 200u);
  const double first = log.epochs.front().total;
  const double last = log.epochs.back().total;
  EXPECT_LT(last, 0.1 * first) << first << " -> " << last;
  EXPECT_EQ(state.epoch, 200u);
  EXPECT_EQ(state.adam.step, 200u);
}

TEST(Train, DeterministicAndThreadIndependent) {
  const Dataset data = make_dataset(tiny_synth(Task::Pose), 6, 11);
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.seed = 5;
  c.eval_every = 0;
  auto run = [&](const char* threads) {
    setenv("MDN_THREADS", threads, 1);
    Network net(tiny_net(Task::Pose, 2));
    net.initialize(9);
    TrainState state;
    const TrainLog log = train(net, data, nullptr, c, EvalOptions{}, state);
    unsetenv("MDN_THREADS");
    return std::make_pair(flatten(net), log.epochs.back().total);
  };
  const auto a = run("1");
  const auto b = run("1");
  const auto t = run("3");
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.first, t.first);
  EXPECT_EQ(a.second, t.second);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const Dataset data = make_dataset(tiny_synth(Task::Detection), 4, 2);
  Network net(tiny_net(Task::Detection, 3));
  net.initialize(4);
  const auto before = flatten(net);
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 2;
  c.learning_rate = 0.0;
  c.eval_every = 0;
  TrainState state;
  train(net, data, nullptr, c, EvalOptions{}, state);
  EXPECT_EQ(flatten(net), before);
}

TEST(Train, NonFiniteLossAborts) {
  Dataset data = make_dataset(tiny_synth(Task::Detection), 4, 2);
  data.scenes[2].image.data()[17] = std::numeric_limits<double>::quiet_NaN();
  Network net(tiny_net(Task::Detection, 1));
  net.initialize(4);
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 1;
  c.learning_rate = 1e-3;
  c.eval_every = 0;
  TrainState state;
  try {
    train(net, data, nullptr, c, EvalOptions{}, state);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_EQ(e.epoch, 1u);
    EXPECT_GE(e.step, 1u);
    EXPECT_LE(e.step, 4u);
    EXPECT_EQ(state.adam.step, e.step - 1);
  }
  for (double v : flatten(net)) ASSERT_TRUE(std::isfinite(v));
}

TEST(Train, EpochHookSeesEveryEpoch) {
  const Dataset data = make_dataset(tiny_synth(Task::Detection), 3, 2);
  const Dataset eval = make_dataset(tiny_synth(Task::Detection), 3, 99);
  Network net(tiny_net(Task::Detection, 2));
  net.initialize(4);
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 2;
  c.eval_every = 2;
  TrainState state;
  std::vector<std::size_t> seen;
  TrainHooks hooks;
  hooks.on_epoch = [&](const Network&, const TrainState& s, const EpochLog& e) {
    EXPECT_EQ(s.epoch, e.epoch);
    seen.push_back(e.epoch);
  };
  const TrainLog log = train(net, data, &eval, c, EvalOptions{}, state, hooks);
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_FALSE(log.epochs[0].ap.has_value());
  EXPECT_TRUE(log.epochs[1].ap.has_value());
  EXPECT_TRUE(log.epochs[2].ap.has_value());
  const std::string csv = log.to_csv();
  EXPECT_EQ(csv.rfind("epoch,L_C,L_Coff,L_T,total,AP,lr,seconds\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(WorkerThreads, ReadsEnvironment) {
  unsetenv("MDN_THREADS");
  EXPECT_EQ(worker_threads(), 1u);
  setenv("MDN_THREADS", "4", 1);
  EXPECT_EQ(worker_threads(), 4u);
  setenv("MDN_THREADS", "four", 1);
  EXPECT_THROW(worker_threads(), ValidationError);
  unsetenv("MDN_THREADS");
}

}  // namespace
}  // namespace mdn
