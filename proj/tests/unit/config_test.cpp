#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mdn/config.hpp"

namespace mdn {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mdn_config_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(RunConfigJson, RoundTripsEveryField) {
  RunConfig c = RunConfig::defaults(Task::Pose);
  c.seed = 42;
  c.output_dir = "out/x";
  c.data.train_scenes = 17;
  c.network.components = 5;
  c.network.sigma_activation = SigmaActivation::UnboundedExp;
  c.train.drop_epochs = {3, 7};
  c.train.epochs = 9;
  c.eval.mode = DecodeMode::MixtureMean;
  c.synth.keypoint_scale_factors = {1, 2, 3, 4, 5, 6};
  c.finalize();
  const Json j = to_json(c);
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.task, Task::Pose);
  EXPECT_EQ(back.train.seed, 42u);
  EXPECT_EQ(back.network.pose.scale_factors, c.synth.keypoint_scale_factors);
  EXPECT_EQ(back.network.sigma_activation, SigmaActivation::UnboundedExp);
}

TEST(RunConfigJson, MissingKeysKeepTaskDefaults) {
  const RunConfig c = run_config_from_json(Json{{"task", "pose"}});
  const SynthConfig expected = SynthConfig::defaults(Task::Pose);
  EXPECT_EQ(c.synth.height, expected.height);
  EXPECT_EQ(c.synth.max_instances, expected.max_instances);
  EXPECT_EQ(c.network.target_dim(), 2 * kPoseKeypoints);
  EXPECT_EQ(run_config_from_json(Json::object()).task, Task::Detection);
}

TEST(RunConfigJson, RejectsUnknownKeysWithPath) {
  try {
    run_config_from_json(Json{{"train", {{"learning_rat", 0.1}}}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("train.learning_rat"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_config_from_json(Json{{"bogus", 1}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"synth", {{"scale_modes", {{{"center_px", 3}, {"x", 1}}}}}}}),
               ValidationError);
}

TEST(RunConfigJson, RejectsWrongTypesAndBadValues) {
  EXPECT_THROW(run_config_from_json(Json{{"train", {{"epochs", -3}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"train", {{"epochs", "ten"}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"task", "segmentation"}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"network", {{"sigma_activation", "softplus"}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"eval", {{"mode", "median"}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"network", {{"components", 0}}}}), ValidationError);
  EXPECT_THROW(run_config_from_json(Json{{"task", "pose"}, {"eval", {{"oks_constants", {0.25}}}}}),
               ValidationError);
}

TEST(ApplyOverride, SetsNestedValues) {
  Json doc = Json::object();
  apply_override(doc, "train.learning_rate=0.001");
  apply_override(doc, "network.sigma_activation=exp");
  apply_override(doc, "train.drop_epochs=[5,8]");
  apply_override(doc, "seed=3");
  const RunConfig c = run_config_from_json(doc);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.001);
  EXPECT_EQ(c.network.sigma_activation, SigmaActivation::UnboundedExp);
  EXPECT_EQ(c.train.drop_epochs, (std::vector<std::size_t>{5, 8}));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_THROW(apply_override(doc, "novalue"), ValidationError);
  EXPECT_THROW(apply_override(doc, "seed.x=1"), ValidationError);
  Json bad = Json::object();
  apply_override(bad, "train.nope=1");
  EXPECT_THROW(run_config_from_json(bad), ValidationError);
}

TEST(Checkpoint, RoundTripsExactly) {
  NetworkConfig nc;
  nc.task = Task::Pose;
  nc.components = 2;
  nc.width1 = 3;
  nc.width2 = 5;
  nc.pose.scale_factors = {1.0, 0.5, 2.0, 1.0, 1.0, 1.0};
  Network net(nc);
  net.initialize(77);
  TrainState state;
  state.epoch = 4;
  state.adam = AdamState::zeros_like(net.parameters());
  state.adam.step = 123;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& t : state.adam.m) {
    for (double& v : t.data()) v = n(rng) * 1e-7;
  }
  for (auto& t : state.adam.v) {
    for (double& v : t.data()) v = std::abs(n(rng)) / 3.0;
  }
  const fs::path dir = temp_dir("roundtrip");
  save_checkpoint(dir / "ckpt.json", net, state, Json{{"seed", 1}});
  const LoadedCheckpoint back = load_checkpoint(dir / "ckpt.json");
  EXPECT_EQ(back.state.epoch, 4u);
  EXPECT_EQ(back.state.adam.step, 123u);
  EXPECT_EQ(back.run_config, (Json{{"seed", 1}}));
  EXPECT_EQ(to_json(back.network.config()), to_json(nc));
  ASSERT_EQ(back.network.parameters().size(), net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    EXPECT_EQ(back.network.parameters()[i].name, net.parameters()[i].name);
    EXPECT_TRUE(std::equal(back.network.parameters()[i].value.data().begin(),
                           back.network.parameters()[i].value.data().end(),
                           net.parameters()[i].value.data().begin()));
    EXPECT_TRUE(std::equal(back.state.adam.m[i].data().begin(), back.state.adam.m[i].data().end(),
                           state.adam.m[i].data().begin()));
    EXPECT_TRUE(std::equal(back.state.adam.v[i].data().begin(), back.state.adam.v[i].data().end(),
                           state.adam.v[i].data().begin()));
  }
  EXPECT_FALSE(fs::exists(dir / "ckpt.json.tmp"));
}

TEST(Checkpoint, RejectsForeignOrCorruptFiles) {
  const fs::path dir = temp_dir("corrupt");
  write_text_file(dir / "a.json", "{\"format\": \"other\"}");
  EXPECT_THROW(load_checkpoint(dir / "a.json"), ValidationError);
  write_text_file(dir / "b.json", "{not json");
  EXPECT_THROW(load_checkpoint(dir / "b.json"), ValidationError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), ValidationError);

  Network net(NetworkConfig{});
  net.initialize(1);
  save_checkpoint(dir / "c.json", net, TrainState{}, Json());
  Json doc = read_json_file(dir / "c.json");
  doc["parameters"][0]["shape"] = Json::array({1});
  write_text_file(dir / "c.json", doc.dump());
  EXPECT_THROW(load_checkpoint(dir / "c.json"), ValidationError);
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  SynthConfig s = SynthConfig::defaults(Task::Detection);
  s.height = 32;
  s.width = 32;
  s.scale_modes = {{6.0, 0.2, 0.5}, {14.0, 0.2, 0.5}};
  s.max_instances = 2;
  const Dataset data = make_dataset(s, 6, 3);
  NetworkConfig nc;
  nc.width1 = 4;
  nc.width2 = 6;
  TrainConfig c;
  c.epochs = 4;
  c.batch_size = 3;
  c.learning_rate = 3e-3;
  c.drop_epochs = {2};
  c.eval_every = 0;

  Network straight(nc);
  straight.initialize(2);
  TrainState s1;
  train(straight, data, nullptr, c, EvalOptions{}, s1);

  const fs::path dir = temp_dir("resume");
  Network first(nc);
  first.initialize(2);
  TrainState s2;
  TrainConfig half = c;
  half.epochs = 2;
  half.drop_epochs = {};
  train(first, data, nullptr, half, EvalOptions{}, s2);
  save_checkpoint(dir / "ckpt.json", first, s2, Json());
  LoadedCheckpoint resumed = load_checkpoint(dir / "ckpt.json");
  train(resumed.network, data, nullptr, c, EvalOptions{}, resumed.state);

  EXPECT_EQ(resumed.state.epoch, 4u);
  for (std::size_t i = 0; i < straight.parameters().size(); ++i) {
    const auto a = straight.parameters()[i].value.data();
    const auto b = resumed.network.parameters()[i].value.data();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << straight.parameters()[i].name;
  }
}

}  // namespace
}  // namespace mdn
