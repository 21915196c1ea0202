#pragma once

// Declarative run configuration (one JSON file per run) and the checkpoint
// container. Every field has a default; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdn/network.hpp"
#include "mdn/synthdata.hpp"
#include "mdn/trainer.hpp"

namespace mdn {

using Json = nlohmann::json;

struct DataConfig {
  std::size_t train_scenes = 2000;
  std::size_t eval_scenes = 500;
  std::uint64_t train_seed = 1;
  std::uint64_t eval_seed = 2;
};

struct AnalysisConfig {
  double match_radius_px = 8.0;  // detection-to-instance assignment radius
  double confident_score = 0.5;  // score cut for viewpoint statistics
  std::size_t histogram_bins = 24;
};

struct RunConfig {
  Task task = Task::Detection;
  std::uint64_t seed = 0;  // network init and shuffling
  std::string output_dir = "runs/default";
  DataConfig data;
  SynthConfig synth;
  NetworkConfig network;
  TrainConfig train;
  EvalOptions eval;
  AnalysisConfig analysis;

  static RunConfig defaults(Task task);
  // Copies task, downsample, class count and keypoint scale factors from
  // the synth section into the network section, then validates everything.
  void finalize();
};

Json to_json(const RunConfig& config);
// Missing keys keep their defaults (defaults depend on "task").
RunConfig run_config_from_json(const Json& j);

// Applies "a.b.c=value" to a config document. The value is parsed as JSON
// when possible and taken as a string otherwise. Missing intermediate
// objects are created; unknown keys surface in run_config_from_json.
void apply_override(Json& doc, const std::string& assignment);

Json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const Json& j);

const char* to_string(SigmaActivation act);
SigmaActivation parse_sigma_activation(const std::string& name);

Json read_json_file(const std::filesystem::path& path);
// Writes via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);

inline constexpr const char* kCheckpointFormat = "mdn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// JSON container: format, version, network config, completed epochs,
// named parameter tensors (shape + row-major data), Adam state and the
// run config the model was trained with.
void save_checkpoint(const std::filesystem::path& path, const Network& net, const TrainState& state,
                     const Json& run_config);

struct LoadedCheckpoint {
  Network network;
  TrainState state;
  Json run_config;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mdn
