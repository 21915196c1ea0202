#pragma once

// Verification checks and the scaled-down training experiments shared by
// the CLI `verify` command and the acceptance binary.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdn/config.hpp"

namespace mdn::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string summary;  // one line, includes the failing case when any
  Json details;
  double seconds = 0.0;
};

using Progress = std::function<void(const std::string&)>;

// End-to-end gradients of the total loss against central differences on
// 32x32 synthetic scenes, both tasks, M in {1, 3}.
CheckResult gradient_check(double tolerance = 1e-4);

// exp(-NLL) integrated over a quadrature grid for random 2-D mixtures.
CheckResult density_check(std::size_t sets = 50, double tolerance = 1e-3, std::uint64_t seed = 2024);

// build_targets -> ideal outputs -> decode on random scenes of both tasks.
CheckResult round_trip_check(std::size_t scenes = 100, std::uint64_t seed = 77);

// average_precision against the brute-force PR oracle on every small case.
CheckResult ap_oracle_check(std::size_t max_dets = 5, std::size_t max_gts = 5);

// OKS-AP of ground truth whose keypoints are displaced by 1, 2, 3 grid units.
struct DisplacementResult {
  std::vector<double> displacements_grid;
  std::vector<double> ap;
};
DisplacementResult displacement_curve(const SynthConfig& pose_synth, std::size_t scenes, std::uint64_t seed,
                                      const std::vector<double>& oks_constants);
CheckResult displacement_check(std::size_t scenes = 500, std::uint64_t seed = 31);

// Raw training steps on the pose task, recording every loss.
struct StabilitySettings {
  std::size_t seeds = 5;
  std::size_t steps = 1000;
  std::size_t scenes = 400;
  std::size_t batch_size = 4;
  double learning_rate = 1e-3;
  double clip_norm = 0.0;  // clipping would mask the failure mode under study
  double spike_factor = 10.0;
  std::size_t width1 = 8;
  std::size_t width2 = 16;
  std::size_t components = 2;
};

struct StabilityRun {
  std::uint64_t seed = 0;
  std::size_t steps = 0;  // steps completed
  std::optional<std::size_t> first_non_finite;  // 1-based step
  std::string non_finite_what;
  std::size_t spikes = 0;  // |loss - median| > factor * |median|
  std::optional<std::size_t> first_spike;
  double median_loss = 0.0;
  double max_loss = 0.0;
  bool unstable() const { return first_non_finite.has_value() || spikes > 0; }
};

std::vector<StabilityRun> run_stability(SigmaActivation activation, const StabilitySettings& settings,
                                        const Progress& progress = {});
// Passes when no seed produced a non-finite loss or gradient. Meant for the
// floored activation; with the unbounded one it reports the failures.
CheckResult stability_check(const StabilitySettings& settings = {}, const Progress& progress = {},
                            SigmaActivation activation = SigmaActivation::EluShift);
// Unbounded variant: passes when at least one seed went non-finite or spiked.
CheckResult instability_check(const StabilitySettings& settings = {}, const Progress& progress = {});

// Configs of the scaled-down experiments.
RunConfig detection_experiment_config(std::size_t components, std::uint64_t seed);
RunConfig pose_experiment_config(std::size_t components, std::uint64_t seed);

struct TrainedRun {
  RunConfig config;
  Network network{NetworkConfig{}};
  TrainLog log;
  double final_ap = 0.0;
  std::optional<ComponentStats> stats;  // M >= 2
  double seconds = 0.0;
};

// Generates both splits, trains from the run seed and evaluates every epoch.
// Component statistics use the eval split (confident detections only for
// the pose task).
TrainedRun train_and_analyze(const RunConfig& config, const Progress& progress = {});

// Detections of a trained model matched to the eval instances.
ComponentStats component_stats(const Network& net, const Dataset& eval_set, const RunConfig& config,
                               double min_score);

// First epoch whose AP reaches `target`; none when never reached.
std::optional<std::size_t> epochs_to_reach(const TrainLog& log, double target);

struct DetectionExperiment {
  std::vector<std::uint64_t> seeds;
  std::vector<TrainedRun> mdn;       // M = 3, one per seed
  std::vector<TrainedRun> baseline;  // M = 1, one per seed
  std::optional<TrainedRun> two_component;
};
DetectionExperiment run_detection_experiment(const std::vector<std::uint64_t>& seeds, bool with_two_component,
                                             const Progress& progress = {});

CheckResult multimodal_check(const DetectionExperiment& exp);
CheckResult convergence_check(const DetectionExperiment& exp);
CheckResult mode_recovery_check(const TrainedRun& run, double min_correlation = 0.6);
CheckResult viewpoint_check(const TrainedRun& run, double min_agreement = 0.8);

Json to_json(const ComponentStats& stats);
Json to_json(const EvalReport& report, bool with_curves = false);
Json to_json(const CheckResult& result);

}  // namespace mdn::verify
