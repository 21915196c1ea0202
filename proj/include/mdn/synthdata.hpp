#pragma once

// Seeded synthetic scenes with planted multi-modal structure: textured
// rectangles whose sizes follow a log-normal mixture (detection), and
// stick figures seen from the front or the back (pose). Each instance keeps
// hidden labels (scale mode, viewpoint) that only the analysis code reads.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdn/dense.hpp"
#include "mdn/tensor.hpp"

namespace mdn {

enum class Viewpoint { Front, Back };
const char* to_string(Viewpoint v);

// Keypoint order of the synthetic figures.
inline constexpr std::size_t kPoseKeypoints = 6;
enum Keypoint : std::size_t { Head = 0, LeftHand, RightHand, Pelvis, LeftFoot, RightFoot };
const char* keypoint_name(std::size_t k);
bool is_left_keypoint(std::size_t k);
bool is_right_keypoint(std::size_t k);

struct ScaleMode {
  double center_px;  // object diagonal at the mode
  double log_std;    // std of ln(diagonal)
  double weight;
};

struct SynthConfig {
  Task task = Task::Detection;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t downsample = 4;
  std::size_t min_instances = 1;
  std::size_t max_instances = 4;
  std::size_t num_classes = 1;

  // Detection: object diagonals drawn from a log-normal mixture.
  std::vector<ScaleMode> scale_modes{{8.0, 0.2, 0.5}, {28.0, 0.2, 0.5}};
  double min_aspect = 0.5;  // width / height range, log-uniform
  double max_aspect = 2.0;

  // Pose: figure height range, viewpoint prior, keypoint noise.
  double figure_min_px = 28.0;
  double figure_max_px = 44.0;
  double front_prior = 0.7;
  double keypoint_jitter_px = 2.0;
  double back_jitter_multiplier = 3.0;
  double unannotated_prob = 0.05;
  std::vector<double> keypoint_scale_factors = std::vector<double>(kPoseKeypoints, 1.0);

  static SynthConfig defaults(Task task);
  void validate() const;
  GridShape grid() const { return GridShape::make(height, width, downsample); }
  // Dimension of the per-instance regression target.
  std::size_t target_dim() const { return task == Task::Detection ? 2 : 2 * kPoseKeypoints; }
};

struct Instance {
  double cx = 0.0;  // center in input pixels
  double cy = 0.0;
  std::size_t class_id = 0;
  // Regression target in grid units: detection (w, h); pose 2K offsets
  // (x0, y0, x1, y1, ...) from the center.
  std::vector<double> params;
  std::vector<bool> annotated;  // per target coordinate
  double width_px = 0.0;        // box (detection) or keypoint extent (pose)
  double height_px = 0.0;

  // Hidden labels.
  int scale_mode = -1;
  Viewpoint viewpoint = Viewpoint::Front;

  double diagonal_px() const;
  // Keypoint k in input pixels (pose only).
  double keypoint_x(std::size_t k, std::size_t downsample) const { return cx + params[2 * k] * downsample; }
  double keypoint_y(std::size_t k, std::size_t downsample) const { return cy + params[2 * k + 1] * downsample; }
};

struct Scene {
  Tensor image;  // [3, H, W] in [0, 1]
  std::vector<Instance> instances;
  std::uint64_t seed = 0;
  bool placement_warning = false;  // fewer instances than requested
};

Scene gen_detection_scene(const SynthConfig& config, std::uint64_t seed);
Scene gen_pose_scene(const SynthConfig& config, std::uint64_t seed);
Scene gen_scene(const SynthConfig& config, std::uint64_t seed);

// Seed of scene `index` in a dataset generated from `dataset_seed`.
std::uint64_t scene_seed(std::uint64_t dataset_seed, std::size_t index);
std::vector<Scene> gen_dataset(const SynthConfig& config, std::size_t count, std::uint64_t dataset_seed);

// Heatmap splat width in grid cells for an instance.
double splat_sigma(const Instance& inst, std::size_t downsample);

// Throws ValidationError when two instances share a grid cell.
DenseTargets build_targets(const Scene& scene, const GridShape& grid, Task task, std::size_t num_classes = 1);

}  // namespace mdn
