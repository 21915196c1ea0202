#pragma once

// Dense prediction network: a small strided conv backbone with downsampling
// factor 4 feeding five 1x1 heads (center heatmap, center offset, mixing
// logits, component means, raw sigmas), plus the training losses.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdn/autodiff.hpp"
#include "mdn/dense.hpp"
#include "mdn/mixture.hpp"

namespace mdn {

struct NetworkConfig {
  Task task = Task::Detection;
  std::size_t components = 3;
  std::size_t num_classes = 1;
  PoseSpec pose;  // pose task only
  std::size_t width1 = 32;
  std::size_t width2 = 64;
  std::size_t downsample = 4;
  double lambda_c = 1.0;
  double lambda_off = 0.1;
  double lambda_t = 0.1;
  SigmaActivation sigma_activation = SigmaActivation::EluShift;

  std::size_t target_dim() const { return task == Task::Detection ? 2 : pose.dim(); }
  const PoseSpec* pose_spec() const { return task == Task::Pose ? &pose : nullptr; }
  void validate() const;
};

struct Parameter {
  std::string name;
  Tensor value;
};

// Per-cell mixture head outputs before activation, channel-major:
// logits [M, H', W'], means [M*c, H', W'], raw_sigma [M*2, H', W'].
struct MixtureField {
  std::size_t components = 0;
  std::size_t dim = 0;
  Tensor logits;
  Tensor means;
  Tensor raw_sigma;
  SigmaActivation activation = SigmaActivation::EluShift;

  std::size_t height() const { return logits.dim(1); }
  std::size_t width() const { return logits.dim(2); }

  // Copies one cell's raw outputs into contiguous buffers.
  struct CellBuffers {
    std::vector<double> logits, means, raw_sigma;
    RawMixture view() const { return {logits, means, raw_sigma}; }
  };
  CellBuffers cell(std::size_t y, std::size_t x) const;
  // Activated parameters at a cell.
  MixtureParams at(std::size_t y, std::size_t x) const;
};

struct Prediction {
  Tensor heatmap;  // [Y, H', W'] in (0, 1)
  Tensor offset;   // [2, H', W']
  MixtureField field;
};

class Network {
 public:
  struct Heads {
    Var heatmap;
    Var offset;
    Var logits;
    Var means;
    Var raw_sigma;
  };

  explicit Network(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  // He-normal backbone, small head weights, heatmap bias at prior 0.1,
  // zero biases for logits, means and raw sigmas.
  void initialize(std::uint64_t seed);
  void zero();

  // Registers every parameter as a leaf on the tape.
  std::vector<Var> bind(Tape& tape) const;
  Heads forward(Tape& tape, std::span<const Var> params, Var image) const;
  // Forward pass without keeping gradients.
  Prediction predict(const Tensor& image) const;

  GridShape grid_for(const Tensor& image) const;

 private:
  NetworkConfig config_;
  std::vector<Parameter> params_;
};

MixtureField make_field(const Network::Heads& heads, const NetworkConfig& config);

struct LossTerms {
  double classification = 0.0;
  double center_offset = 0.0;
  double pose = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double classification = 1.0;
  double center_offset = 0.1;
  double pose = 0.1;
};

// Penalty-reduced focal loss over the heatmap, normalized by the number of
// peak cells (or 1 when there are none). Predictions are clamped to
// [1e-7, 1 - 1e-7].
double classification_loss(const Tensor& heatmap, const Tensor& target);
Var classification_loss(Var heatmap, const Tensor& target);

// Mean absolute error over positive cells; 0 without positives.
double center_offset_loss(const Tensor& offset, const DenseTargets& targets);
Var center_offset_loss(Var offset, const DenseTargets& targets);

// Mean mixture NLL over positive cells; unannotated coordinates are left out.
double pose_loss(const MixtureField& field, const DenseTargets& targets, const PoseSpec* pose);
Var pose_loss(Var logits, Var means, Var raw_sigma, const DenseTargets& targets, const PoseSpec* pose,
              SigmaActivation activation);

// Weighted sum; throws NumericError naming the first non-finite term.
double total_loss(const LossTerms& terms, const LossWeights& weights);

struct SceneLoss {
  Var total;
  LossTerms terms;
};
SceneLoss scene_loss(const Network::Heads& heads, const DenseTargets& targets, const NetworkConfig& config);

}  // namespace mdn
