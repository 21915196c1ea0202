#include "mdn/network.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace mdn {

const char* to_string(Task task) { return task == Task::Detection ? "detection" : "pose"; }

Task parse_task(const std::string& name) {
  if (name == "detection") return Task::Detection;
  if (name == "pose") return Task::Pose;
  throw ValidationError("unknown task '" + name + "' (expected detection or pose)");
}

GridShape GridShape::make(std::size_t height, std::size_t width, std::size_t downsample) {
  if (downsample == 0 || height == 0 || width == 0 || height % downsample != 0 || width % downsample != 0) {
    throw ValidationError("image " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible by downsample factor " + std::to_string(downsample));
  }
  return GridShape{height, width, downsample};
}

std::size_t DenseTargets::positives() const {
  std::size_t n = 0;
  for (double v : positive_mask.data()) n += v == 1.0 ? 1 : 0;
  return n;
}

void NetworkConfig::validate() const {
  if (components < 1) throw ValidationError("network.components must be >= 1");
  if (num_classes < 1) throw ValidationError("network.num_classes must be >= 1");
  if (width1 < 1 || width2 < 1) throw ValidationError("network channel widths must be >= 1");
  if (downsample != 4) throw ValidationError("network.downsample must be 4 for this backbone");
  if (!(lambda_c > 0.0) || !(lambda_off > 0.0) || !(lambda_t > 0.0)) {
    throw ValidationError("loss weights must be positive");
  }
  if (task == Task::Pose) pose.validate();
}

namespace {

struct ConvSpec {
  const char* name;
  std::size_t cin, cout, kernel, stride;
  bool head;
};

std::vector<ConvSpec> layer_specs(const NetworkConfig& c) {
  const std::size_t m = c.components;
  return {
      {"conv1", 3, c.width1, 3, 1, false},
      {"down1", c.width1, c.width1, 3, 2, false},
      {"conv2", c.width1, c.width2, 3, 1, false},
      {"down2", c.width2, c.width2, 3, 2, false},
      {"conv3", c.width2, c.width2, 3, 1, false},
      {"conv4", c.width2, c.width2, 3, 1, false},
      {"head_heatmap", c.width2, c.num_classes, 1, 1, true},
      {"head_offset", c.width2, 2, 1, 1, true},
      {"head_logits", c.width2, m, 1, 1, true},
      {"head_means", c.width2, m * c.target_dim(), 1, 1, true},
      {"head_sigma", c.width2, m * 2, 1, 1, true},
  };
}

constexpr std::size_t kBackboneLayers = 6;
constexpr double kHeadWeightStd = 0.05;
constexpr double kHeatmapPrior = 0.1;

}  // namespace

Network::Network(NetworkConfig config) : config_(std::move(config)) {
  config_.validate();
  for (const ConvSpec& s : layer_specs(config_)) {
    params_.push_back({std::string(s.name) + ".weight", Tensor({s.cout, s.cin, s.kernel, s.kernel}, 0.0)});
    params_.push_back({std::string(s.name) + ".bias", Tensor({s.cout}, 0.0)});
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void Network::zero() {
  for (auto& p : params_) p.value.fill(0.0);
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto specs = layer_specs(config_);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const ConvSpec& s = specs[l];
    Tensor& w = params_[2 * l].value;
    Tensor& b = params_[2 * l + 1].value;
    const double fan_in = static_cast<double>(s.cin * s.kernel * s.kernel);
    const double std_dev = s.head ? kHeadWeightStd : std::sqrt(2.0 / fan_in);
    std::normal_distribution<double> dist(0.0, std_dev);
    for (double& v : w.data()) v = dist(rng);
    b.fill(0.0);
  }
  // Heatmap bias so the initial peak probability is kHeatmapPrior.
  params_[2 * kBackboneLayers + 1].value.fill(-std::log((1.0 - kHeatmapPrior) / kHeatmapPrior));
}

std::vector<Var> Network::bind(Tape& tape) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.leaf(p.value));
  return vars;
}

GridShape Network::grid_for(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("network input must be [3, H, W], got " + to_string(image.shape()));
  }
  return GridShape::make(image.dim(1), image.dim(2), config_.downsample);
}

Network::Heads Network::forward(Tape& /*tape*/, std::span<const Var> params, Var image) const {
  if (params.size() != params_.size()) throw Error("forward: parameter count mismatch");
  grid_for(image.value());
  const auto specs = layer_specs(config_);
  Var h = image;
  for (std::size_t l = 0; l < kBackboneLayers; ++l) {
    const ConvSpec& s = specs[l];
    h = ad::relu(ad::conv2d(h, params[2 * l], params[2 * l + 1], s.stride, s.kernel / 2));
  }
  auto head = [&](std::size_t l) { return ad::conv2d(h, params[2 * l], params[2 * l + 1], 1, 0); };
  Heads out;
  out.heatmap = ad::sigmoid(head(kBackboneLayers));
  out.offset = head(kBackboneLayers + 1);
  out.logits = head(kBackboneLayers + 2);
  out.means = head(kBackboneLayers + 3);
  out.raw_sigma = head(kBackboneLayers + 4);
  return out;
}

MixtureField make_field(const Network::Heads& heads, const NetworkConfig& config) {
  MixtureField f;
  f.components = config.components;
  f.dim = config.target_dim();
  f.logits = heads.logits.value();
  f.means = heads.means.value();
  f.raw_sigma = heads.raw_sigma.value();
  f.activation = config.sigma_activation;
  return f;
}

Prediction Network::predict(const Tensor& image) const {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.constant(p.value));
  const Heads heads = forward(tape, vars, tape.constant(image));
  return Prediction{heads.heatmap.value(), heads.offset.value(), make_field(heads, config_)};
}

MixtureField::CellBuffers MixtureField::cell(std::size_t y, std::size_t x) const {
  const std::size_t h = height(), w = width();
  if (y >= h || x >= w) throw ShapeError("mixture field cell out of range");
  const std::size_t at = y * w + x;
  const std::size_t plane = h * w;
  CellBuffers b;
  b.logits.resize(components);
  b.means.resize(components * dim);
  b.raw_sigma.resize(components * 2);
  for (std::size_t i = 0; i < b.logits.size(); ++i) b.logits[i] = logits[i * plane + at];
  for (std::size_t i = 0; i < b.means.size(); ++i) b.means[i] = means[i * plane + at];
  for (std::size_t i = 0; i < b.raw_sigma.size(); ++i) b.raw_sigma[i] = raw_sigma[i * plane + at];
  return b;
}

MixtureParams MixtureField::at(std::size_t y, std::size_t x) const {
  const CellBuffers b = cell(y, x);
  return activate(b.view(), dim, activation);
}

}  // namespace mdn
