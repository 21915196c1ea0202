#pragma once

// Mixture-density math for dense pose regression: mixing weights, the
// floored standard-deviation activation, diagonal Gaussian component
// densities with per-keypoint scale division, and the mixture negative
// log-likelihood. Everything is evaluated in log space.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mdn {

enum class Axis { X, Y };

// Keypoint layout of a pose target vector: coordinate 2k is the X offset of
// keypoint k and 2k+1 its Y offset.
struct PoseSpec {
  std::vector<double> scale_factors;

  std::size_t keypoint_count() const { return scale_factors.size(); }
  std::size_t dim() const { return 2 * scale_factors.size(); }
  static Axis axis_of(std::size_t coordinate) { return coordinate % 2 == 0 ? Axis::X : Axis::Y; }
  static std::size_t keypoint_of(std::size_t coordinate) { return coordinate / 2; }
  void validate() const;
};

// Realized mixture at one grid cell.
struct MixtureParams {
  std::vector<double> alpha;
  std::vector<std::vector<double>> mu;
  std::vector<std::array<double, 2>> sigma;  // (sigma_x, sigma_y)

  std::size_t component_count() const { return alpha.size(); }
  std::size_t dim() const { return mu.empty() ? 0 : mu.front().size(); }
  // Simplex weights within 1e-9, sigma >= 1, consistent dimensions.
  void validate() const;
};

enum class SigmaActivation {
  EluShift,      // ELU(x) + 2, infimum 1
  UnboundedExp,  // exp(x); debug only, reproduces the unstable formulation
};

double log_sum_exp(std::span<const double> values);

// Softmax over component logits.
std::vector<double> mixing_coefficients(std::span<const double> logits);

// ELU(raw) + 2: raw + 2 for raw >= 0, exp(raw) + 1 below.
double variance_activation(double raw);
double variance_activation_derivative(double raw);
double apply_sigma_activation(SigmaActivation act, double raw);
double sigma_activation_derivative(SigmaActivation act, double raw);

// Log density of a diagonal Gaussian whose coordinate d uses sigma of its
// axis, divided by the keypoint's scale factor when `pose` is given.
// Coordinates with observed[d] == false are left out of the sum; an empty
// `observed` means all coordinates count.
double component_log_density(std::span<const double> target, std::span<const double> mu,
                             const std::array<double, 2>& sigma, const PoseSpec* pose = nullptr,
                             std::span<const bool> observed = {});

double mixture_nll(std::span<const double> target, const MixtureParams& params, const PoseSpec* pose = nullptr,
                   std::span<const bool> observed = {});

// Posterior component probabilities given the target.
std::vector<double> responsibilities(std::span<const double> target, const MixtureParams& params,
                                     const PoseSpec* pose = nullptr, std::span<const bool> observed = {});

// Trapezoidal integration region for 2-D mixtures.
struct QuadratureGrid {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double step = 0.0;

  // Box spanning +-n_sigma around every mean at the given step.
  static QuadratureGrid covering(const MixtureParams& params, double step, double n_sigma = 8.0);
};

// Integral of exp(-mixture_nll) over the grid; about 1 for a proper density.
// Throws ValidationError if the step exceeds min sigma / 4 or the grid does
// not cover +-8 sigma around every mean.
double density_normalization_check(const MixtureParams& params, const QuadratureGrid& grid);

// Unactivated head outputs at one cell, as the network emits them.
struct RawMixture {
  std::span<const double> logits;     // M
  std::span<const double> means;      // M * c, component-major
  std::span<const double> raw_sigma;  // M * 2, component-major (x, y)
};

struct RawMixtureGrad {
  std::vector<double> logits;
  std::vector<double> means;
  std::vector<double> raw_sigma;
};

MixtureParams activate(const RawMixture& raw, std::size_t dim, SigmaActivation act = SigmaActivation::EluShift);

// Mixture NLL from raw head outputs. When `grad` is non-null it receives the
// analytic gradient with respect to logits, means and raw sigmas.
double mixture_nll_raw(const RawMixture& raw, std::span<const double> target, const PoseSpec* pose,
                       std::span<const bool> observed, SigmaActivation act, RawMixtureGrad* grad);

}  // namespace mdn
