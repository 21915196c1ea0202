#include "mdn/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mdn/error.hpp"

namespace mdn {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite input");
  }
}

double scale_of(const PoseSpec* pose, std::size_t coordinate) {
  return pose ? pose->scale_factors[PoseSpec::keypoint_of(coordinate)] : 1.0;
}

bool counts(std::span<const bool> observed, std::size_t d) { return observed.empty() || observed[d]; }

void check_layout(std::span<const double> target, std::span<const double> mu, const PoseSpec* pose,
                  std::span<const bool> observed) {
  if (target.size() != mu.size()) {
    throw ValidationError("target dimension " + std::to_string(target.size()) + " does not match mean dimension " +
                          std::to_string(mu.size()));
  }
  if (pose && pose->dim() != target.size()) {
    throw ValidationError("pose spec expects dimension " + std::to_string(pose->dim()) + ", got " +
                          std::to_string(target.size()));
  }
  if (!observed.empty() && observed.size() != target.size()) {
    throw ValidationError("observed mask length does not match target dimension");
  }
}

// Unvalidated log density; sigma may be anything positive.
double log_density_unchecked(std::span<const double> target, std::span<const double> mu,
                             const std::array<double, 2>& sigma, const PoseSpec* pose,
                             std::span<const bool> observed) {
  double total = 0.0;
  for (std::size_t d = 0; d < target.size(); ++d) {
    if (!counts(observed, d)) continue;
    const double s = sigma[PoseSpec::axis_of(d) == Axis::X ? 0 : 1] / scale_of(pose, d);
    const double r = target[d] - mu[d];
    total -= std::log(s) + kHalfLog2Pi + r * r / (2.0 * s * s);
  }
  return total;
}

std::vector<double> component_log_terms(std::span<const double> target, const MixtureParams& params,
                                        const PoseSpec* pose, std::span<const bool> observed) {
  params.validate();
  if (pose) pose->validate();
  std::vector<double> terms(params.component_count());
  for (std::size_t m = 0; m < params.component_count(); ++m) {
    check_layout(target, params.mu[m], pose, observed);
    if (params.alpha[m] <= 0.0) {
      terms[m] = -std::numeric_limits<double>::infinity();
      continue;
    }
    terms[m] = std::log(params.alpha[m]) + log_density_unchecked(target, params.mu[m], params.sigma[m], pose, observed);
  }
  return terms;
}

}  // namespace

void PoseSpec::validate() const {
  if (scale_factors.empty()) throw ValidationError("pose spec needs at least one keypoint");
  for (double f : scale_factors) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("pose scale factors must be positive and finite");
  }
}

void MixtureParams::validate() const {
  const std::size_t m = alpha.size();
  if (m == 0) throw ValidationError("mixture needs at least one component");
  if (mu.size() != m || sigma.size() != m) throw ValidationError("mixture parameter counts disagree");
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("mixing coefficients must be nonnegative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mixing coefficients must sum to 1");
  const std::size_t c = mu.front().size();
  for (std::size_t k = 0; k < m; ++k) {
    if (mu[k].size() != c) throw ValidationError("component means have differing dimensions");
    for (double s : sigma[k]) {
      if (!(s >= 1.0) || !std::isfinite(s)) throw ValidationError("sigma must be >= 1, got " + std::to_string(s));
    }
  }
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  if (std::isinf(mx)) return mx;
  double total = 0.0;
  for (double v : values) total += std::exp(v - mx);
  return mx + std::log(total);
}

std::vector<double> mixing_coefficients(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("mixing_coefficients: need at least one logit");
  require_finite(logits, "mixing_coefficients");
  const double lse = log_sum_exp(logits);
  std::vector<double> alpha(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) alpha[i] = std::exp(logits[i] - lse);
  return alpha;
}

double variance_activation(double raw) {
  if (!std::isfinite(raw)) throw NumericError("variance_activation: non-finite input");
  return raw >= 0.0 ? raw + 2.0 : std::exp(raw) + 1.0;
}

double variance_activation_derivative(double raw) {
  if (!std::isfinite(raw)) throw NumericError("variance_activation: non-finite input");
  return raw >= 0.0 ? 1.0 : std::exp(raw);
}

double apply_sigma_activation(SigmaActivation act, double raw) {
  if (act == SigmaActivation::EluShift) return variance_activation(raw);
  if (!std::isfinite(raw)) throw NumericError("sigma activation: non-finite input");
  return std::exp(raw);
}

double sigma_activation_derivative(SigmaActivation act, double raw) {
  if (act == SigmaActivation::EluShift) return variance_activation_derivative(raw);
  return std::exp(raw);
}

double component_log_density(std::span<const double> target, std::span<const double> mu,
                             const std::array<double, 2>& sigma, const PoseSpec* pose,
                             std::span<const bool> observed) {
  check_layout(target, mu, pose, observed);
  if (pose) pose->validate();
  for (double s : sigma) {
    if (!(s >= 1.0) || !std::isfinite(s)) throw ValidationError("sigma must be >= 1, got " + std::to_string(s));
  }
  require_finite(target, "component_log_density");
  require_finite(mu, "component_log_density");
  return log_density_unchecked(target, mu, sigma, pose, observed);
}

double mixture_nll(std::span<const double> target, const MixtureParams& params, const PoseSpec* pose,
                   std::span<const bool> observed) {
  require_finite(target, "mixture_nll");
  const auto terms = component_log_terms(target, params, pose, observed);
  const double lse = log_sum_exp(terms);
  if (!std::isfinite(lse)) throw NumericError("mixture_nll: every component has zero weight or density");
  return -lse;
}

std::vector<double> responsibilities(std::span<const double> target, const MixtureParams& params,
                                     const PoseSpec* pose, std::span<const bool> observed) {
  require_finite(target, "responsibilities");
  const auto terms = component_log_terms(target, params, pose, observed);
  const double lse = log_sum_exp(terms);
  if (!std::isfinite(lse)) throw NumericError("responsibilities: every component has zero weight or density");
  std::vector<double> gamma(terms.size());
  for (std::size_t m = 0; m < terms.size(); ++m) gamma[m] = std::exp(terms[m] - lse);
  return gamma;
}

QuadratureGrid QuadratureGrid::covering(const MixtureParams& params, double step, double n_sigma) {
  params.validate();
  if (params.dim() != 2) throw ValidationError("quadrature is limited to 2-D mixtures");
  QuadratureGrid g;
  g.step = step;
  g.x_min = g.y_min = std::numeric_limits<double>::infinity();
  g.x_max = g.y_max = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < params.component_count(); ++m) {
    g.x_min = std::min(g.x_min, params.mu[m][0] - n_sigma * params.sigma[m][0]);
    g.x_max = std::max(g.x_max, params.mu[m][0] + n_sigma * params.sigma[m][0]);
    g.y_min = std::min(g.y_min, params.mu[m][1] - n_sigma * params.sigma[m][1]);
    g.y_max = std::max(g.y_max, params.mu[m][1] + n_sigma * params.sigma[m][1]);
  }
  return g;
}

double density_normalization_check(const MixtureParams& params, const QuadratureGrid& grid) {
  params.validate();
  if (params.dim() != 2) throw ValidationError("quadrature is limited to 2-D mixtures");
  double sigma_min = std::numeric_limits<double>::infinity();
  for (const auto& s : params.sigma) sigma_min = std::min({sigma_min, s[0], s[1]});
  if (!(grid.step > 0.0) || grid.step > sigma_min / 4.0) {
    throw ValidationError("quadrature step " + std::to_string(grid.step) + " exceeds sigma_min/4 = " +
                          std::to_string(sigma_min / 4.0));
  }
  constexpr double kSlack = 1e-9;
  for (std::size_t m = 0; m < params.component_count(); ++m) {
    const auto& mu = params.mu[m];
    const auto& s = params.sigma[m];
    if (grid.x_min > mu[0] - 8.0 * s[0] + kSlack || grid.x_max < mu[0] + 8.0 * s[0] - kSlack ||
        grid.y_min > mu[1] - 8.0 * s[1] + kSlack || grid.y_max < mu[1] + 8.0 * s[1] - kSlack) {
      throw ValidationError("quadrature grid does not cover +-8 sigma around every mean");
    }
  }
  const auto nx = static_cast<std::size_t>(std::ceil((grid.x_max - grid.x_min) / grid.step - 1e-12));
  const auto ny = static_cast<std::size_t>(std::ceil((grid.y_max - grid.y_min) / grid.step - 1e-12));
  const double hx = (grid.x_max - grid.x_min) / static_cast<double>(nx);
  const double hy = (grid.y_max - grid.y_min) / static_cast<double>(ny);
  double total = 0.0;
  std::array<double, 2> point{};
  for (std::size_t j = 0; j <= ny; ++j) {
    point[1] = grid.y_min + hy * static_cast<double>(j);
    const double wy = (j == 0 || j == ny) ? 0.5 : 1.0;
    for (std::size_t i = 0; i <= nx; ++i) {
      point[0] = grid.x_min + hx * static_cast<double>(i);
      const double wx = (i == 0 || i == nx) ? 0.5 : 1.0;
      total += wx * wy * std::exp(-mixture_nll(point, params));
    }
  }
  return total * hx * hy;
}

MixtureParams activate(const RawMixture& raw, std::size_t dim, SigmaActivation act) {
  const std::size_t m = raw.logits.size();
  if (m == 0 || raw.means.size() != m * dim || raw.raw_sigma.size() != m * 2) {
    throw ValidationError("raw mixture buffers do not match component count and dimension");
  }
  MixtureParams p;
  p.alpha = mixing_coefficients(raw.logits);
  p.mu.resize(m);
  p.sigma.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    p.mu[k].assign(raw.means.begin() + static_cast<std::ptrdiff_t>(k * dim),
                   raw.means.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
    p.sigma[k] = {apply_sigma_activation(act, raw.raw_sigma[2 * k]), apply_sigma_activation(act, raw.raw_sigma[2 * k + 1])};
  }
  return p;
}

double mixture_nll_raw(const RawMixture& raw, std::span<const double> target, const PoseSpec* pose,
                       std::span<const bool> observed, SigmaActivation act, RawMixtureGrad* grad) {
  const std::size_t m = raw.logits.size();
  const std::size_t c = target.size();
  if (m == 0 || raw.means.size() != m * c || raw.raw_sigma.size() != m * 2) {
    throw ValidationError("raw mixture buffers do not match component count and target dimension");
  }
  if (pose && pose->dim() != c) throw ValidationError("pose spec dimension does not match target");
  if (!observed.empty() && observed.size() != c) throw ValidationError("observed mask length mismatch");
  require_finite(raw.logits, "mixture_nll_raw");
  require_finite(raw.means, "mixture_nll_raw");
  require_finite(raw.raw_sigma, "mixture_nll_raw");
  require_finite(target, "mixture_nll_raw");

  const double logit_lse = log_sum_exp(raw.logits);
  std::vector<double> terms(m);
  std::vector<std::array<double, 2>> sigma(m);
  for (std::size_t k = 0; k < m; ++k) {
    sigma[k] = {apply_sigma_activation(act, raw.raw_sigma[2 * k]), apply_sigma_activation(act, raw.raw_sigma[2 * k + 1])};
    terms[k] = (raw.logits[k] - logit_lse) + log_density_unchecked(target, raw.means.subspan(k * c, c), sigma[k], pose, observed);
  }
  const double lse = log_sum_exp(terms);
  const double nll = -lse;
  if (!std::isfinite(nll)) throw NumericError("mixture_nll_raw: non-finite likelihood");
  if (!grad) return nll;

  grad->logits.assign(m, 0.0);
  grad->means.assign(m * c, 0.0);
  grad->raw_sigma.assign(m * 2, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const double gamma = std::exp(terms[k] - lse);
    const double alpha = std::exp(raw.logits[k] - logit_lse);
    grad->logits[k] = alpha - gamma;
    std::array<double, 2> dlog_ds{0.0, 0.0};
    for (std::size_t d = 0; d < c; ++d) {
      if (!counts(observed, d)) continue;
      const std::size_t a = PoseSpec::axis_of(d) == Axis::X ? 0 : 1;
      const double f = scale_of(pose, d);
      const double s = sigma[k][a];
      const double sd = s / f;
      const double r = target[d] - raw.means[k * c + d];
      grad->means[k * c + d] = -gamma * r / (sd * sd);
      dlog_ds[a] += -1.0 / s + r * r * f * f / (s * s * s);
    }
    for (std::size_t a = 0; a < 2; ++a) {
      grad->raw_sigma[2 * k + a] = -gamma * dlog_ds[a] * sigma_activation_derivative(act, raw.raw_sigma[2 * k + a]);
    }
  }
  return nll;
}

}  // namespace mdn
