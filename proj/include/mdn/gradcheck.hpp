#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mdn/autodiff.hpp"

namespace mdn {

// Builds a scalar on `tape` from differentiable inputs.
using TapeFunction = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  // Input tensor and flat coordinate where the maximum occurred.
  std::size_t worst_input = 0;
  std::size_t worst_coordinate = 0;
  std::size_t coordinates_checked = 0;
};

// Compares the tape gradient against central differences over every input
// coordinate. Error per coordinate is |analytic - numeric| / max(1,
// |analytic|, |numeric|). A NaN/Inf while perturbing raises NumericError
// naming the coordinate.
GradCheckResult grad_check(const TapeFunction& fn, std::span<const Tensor> points, double step);

// Single-input convenience form.
double grad_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point, double step);

}  // namespace mdn
