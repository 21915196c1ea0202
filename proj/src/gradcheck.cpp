#include "mdn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mdn {
namespace {

double evaluate(const TapeFunction& fn, std::span<const Tensor> points) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(points.size());
  for (const Tensor& p : points) vars.push_back(tape.leaf(p));
  return fn(tape, vars).value().item();
}

}  // namespace

GradCheckResult grad_check(const TapeFunction& fn, std::span<const Tensor> points, double step) {
  if (!(step > 0.0)) throw ValidationError("grad_check: step must be positive");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : points) vars.push_back(tape.leaf(p));
    Var out = fn(tape, vars);
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckResult result;
  std::vector<Tensor> probe(points.begin(), points.end());
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t i = 0; i < probe[t].size(); ++i) {
      const double saved = probe[t][i];
      double plus = 0.0;
      double minus = 0.0;
      try {
        probe[t][i] = saved + step;
        plus = evaluate(fn, probe);
        probe[t][i] = saved - step;
        minus = evaluate(fn, probe);
      } catch (const NumericError& e) {
        throw NumericError("grad_check: non-finite value at input " + std::to_string(t) + " coordinate " +
                           std::to_string(i) + ": " + e.what());
      }
      probe[t][i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("grad_check: non-finite value at input " + std::to_string(t) + " coordinate " +
                           std::to_string(i));
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[t][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (err > result.max_relative_error || result.coordinates_checked == 0) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        result.worst_input = t;
        result.worst_coordinate = i;
      }
      ++result.coordinates_checked;
    }
  }
  return result;
}

double grad_check(const std::function<Var(Tape&, Var)>& fn, const Tensor& point, double step) {
  TapeFunction wrapped = [&fn](Tape& tape, std::span<const Var> in) { return fn(tape, in[0]); };
  return grad_check(wrapped, std::span<const Tensor>(&point, 1), step).max_relative_error;
}

}  // namespace mdn
