#include <algorithm>
#include <cmath>
#include <memory>

#include "mdn/network.hpp"

namespace mdn {
namespace {

constexpr double kClampEps = 1e-7;

struct FocalTerm {
  double value;
  double grad;  // d value / d prediction, zero when clamped
};

FocalTerm focal_term(double pred, double target) {
  const bool clamped = pred < kClampEps || pred > 1.0 - kClampEps;
  const double p = std::clamp(pred, kClampEps, 1.0 - kClampEps);
  if (target == 1.0) {
    const double q = 1.0 - p;
    const double value = -q * q * std::log(p);
    const double grad = 2.0 * q * std::log(p) - q * q / p;
    return {value, clamped ? 0.0 : grad};
  }
  const double neg_weight = std::pow(1.0 - target, 4);
  const double lq = std::log(1.0 - p);
  const double value = -neg_weight * p * p * lq;
  const double grad = -neg_weight * (2.0 * p * lq - p * p / (1.0 - p));
  return {value, clamped ? 0.0 : grad};
}

void check_heatmap(const Tensor& heatmap, const Tensor& target) {
  if (heatmap.shape() != target.shape()) {
    throw ShapeError("classification_loss: prediction " + to_string(heatmap.shape()) + " vs target " +
                     to_string(target.shape()));
  }
}

double peak_normalizer(const Tensor& target) {
  std::size_t peaks = 0;
  for (double v : target.data()) peaks += v == 1.0 ? 1 : 0;
  return static_cast<double>(std::max<std::size_t>(peaks, 1));
}

void check_offset(const Tensor& offset, const DenseTargets& targets) {
  if (offset.shape() != targets.center_offset.shape()) {
    throw ShapeError("center_offset_loss: prediction " + to_string(offset.shape()) + " vs target " +
                     to_string(targets.center_offset.shape()));
  }
}

// Per positive cell: NLL and its gradient w.r.t. the raw heads.
struct PoseCellResult {
  std::size_t cell;
  double nll;
  RawMixtureGrad grad;
};

std::vector<PoseCellResult> pose_cells(const Tensor& logits, const Tensor& means, const Tensor& raw_sigma,
                                       const DenseTargets& targets, const PoseSpec* pose, SigmaActivation act,
                                       bool with_grad) {
  const Tensor& mask = targets.positive_mask;
  if (logits.rank() != 3 || mask.rank() != 2 || logits.dim(1) != mask.dim(0) || logits.dim(2) != mask.dim(1)) {
    throw ShapeError("pose_loss: logits " + to_string(logits.shape()) + " vs mask " + to_string(mask.shape()));
  }
  const std::size_t m = logits.dim(0);
  const std::size_t c = targets.pose_params.dim(0);
  const std::size_t plane = mask.size();
  if (means.shape() != Shape{m * c, mask.dim(0), mask.dim(1)} ||
      raw_sigma.shape() != Shape{m * 2, mask.dim(0), mask.dim(1)} ||
      targets.pose_observed.shape() != targets.pose_params.shape()) {
    throw ShapeError("pose_loss: means " + to_string(means.shape()) + " / sigma " + to_string(raw_sigma.shape()) +
                     " inconsistent with " + std::to_string(m) + " components of dimension " + std::to_string(c));
  }
  std::vector<PoseCellResult> out;
  std::vector<double> lg(m), mu(m * c), rs(m * 2), target(c);
  auto observed = std::make_unique<bool[]>(c);
  for (std::size_t cell = 0; cell < plane; ++cell) {
    if (mask[cell] != 1.0) continue;
    for (std::size_t i = 0; i < m; ++i) lg[i] = logits[i * plane + cell];
    for (std::size_t i = 0; i < m * c; ++i) mu[i] = means[i * plane + cell];
    for (std::size_t i = 0; i < m * 2; ++i) rs[i] = raw_sigma[i * plane + cell];
    for (std::size_t d = 0; d < c; ++d) {
      target[d] = targets.pose_params[d * plane + cell];
      observed[d] = targets.pose_observed[d * plane + cell] == 1.0;
    }
    PoseCellResult r{cell, 0.0, {}};
    r.nll = mixture_nll_raw(RawMixture{lg, mu, rs}, target, pose, std::span<const bool>(observed.get(), c), act,
                            with_grad ? &r.grad : nullptr);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

double classification_loss(const Tensor& heatmap, const Tensor& target) {
  check_heatmap(heatmap, target);
  double total = 0.0;
  for (std::size_t i = 0; i < heatmap.size(); ++i) total += focal_term(heatmap[i], target[i]).value;
  return total / peak_normalizer(target);
}

Var classification_loss(Var heatmap, const Tensor& target) {
  const Tensor& pred = heatmap.value();
  check_heatmap(pred, target);
  const double norm = peak_normalizer(target);
  auto grads = std::make_shared<std::vector<double>>(pred.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const FocalTerm t = focal_term(pred[i], target[i]);
    total += t.value;
    (*grads)[i] = t.grad / norm;
  }
  return heatmap.tape().record("focal_loss", Tensor::scalar(total / norm), {heatmap},
                               [grads](const BackwardContext& ctx) {
                                 Tensor* gx = ctx.input_grad(0);
                                 if (!gx) return;
                                 const double g = ctx.out_grad()[0];
                                 for (std::size_t i = 0; i < grads->size(); ++i) (*gx)[i] += g * (*grads)[i];
                               });
}

double center_offset_loss(const Tensor& offset, const DenseTargets& targets) {
  check_offset(offset, targets);
  const Tensor& mask = targets.positive_mask;
  const std::size_t plane = mask.size();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t cell = 0; cell < plane; ++cell) {
    if (mask[cell] != 1.0) continue;
    for (std::size_t ch = 0; ch < 2; ++ch) {
      total += std::abs(offset[ch * plane + cell] - targets.center_offset[ch * plane + cell]);
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

Var center_offset_loss(Var offset, const DenseTargets& targets) {
  check_offset(offset.value(), targets);
  Tape& tape = offset.tape();
  if (targets.positives() == 0) return tape.constant(Tensor::scalar(0.0));
  Var pred = ad::masked_gather(offset, targets.positive_mask);
  Var truth = ad::masked_gather(tape.constant(targets.center_offset), targets.positive_mask);
  return ad::mean(ad::abs(ad::sub(pred, truth)));
}

double pose_loss(const MixtureField& field, const DenseTargets& targets, const PoseSpec* pose) {
  const auto cells = pose_cells(field.logits, field.means, field.raw_sigma, targets, pose, field.activation, false);
  if (cells.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : cells) total += c.nll;
  return total / static_cast<double>(cells.size());
}

Var pose_loss(Var logits, Var means, Var raw_sigma, const DenseTargets& targets, const PoseSpec* pose,
              SigmaActivation activation) {
  Tape& tape = logits.tape();
  auto cells = std::make_shared<std::vector<PoseCellResult>>(
      pose_cells(logits.value(), means.value(), raw_sigma.value(), targets, pose, activation, true));
  if (cells->empty()) return tape.constant(Tensor::scalar(0.0));
  double total = 0.0;
  for (const auto& c : *cells) total += c.nll;
  const double count = static_cast<double>(cells->size());
  const std::size_t plane = targets.positive_mask.size();
  return tape.record("mixture_nll", Tensor::scalar(total / count), {logits, means, raw_sigma},
                     [cells, count, plane](const BackwardContext& ctx) {
                       const double g = ctx.out_grad()[0] / count;
                       Tensor* gl = ctx.input_grad(0);
                       Tensor* gm = ctx.input_grad(1);
                       Tensor* gs = ctx.input_grad(2);
                       for (const auto& c : *cells) {
                         if (gl) {
                           for (std::size_t i = 0; i < c.grad.logits.size(); ++i) {
                             (*gl)[i * plane + c.cell] += g * c.grad.logits[i];
                           }
                         }
                         if (gm) {
                           for (std::size_t i = 0; i < c.grad.means.size(); ++i) {
                             (*gm)[i * plane + c.cell] += g * c.grad.means[i];
                           }
                         }
                         if (gs) {
                           for (std::size_t i = 0; i < c.grad.raw_sigma.size(); ++i) {
                             (*gs)[i * plane + c.cell] += g * c.grad.raw_sigma[i];
                           }
                         }
                       }
                     });
}

double total_loss(const LossTerms& terms, const LossWeights& weights) {
  if (!std::isfinite(terms.classification)) throw NumericError("total_loss: classification term is not finite");
  if (!std::isfinite(terms.center_offset)) throw NumericError("total_loss: center offset term is not finite");
  if (!std::isfinite(terms.pose)) throw NumericError("total_loss: pose term is not finite");
  return weights.classification * terms.classification + weights.center_offset * terms.center_offset +
         weights.pose * terms.pose;
}

SceneLoss scene_loss(const Network::Heads& heads, const DenseTargets& targets, const NetworkConfig& config) {
  Var lc = classification_loss(heads.heatmap, targets.heatmap);
  Var loff = center_offset_loss(heads.offset, targets);
  Var lt = pose_loss(heads.logits, heads.means, heads.raw_sigma, targets, config.pose_spec(), config.sigma_activation);
  SceneLoss out;
  out.terms.classification = lc.value().item();
  out.terms.center_offset = loff.value().item();
  out.terms.pose = lt.value().item();
  const LossWeights w{config.lambda_c, config.lambda_off, config.lambda_t};
  out.terms.total = total_loss(out.terms, w);
  out.total = ad::add(ad::add(ad::scale(lc, w.classification), ad::scale(loff, w.center_offset)), ad::scale(lt, w.pose));
  return out;
}

}  // namespace mdn
