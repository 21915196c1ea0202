#include "mdn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace mdn {

const char* to_string(DecodeMode mode) { return mode == DecodeMode::MaxComponent ? "max-component" : "mixture-mean"; }

DecodeMode parse_decode_mode(const std::string& name) {
  if (name == "max-component") return DecodeMode::MaxComponent;
  if (name == "mixture-mean") return DecodeMode::MixtureMean;
  throw ValidationError("unknown decode mode '" + name + "' (expected max-component or mixture-mean)");
}

std::vector<Detection> decode(const Tensor& heatmap, const Tensor& offset, const MixtureField& field,
                              std::size_t downsample, const DecodeOptions& options) {
  if (heatmap.rank() != 3) throw ShapeError("decode: heatmap must be [Y, H', W'], got " + to_string(heatmap.shape()));
  const std::size_t classes = heatmap.dim(0), h = heatmap.dim(1), w = heatmap.dim(2);
  if (offset.shape() != Shape{2, h, w}) throw ShapeError("decode: offset shape " + to_string(offset.shape()));
  if (field.logits.shape() != Shape{field.components, h, w}) {
    throw ShapeError("decode: mixture field " + to_string(field.logits.shape()) + " does not match heatmap");
  }
  const std::size_t plane = h * w;
  struct Peak {
    double score;
    std::size_t cls, y, x;
  };
  std::vector<Peak> peaks;
  for (std::size_t c = 0; c < classes; ++c) {
    const double* heat = heatmap.data().data() + c * plane;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double v = heat[y * w + x];
        if (!(v >= options.threshold)) continue;
        bool is_max = true;
        for (std::size_t yy = y ? y - 1 : 0; yy <= std::min(h - 1, y + 1) && is_max; ++yy) {
          for (std::size_t xx = x ? x - 1 : 0; xx <= std::min(w - 1, x + 1); ++xx) {
            if (heat[yy * w + xx] > v) {
              is_max = false;
              break;
            }
          }
        }
        if (is_max) peaks.push_back({v, c, y, x});
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (peaks.size() > options.top_k) peaks.resize(options.top_k);

  const double D = double(downsample);
  std::vector<Detection> out;
  out.reserve(peaks.size());
  for (const Peak& p : peaks) {
    Detection d;
    d.score = p.score;
    d.class_id = p.cls;
    d.cell_y = p.y;
    d.cell_x = p.x;
    const std::size_t at = p.y * w + p.x;
    d.cx = (double(p.x) + offset[at]) * D;
    d.cy = (double(p.y) + offset[plane + at]) * D;
    const MixtureParams mp = field.at(p.y, p.x);
    d.alpha = mp.alpha;
    d.sigma = mp.sigma;
    d.component = std::size_t(std::max_element(mp.alpha.begin(), mp.alpha.end()) - mp.alpha.begin());
    if (options.mode == DecodeMode::MaxComponent) {
      d.params = mp.mu[d.component];
    } else {
      d.params.assign(field.dim, 0.0);
      for (std::size_t m = 0; m < mp.component_count(); ++m) {
        for (std::size_t i = 0; i < field.dim; ++i) d.params[i] += mp.alpha[m] * mp.mu[m][i];
      }
    }
    if (options.task == Task::Detection) {
      const double bw = d.params[0] * D, bh = d.params[1] * D;
      d.box = Box{d.cx - bw / 2.0, d.cy - bh / 2.0, bw, bh};
    } else {
      d.keypoints.resize(field.dim);
      for (std::size_t i = 0; i < field.dim; i += 2) {
        d.keypoints[i] = d.cx + d.params[i] * D;
        d.keypoints[i + 1] = d.cy + d.params[i + 1] * D;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

GroundTruth ground_truth_of(const Instance& inst, std::size_t image_id, Task task, std::size_t downsample) {
  GroundTruth g;
  g.image_id = image_id;
  g.class_id = inst.class_id;
  g.box = Box{inst.cx - inst.width_px / 2.0, inst.cy - inst.height_px / 2.0, inst.width_px, inst.height_px};
  g.area = std::max(1.0, inst.width_px * inst.height_px);
  if (task == Task::Pose) {
    const std::size_t k = inst.params.size() / 2;
    for (std::size_t i = 0; i < k; ++i) {
      g.keypoints.push_back(inst.keypoint_x(i, downsample));
      g.keypoints.push_back(inst.keypoint_y(i, downsample));
      g.visible.push_back(inst.annotated[2 * i]);
    }
  }
  return g;
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double oks(std::span<const double> pred, std::span<const double> gt, const std::vector<bool>& visible,
           std::span<const double> constants, double area, std::span<const std::size_t> subset) {
  const std::size_t k = visible.size();
  if (pred.size() != 2 * k || gt.size() != 2 * k || constants.size() != k) {
    throw ShapeError("oks: expected " + std::to_string(k) + " keypoints in predictions, ground truth and constants");
  }
  if (!(area > 0.0)) throw ValidationError("oks: instance area must be positive");
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(k);
    std::iota(all.begin(), all.end(), 0);
    subset = all;
  }
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i : subset) {
    if (i >= k) throw ValidationError("oks: keypoint index out of range");
    if (!visible[i]) continue;
    const double dx = pred[2 * i] - gt[2 * i], dy = pred[2 * i + 1] - gt[2 * i + 1];
    const double d2 = dx * dx + dy * dy;
    total += std::isfinite(d2) ? std::exp(-d2 / (2.0 * area * constants[i] * constants[i])) : 0.0;
    ++n;
  }
  if (n == 0) throw ValidationError("oks: no visible keypoints");
  return total / double(n);
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

namespace {

struct ClassCurve {
  bool defined = false;
  bool empty_gt_flag = false;
  std::vector<double> interpolated;  // kRecallPoints entries
};

ClassCurve class_curve(const MatchProblem& pb, std::size_t cls, double threshold) {
  ClassCurve curve;
  std::vector<std::size_t> dets;
  for (std::size_t i = 0; i < pb.dets.size(); ++i) {
    if (pb.dets[i].class_id == cls) dets.push_back(i);
  }
  std::size_t positives = 0;
  for (const auto& g : pb.gts) positives += (g.class_id == cls && !g.ignore) ? 1 : 0;
  if (positives == 0) {
    if (!dets.empty()) {
      curve.defined = true;
      curve.empty_gt_flag = true;
      curve.interpolated.assign(kRecallPoints, 0.0);
    }
    return curve;
  }
  curve.defined = true;
  std::stable_sort(dets.begin(), dets.end(),
                   [&](std::size_t a, std::size_t b) { return pb.dets[a].score > pb.dets[b].score; });
  std::vector<bool> taken(pb.gts.size(), false);
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (std::size_t d : dets) {
    std::ptrdiff_t best = -1;
    double best_sim = threshold;
    bool ignored = false;
    for (std::size_t g = 0; g < pb.gts.size(); ++g) {
      const auto& gt = pb.gts[g];
      if (gt.ignore || taken[g] || gt.class_id != cls || gt.image_id != pb.dets[d].image_id) continue;
      const double s = pb.similarity(d, g);
      if (s >= best_sim && (best < 0 || s > best_sim)) {
        best = std::ptrdiff_t(g);
        best_sim = s;
      }
    }
    if (best < 0) {
      for (std::size_t g = 0; g < pb.gts.size() && !ignored; ++g) {
        const auto& gt = pb.gts[g];
        if (gt.ignore && gt.class_id == cls && gt.image_id == pb.dets[d].image_id &&
            pb.similarity(d, g) >= threshold) {
          ignored = true;
        }
      }
    }
    if (ignored) continue;
    if (best >= 0) {
      taken[std::size_t(best)] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(double(tp) / double(tp + fp));
    recall.push_back(double(tp) / double(positives));
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  curve.interpolated.assign(kRecallPoints, 0.0);
  for (std::size_t j = 0; j < kRecallPoints; ++j) {
    const double r = double(j) / double(kRecallPoints - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) curve.interpolated[j] = precision[std::size_t(it - recall.begin())];
  }
  return curve;
}

}  // namespace

EvalReport average_precision(const MatchProblem& problem, const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw ValidationError("average_precision: no thresholds");
  if (!problem.similarity && !problem.dets.empty() && !problem.gts.empty()) {
    throw ValidationError("average_precision: similarity function missing");
  }
  EvalReport report;
  report.thresholds = thresholds;
  report.detections = problem.dets.size();
  for (const auto& g : problem.gts) report.ground_truth += g.ignore ? 0 : 1;
  std::vector<std::size_t> classes;
  for (const auto& d : problem.dets) classes.push_back(d.class_id);
  for (const auto& g : problem.gts) classes.push_back(g.class_id);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  for (double t : thresholds) {
    std::vector<double> mean_curve(kRecallPoints, 0.0);
    double ap_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t cls : classes) {
      const ClassCurve c = class_curve(problem, cls, t);
      if (!c.defined) continue;
      report.empty_ground_truth = report.empty_ground_truth || c.empty_gt_flag;
      double s = 0.0;
      for (std::size_t j = 0; j < kRecallPoints; ++j) {
        s += c.interpolated[j];
        mean_curve[j] += c.interpolated[j];
      }
      ap_sum += s / double(kRecallPoints);
      ++defined;
    }
    if (defined > 0) {
      for (double& v : mean_curve) v /= double(defined);
    }
    report.ap_per_threshold.push_back(defined > 0 ? ap_sum / double(defined) : 0.0);
    report.precision.push_back(std::move(mean_curve));
    if (std::abs(t - 0.5) < 1e-9) report.ap50 = report.ap_per_threshold.back();
    if (std::abs(t - 0.75) < 1e-9) report.ap75 = report.ap_per_threshold.back();
  }
  report.ap = std::accumulate(report.ap_per_threshold.begin(), report.ap_per_threshold.end(), 0.0) /
              double(report.ap_per_threshold.size());
  return report;
}

namespace {

MatchProblem problem_skeleton(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts) {
  MatchProblem pb;
  for (const auto& d : dets) pb.dets.push_back({d.image_id, d.class_id, d.score});
  for (const auto& g : gts) pb.gts.push_back({g.image_id, g.class_id, false});
  return pb;
}

}  // namespace

EvalReport evaluate_boxes(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                          const std::vector<double>& thresholds) {
  MatchProblem pb = problem_skeleton(dets, gts);
  pb.similarity = [&](std::size_t d, std::size_t g) { return iou(dets[d].box, gts[g].box); };
  return average_precision(pb, thresholds);
}

EvalReport evaluate_keypoints(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                              std::span<const double> constants, std::span<const std::size_t> subset,
                              const std::vector<double>& thresholds) {
  MatchProblem pb = problem_skeleton(dets, gts);
  // Ground truth without a visible keypoint in the subset is ignored; a
  // detection landing on it (by full-keypoint OKS) is not counted.
  std::vector<bool> use_full(gts.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    bool any_all = false, any_subset = subset.empty();
    for (std::size_t k = 0; k < gts[g].visible.size(); ++k) any_all = any_all || gts[g].visible[k];
    for (std::size_t k : subset) {
      if (k < gts[g].visible.size() && gts[g].visible[k]) any_subset = true;
    }
    if (!any_all) throw ValidationError("evaluate_keypoints: ground truth without visible keypoints");
    if (!any_subset) {
      pb.gts[g].ignore = true;
      use_full[g] = true;
    }
  }
  pb.similarity = [&](std::size_t d, std::size_t g) {
    const GroundTruth& gt = gts[g];
    return oks(dets[d].keypoints, gt.keypoints, gt.visible, constants, gt.area,
               use_full[g] ? std::span<const std::size_t>{} : subset);
  };
  return average_precision(pb, thresholds);
}

std::vector<KeypointSubset> default_keypoint_subsets() {
  return {{"all", {0, 1, 2, 3, 4, 5}},
          {"head", {Head}},
          {"hands", {LeftHand, RightHand}},
          {"pelvis", {Pelvis}},
          {"feet", {LeftFoot, RightFoot}},
          {"left", {LeftHand, LeftFoot}},
          {"right", {RightHand, RightFoot}}};
}

std::vector<SubsetReport> fine_grained_eval(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                            std::span<const double> constants,
                                            const std::vector<KeypointSubset>& subsets) {
  std::vector<SubsetReport> out;
  for (const auto& s : subsets) {
    if (s.keypoints.empty()) throw ValidationError("fine_grained_eval: subset '" + s.name + "' is empty");
    out.push_back({s.name, evaluate_keypoints(dets, gts, constants, s.keypoints)});
  }
  return out;
}

std::vector<MatchedDetection> match_to_instances(const std::vector<Detection>& dets,
                                                 const std::vector<std::vector<Instance>>& instances_per_image,
                                                 double radius_px) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<std::vector<bool>> taken(instances_per_image.size());
  for (std::size_t i = 0; i < taken.size(); ++i) taken[i].assign(instances_per_image[i].size(), false);
  std::vector<MatchedDetection> out;
  for (std::size_t i : order) {
    const Detection& d = dets[i];
    if (d.image_id >= instances_per_image.size()) throw ValidationError("match_to_instances: image id out of range");
    const auto& insts = instances_per_image[d.image_id];
    std::ptrdiff_t best = -1;
    double best_dist = radius_px;
    for (std::size_t g = 0; g < insts.size(); ++g) {
      if (taken[d.image_id][g]) continue;
      const double dist = std::hypot(insts[g].cx - d.cx, insts[g].cy - d.cy);
      if (dist <= best_dist) {
        best = std::ptrdiff_t(g);
        best_dist = dist;
      }
    }
    if (best < 0) continue;
    taken[d.image_id][std::size_t(best)] = true;
    out.push_back({d, insts[std::size_t(best)]});
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("pearson: need two equal-length samples of size >= 2");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

ComponentStats analyze_components(const std::vector<MatchedDetection>& matched, std::size_t components, Task task,
                                  std::size_t downsample) {
  if (components < 1) throw ValidationError("analyze_components: need at least one component");
  ComponentStats s;
  const std::size_t M = components;
  s.components = M;
  s.detections = matched.size();
  s.counts.assign(M, 0);
  s.prediction_rate.assign(M, 0.0);
  s.sigma_x_mean.assign(M, 0.0);
  s.sigma_x_std.assign(M, 0.0);
  s.sigma_y_mean.assign(M, 0.0);
  s.sigma_y_std.assign(M, 0.0);
  s.mean_sigma.assign(M, 0.0);
  s.gt_diagonals.assign(M, {});
  s.viewpoint_counts.assign(M, {0, 0});
  std::vector<double> sum_diag(M, 0.0), sxx(M, 0.0), syy(M, 0.0);
  std::vector<std::array<double, 4>> positive(M, {0, 0, 0, 0});
  std::vector<std::array<double, 2>> side_total(M, {0, 0});

  for (const auto& md : matched) {
    const std::size_t m = md.det.component;
    if (m >= M) throw ValidationError("analyze_components: component index out of range");
    ++s.counts[m];
    const auto& sig = md.det.sigma.at(m);
    s.sigma_x_mean[m] += sig[0];
    s.sigma_y_mean[m] += sig[1];
    sxx[m] += sig[0] * sig[0];
    syy[m] += sig[1] * sig[1];
    s.gt_diagonals[m].push_back(md.gt.diagonal_px());
    s.viewpoint_counts[m][md.gt.viewpoint == Viewpoint::Front ? 0 : 1] += 1;
    if (task == Task::Detection) {
      sum_diag[m] += std::hypot(md.det.params.at(0), md.det.params.at(1)) * double(downsample);
    } else {
      for (std::size_t k = 0; 2 * k + 1 < md.det.params.size(); ++k) {
        const bool left = is_left_keypoint(k), right = is_right_keypoint(k);
        if (!left && !right) continue;
        const std::size_t side = left ? 0 : 1;
        side_total[m][side] += 1.0;
        positive[m][side] += md.det.params[2 * k] > 0.0 ? 1.0 : 0.0;
        positive[m][2 + side] += md.det.params[2 * k + 1] > 0.0 ? 1.0 : 0.0;
      }
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  s.mean_predicted_diagonal.assign(M, nan);
  for (std::size_t m = 0; m < M; ++m) {
    const double n = double(s.counts[m]);
    if (s.detections > 0) s.prediction_rate[m] = n / double(s.detections);
    if (n == 0) {
      s.sigma_x_mean[m] = s.sigma_y_mean[m] = s.mean_sigma[m] = nan;
      s.sigma_x_std[m] = s.sigma_y_std[m] = nan;
      continue;
    }
    ++used;
    s.sigma_x_mean[m] /= n;
    s.sigma_y_mean[m] /= n;
    s.sigma_x_std[m] = std::sqrt(std::max(0.0, sxx[m] / n - s.sigma_x_mean[m] * s.sigma_x_mean[m]));
    s.sigma_y_std[m] = std::sqrt(std::max(0.0, syy[m] / n - s.sigma_y_mean[m] * s.sigma_y_mean[m]));
    s.mean_sigma[m] = 0.5 * (s.sigma_x_mean[m] + s.sigma_y_mean[m]);
    if (task == Task::Detection) s.mean_predicted_diagonal[m] = sum_diag[m] / n;
  }

  if (task == Task::Detection) {
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const bool ua = s.counts[a] > 0, ub = s.counts[b] > 0;
      if (ua != ub) return ua;
      return ua && s.mean_predicted_diagonal[a] < s.mean_predicted_diagonal[b];
    });
    s.rank.assign(M, 0);
    for (std::size_t r = 0; r < M; ++r) s.rank[order[r]] = r;
    if (used >= 2) {
      std::vector<double> ranks, diags;
      for (const auto& md : matched) {
        ranks.push_back(double(s.rank[md.det.component]));
        diags.push_back(md.gt.diagonal_px());
      }
      const double r = pearson(ranks, diags);
      if (std::isfinite(r)) s.scale_correlation = r;
    }
  } else {
    s.positive_x_left.assign(M, nan);
    s.positive_x_right.assign(M, nan);
    s.positive_y_left.assign(M, nan);
    s.positive_y_right.assign(M, nan);
    for (std::size_t m = 0; m < M; ++m) {
      if (side_total[m][0] > 0) {
        s.positive_x_left[m] = positive[m][0] / side_total[m][0];
        s.positive_y_left[m] = positive[m][2] / side_total[m][0];
      }
      if (side_total[m][1] > 0) {
        s.positive_x_right[m] = positive[m][1] / side_total[m][1];
        s.positive_y_right[m] = positive[m][3] / side_total[m][1];
      }
    }
    if (M >= 2 && s.detections > 0) {
      double best = -1.0;
      for (std::size_t f = 0; f < M; ++f) {
        for (std::size_t b = 0; b < M; ++b) {
          if (f == b) continue;
          const double agree = double(s.viewpoint_counts[f][0] + s.viewpoint_counts[b][1]) / double(s.detections);
          if (agree > best) {
            best = agree;
            s.front_component = f;
            s.back_component = b;
          }
        }
      }
      s.viewpoint_agreement = best;
    }
  }
  return s;
}

}  // namespace mdn
