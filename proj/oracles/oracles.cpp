#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mdn::oracle {

namespace {

// Number of true positives among the first `k` detections (by score) of
// class `cls`, matching from scratch.
std::size_t prefix_true_positives(const MatchProblem& pb, const std::vector<std::size_t>& sorted, std::size_t k,
                                  double threshold) {
  std::vector<bool> used(pb.gts.size(), false);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t d = sorted[i];
    double best = -1.0;
    std::size_t pick = pb.gts.size();
    for (std::size_t g = 0; g < pb.gts.size(); ++g) {
      if (used[g] || pb.gts[g].class_id != pb.dets[d].class_id || pb.gts[g].image_id != pb.dets[d].image_id) continue;
      const double s = pb.similarity(d, g);
      if (s < threshold) continue;
      if (s > best) {
        best = s;
        pick = g;
      }
    }
    if (pick < pb.gts.size()) {
      used[pick] = true;
      ++tp;
    }
  }
  return tp;
}

}  // namespace

EvalReport brute_force_average_precision(const MatchProblem& pb, const std::vector<double>& thresholds) {
  for (const auto& g : pb.gts) {
    if (g.ignore) throw ValidationError("brute-force AP oracle does not support ignored ground truth");
  }
  std::vector<std::size_t> classes;
  for (const auto& d : pb.dets) classes.push_back(d.class_id);
  for (const auto& g : pb.gts) classes.push_back(g.class_id);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  EvalReport r;
  r.thresholds = thresholds;
  r.detections = pb.dets.size();
  r.ground_truth = pb.gts.size();
  double total = 0.0;
  for (double t : thresholds) {
    double sum = 0.0;
    std::size_t defined = 0;
    std::vector<double> curve(kRecallPoints, 0.0);
    for (std::size_t cls : classes) {
      std::vector<std::size_t> sorted;
      for (std::size_t d = 0; d < pb.dets.size(); ++d) {
        if (pb.dets[d].class_id == cls) sorted.push_back(d);
      }
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) { return pb.dets[a].score > pb.dets[b].score; });
      std::size_t npos = 0;
      for (const auto& g : pb.gts) npos += g.class_id == cls ? 1 : 0;
      if (npos == 0) {
        if (sorted.empty()) continue;
        r.empty_ground_truth = true;
        ++defined;
        continue;
      }
      ++defined;
      std::vector<double> prec(sorted.size()), rec(sorted.size());
      for (std::size_t k = 1; k <= sorted.size(); ++k) {
        const std::size_t tp = prefix_true_positives(pb, sorted, k, t);
        prec[k - 1] = double(tp) / double(k);
        rec[k - 1] = double(tp) / double(npos);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < kRecallPoints; ++j) {
        const double level = double(j) / double(kRecallPoints - 1);
        double best = 0.0;
        for (std::size_t k = 0; k < sorted.size(); ++k) {
          if (rec[k] >= level) best = std::max(best, prec[k]);
        }
        curve[j] += best;
        s += best;
      }
      sum += s / double(kRecallPoints);
    }
    if (defined > 0) {
      for (double& v : curve) v /= double(defined);
    }
    const double ap_t = defined > 0 ? sum / double(defined) : 0.0;
    r.ap_per_threshold.push_back(ap_t);
    r.precision.push_back(curve);
    total += ap_t;
  }
  r.ap = total / double(thresholds.size());
  return r;
}

MatchProblem SmallCase::problem() const {
  MatchProblem pb;
  for (std::size_t d = 0; d < dets; ++d) pb.dets.push_back({0, 0, scores[d]});
  for (std::size_t g = 0; g < gts; ++g) pb.gts.push_back({0, 0, false});
  pb.similarity = [this](std::size_t d, std::size_t g) { return similarity[d * gts + g]; };
  return pb;
}

std::string SmallCase::describe() const {
  std::ostringstream os;
  os << dets << " detections x " << gts << " ground truth, similarity [";
  for (std::size_t i = 0; i < similarity.size(); ++i) os << (i ? " " : "") << similarity[i];
  os << "]";
  return os.str();
}

std::size_t enumerate_small_cases(std::size_t max_dets, std::size_t max_gts, const std::vector<double>& levels,
                                  const std::function<bool(const SmallCase&)>& visit) {
  std::size_t visited = 0;
  for (std::size_t nd = 0; nd <= max_dets; ++nd) {
    for (std::size_t ng = 0; ng <= max_gts; ++ng) {
      SmallCase c;
      c.dets = nd;
      c.gts = ng;
      for (std::size_t d = 0; d < nd; ++d) c.scores.push_back(1.0 - 0.1 * double(d));
      // Each detection picks one ground truth (or none) and a level. Ground
      // truths are interchangeable, so labels appear in first-use order.
      std::vector<std::size_t> pick(nd, 0), level(nd, 0);
      const std::function<bool(std::size_t, std::size_t)> assign = [&](std::size_t d, std::size_t used) {
        if (d == nd) {
          std::vector<std::size_t> lv(nd, 0);
          while (true) {
            c.similarity.assign(nd * ng, 0.0);
            for (std::size_t i = 0; i < nd; ++i) {
              if (pick[i] > 0) c.similarity[i * ng + pick[i] - 1] = levels[lv[i]];
            }
            ++visited;
            if (!visit(c)) return false;
            std::size_t i = 0;
            while (i < nd && (pick[i] == 0 || ++lv[i] == levels.size())) lv[i++] = 0;
            if (i == nd) return true;
          }
        }
        for (std::size_t g = 0; g <= std::min(used + 1, ng); ++g) {
          pick[d] = g;
          if (!assign(d + 1, std::max(used, g))) return false;
        }
        return true;
      };
      if (!assign(0, 0)) return visited;
      // Full similarity matrices for the smallest sizes.
      if (nd * ng == 0 || nd * ng > 6) continue;
      const std::size_t base = levels.size() + 1;
      std::vector<std::size_t> cell(nd * ng, 0);
      while (true) {
        for (std::size_t i = 0; i < cell.size(); ++i) c.similarity[i] = cell[i] ? levels[cell[i] - 1] : 0.0;
        ++visited;
        if (!visit(c)) return visited;
        std::size_t i = 0;
        while (i < cell.size() && ++cell[i] == base) cell[i++] = 0;
        if (i == cell.size()) break;
      }
    }
  }
  return visited;
}

ApEquivalence check_ap_equivalence(std::size_t max_dets, std::size_t max_gts) {
  ApEquivalence out;
  const auto thresholds = coco_thresholds();
  // 0.5 and 0.75 sit exactly on thresholds.
  const std::vector<double> levels{0.5, 0.62, 0.75, 0.97};
  enumerate_small_cases(max_dets, max_gts, levels, [&](const SmallCase& c) {
    ++out.cases;
    const MatchProblem pb = c.problem();
    const EvalReport a = average_precision(pb, thresholds);
    const EvalReport b = brute_force_average_precision(pb, thresholds);
    const bool same = a.ap == b.ap && a.ap_per_threshold == b.ap_per_threshold && a.precision == b.precision &&
                      a.empty_ground_truth == b.empty_ground_truth;
    if (!same) {
      if (out.mismatches == 0) {
        std::ostringstream os;
        os.precision(17);
        os << c.describe() << ": AP " << a.ap << " vs oracle " << b.ap;
        out.first_mismatch = os.str();
      }
      ++out.mismatches;
    }
    return true;
  });
  return out;
}

Prediction ideal_outputs(const DenseTargets& targets) {
  const std::size_t h = targets.positive_mask.dim(0), w = targets.positive_mask.dim(1);
  const std::size_t c = targets.pose_params.dim(0);
  Prediction p;
  p.heatmap = targets.heatmap;
  p.offset = targets.center_offset;
  p.field.components = 1;
  p.field.dim = c;
  p.field.logits = Tensor({1, h, w}, 0.0);
  p.field.means = targets.pose_params;
  p.field.raw_sigma = Tensor({2, h, w}, 0.0);
  return p;
}

RoundTrip decode_round_trip(const SynthConfig& config, std::size_t scenes, std::uint64_t seed) {
  RoundTrip rt;
  const GridShape grid = config.grid();
  DecodeOptions opt;
  opt.task = config.task;
  opt.threshold = 0.5;
  opt.top_k = 1000;
  for (std::size_t i = 0; i < scenes; ++i) {
    const Scene scene = gen_scene(config, scene_seed(seed, i));
    const DenseTargets t = build_targets(scene, grid, config.task, config.num_classes);
    const Prediction p = ideal_outputs(t);
    const auto dets = decode(p.heatmap, p.offset, p.field, grid.downsample, opt);
    rt.instances += scene.instances.size();
    std::vector<bool> used(dets.size(), false);
    for (const Instance& inst : scene.instances) {
      // Independent cell lookup: the detection sitting on the instance's cell.
      const std::size_t cy = std::size_t(inst.cy) / grid.downsample, cx = std::size_t(inst.cx) / grid.downsample;
      std::size_t found = dets.size();
      for (std::size_t d = 0; d < dets.size(); ++d) {
        if (!used[d] && dets[d].cell_y == cy && dets[d].cell_x == cx && dets[d].class_id == inst.class_id) found = d;
      }
      if (found == dets.size()) {
        if (rt.first_failure.empty()) rt.first_failure = "scene " + std::to_string(i) + ": instance not decoded";
        continue;
      }
      used[found] = true;
      ++rt.recovered;
      const Detection& d = dets[found];
      rt.max_center_error_px = std::max(rt.max_center_error_px, std::hypot(d.cx - inst.cx, d.cy - inst.cy));
      if (d.params != inst.params) {
        rt.params_exact = false;
        if (rt.first_failure.empty()) rt.first_failure = "scene " + std::to_string(i) + ": pose parameters differ";
      }
    }
    for (bool u : used) rt.spurious += u ? 0 : 1;
  }
  return rt;
}

}  // namespace mdn::oracle
