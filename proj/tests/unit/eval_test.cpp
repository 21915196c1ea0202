#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mdn/eval.hpp"
#include "oracles.hpp"

namespace mdn {
namespace {

GroundTruth gt_box(double x, double y, double w, double h, std::size_t image = 0) {
  GroundTruth g;
  g.image_id = image;
  g.box = {x, y, w, h};
  g.area = w * h;
  return g;
}

Detection det_box(double score, double x, double y, double w, double h, std::size_t image = 0) {
  Detection d;
  d.image_id = image;
  d.score = score;
  d.box = {x, y, w, h};
  return d;
}

TEST(Iou, Basics) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {1, 0, 2, 2}), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 1, 1}, {5, 5, 1, 1}), 0.0);
}

TEST(AveragePrecision, Examples) {
  const std::vector<GroundTruth> gts{gt_box(0, 0, 10, 10), gt_box(20, 20, 10, 10)};
  EXPECT_DOUBLE_EQ(evaluate_boxes({det_box(0.9, 0, 0, 10, 10), det_box(0.8, 20, 20, 10, 10)}, gts).ap, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_boxes({}, gts).ap, 0.0);

  // One of two ground truths found at IoU 0.9: precision 1 up to recall 0.5,
  // so 51 of the 101 recall points are 1.
  const EvalReport r = evaluate_boxes({det_box(0.9, 0, 0, 9, 10)}, gts, {0.5});
  EXPECT_NEAR(iou({0, 0, 9, 10}, {0, 0, 10, 10}), 0.9, 1e-12);
  EXPECT_DOUBLE_EQ(*r.ap50, 51.0 / 101.0);
}

TEST(AveragePrecision, EmptyGroundTruthIsFlagged) {
  const EvalReport r = evaluate_boxes({det_box(0.9, 0, 0, 10, 10)}, {});
  EXPECT_EQ(r.ap, 0.0);
  EXPECT_TRUE(r.empty_ground_truth);
  EXPECT_FALSE(evaluate_boxes({}, {gt_box(0, 0, 1, 1)}).empty_ground_truth);
}

TEST(AveragePrecision, FalsePositiveRankedFirst) {
  // FP then TP: precision 0.5 at recall 1.
  const EvalReport r = evaluate_boxes({det_box(0.9, 50, 50, 5, 5), det_box(0.8, 0, 0, 10, 10)},
                                      {gt_box(0, 0, 10, 10)}, {0.5});
  EXPECT_DOUBLE_EQ(r.ap, 0.5);
}

TEST(AveragePrecision, MatchingIsPerImage) {
  const EvalReport r = evaluate_boxes({det_box(0.9, 0, 0, 10, 10, 1)}, {gt_box(0, 0, 10, 10, 0)}, {0.5});
  EXPECT_EQ(r.ap, 0.0);
}

TEST(AveragePrecision, InvariantToMonotoneScoreRescaling) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0.0, 50.0), size(4.0, 12.0), u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GroundTruth> gts;
    std::vector<Detection> dets;
    for (int i = 0; i < 8; ++i) {
      gts.push_back(gt_box(pos(rng), pos(rng), size(rng), size(rng), i % 3));
      const auto& g = gts.back();
      if (u(rng) < 0.7) {
        dets.push_back(det_box(u(rng), g.box.x + u(rng) * 2, g.box.y + u(rng) * 2, g.box.w, g.box.h, i % 3));
      }
      if (u(rng) < 0.3) dets.push_back(det_box(u(rng), pos(rng), pos(rng), 5, 5, i % 3));
    }
    const double base = evaluate_boxes(dets, gts).ap;
    for (auto& d : dets) d.score = 0.01 + 0.5 * std::pow(d.score, 3);
    EXPECT_DOUBLE_EQ(evaluate_boxes(dets, gts).ap, base);
  }
}

TEST(AveragePrecision, MatchesBruteForceOracleOnSmallCases) {
  const auto eq = oracle::check_ap_equivalence(4, 4);
  EXPECT_EQ(eq.mismatches, 0u) << eq.first_mismatch;
  EXPECT_GT(eq.cases, 10000u);
}

TEST(Oks, Examples) {
  const std::vector<double> gt{10, 10}, k{0.5};
  const std::vector<bool> vis{true};
  EXPECT_DOUBLE_EQ(oks(gt, gt, vis, k, 100.0), 1.0);
  const std::vector<double> far{1e300, 1e300};
  EXPECT_EQ(oks(far, gt, vis, k, 100.0), 0.0);
  // d^2 = 2 area k^2 = 50
  const std::vector<double> pred{15, 15};
  EXPECT_NEAR(oks(pred, gt, vis, k, 100.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(std::exp(-1.0), 0.3679, 1e-4);
  EXPECT_THROW(oks(gt, gt, {false}, k, 100.0), ValidationError);
}

TEST(Oks, SubsetAndVisibility) {
  const std::vector<double> gt{0, 0, 10, 10}, pred{0, 0, 20, 10}, k{1.0, 1.0};
  EXPECT_DOUBLE_EQ(oks(pred, gt, {true, false}, k, 50.0), 1.0);
  const std::size_t second[] = {1};
  EXPECT_NEAR(oks(pred, gt, {true, true}, k, 50.0, second), std::exp(-1.0), 1e-15);
}

MixtureField field_from(std::size_t m, std::size_t dim, std::size_t h, std::size_t w) {
  return MixtureField{m, dim, Tensor({m, h, w}, 0.0), Tensor({m * dim, h, w}, 0.0), Tensor({m * 2, h, w}, 0.0),
                      SigmaActivation::EluShift};
}

TEST(Decode, SingleIdealPeakGivesExactBox) {
  Tensor heat({1, 4, 4}, 0.0), off({2, 4, 4}, 0.0);
  heat.at({0, 1, 2}) = 0.9;
  off.at({0, 1, 2}) = 0.25;
  off.at({1, 1, 2}) = 0.5;
  MixtureField f = field_from(1, 2, 4, 4);
  f.means.at({0, 1, 2}) = 3.0;
  f.means.at({1, 1, 2}) = 2.0;
  const auto dets = decode(heat, off, f, 4, {});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_DOUBLE_EQ(dets[0].cx, 9.0);
  EXPECT_DOUBLE_EQ(dets[0].cy, 6.0);
  EXPECT_DOUBLE_EQ(dets[0].box.w, 12.0);
  EXPECT_DOUBLE_EQ(dets[0].box.h, 8.0);
  EXPECT_DOUBLE_EQ(dets[0].box.x, 3.0);
  EXPECT_DOUBLE_EQ(dets[0].box.y, 2.0);
}

// Exhaustive scan oracle: every cell that beats its 8 neighbours and the threshold.
TEST(Decode, PeaksMatchExhaustiveScan) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor heat({1, 6, 7}, 0.0);
    for (double& v : heat.data()) v = u(rng);
    const auto dets = decode(heat, Tensor({2, 6, 7}), field_from(2, 2, 6, 7), 4, {Task::Detection, DecodeMode::MaxComponent, 100, 0.3});
    std::vector<double> expected;
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 7; ++x) {
        const double v = heat.at({0, std::size_t(y), std::size_t(x)});
        bool peak = v >= 0.3;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || xx < 0 || yy >= 6 || xx >= 7) continue;
            if (heat.at({0, std::size_t(yy), std::size_t(xx)}) > v) peak = false;
          }
        }
        if (peak) expected.push_back(v);
      }
    }
    std::sort(expected.rbegin(), expected.rend());
    ASSERT_EQ(dets.size(), expected.size());
    for (std::size_t i = 0; i < dets.size(); ++i) EXPECT_EQ(dets[i].score, expected[i]);
  }
}

TEST(Decode, TwoSeparatedPeaksOrderedByScore) {
  Tensor heat({1, 8, 8}, 0.0);
  heat.at({0, 1, 1}) = 0.6;
  heat.at({0, 6, 6}) = 0.8;
  const auto dets = decode(heat, Tensor({2, 8, 8}), field_from(1, 2, 8, 8), 4, {});
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_EQ(dets[0].cell_y, 6u);
  EXPECT_EQ(dets[1].cell_y, 1u);
  DecodeOptions top1;
  top1.top_k = 1;
  EXPECT_EQ(decode(heat, Tensor({2, 8, 8}), field_from(1, 2, 8, 8), 4, top1).size(), 1u);
}

TEST(Decode, MixtureMeanWithDegenerateWeightsEqualsMaxComponent) {
  Tensor heat({1, 3, 3}, 0.0);
  heat.at({0, 1, 1}) = 0.9;
  MixtureField f = field_from(3, 4, 3, 3);
  f.logits.at({0, 1, 1}) = 800.0;  // alpha = (1, 0, 0) exactly
  for (std::size_t i = 0; i < 12; ++i) f.means.at({i, 1, 1}) = double(i) - 5.0;
  DecodeOptions a{Task::Pose, DecodeMode::MaxComponent, 10, 0.1}, b = a;
  b.mode = DecodeMode::MixtureMean;
  const auto da = decode(heat, Tensor({2, 3, 3}), f, 4, a), db = decode(heat, Tensor({2, 3, 3}), f, 4, b);
  ASSERT_EQ(da.size(), 1u);
  EXPECT_EQ(da[0].params, db[0].params);
  EXPECT_EQ(da[0].keypoints, db[0].keypoints);
}

TEST(Decode, SingleComponentIgnoresModeFlag) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor heat({1, 5, 5});
  for (double& v : heat.data()) v = std::abs(n(rng)) / 4;
  MixtureField f = field_from(1, 2, 5, 5);
  for (double& v : f.means.data()) v = n(rng);
  for (double& v : f.logits.data()) v = n(rng);
  DecodeOptions a, b;
  b.mode = DecodeMode::MixtureMean;
  const auto da = decode(heat, Tensor({2, 5, 5}), f, 4, a), db = decode(heat, Tensor({2, 5, 5}), f, 4, b);
  ASSERT_EQ(da.size(), db.size());
  for (std::size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i].params, db[i].params);
}

MatchedDetection matched(std::size_t component, double gt_diag, double pred_diag, std::size_t m = 2) {
  MatchedDetection md;
  md.det.component = component;
  md.det.sigma.assign(m, {1.0, 1.0});
  md.det.params = {pred_diag / 4 / std::sqrt(2.0), pred_diag / 4 / std::sqrt(2.0)};
  md.gt.width_px = md.gt.height_px = gt_diag / std::sqrt(2.0);
  return md;
}

TEST(AnalyzeComponents, SingleComponentUsed) {
  std::vector<MatchedDetection> v;
  for (int i = 0; i < 10; ++i) v.push_back(matched(0, 8 + i, 8 + i, 3));
  const auto s = analyze_components(v, 3, Task::Detection, 4);
  EXPECT_EQ(s.prediction_rate, (std::vector<double>{1.0, 0.0, 0.0}));
  EXPECT_FALSE(s.scale_correlation.has_value());
}

TEST(AnalyzeComponents, ScaleSplitGivesHighCorrelation) {
  std::vector<MatchedDetection> v;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const bool large = i % 2;
    const double d = large ? 28 + 3 * n(rng) : 8 + n(rng);
    // Component 1 takes small objects, component 0 large ones.
    v.push_back(matched(large ? 0 : 1, d, d));
  }
  const auto s = analyze_components(v, 2, Task::Detection, 4);
  EXPECT_EQ(s.rank[1], 0u);
  EXPECT_EQ(s.rank[0], 1u);
  ASSERT_TRUE(s.scale_correlation.has_value());
  EXPECT_GE(*s.scale_correlation, 0.9);
  double total = 0.0;
  for (double r : s.prediction_rate) total += r;
  EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(AnalyzeComponents, RandomAssignmentGivesNoCorrelation) {
  std::vector<MatchedDetection> v;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> diag(5.0, 40.0);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 10000; ++i) {
    const double d = diag(rng);
    v.push_back(matched(coin(rng) ? 1 : 0, d, 20.0 + (i % 2)));
  }
  const auto s = analyze_components(v, 2, Task::Detection, 4);
  ASSERT_TRUE(s.scale_correlation.has_value());
  EXPECT_NEAR(*s.scale_correlation, 0.0, 0.05);
}

TEST(AnalyzeComponents, ViewpointConfusionAndSigma) {
  std::vector<MatchedDetection> v;
  for (int i = 0; i < 100; ++i) {
    MatchedDetection md;
    const bool back = i < 30;
    md.gt.viewpoint = back ? Viewpoint::Back : Viewpoint::Front;
    md.gt.width_px = md.gt.height_px = 30;
    // Component 1 mostly back views, with larger sigma; 5 front views leak in.
    md.det.component = (back || i >= 95) ? 1 : 0;
    md.det.sigma = {{1.0, 1.0}, {2.5, 2.0}};
    md.det.params.assign(12, 0.0);
    md.det.params[2 * LeftHand] = md.det.component == 0 ? 3.0 : -3.0;
    v.push_back(md);
  }
  const auto s = analyze_components(v, 2, Task::Pose, 4);
  EXPECT_EQ(s.viewpoint_counts[1][1], 30u);
  EXPECT_EQ(s.viewpoint_counts[1][0], 5u);
  EXPECT_DOUBLE_EQ(*s.viewpoint_agreement, 0.95);
  EXPECT_EQ(*s.back_component, 1u);
  EXPECT_GT(s.mean_sigma[1], s.mean_sigma[0]);
  EXPECT_DOUBLE_EQ(s.positive_x_left[0], 0.5);  // left hand positive, left foot at 0
  EXPECT_DOUBLE_EQ(s.positive_x_left[1], 0.0);
}

TEST(FineGrained, PerfectPredictionsAndFullSubset) {
  const SynthConfig c = SynthConfig::defaults(Task::Pose);
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
  for (std::size_t i = 0; i < 30; ++i) {
    const Scene s = gen_scene(c, scene_seed(31, i));
    for (const Instance& in : s.instances) {
      gts.push_back(ground_truth_of(in, i, Task::Pose, 4));
      Detection d;
      d.image_id = i;
      d.score = 0.9;
      d.keypoints = gts.back().keypoints;
      dets.push_back(d);
    }
  }
  const std::vector<double> k(kPoseKeypoints, 0.25);
  for (const auto& r : fine_grained_eval(dets, gts, k, default_keypoint_subsets())) {
    EXPECT_DOUBLE_EQ(r.report.ap, 1.0) << r.name;
  }
  const auto full = fine_grained_eval(dets, gts, k, {{"all", {0, 1, 2, 3, 4, 5}}});
  for (auto& d : dets) d.keypoints[0] += 6.0;
  EXPECT_DOUBLE_EQ(evaluate_keypoints(dets, gts, k).ap,
                   fine_grained_eval(dets, gts, k, {{"all", {0, 1, 2, 3, 4, 5}}})[0].report.ap);
  EXPECT_THROW(fine_grained_eval(dets, gts, k, {{"none", {}}}), ValidationError);
}

}  // namespace
}  // namespace mdn
