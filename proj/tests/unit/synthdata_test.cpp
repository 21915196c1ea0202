#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mdn/synthdata.hpp"
#include "oracles.hpp"

namespace mdn {
namespace {

TEST(SynthData, RegenerationIsBitIdentical) {
  for (Task task : {Task::Detection, Task::Pose}) {
    const SynthConfig c = SynthConfig::defaults(task);
    const Scene a = gen_scene(c, 1234), b = gen_scene(c, 1234);
    EXPECT_EQ(a.image.storage(), b.image.storage());
    ASSERT_EQ(a.instances.size(), b.instances.size());
    for (std::size_t i = 0; i < a.instances.size(); ++i) {
      EXPECT_EQ(a.instances[i].params, b.instances[i].params);
      EXPECT_EQ(a.instances[i].cx, b.instances[i].cx);
    }
    EXPECT_NE(gen_scene(c, 1235).image.storage(), a.image.storage());
  }
}

TEST(SynthData, ZeroInstancesGiveEmptyScene) {
  SynthConfig c = SynthConfig::defaults(Task::Detection);
  c.min_instances = c.max_instances = 0;
  const Scene s = gen_scene(c, 3);
  EXPECT_TRUE(s.instances.empty());
  EXPECT_FALSE(s.placement_warning);
  EXPECT_EQ(s.image.shape(), (Shape{3, 64, 64}));
  const DenseTargets t = build_targets(s, c.grid(), Task::Detection);
  for (double v : t.heatmap.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(t.positives(), 0u);
}

TEST(SynthData, ScenesRespectBoundsAndUniqueCells) {
  for (Task task : {Task::Detection, Task::Pose}) {
    const SynthConfig c = SynthConfig::defaults(task);
    for (std::size_t i = 0; i < 300; ++i) {
      const Scene s = gen_scene(c, scene_seed(5, i));
      for (double v : s.image.data()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
      std::set<std::pair<int, int>> cells;
      for (const Instance& in : s.instances) {
        EXPECT_TRUE(cells.insert({int(in.cy / 4), int(in.cx / 4)}).second);
        if (task == Task::Detection) {
          EXPECT_GE(in.cx - in.width_px / 2, -1e-9);
          EXPECT_LE(in.cx + in.width_px / 2, 64 + 1e-9);
          EXPECT_GE(in.cy - in.height_px / 2, -1e-9);
          EXPECT_LE(in.cy + in.height_px / 2, 64 + 1e-9);
          EXPECT_NEAR(in.params[0] * 4, in.width_px, 1e-12);
        } else {
          for (std::size_t k = 0; k < kPoseKeypoints; ++k) {
            EXPECT_GE(in.keypoint_x(k, 4), 0.0);
            EXPECT_LT(in.keypoint_x(k, 4), 96.0);
            EXPECT_GE(in.keypoint_y(k, 4), 0.0);
            EXPECT_LT(in.keypoint_y(k, 4), 96.0);
          }
        }
      }
    }
  }
}

TEST(SynthData, CrowdedRequestSetsWarning) {
  SynthConfig c = SynthConfig::defaults(Task::Detection);
  c.height = c.width = 8;  // 4 cells
  c.scale_modes = {{2.0, 0.0, 1.0}};
  c.min_instances = c.max_instances = 6;
  const Scene s = gen_scene(c, 1);
  EXPECT_TRUE(s.placement_warning);
  EXPECT_LE(s.instances.size(), 4u);
}

// Sampling oracle: histogram of ln(diagonal) over 10,000 instances.
TEST(SynthData, DiagonalHistogramIsBimodalAtConfiguredModes) {
  const SynthConfig c = SynthConfig::defaults(Task::Detection);
  std::vector<double> diags;
  std::size_t mode0 = 0;
  for (std::size_t i = 0; diags.size() < 10000; ++i) {
    for (const Instance& in : gen_scene(c, scene_seed(11, i)).instances) {
      diags.push_back(in.diagonal_px());
      mode0 += in.scale_mode == 0 ? 1 : 0;
    }
  }
  const double lo = std::log(3.0), width = 0.1;
  std::vector<double> hist(30, 0.0);
  for (double d : diags) {
    const int b = int((std::log(d) - lo) / width);
    if (b >= 0 && b < int(hist.size())) hist[b] += 1.0;
  }
  std::vector<double> peaks;
  for (std::size_t b = 1; b + 1 < hist.size(); ++b) {
    if (hist[b] > hist[b - 1] && hist[b] >= hist[b + 1] && hist[b] > 200) peaks.push_back(std::exp(lo + (b + 0.5) * width));
  }
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks[0], 8.0, 0.8);
  EXPECT_NEAR(peaks[1], 28.0, 2.8);
  // Valley between the modes.
  const int valley = int((std::log(15.0) - lo) / width);
  EXPECT_LT(hist[valley], 0.2 * std::max(hist[int((std::log(8.0) - lo) / width)], 1.0));

  const double n = double(diags.size());
  const double p = 0.5, sd = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(double(mode0) / n, p, 3 * sd);
}

TEST(SynthData, ViewpointRatioMatchesPrior) {
  const SynthConfig c = SynthConfig::defaults(Task::Pose);
  std::size_t front = 0, total = 0;
  for (std::size_t i = 0; total < 10000; ++i) {
    for (const Instance& in : gen_scene(c, scene_seed(12, i)).instances) {
      front += in.viewpoint == Viewpoint::Front ? 1 : 0;
      ++total;
    }
  }
  const double rate = double(front) / double(total);
  EXPECT_NEAR(rate, 0.7, 0.02);
  EXPECT_NEAR(rate, 0.7, 3 * std::sqrt(0.21 / double(total)));
}

double pixel(const Tensor& img, std::size_t ch, double x, double y) {
  return img.at({ch, std::size_t(y), std::size_t(x)});
}

TEST(SynthData, FrontAndBackFigures) {
  SynthConfig c = SynthConfig::defaults(Task::Pose);
  c.keypoint_jitter_px = 0.0;
  c.min_instances = c.max_instances = 1;
  c.front_prior = 1.0;
  const Scene front = gen_scene(c, 77);
  c.front_prior = 0.0;
  const Scene back = gen_scene(c, 77);
  const Instance& f = front.instances.at(0);
  const Instance& b = back.instances.at(0);
  EXPECT_EQ(f.viewpoint, Viewpoint::Front);
  EXPECT_EQ(b.viewpoint, Viewpoint::Back);
  EXPECT_GT(f.params[2 * LeftHand], 0.0);
  EXPECT_GT(f.params[2 * LeftFoot], 0.0);
  EXPECT_LT(f.params[2 * RightHand], 0.0);
  for (std::size_t k = 0; k < kPoseKeypoints; ++k) {
    EXPECT_DOUBLE_EQ(b.params[2 * k], -f.params[2 * k]);
    EXPECT_DOUBLE_EQ(b.params[2 * k + 1], f.params[2 * k + 1]);
  }
  // Face marker: warm yellow at the head center only in the front view.
  const double fr = pixel(front.image, 0, f.keypoint_x(Head, 4), f.keypoint_y(Head, 4));
  const double fb = pixel(front.image, 2, f.keypoint_x(Head, 4), f.keypoint_y(Head, 4));
  const double br = pixel(back.image, 0, b.keypoint_x(Head, 4), b.keypoint_y(Head, 4));
  const double bb = pixel(back.image, 2, b.keypoint_x(Head, 4), b.keypoint_y(Head, 4));
  EXPECT_GT(fr - fb, 0.5);
  EXPECT_LT(br - bb, 0.3);
}

TEST(SynthData, BackViewCarriesMoreJitter) {
  SynthConfig c = SynthConfig::defaults(Task::Pose);
  c.keypoint_jitter_px = 1.0;
  c.min_instances = c.max_instances = 1;
  // Head X offset is 0 before jitter, so its spread is the jitter alone.
  auto spread = [&](double prior) {
    c.front_prior = prior;
    double ss = 0.0;
    for (std::size_t i = 0; i < 2000; ++i) {
      const double x = gen_scene(c, scene_seed(13, i)).instances.at(0).params[2 * Head] * 4.0;
      ss += x * x;
    }
    return std::sqrt(ss / 2000.0);
  };
  EXPECT_NEAR(spread(1.0), 1.0, 0.1);
  EXPECT_NEAR(spread(0.0), 3.0, 0.3);
}

Scene scene_with(std::vector<std::pair<double, double>> centers, std::size_t size = 32) {
  Scene s;
  s.image = Tensor({3, size, size});
  for (auto [x, y] : centers) {
    Instance in;
    in.cx = x;
    in.cy = y;
    in.width_px = 8;
    in.height_px = 6;
    in.params = {2.0, 1.5};
    in.annotated = {true, true};
    s.instances.push_back(in);
  }
  return s;
}

TEST(BuildTargets, Examples) {
  const GridShape grid = GridShape::make(32, 32, 4);
  DenseTargets t = build_targets(scene_with({{10, 10}}), grid, Task::Detection);
  EXPECT_EQ(t.positive_mask.at({2, 2}), 1.0);
  EXPECT_EQ(t.positives(), 1u);
  EXPECT_EQ(t.heatmap.at({0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(t.center_offset.at({0, 2, 2}), 0.5);
  EXPECT_DOUBLE_EQ(t.center_offset.at({1, 2, 2}), 0.5);
  EXPECT_EQ(t.pose_params.at({0, 2, 2}), 2.0);
  EXPECT_EQ(t.pose_params.at({1, 2, 2}), 1.5);

  t = build_targets(scene_with({{8, 8}}), grid, Task::Detection);
  EXPECT_EQ(t.positive_mask.at({2, 2}), 1.0);
  EXPECT_EQ(t.center_offset.at({0, 2, 2}), 0.0);
  EXPECT_EQ(t.center_offset.at({1, 2, 2}), 0.0);

  EXPECT_THROW(build_targets(scene_with({{9, 9}, {10, 11}}), grid, Task::Detection), ValidationError);
  EXPECT_THROW(build_targets(scene_with({{9, 9}}, 28), grid, Task::Detection), ShapeError);
}

TEST(BuildTargets, PeaksEqualOneOnlyAtCenters) {
  const SynthConfig c = SynthConfig::defaults(Task::Detection);
  for (std::size_t i = 0; i < 200; ++i) {
    const Scene s = gen_scene(c, scene_seed(14, i));
    const DenseTargets t = build_targets(s, c.grid(), Task::Detection);
    for (std::size_t j = 0; j < t.positive_mask.size(); ++j) {
      EXPECT_EQ(t.heatmap[j] == 1.0, t.positive_mask[j] == 1.0);
    }
  }
}

TEST(BuildTargets, HiddenLabelsDoNotReachTargets) {
  const SynthConfig c = SynthConfig::defaults(Task::Pose);
  Scene s = gen_scene(c, 15);
  const DenseTargets a = build_targets(s, c.grid(), Task::Pose);
  for (Instance& in : s.instances) {
    in.viewpoint = in.viewpoint == Viewpoint::Front ? Viewpoint::Back : Viewpoint::Front;
    in.scale_mode = 7;
  }
  const DenseTargets b = build_targets(s, c.grid(), Task::Pose);
  EXPECT_EQ(a.heatmap.storage(), b.heatmap.storage());
  EXPECT_EQ(a.pose_params.storage(), b.pose_params.storage());
  EXPECT_EQ(a.pose_observed.storage(), b.pose_observed.storage());
}

TEST(BuildTargets, DecodeRoundTripOnIdealOutputs) {
  for (Task task : {Task::Detection, Task::Pose}) {
    const auto rt = oracle::decode_round_trip(SynthConfig::defaults(task), 100, 21);
    EXPECT_TRUE(rt.ok()) << rt.first_failure;
    EXPECT_GT(rt.instances, 100u);
    EXPECT_LT(rt.max_center_error_px, 1e-9);
  }
}

TEST(SynthConfig, Validation) {
  SynthConfig c = SynthConfig::defaults(Task::Detection);
  c.scale_modes = {{28.0, 0.2, 0.5}, {8.0, 0.2, 0.5}};
  EXPECT_THROW(c.validate(), ValidationError);
  c = SynthConfig::defaults(Task::Detection);
  c.scale_modes[0].weight = 0.6;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SynthConfig::defaults(Task::Detection);
  c.height = 62;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SynthConfig::defaults(Task::Pose);
  c.front_prior = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_THROW(gen_detection_scene(SynthConfig::defaults(Task::Pose), 1), ValidationError);
}

}  // namespace
}  // namespace mdn
