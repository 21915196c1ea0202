#pragma once

// Decoding dense outputs into detections, COCO-style AP with IoU or OKS
// matching, and per-component statistics of trained mixture heads.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdn/network.hpp"
#include "mdn/synthdata.hpp"

namespace mdn {

enum class DecodeMode { MaxComponent, MixtureMean };
const char* to_string(DecodeMode mode);
DecodeMode parse_decode_mode(const std::string& name);

struct DecodeOptions {
  Task task = Task::Detection;
  DecodeMode mode = DecodeMode::MaxComponent;
  std::size_t top_k = 100;
  double threshold = 0.1;
};

struct Box {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;  // top-left corner and size, pixels
};

struct Detection {
  std::size_t image_id = 0;
  double score = 0.0;
  std::size_t class_id = 0;
  std::size_t cell_y = 0, cell_x = 0;
  double cx = 0.0, cy = 0.0;       // refined center, pixels
  std::vector<double> params;      // regression output in grid units
  Box box;                         // detection: center and (w, h) * D
  std::vector<double> keypoints;   // pose: (x0, y0, ...) pixels
  std::size_t component = 0;       // argmax alpha at the peak cell
  std::vector<double> alpha;
  std::vector<std::array<double, 2>> sigma;
};

// Peaks are 3x3 local maxima with score >= threshold, best top_k kept,
// sorted by score (ties by class, row, column).
std::vector<Detection> decode(const Tensor& heatmap, const Tensor& offset, const MixtureField& field,
                              std::size_t downsample, const DecodeOptions& options);

// Ground truth in the same pixel frame as detections.
struct GroundTruth {
  std::size_t image_id = 0;
  std::size_t class_id = 0;
  Box box;
  std::vector<double> keypoints;
  std::vector<bool> visible;  // per keypoint
  double area = 0.0;          // pixels^2, used by OKS
};

GroundTruth ground_truth_of(const Instance& inst, std::size_t image_id, Task task, std::size_t downsample);

double iou(const Box& a, const Box& b);

// Mean over visible keypoints of exp(-d^2 / (2 area k^2)). `subset` limits
// the keypoints considered; empty means all. Throws when none is visible.
double oks(std::span<const double> pred, std::span<const double> gt, const std::vector<bool>& visible,
           std::span<const double> constants, double area, std::span<const std::size_t> subset = {});

// Generic matching problem; detections need not be pre-sorted.
struct MatchProblem {
  struct Det {
    std::size_t image_id;
    std::size_t class_id;
    double score;
  };
  struct Gt {
    std::size_t image_id;
    std::size_t class_id;
    bool ignore = false;  // matches to it count neither as TP nor FP
  };
  std::vector<Det> dets;
  std::vector<Gt> gts;
  std::function<double(std::size_t det, std::size_t gt)> similarity;
};

inline constexpr std::size_t kRecallPoints = 101;

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<double> ap_per_threshold;
  double ap = 0.0;
  std::optional<double> ap50, ap75;
  // 101-point interpolated precision per threshold (averaged over classes).
  std::vector<std::vector<double>> precision;
  std::size_t detections = 0;
  std::size_t ground_truth = 0;
  // Set when detections exist for a class without ground truth (AP 0 by convention).
  bool empty_ground_truth = false;
};

std::vector<double> coco_thresholds();
EvalReport average_precision(const MatchProblem& problem, const std::vector<double>& thresholds);

EvalReport evaluate_boxes(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                          const std::vector<double>& thresholds = coco_thresholds());
EvalReport evaluate_keypoints(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                              std::span<const double> constants, std::span<const std::size_t> subset = {},
                              const std::vector<double>& thresholds = coco_thresholds());

struct KeypointSubset {
  std::string name;
  std::vector<std::size_t> keypoints;
};
std::vector<KeypointSubset> default_keypoint_subsets();

struct SubsetReport {
  std::string name;
  EvalReport report;
};
std::vector<SubsetReport> fine_grained_eval(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                            std::span<const double> constants,
                                            const std::vector<KeypointSubset>& subsets);

// Detection paired with the ground-truth instance it was assigned to.
struct MatchedDetection {
  Detection det;
  Instance gt;
};

// Greedy by score: each detection takes the nearest unmatched instance of
// its image whose center lies within `radius_px`.
std::vector<MatchedDetection> match_to_instances(const std::vector<Detection>& dets,
                                                 const std::vector<std::vector<Instance>>& instances_per_image,
                                                 double radius_px);

double pearson(std::span<const double> x, std::span<const double> y);

struct ComponentStats {
  std::size_t components = 0;
  std::size_t detections = 0;
  std::vector<double> prediction_rate;
  std::vector<std::size_t> counts;
  std::vector<double> sigma_x_mean, sigma_x_std, sigma_y_mean, sigma_y_std;

  // Detection: components ranked by mean predicted diagonal (rank 0 = smallest).
  std::vector<double> mean_predicted_diagonal;
  std::vector<std::size_t> rank;
  std::optional<double> scale_correlation;  // undefined with < 2 used components
  std::vector<std::vector<double>> gt_diagonals;  // per component, for histograms

  // Pose: fraction of positive offsets per component, split by keypoint side.
  std::vector<double> positive_x_left, positive_x_right, positive_y_left, positive_y_right;
  // viewpoint_counts[m] = {front, back}
  std::vector<std::array<std::size_t, 2>> viewpoint_counts;
  // Best one-to-one component -> viewpoint mapping (M >= 2).
  std::optional<double> viewpoint_agreement;
  std::optional<std::size_t> front_component, back_component;
  std::vector<double> mean_sigma;  // mean of (sigma_x + sigma_y) / 2 per component
};

ComponentStats analyze_components(const std::vector<MatchedDetection>& matched, std::size_t components, Task task,
                                  std::size_t downsample);

}  // namespace mdn
