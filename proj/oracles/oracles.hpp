#pragma once

// Independent reference computations used to cross-check the library:
// a brute-force PR-curve AP, exhaustive small matching problems, and the
// decode round-trip on ideal network outputs.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mdn/eval.hpp"

namespace mdn::oracle {

// Recomputes the greedy matching from scratch for every score cutoff and
// takes the interpolated precision as a max over cutoffs. Ignored ground
// truth is not supported.
EvalReport brute_force_average_precision(const MatchProblem& problem, const std::vector<double>& thresholds);

// A matching problem given by an explicit similarity matrix.
struct SmallCase {
  std::size_t dets = 0;
  std::size_t gts = 0;
  std::vector<double> scores;      // strictly decreasing
  std::vector<double> similarity;  // dets x gts, row-major
  MatchProblem problem() const;
  std::string describe() const;
};

// Every case, up to relabeling of ground truth, with at most `max_dets`
// detections and `max_gts` ground truths in which each detection overlaps
// at most one ground truth at one of the given levels (several detections
// may compete for the same one), plus every full similarity matrix with at
// most 6 entries. Calls `visit` for each; stops early when it returns false.
std::size_t enumerate_small_cases(std::size_t max_dets, std::size_t max_gts, const std::vector<double>& levels,
                                  const std::function<bool(const SmallCase&)>& visit);

// Result of exact AP comparison over the enumerated cases.
struct ApEquivalence {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;
};
ApEquivalence check_ap_equivalence(std::size_t max_dets = 5, std::size_t max_gts = 5);

// Dense outputs that reproduce the targets exactly: heatmap and offsets
// copied, one component whose mean is the target.
Prediction ideal_outputs(const DenseTargets& targets);

struct RoundTrip {
  std::size_t instances = 0;
  std::size_t recovered = 0;
  std::size_t spurious = 0;  // detections without an instance
  double max_center_error_px = 0.0;
  bool params_exact = true;
  std::string first_failure;
  bool ok() const { return recovered == instances && spurious == 0 && max_center_error_px < 1.0 && params_exact; }
};
RoundTrip decode_round_trip(const SynthConfig& config, std::size_t scenes, std::uint64_t seed);

}  // namespace mdn::oracle
