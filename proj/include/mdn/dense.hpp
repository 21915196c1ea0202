#pragma once

#include <cstddef>
#include <string>

#include "mdn/tensor.hpp"

namespace mdn {

enum class Task { Detection, Pose };

const char* to_string(Task task);
Task parse_task(const std::string& name);

// Input resolution and the output grid it maps to.
struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t downsample = 4;

  std::size_t out_height() const { return height / downsample; }
  std::size_t out_width() const { return width / downsample; }

  // Throws ValidationError unless height and width are positive multiples of downsample.
  static GridShape make(std::size_t height, std::size_t width, std::size_t downsample);
};

// Training targets on the output grid.
//   heatmap        [Y, H', W']  Gaussian-splatted centers, exactly 1 at center cells
//   center_offset  [2, H', W']  fractional part of center / D (x, y)
//   pose_params    [c, H', W']  regression target at positive cells
//   pose_observed  [c, H', W']  1 where the coordinate is annotated
//   positive_mask  [H', W']     1 at center cells
struct DenseTargets {
  Tensor heatmap;
  Tensor center_offset;
  Tensor pose_params;
  Tensor pose_observed;
  Tensor positive_mask;

  std::size_t positives() const;
};

}  // namespace mdn
