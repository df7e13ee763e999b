#pragma once

#include "dcs/tensor.hpp"

namespace dcs {

struct CameraIntrinsics {
  double focal_length = 700.0;  // pixels, > 0
};

// Depth-to-filter-size conversion parameters. A depth equal to
// reference_depth maps to base_kernel; converted sizes are clamped
// to [scale_min, scale_max].
struct ScaleConversion {
  double base_kernel = 3.0;      // pixels
  double reference_depth = 1.0;  // scene units
  double scale_min = 1.0;        // pixels
  double scale_max = 9.0;        // pixels

  void validate() const;
};

// Per-pixel depth-converted filter size k_d plus the conversion that
// produced it. values is n x 1 x h x w, every value in
// [conversion.scale_min, conversion.scale_max].
struct ScaleMap {
  Tensor4 values;
  ScaleConversion conversion;
};

// Image length of a 3D length seen at a given depth: real_length * f / depth.
double project_length(double real_length, const CameraIntrinsics& intr, double depth);

// Image length after a depth change: image_length * depth_from / depth_to.
double rescale_length(double image_length, double depth_from, double depth_to);

// clamp(base_kernel * reference_depth / depth, scale_min, scale_max)
double depth_to_scale(double depth, const ScaleConversion& conv);

// Elementwise depth_to_scale over an n x 1 x h x w depth map.
ScaleMap depth_map_to_scale_map(const Tensor4& depth, const ScaleConversion& conv);

// Arithmetic mean of all depth values; the default reference depth.
double reference_depth_from_map(const Tensor4& depth);

// Scale-difference map S_U = (k_d - 3) / 3, roughly in (-1, 1).
Tensor4 normalize_scale_map(const ScaleMap& scale);

}  // namespace dcs
