#pragma once

#include <cstdint>
#include <vector>

#include "dcs/tensor.hpp"

namespace dcs {

// Procedural stand-in for a captured frame: a textured color image and
// a depth map built from a planar ramp plus object blobs at distinct
// depths. Identical seed yields an identical scene.
struct SyntheticScene {
  Tensor4 image;  // n x 3 x h x w
  Tensor4 depth;  // n x 1 x h x w, values in [d_min, d_max]
  double d_min = 0.0;
  double d_max = 0.0;
  std::uint64_t seed = 0;
};

SyntheticScene make_scene(int h, int w, std::uint64_t seed, double d_min = 2.0,
                          double d_max = 40.0);

// Seeded random 5-level feature pyramid, coarsest first; level i has
// spatial dims (base_h, base_w) * 2^i / 16 ... i.e. the finest level is
// (base_h, base_w) and each coarser level halves.
std::vector<Tensor4> make_feature_pyramid(int base_h, int base_w,
                                          const std::vector<int>& channels, std::uint64_t seed);

}  // namespace dcs
