#include "dcs/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace dcs {

void ScaleConversion::validate() const {
  if (base_kernel < 1.0) throw std::domain_error("ScaleConversion: base_kernel must be >= 1");
  if (!(scale_min > 0.0 && scale_min <= base_kernel && base_kernel <= scale_max))
    throw std::domain_error("ScaleConversion: require 0 < scale_min <= base_kernel <= scale_max");
  if (!(reference_depth > 0.0))
    throw std::domain_error("ScaleConversion: reference_depth must be > 0");
}

double project_length(double real_length, const CameraIntrinsics& intr, double depth) {
  if (!(intr.focal_length > 0.0)) throw std::domain_error("project_length: focal length <= 0");
  if (!(depth > 0.0)) throw std::domain_error("project_length: depth must be > 0");
  if (real_length < 0.0) throw std::domain_error("project_length: real_length must be >= 0");
  return real_length * intr.focal_length / depth;
}

double rescale_length(double image_length, double depth_from, double depth_to) {
  if (!(depth_from > 0.0 && depth_to > 0.0))
    throw std::domain_error("rescale_length: depths must be > 0");
  return image_length * depth_from / depth_to;
}

double depth_to_scale(double depth, const ScaleConversion& conv) {
  conv.validate();
  if (!(depth > 0.0)) throw std::domain_error("depth_to_scale: depth must be > 0");
  const double k = conv.base_kernel * conv.reference_depth / depth;
  return std::clamp(k, conv.scale_min, conv.scale_max);
}

ScaleMap depth_map_to_scale_map(const Tensor4& depth, const ScaleConversion& conv) {
  conv.validate();
  if (depth.c() != 1)
    throw std::invalid_argument("depth_map_to_scale_map: depth map must have one channel, got " +
                                depth.dims_str());
  Tensor4 values(depth.n(), 1, depth.h(), depth.w());
  for (int n = 0; n < depth.n(); ++n) {
    for (int y = 0; y < depth.h(); ++y) {
      for (int x = 0; x < depth.w(); ++x) {
        const double d = depth.at(n, 0, y, x);
        if (!(d > 0.0)) {
          std::ostringstream os;
          os << "depth_map_to_scale_map: non-positive depth " << d << " at (n=" << n << ",y=" << y
             << ",x=" << x << ")";
          throw std::domain_error(os.str());
        }
        values.at(n, 0, y, x) =
            std::clamp(conv.base_kernel * conv.reference_depth / d, conv.scale_min, conv.scale_max);
      }
    }
  }
  return ScaleMap{std::move(values), conv};
}

double reference_depth_from_map(const Tensor4& depth) {
  double sum = 0.0;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!(depth[i] > 0.0))
      throw std::domain_error("reference_depth_from_map: non-positive depth value");
    sum += depth[i];
  }
  return sum / static_cast<double>(depth.size());
}

Tensor4 normalize_scale_map(const ScaleMap& scale) {
  // The normalization constant stays 3 even for base_kernel != 3.
  if (scale.conversion.base_kernel != 3.0) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "dcs: normalize_scale_map uses constant 3 with base_kernel="
                << scale.conversion.base_kernel << "\n";
    }
  }
  Tensor4 out = scale.values;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - 3.0) / 3.0;
  return out;
}

}  // namespace dcs
