#include "dcs/scene.hpp"

#include <cmath>
#include <stdexcept>

#include "dcs/rng.hpp"

namespace dcs {

SyntheticScene make_scene(int h, int w, std::uint64_t seed, double d_min, double d_max) {
  // d_min == d_max yields a constant-depth scene (useful for reduction demos)
  if (!(0.0 < d_min && d_min <= d_max)) throw std::domain_error("make_scene: bad depth range");
  Rng rng = Rng(seed).split(0x7363656e65ULL);

  SyntheticScene scene;
  scene.seed = seed;
  scene.d_min = d_min;
  scene.d_max = d_max;
  scene.image = Tensor4(1, 3, h, w);
  scene.depth = Tensor4(1, 1, h, w);

  // Ground plane: depth ramps from far (top) to near (bottom).
  for (int y = 0; y < h; ++y) {
    const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    const double row_depth = d_max - (d_max - d_min) * 0.8 * t;
    for (int x = 0; x < w; ++x) scene.depth.at(0, 0, y, x) = row_depth;
  }

  // Object blobs at distinct depths.
  const int n_blobs = 4;
  for (int b = 0; b < n_blobs; ++b) {
    const double cy = rng.uniform(0.2, 0.8) * h;
    const double cx = rng.uniform(0.15, 0.85) * w;
    const double radius = rng.uniform(0.08, 0.2) * std::min(h, w);
    const double blob_depth = rng.uniform(d_min, std::max(d_min, 0.6 * d_max));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dy = y - cy, dx = x - cx;
        if (dy * dy + dx * dx <= radius * radius)
          scene.depth.at(0, 0, y, x) = std::min(scene.depth.at(0, 0, y, x), blob_depth);
      }
  }

  // Texture: smooth sinusoid mix plus noise, per channel.
  for (int c = 0; c < 3; ++c) {
    const double fy = rng.uniform(0.03, 0.15);
    const double fx = rng.uniform(0.03, 0.15);
    const double phase = rng.uniform(0.0, 6.283);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        scene.image.at(0, c, y, x) =
            0.5 + 0.35 * std::sin(fy * y + fx * x + phase) + 0.1 * (rng.next_double() - 0.5);
  }
  return scene;
}

std::vector<Tensor4> make_feature_pyramid(int base_h, int base_w,
                                          const std::vector<int>& channels, std::uint64_t seed) {
  if (channels.size() != 5)
    throw std::invalid_argument("make_feature_pyramid: need 5 channel widths");
  if (base_h % 16 != 0 || base_w % 16 != 0)
    throw std::invalid_argument("make_feature_pyramid: base dims must be multiples of 16");
  Rng rng = Rng(seed).split(0x707972616d6964ULL);

  std::vector<Tensor4> pyramid;
  for (int level = 0; level < 5; ++level) {
    const int div = 16 >> level;  // 16, 8, 4, 2, 1
    Tensor4 f(1, channels[level], base_h / div, base_w / div);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(-1.0, 1.0);
    pyramid.push_back(std::move(f));
  }
  return pyramid;
}

}  // namespace dcs
