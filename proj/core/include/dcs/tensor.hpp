#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dcs {

// Dense rank-4 feature map, NCHW row-major (w fastest).
// All library operations keep stored values finite.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w, double fill = 0.0);
  Tensor4(int n, int c, int h, int w, std::vector<double> data);

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return data_.size(); }

  double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }
  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }

  // Flat accessors for element-subset iteration (gradcheck, IO).
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_dims(const Tensor4& other) const {
    return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
  }
  std::string dims_str() const;

  bool all_finite() const;
  // Throws std::domain_error naming the first non-finite element.
  void require_finite(const char* what) const;

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

// Bilinear interpolation of the four surrounding grid values with zero
// padding: neighbors outside [0,h-1]x[0,w-1] contribute 0.
double bilinear_sample(const Tensor4& feature, int batch, int channel, double y, double x);

// Mean over all h*w positions per (n, c). Output is n x c x 1 x 1.
Tensor4 global_avg_pool(const Tensor4& feature);

enum class ChannelPoolMode { kAvg, kMax };

// Per-pixel reduction across channels. Output is n x 1 x h x w.
Tensor4 channel_pool(const Tensor4& feature, ChannelPoolMode mode);

enum class ResizeMode { kNearest, kBilinear };

// Spatial resample. Bilinear uses the align-corners-false convention:
// src = (dst + 0.5) * scale - 0.5, clamped to the valid range.
Tensor4 resize(const Tensor4& feature, int new_h, int new_w, ResizeMode mode);

}  // namespace dcs
