#include "dcs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dcs/parallel.hpp"

namespace dcs {

namespace {

void check_dims(int n, int c, int h, int w) {
  if (n < 1 || c < 1 || h < 1 || w < 1) {
    std::ostringstream os;
    os << "Tensor4 dims must all be >= 1, got " << n << "x" << c << "x" << h << "x" << w;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Tensor4::Tensor4(int n, int c, int h, int w, double fill) : n_(n), c_(c), h_(h), w_(w) {
  check_dims(n, c, h, w);
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

Tensor4::Tensor4(int n, int c, int h, int w, std::vector<double> data)
    : n_(n), c_(c), h_(h), w_(w), data_(std::move(data)) {
  check_dims(n, c, h, w);
  if (data_.size() != static_cast<std::size_t>(n) * c * h * w) {
    throw std::invalid_argument("Tensor4 data length does not match dims " + dims_str());
  }
}

std::string Tensor4::dims_str() const {
  std::ostringstream os;
  os << n_ << "x" << c_ << "x" << h_ << "x" << w_;
  return os.str();
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor4::require_finite(const char* what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      std::ostringstream os;
      os << what << ": non-finite value at flat index " << i;
      throw std::domain_error(os.str());
    }
  }
}

double bilinear_sample(const Tensor4& feature, int batch, int channel, double y, double x) {
  if (batch < 0 || batch >= feature.n() || channel < 0 || channel >= feature.c()) {
    std::ostringstream os;
    os << "bilinear_sample: index (" << batch << "," << channel << ") out of range for "
       << feature.dims_str();
    throw std::out_of_range(os.str());
  }
  const int h = feature.h(), w = feature.w();
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0;
  const double fx = x - x0;

  auto tap = [&](int yy, int xx) -> double {
    if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
    return feature.at(batch, channel, yy, xx);
  };

  return (1.0 - fy) * (1.0 - fx) * tap(y0, x0) + (1.0 - fy) * fx * tap(y0, x0 + 1) +
         fy * (1.0 - fx) * tap(y0 + 1, x0) + fy * fx * tap(y0 + 1, x0 + 1);
}

Tensor4 global_avg_pool(const Tensor4& feature) {
  Tensor4 out(feature.n(), feature.c(), 1, 1);
  const double inv = 1.0 / (static_cast<double>(feature.h()) * feature.w());
  for (int n = 0; n < feature.n(); ++n) {
    for (int c = 0; c < feature.c(); ++c) {
      double sum = 0.0;
      for (int y = 0; y < feature.h(); ++y)
        for (int x = 0; x < feature.w(); ++x) sum += feature.at(n, c, y, x);
      out.at(n, c, 0, 0) = sum * inv;
    }
  }
  return out;
}

Tensor4 channel_pool(const Tensor4& feature, ChannelPoolMode mode) {
  Tensor4 out(feature.n(), 1, feature.h(), feature.w());
  for (int n = 0; n < feature.n(); ++n) {
    for (int y = 0; y < feature.h(); ++y) {
      for (int x = 0; x < feature.w(); ++x) {
        if (mode == ChannelPoolMode::kAvg) {
          double sum = 0.0;
          for (int c = 0; c < feature.c(); ++c) sum += feature.at(n, c, y, x);
          out.at(n, 0, y, x) = sum / feature.c();
        } else {
          double best = feature.at(n, 0, y, x);
          for (int c = 1; c < feature.c(); ++c) best = std::max(best, feature.at(n, c, y, x));
          out.at(n, 0, y, x) = best;
        }
      }
    }
  }
  return out;
}

Tensor4 resize(const Tensor4& feature, int new_h, int new_w, ResizeMode mode) {
  if (new_h < 1 || new_w < 1) throw std::invalid_argument("resize: target dims must be >= 1");
  if (new_h == feature.h() && new_w == feature.w()) return feature;

  Tensor4 out(feature.n(), feature.c(), new_h, new_w);
  const double sy = static_cast<double>(feature.h()) / new_h;
  const double sx = static_cast<double>(feature.w()) / new_w;

  parallel_for(static_cast<std::size_t>(new_h), [&](std::size_t oy) {
    const int y = static_cast<int>(oy);
    for (int n = 0; n < feature.n(); ++n) {
      for (int c = 0; c < feature.c(); ++c) {
        for (int x = 0; x < new_w; ++x) {
          if (mode == ResizeMode::kNearest) {
            const int sy_i = std::min(static_cast<int>(std::floor(y * sy)), feature.h() - 1);
            const int sx_i = std::min(static_cast<int>(std::floor(x * sx)), feature.w() - 1);
            out.at(n, c, y, x) = feature.at(n, c, sy_i, sx_i);
          } else {
            double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, feature.h() - 1.0);
            double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, feature.w() - 1.0);
            out.at(n, c, y, x) = bilinear_sample(feature, n, c, src_y, src_x);
          }
        }
      }
    }
  });
  return out;
}

}  // namespace dcs
