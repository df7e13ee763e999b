#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dcs/geometry.hpp"
#include "dcs/tensor.hpp"

namespace dcs {

// Dense convolution weight bank, out x in x size x size, odd size,
// plus a per-output-channel bias. DcSConv and conv2d with size 3 use
// the fixed 9-tap pattern (center, corners, edge centers).
struct ConvKernel {
  int out_channels = 0;
  int in_channels = 0;
  int size = 3;
  std::vector<double> weights;  // out * in * size * size
  std::vector<double> bias;     // out

  ConvKernel() = default;
  ConvKernel(int out_c, int in_c, int k);

  double w(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * size + ky) * size + kx];
  }
  double& w(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * size + ky) * size + kx];
  }

  void validate(int input_channels) const;
};

// Same-padding convolution, stride 1, zero padding (size-1)/2.
Tensor4 conv2d_standard(const Tensor4& input, const ConvKernel& kernel);

// Direct nested-loop evaluation with taps spaced `dilation` pixels
// apart and zero padding. Verification oracle; shares no code with the
// optimized paths.
Tensor4 conv2d_naive_oracle(const Tensor4& input, const ConvKernel& kernel, int dilation = 1);

// grad_input / grad_kernel of conv2d_standard given upstream grad_output.
struct ConvGrads {
  Tensor4 grad_input;
  ConvKernel grad_kernel;
};
ConvGrads conv2d_backward(const Tensor4& input, const ConvKernel& kernel,
                          const Tensor4& grad_output);

// Depth-converted-Scale Convolution: 9 taps at offsets
// ((k_d - 1) / 2) * (i, j), i, j in {-1, 0, 1}, with k_d read per
// output pixel from the scale map; fractional taps use bilinear
// interpolation with zero padding.
Tensor4 dcsconv_forward(const Tensor4& input, const ConvKernel& kernel, const ScaleMap& scale);

struct DcsconvGrads {
  Tensor4 grad_input;
  ConvKernel grad_kernel;  // weights + bias gradients
  Tensor4 grad_scale;      // n x 1 x h x w; zero when propagate_scale is false
};

// Exact analytical gradients of dcsconv_forward. propagate_scale
// selects whether grad_scale is computed (learned scale, GLSConv) or
// suppressed (depth-derived guidance treated as given).
DcsconvGrads dcsconv_backward(const Tensor4& input, const ConvKernel& kernel,
                              const ScaleMap& scale, const Tensor4& grad_output,
                              bool propagate_scale = true);

// ---- DMSF -----------------------------------------------------------------

// Three fixed-size branches (1x1, 3x3, 5x5) blended per pixel by
// Gaussian-distance softmax weights.
struct DmsfParams {
  std::array<ConvKernel, 3> branches;  // sizes 1, 3, 5
  double sigma = 10.0;

  void validate(int input_channels) const;
};

// g_i = exp(-|k_d - k_i|^2 / (2 sigma^2)); returns softmax(g).
std::array<double, 3> dmsf_weights(double k_d, const std::array<double, 3>& branch_sizes,
                                   double sigma);

Tensor4 dmsf_forward(const Tensor4& input, const DmsfParams& params, const ScaleMap& scale);

// ---- GLSConv --------------------------------------------------------------

enum class DepthToScaleMode {
  kFixed,   // Eq.-3 style conversion through a ScaleConversion
  kAffine,  // learnable gain * depth + offset
};

// Learned scale head: depth = softplus(1x1 projection) + eps, then a
// depth-to-scale transform, clamped to [scale_min, scale_max].
struct ScaleHeadParams {
  std::vector<double> proj_weights;  // in_channels
  double proj_bias = 0.0;
  DepthToScaleMode mode = DepthToScaleMode::kFixed;
  ScaleConversion conversion;  // used in kFixed mode; clamp range in both modes
  double gain = 1.0;           // kAffine
  double offset = 0.0;         // kAffine
  double eps = 1e-3;

  void validate(int input_channels) const;
};

struct GlsconvResult {
  Tensor4 output;
  ScaleMap learned_scale;
};

GlsconvResult glsconv_forward(const Tensor4& input, const ConvKernel& kernel,
                              const ScaleHeadParams& head);

struct GlsconvGrads {
  Tensor4 grad_input;
  ConvKernel grad_kernel;
  std::vector<double> grad_proj_weights;
  double grad_proj_bias = 0.0;
  double grad_gain = 0.0;    // kAffine only
  double grad_offset = 0.0;  // kAffine only
};

// End-to-end gradients of the GLSConv output, including the scale path
// through clamp, the depth-to-scale transform, softplus and the 1x1
// projection.
GlsconvGrads glsconv_backward(const Tensor4& input, const ConvKernel& kernel,
                              const ScaleHeadParams& head, const Tensor4& grad_output);

}  // namespace dcs
