#pragma once

#include "dcs/conv.hpp"
#include "dcs/geometry.hpp"
#include "dcs/tensor.hpp"

namespace dcs {

// Parameter bundle for the DcS-F block fusing DcSConv features with
// standard-convolution features under scale-conditioned channel and
// spatial attention. C is the per-branch channel width, so the
// concatenated feature U carries 2C channels.
struct DcsfParams {
  ConvKernel inject_c;      // 1x1, 2C+1 -> 2C (scale injection, channel path)
  ConvKernel se_reduce;     // 1x1, 2C -> bottleneck
  ConvKernel se_expand;     // 1x1, bottleneck -> 2C
  ConvKernel inject_s;      // 1x1, 2C+1 -> 2C (scale injection, spatial path)
  ConvKernel spatial_conv;  // 7x7, 2 -> 1, padding 3
  ConvKernel out_proj;      // 1x1, 2C -> C_out

  // Zero-initialized bundle; bottleneck = max(4, 2C / reduction).
  static DcsfParams make(int branch_channels, int out_channels = -1, int reduction = 16);

  void validate(int branch_channels) const;
  int out_channels() const { return out_proj.out_channels; }
};

// Squeeze-excitation channel weights M_c in (0,1), n x 2C x 1 x 1:
// global average pool -> bottleneck -> relu -> expansion -> sigmoid.
Tensor4 se_channel_attention(const Tensor4& feature, const ConvKernel& se_reduce,
                             const ConvKernel& se_expand);

// Spatial weights M_s in (0,1), n x 1 x h x w:
// F' = inject_s(C[u_v, s_u]); M_s = sigmoid(7x7 conv of C[avg, max] channel pools).
Tensor4 dcsf_spatial_attention(const Tensor4& u_v, const Tensor4& s_u, const DcsfParams& params);

// Full DcS-F:
//   U = C[f_dcsc, f_c]; M_c from the channel path on C[U, S_U];
//   U_v = M_c (*) U; M_s from the spatial path on C[U_v, S_U];
//   F_s = out_proj(M_c (*) C[M_s (*) f_dcsc, f_c] + U).
Tensor4 dcsf_forward(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                     const DcsfParams& params);

struct DcsfGrads {
  Tensor4 grad_f_dcsc;
  Tensor4 grad_f_c;
  DcsfParams grad_params;  // same shapes, gradient values
};

// Analytical gradients of dcsf_forward w.r.t. both feature inputs and
// every parameter. The scale map is treated as given.
DcsfGrads dcsf_backward(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                        const DcsfParams& params, const Tensor4& grad_output);

// Channel helpers shared with the decoder.
Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);
Tensor4 slice_channels(const Tensor4& t, int c_begin, int c_end);

}  // namespace dcs
