#pragma once

#include "dcs/conv.hpp"
#include "dcs/decoder.hpp"
#include "dcs/fusion.hpp"
#include "dcs/geometry.hpp"
#include "dcs/tensor.hpp"

namespace dcs::oracle {

// Pixel-loop DMSF reference: branch outputs via conv2d_naive_oracle,
// blended per pixel with dmsf_weights.
Tensor4 dmsf_pixel_oracle(const Tensor4& input, const DmsfParams& params, const ScaleMap& scale);

// Scalar reimplementation of the squeeze-excitation gate, sharing no
// code with fusion's path.
Tensor4 se_oracle(const Tensor4& feature, const ConvKernel& se_reduce,
                  const ConvKernel& se_expand);

// Straight-line evaluation of the full DcS-F chain with its own naive
// convolution loops.
Tensor4 dcsf_oracle(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                    const DcsfParams& params);

// The decoder with every DcSConv replaced by a standard 3x3 convolution
// and the scale maps pinned to the base kernel size. Reduction target
// for a constant guiding depth at the reference depth.
std::vector<Tensor4> decoder_forward_standard(const std::vector<Tensor4>& enc_features,
                                              const DecoderParams& params,
                                              const DecoderConfig& config);

}  // namespace dcs::oracle
