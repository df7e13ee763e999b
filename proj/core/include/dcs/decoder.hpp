#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dcs/conv.hpp"
#include "dcs/fusion.hpp"
#include "dcs/geometry.hpp"
#include "dcs/tensor.hpp"

namespace dcs {

struct DepthRange {
  double min_depth = 0.1;
  double max_depth = 100.0;

  void validate() const;
};

// One DcS-D decoding level: decoder-path block, encoder enhancement,
// merged decode, channel squeeze and depth head.
struct DcsdLevelParams {
  ConvKernel dec_dcsc;   // 3x3 DcSConv on the previous decoder feature
  ConvKernel dec_conv;   // 3x3 standard conv on the previous decoder feature
  DcsfParams dec_fuse;
  ConvKernel enc_dcsc;   // 3x3 DcSConv on the encoder feature (out == enc channels)
  DcsfParams enc_fuse;
  ConvKernel merge_dcsc; // 3x3 DcSConv on the merged feature
  ConvKernel merge_conv; // 3x3 standard conv on the merged feature
  DcsfParams merge_fuse;
  ConvKernel squeeze;    // 1x1 channel squeeze
  ConvKernel depth_head; // 3x3, squeeze-out -> 1

  void validate(int prev_channels, int enc_channels) const;
};

struct DecoderParams {
  ConvKernel top_conv;        // plain 3x3 on the coarsest encoder feature
  ConvKernel top_depth_head;  // 3x3, top channels -> 1
  std::array<DcsdLevelParams, 4> levels;  // level 3 (coarsest DcS-D) .. level 0
};

struct DecoderConfig {
  ScaleConversion conversion;
  DepthRange range;
  // When unset, the reference depth is recomputed per guiding map as its mean.
  std::optional<double> reference_depth_override;
};

// Sigmoid-disparity depth head: d = sigmoid(head(feature));
// depth = 1 / (1/max + (1/min - 1/max) * d), always within the range.
Tensor4 feature_to_depth(const Tensor4& feature, const ConvKernel& head, const DepthRange& range);

struct DcsdLevelOutput {
  Tensor4 f_dec;
  Tensor4 depth_pred;
};

// One DcS-D level:
//   F_s_fdec = DcS-F(DcSConv(f_dec_prev), Conv(f_dec_prev), scale_low)
//   F_s_enc  = DcS-F(DcSConv(f_enc), f_enc, scale_high)
//   F''      = C[upsample2(F_s_fdec), F_s_enc]
//   F_s_dec  = DcS-F(DcSConv(F''), Conv(F''), scale_high)
//   f_dec    = squeeze(F_s_dec); depth_pred = feature_to_depth(f_dec)
DcsdLevelOutput dcsd_decode_level(const Tensor4& f_dec_prev, const Tensor4& f_enc,
                                  const ScaleMap& scale_low, const ScaleMap& scale_high,
                                  const DcsdLevelParams& params, const DepthRange& range);

// Inspection hook: captures the per-step guiding scale maps and
// optionally replaces the prediction at one pyramid index (0 =
// coarsest) right after it is produced, so the self-guidance wiring
// can be probed with a synthetic prediction.
struct DecoderProbe {
  std::optional<std::pair<int, Tensor4>> inject_depth;
  std::vector<ScaleMap> scale_low;   // one per DcS-D step (level 3..0)
  std::vector<ScaleMap> scale_high;
};

// Progressive multi-level decoder. enc_features holds 5 levels,
// coarsest first; each level doubles spatially. prior_depth, when
// given, supplies the guiding depth per level (same order, pre-resized);
// otherwise the previous level's prediction guides the next (upsampled
// bilinearly for the high-resolution map). Returns the 5 depth maps,
// coarsest first; the final output is the last one.
std::vector<Tensor4> decoder_forward(const std::vector<Tensor4>& enc_features,
                                     const DecoderParams& params, const DecoderConfig& config,
                                     const std::optional<std::vector<Tensor4>>& prior_depth = {},
                                     DecoderProbe* probe = nullptr);

struct DecoderGrads {
  DecoderParams params;                // gradient values, same shapes
  std::vector<Tensor4> enc_features;   // gradient per encoder level
};

// Analytical gradient of mean(finest depth map) w.r.t. every decoder
// parameter and every encoder feature. Scale maps are treated as
// detached guidance: no gradient flows from them into previous-level
// depth predictions.
DecoderGrads decoder_backward(const std::vector<Tensor4>& enc_features,
                              const DecoderParams& params, const DecoderConfig& config,
                              const std::optional<std::vector<Tensor4>>& prior_depth = {});

// Seeded random parameter builders used by demos and tests.
DecoderParams make_decoder_params(const std::vector<int>& enc_channels,
                                  const std::vector<int>& dec_channels, std::uint64_t seed,
                                  double weight_scale = 0.25);

}  // namespace dcs
