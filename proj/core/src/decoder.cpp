#include "dcs/decoder.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dcs/rng.hpp"

namespace dcs {

namespace {

[[noreturn]] void stage_error(const char* stage, const std::string& detail) {
  std::ostringstream os;
  os << "dcsd_decode_level[" << stage << "]: " << detail;
  throw std::invalid_argument(os.str());
}

// Gradient of resize(..., kNearest): accumulate each destination pixel
// into its unique source pixel.
Tensor4 resize_nearest_backward(const Tensor4& grad_dst, int src_h, int src_w) {
  Tensor4 grad_src(grad_dst.n(), grad_dst.c(), src_h, src_w);
  const double sy = static_cast<double>(src_h) / grad_dst.h();
  const double sx = static_cast<double>(src_w) / grad_dst.w();
  for (int n = 0; n < grad_dst.n(); ++n)
    for (int c = 0; c < grad_dst.c(); ++c)
      for (int y = 0; y < grad_dst.h(); ++y)
        for (int x = 0; x < grad_dst.w(); ++x) {
          const int syi = std::min(static_cast<int>(std::floor(y * sy)), src_h - 1);
          const int sxi = std::min(static_cast<int>(std::floor(x * sx)), src_w - 1);
          grad_src.at(n, c, syi, sxi) += grad_dst.at(n, c, y, x);
        }
  return grad_src;
}

ScaleMap guiding_scale_map(const Tensor4& guide, const DecoderConfig& config) {
  ScaleConversion conv = config.conversion;
  conv.reference_depth = config.reference_depth_override
                             ? *config.reference_depth_override
                             : reference_depth_from_map(guide);
  return depth_map_to_scale_map(guide, conv);
}

ConvKernel random_kernel(int out_c, int in_c, int k, Rng& rng, double scale) {
  ConvKernel kernel(out_c, in_c, k);
  const double bound = scale / std::sqrt(static_cast<double>(in_c) * k * k);
  for (auto& w : kernel.weights) w = rng.uniform(-bound, bound);
  for (auto& b : kernel.bias) b = rng.uniform(-0.1 * bound, 0.1 * bound);
  return kernel;
}

DcsfParams random_dcsf(int branch_channels, int out_channels, Rng& rng, double scale) {
  DcsfParams p = DcsfParams::make(branch_channels, out_channels);
  auto fill = [&](ConvKernel& k) {
    const double bound = scale / std::sqrt(static_cast<double>(k.in_channels) * k.size * k.size);
    for (auto& w : k.weights) w = rng.uniform(-bound, bound);
    for (auto& b : k.bias) b = rng.uniform(-0.1 * bound, 0.1 * bound);
  };
  fill(p.inject_c);
  fill(p.se_reduce);
  fill(p.se_expand);
  fill(p.inject_s);
  fill(p.spatial_conv);
  fill(p.out_proj);
  return p;
}

}  // namespace

void DepthRange::validate() const {
  if (!(0.0 < min_depth && min_depth < max_depth))
    throw std::domain_error("DepthRange: require 0 < min_depth < max_depth");
}

void DcsdLevelParams::validate(int prev_channels, int enc_channels) const {
  dec_dcsc.validate(prev_channels);
  dec_conv.validate(prev_channels);
  if (dec_dcsc.out_channels != dec_conv.out_channels)
    throw std::invalid_argument("DcsdLevelParams: dec branch widths differ");
  dec_fuse.validate(dec_dcsc.out_channels);
  enc_dcsc.validate(enc_channels);
  if (enc_dcsc.out_channels != enc_channels)
    throw std::invalid_argument("DcsdLevelParams: enc_dcsc must preserve encoder channels");
  enc_fuse.validate(enc_channels);
  const int merged = dec_fuse.out_channels() + enc_fuse.out_channels();
  merge_dcsc.validate(merged);
  merge_conv.validate(merged);
  if (merge_dcsc.out_channels != merge_conv.out_channels)
    throw std::invalid_argument("DcsdLevelParams: merge branch widths differ");
  merge_fuse.validate(merge_dcsc.out_channels);
  squeeze.validate(merge_fuse.out_channels());
  depth_head.validate(squeeze.out_channels);
  if (depth_head.out_channels != 1)
    throw std::invalid_argument("DcsdLevelParams: depth head must emit one channel");
}

Tensor4 feature_to_depth(const Tensor4& feature, const ConvKernel& head,
                         const DepthRange& range) {
  range.validate();
  Tensor4 pre = conv2d_standard(feature, head);
  const double min_disp = 1.0 / range.max_depth;
  const double max_disp = 1.0 / range.min_depth;
  Tensor4 depth = pre;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double d = 1.0 / (1.0 + std::exp(-pre[i]));
    depth[i] = 1.0 / (min_disp + (max_disp - min_disp) * d);
  }
  return depth;
}

DcsdLevelOutput dcsd_decode_level(const Tensor4& f_dec_prev, const Tensor4& f_enc,
                                  const ScaleMap& scale_low, const ScaleMap& scale_high,
                                  const DcsdLevelParams& params, const DepthRange& range) {
  if (f_enc.h() != 2 * f_dec_prev.h() || f_enc.w() != 2 * f_dec_prev.w())
    stage_error("input", "encoder feature " + f_enc.dims_str() + " must be 2x decoder feature " +
                             f_dec_prev.dims_str());
  if (scale_low.values.h() != f_dec_prev.h() || scale_low.values.w() != f_dec_prev.w())
    stage_error("scale_low", "dims " + scale_low.values.dims_str() + " vs " +
                                 f_dec_prev.dims_str());
  if (scale_high.values.h() != f_enc.h() || scale_high.values.w() != f_enc.w())
    stage_error("scale_high", "dims " + scale_high.values.dims_str() + " vs " + f_enc.dims_str());
  params.validate(f_dec_prev.c(), f_enc.c());

  Tensor4 f_s_fdec = dcsf_forward(dcsconv_forward(f_dec_prev, params.dec_dcsc, scale_low),
                                  conv2d_standard(f_dec_prev, params.dec_conv), scale_low,
                                  params.dec_fuse);
  Tensor4 f_s_enc = dcsf_forward(dcsconv_forward(f_enc, params.enc_dcsc, scale_high), f_enc,
                                 scale_high, params.enc_fuse);
  Tensor4 merged = concat_channels(resize(f_s_fdec, f_enc.h(), f_enc.w(), ResizeMode::kNearest),
                                   f_s_enc);
  Tensor4 f_s_dec = dcsf_forward(dcsconv_forward(merged, params.merge_dcsc, scale_high),
                                 conv2d_standard(merged, params.merge_conv), scale_high,
                                 params.merge_fuse);
  Tensor4 f_dec = conv2d_standard(f_s_dec, params.squeeze);
  Tensor4 depth = feature_to_depth(f_dec, params.depth_head, range);
  return DcsdLevelOutput{std::move(f_dec), std::move(depth)};
}

std::vector<Tensor4> decoder_forward(const std::vector<Tensor4>& enc_features,
                                     const DecoderParams& params, const DecoderConfig& config,
                                     const std::optional<std::vector<Tensor4>>& prior_depth,
                                     DecoderProbe* probe) {
  if (enc_features.size() != 5)
    throw std::invalid_argument("decoder_forward: expected 5 encoder levels, got " +
                                std::to_string(enc_features.size()));
  for (int i = 1; i < 5; ++i) {
    if (enc_features[i].h() != 2 * enc_features[i - 1].h() ||
        enc_features[i].w() != 2 * enc_features[i - 1].w())
      throw std::invalid_argument("decoder_forward: encoder level " + std::to_string(4 - i) +
                                  " does not double level " + std::to_string(5 - i));
  }
  if (prior_depth) {
    if (prior_depth->size() != 5)
      throw std::invalid_argument("decoder_forward: prior depth must supply 5 levels");
    for (int i = 0; i < 5; ++i) {
      const Tensor4& p = (*prior_depth)[i];
      if (p.c() != 1 || p.h() != enc_features[i].h() || p.w() != enc_features[i].w())
        throw std::invalid_argument("decoder_forward: prior depth level " + std::to_string(4 - i) +
                                    " dims " + p.dims_str() + " do not match encoder level");
    }
  }
  config.range.validate();

  std::vector<Tensor4> depths;
  depths.reserve(5);

  auto maybe_inject = [&](std::vector<Tensor4>& preds) {
    if (probe && probe->inject_depth &&
        probe->inject_depth->first == static_cast<int>(preds.size()) - 1)
      preds.back() = probe->inject_depth->second;
  };

  Tensor4 f_dec = conv2d_standard(enc_features[0], params.top_conv);
  depths.push_back(feature_to_depth(f_dec, params.top_depth_head, config.range));
  maybe_inject(depths);

  // Levels 3..0 map to enc_features[1..4] and params.levels[0..3].
  for (int step = 0; step < 4; ++step) {
    const Tensor4& f_enc = enc_features[step + 1];
    const Tensor4& guide_low = prior_depth ? (*prior_depth)[step] : depths.back();
    const Tensor4 guide_high = prior_depth
                                   ? (*prior_depth)[step + 1]
                                   : resize(depths.back(), f_enc.h(), f_enc.w(),
                                            ResizeMode::kBilinear);
    const ScaleMap scale_low = guiding_scale_map(guide_low, config);
    const ScaleMap scale_high = guiding_scale_map(guide_high, config);
    if (probe) {
      probe->scale_low.push_back(scale_low);
      probe->scale_high.push_back(scale_high);
    }

    DcsdLevelOutput out = dcsd_decode_level(f_dec, f_enc, scale_low, scale_high,
                                            params.levels[step], config.range);
    f_dec = std::move(out.f_dec);
    depths.push_back(std::move(out.depth_pred));
    maybe_inject(depths);
  }
  return depths;
}

namespace {

struct LevelGrads {
  DcsdLevelParams params;
  Tensor4 grad_f_dec_prev;
  Tensor4 grad_f_enc;
};

// Backward of one DcS-D level for upstream gradients on its decoded
// feature and its depth prediction. Recomputes the forward intermediates.
LevelGrads dcsd_level_backward(const Tensor4& f_dec_prev, const Tensor4& f_enc,
                               const ScaleMap& scale_low, const ScaleMap& scale_high,
                               const DcsdLevelParams& params, const DepthRange& range,
                               const Tensor4& grad_f_dec, const Tensor4& grad_depth) {
  // Forward intermediates.
  Tensor4 dec_a = dcsconv_forward(f_dec_prev, params.dec_dcsc, scale_low);
  Tensor4 dec_b = conv2d_standard(f_dec_prev, params.dec_conv);
  Tensor4 f_s_fdec = dcsf_forward(dec_a, dec_b, scale_low, params.dec_fuse);
  Tensor4 enc_a = dcsconv_forward(f_enc, params.enc_dcsc, scale_high);
  Tensor4 f_s_enc = dcsf_forward(enc_a, f_enc, scale_high, params.enc_fuse);
  Tensor4 up = resize(f_s_fdec, f_enc.h(), f_enc.w(), ResizeMode::kNearest);
  Tensor4 merged = concat_channels(up, f_s_enc);
  Tensor4 mrg_a = dcsconv_forward(merged, params.merge_dcsc, scale_high);
  Tensor4 mrg_b = conv2d_standard(merged, params.merge_conv);
  Tensor4 f_s_dec = dcsf_forward(mrg_a, mrg_b, scale_high, params.merge_fuse);
  Tensor4 f_dec = conv2d_standard(f_s_dec, params.squeeze);
  Tensor4 head_pre = conv2d_standard(f_dec, params.depth_head);

  LevelGrads g;

  // depth = 1 / (min_disp + (max_disp - min_disp) * sigmoid(head_pre))
  const double min_disp = 1.0 / range.max_depth;
  const double max_disp = 1.0 / range.min_depth;
  Tensor4 g_head_pre = head_pre;
  for (std::size_t i = 0; i < head_pre.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-head_pre[i]));
    const double disp = min_disp + (max_disp - min_disp) * s;
    g_head_pre[i] = grad_depth[i] * (-(max_disp - min_disp) * s * (1.0 - s) / (disp * disp));
  }
  ConvGrads cg = conv2d_backward(f_dec, params.depth_head, g_head_pre);
  g.params.depth_head = std::move(cg.grad_kernel);
  Tensor4 g_f_dec = std::move(cg.grad_input);
  for (std::size_t i = 0; i < g_f_dec.size(); ++i) g_f_dec[i] += grad_f_dec[i];

  cg = conv2d_backward(f_s_dec, params.squeeze, g_f_dec);
  g.params.squeeze = std::move(cg.grad_kernel);

  DcsfGrads fg = dcsf_backward(mrg_a, mrg_b, scale_high, params.merge_fuse, cg.grad_input);
  g.params.merge_fuse = std::move(fg.grad_params);
  DcsconvGrads dg = dcsconv_backward(merged, params.merge_dcsc, scale_high, fg.grad_f_dcsc,
                                     /*propagate_scale=*/false);
  g.params.merge_dcsc = std::move(dg.grad_kernel);
  cg = conv2d_backward(merged, params.merge_conv, fg.grad_f_c);
  g.params.merge_conv = std::move(cg.grad_kernel);
  Tensor4 g_merged = std::move(dg.grad_input);
  for (std::size_t i = 0; i < g_merged.size(); ++i) g_merged[i] += cg.grad_input[i];

  Tensor4 g_up = slice_channels(g_merged, 0, up.c());
  Tensor4 g_f_s_enc = slice_channels(g_merged, up.c(), merged.c());
  Tensor4 g_f_s_fdec = resize_nearest_backward(g_up, f_s_fdec.h(), f_s_fdec.w());

  fg = dcsf_backward(enc_a, f_enc, scale_high, params.enc_fuse, g_f_s_enc);
  g.params.enc_fuse = std::move(fg.grad_params);
  g.grad_f_enc = std::move(fg.grad_f_c);
  dg = dcsconv_backward(f_enc, params.enc_dcsc, scale_high, fg.grad_f_dcsc, false);
  g.params.enc_dcsc = std::move(dg.grad_kernel);
  for (std::size_t i = 0; i < g.grad_f_enc.size(); ++i) g.grad_f_enc[i] += dg.grad_input[i];

  fg = dcsf_backward(dec_a, dec_b, scale_low, params.dec_fuse, g_f_s_fdec);
  g.params.dec_fuse = std::move(fg.grad_params);
  dg = dcsconv_backward(f_dec_prev, params.dec_dcsc, scale_low, fg.grad_f_dcsc, false);
  g.params.dec_dcsc = std::move(dg.grad_kernel);
  cg = conv2d_backward(f_dec_prev, params.dec_conv, fg.grad_f_c);
  g.params.dec_conv = std::move(cg.grad_kernel);
  g.grad_f_dec_prev = std::move(dg.grad_input);
  for (std::size_t i = 0; i < g.grad_f_dec_prev.size(); ++i)
    g.grad_f_dec_prev[i] += cg.grad_input[i];

  return g;
}

}  // namespace

DecoderGrads decoder_backward(const std::vector<Tensor4>& enc_features,
                              const DecoderParams& params, const DecoderConfig& config,
                              const std::optional<std::vector<Tensor4>>& prior_depth) {
  // Forward, keeping per-level inputs and scale maps.
  std::vector<Tensor4> depths = decoder_forward(enc_features, params, config, prior_depth);

  std::vector<Tensor4> f_decs;  // decoded feature entering each DcS-D level
  f_decs.push_back(conv2d_standard(enc_features[0], params.top_conv));
  std::vector<ScaleMap> lows, highs;
  for (int step = 0; step < 4; ++step) {
    const Tensor4& f_enc = enc_features[step + 1];
    const Tensor4& guide_low = prior_depth ? (*prior_depth)[step] : depths[step];
    const Tensor4 guide_high = prior_depth
                                   ? (*prior_depth)[step + 1]
                                   : resize(depths[step], f_enc.h(), f_enc.w(),
                                            ResizeMode::kBilinear);
    lows.push_back(guiding_scale_map(guide_low, config));
    highs.push_back(guiding_scale_map(guide_high, config));
    DcsdLevelOutput out =
        dcsd_decode_level(f_decs.back(), f_enc, lows.back(), highs.back(), params.levels[step],
                          config.range);
    f_decs.push_back(std::move(out.f_dec));
  }

  DecoderGrads g;
  g.enc_features.assign(5, Tensor4());

  // Loss = mean of the finest depth map.
  const Tensor4& finest = depths.back();
  Tensor4 g_depth(finest.n(), 1, finest.h(), finest.w(), 1.0 / finest.size());
  Tensor4 g_f_dec(f_decs[4].n(), f_decs[4].c(), f_decs[4].h(), f_decs[4].w());

  for (int step = 3; step >= 0; --step) {
    LevelGrads lg =
        dcsd_level_backward(f_decs[step], enc_features[step + 1], lows[step], highs[step],
                            params.levels[step], config.range, g_f_dec, g_depth);
    g.params.levels[step] = std::move(lg.params);
    g.enc_features[step + 1] = std::move(lg.grad_f_enc);
    g_f_dec = std::move(lg.grad_f_dec_prev);
    // Coarser depth predictions feed only the detached scale maps.
    g_depth = Tensor4(f_decs[step].n(), 1, f_decs[step].h(), f_decs[step].w());
  }

  // Top block: f_dec^4 = top_conv(enc^4); depth^4 head sees zero grad.
  ConvGrads cg = conv2d_backward(f_decs[0], params.top_depth_head,
                                 Tensor4(f_decs[0].n(), 1, f_decs[0].h(), f_decs[0].w()));
  g.params.top_depth_head = std::move(cg.grad_kernel);
  cg = conv2d_backward(enc_features[0], params.top_conv, g_f_dec);
  g.params.top_conv = std::move(cg.grad_kernel);
  g.enc_features[0] = std::move(cg.grad_input);
  return g;
}

DecoderParams make_decoder_params(const std::vector<int>& enc_channels,
                                  const std::vector<int>& dec_channels, std::uint64_t seed,
                                  double weight_scale) {
  if (enc_channels.size() != 5 || dec_channels.size() != 5)
    throw std::invalid_argument("make_decoder_params: need 5 encoder and 5 decoder widths");
  Rng rng = Rng(seed).split(0x6465636f64657221ULL);

  DecoderParams p;
  p.top_conv = random_kernel(dec_channels[0], enc_channels[0], 3, rng, weight_scale);
  p.top_depth_head = random_kernel(1, dec_channels[0], 3, rng, weight_scale);
  for (int step = 0; step < 4; ++step) {
    const int prev_c = dec_channels[step];
    const int enc_c = enc_channels[step + 1];
    const int out_c = dec_channels[step + 1];
    DcsdLevelParams& lvl = p.levels[step];
    lvl.dec_dcsc = random_kernel(prev_c, prev_c, 3, rng, weight_scale);
    lvl.dec_conv = random_kernel(prev_c, prev_c, 3, rng, weight_scale);
    lvl.dec_fuse = random_dcsf(prev_c, prev_c, rng, weight_scale);
    lvl.enc_dcsc = random_kernel(enc_c, enc_c, 3, rng, weight_scale);
    lvl.enc_fuse = random_dcsf(enc_c, enc_c, rng, weight_scale);
    const int merged = prev_c + enc_c;
    lvl.merge_dcsc = random_kernel(merged, merged, 3, rng, weight_scale);
    lvl.merge_conv = random_kernel(merged, merged, 3, rng, weight_scale);
    lvl.merge_fuse = random_dcsf(merged, merged, rng, weight_scale);
    lvl.squeeze = random_kernel(out_c, merged, 1, rng, weight_scale);
    lvl.depth_head = random_kernel(1, out_c, 3, rng, weight_scale);
  }
  return p;
}

}  // namespace dcs
