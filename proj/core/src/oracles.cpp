#include "dcs/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dcs::oracle {

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Plain same-padding convolution written independently of the library path.
Tensor4 naive_conv(const Tensor4& in, const ConvKernel& k) {
  const int half = (k.size - 1) / 2;
  Tensor4 out(in.n(), k.out_channels, in.h(), in.w());
  for (int n = 0; n < in.n(); ++n)
    for (int oc = 0; oc < k.out_channels; ++oc)
      for (int y = 0; y < in.h(); ++y)
        for (int x = 0; x < in.w(); ++x) {
          double acc = k.bias[oc];
          for (int ic = 0; ic < in.c(); ++ic)
            for (int dy = -half; dy <= half; ++dy)
              for (int dx = -half; dx <= half; ++dx) {
                const int sy = y + dy, sx = x + dx;
                if (sy < 0 || sy >= in.h() || sx < 0 || sx >= in.w()) continue;
                acc += k.w(oc, ic, dy + half, dx + half) * in.at(n, ic, sy, sx);
              }
          out.at(n, oc, y, x) = acc;
        }
  return out;
}

}  // namespace

Tensor4 dmsf_pixel_oracle(const Tensor4& input, const DmsfParams& params, const ScaleMap& scale) {
  std::array<Tensor4, 3> branch;
  std::array<double, 3> sizes;
  for (int b = 0; b < 3; ++b) {
    branch[b] = conv2d_naive_oracle(input, params.branches[b], 1);
    sizes[b] = params.branches[b].size;
  }
  Tensor4 out(input.n(), params.branches[0].out_channels, input.h(), input.w());
  for (int n = 0; n < input.n(); ++n)
    for (int y = 0; y < input.h(); ++y)
      for (int x = 0; x < input.w(); ++x) {
        const auto a = dmsf_weights(scale.values.at(n, 0, y, x), sizes, params.sigma);
        for (int c = 0; c < out.c(); ++c)
          out.at(n, c, y, x) = a[0] * branch[0].at(n, c, y, x) + a[1] * branch[1].at(n, c, y, x) +
                               a[2] * branch[2].at(n, c, y, x);
      }
  return out;
}

Tensor4 se_oracle(const Tensor4& feature, const ConvKernel& se_reduce,
                  const ConvKernel& se_expand) {
  Tensor4 out(feature.n(), feature.c(), 1, 1);
  for (int n = 0; n < feature.n(); ++n) {
    // squeeze
    std::vector<double> pooled(feature.c(), 0.0);
    for (int c = 0; c < feature.c(); ++c) {
      double sum = 0.0;
      for (int y = 0; y < feature.h(); ++y)
        for (int x = 0; x < feature.w(); ++x) sum += feature.at(n, c, y, x);
      pooled[c] = sum / (static_cast<double>(feature.h()) * feature.w());
    }
    // bottleneck with rectifier
    std::vector<double> mid(se_reduce.out_channels, 0.0);
    for (int o = 0; o < se_reduce.out_channels; ++o) {
      double acc = se_reduce.bias[o];
      for (int i = 0; i < se_reduce.in_channels; ++i) acc += se_reduce.w(o, i, 0, 0) * pooled[i];
      mid[o] = std::max(0.0, acc);
    }
    // expansion + gate
    for (int o = 0; o < se_expand.out_channels; ++o) {
      double acc = se_expand.bias[o];
      for (int i = 0; i < se_expand.in_channels; ++i) acc += se_expand.w(o, i, 0, 0) * mid[i];
      out.at(n, o, 0, 0) = sig(acc);
    }
  }
  return out;
}

Tensor4 dcsf_oracle(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                    const DcsfParams& params) {
  const int C = f_dcsc.c();
  const int c2 = 2 * C;
  const int n_total = f_dcsc.n(), H = f_dcsc.h(), W = f_dcsc.w();

  Tensor4 u(n_total, c2, H, W);
  for (int n = 0; n < n_total; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        for (int c = 0; c < C; ++c) u.at(n, c, y, x) = f_dcsc.at(n, c, y, x);
        for (int c = 0; c < C; ++c) u.at(n, C + c, y, x) = f_c.at(n, c, y, x);
      }

  Tensor4 s_u(n_total, 1, H, W);
  for (std::size_t i = 0; i < s_u.size(); ++i) s_u[i] = (scale.values[i] - 3.0) / 3.0;

  Tensor4 a_in(n_total, c2 + 1, H, W);
  for (int n = 0; n < n_total; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        for (int c = 0; c < c2; ++c) a_in.at(n, c, y, x) = u.at(n, c, y, x);
        a_in.at(n, c2, y, x) = s_u.at(n, 0, y, x);
      }
  Tensor4 m_c = se_oracle(naive_conv(a_in, params.inject_c), params.se_reduce, params.se_expand);

  Tensor4 b_in(n_total, c2 + 1, H, W);
  for (int n = 0; n < n_total; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        for (int c = 0; c < c2; ++c)
          b_in.at(n, c, y, x) = m_c.at(n, c, 0, 0) * u.at(n, c, y, x);
        b_in.at(n, c2, y, x) = s_u.at(n, 0, y, x);
      }
  Tensor4 f_prime = naive_conv(b_in, params.inject_s);

  Tensor4 sp(n_total, 2, H, W);
  for (int n = 0; n < n_total; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double sum = 0.0, best = f_prime.at(n, 0, y, x);
        for (int c = 0; c < c2; ++c) {
          sum += f_prime.at(n, c, y, x);
          best = std::max(best, f_prime.at(n, c, y, x));
        }
        sp.at(n, 0, y, x) = sum / c2;
        sp.at(n, 1, y, x) = best;
      }
  Tensor4 m_s = naive_conv(sp, params.spatial_conv);
  for (std::size_t i = 0; i < m_s.size(); ++i) m_s[i] = sig(m_s[i]);

  Tensor4 z(n_total, c2, H, W);
  for (int n = 0; n < n_total; ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < c2; ++c) {
          const double branch = c < C ? m_s.at(n, 0, y, x) * f_dcsc.at(n, c, y, x)
                                      : f_c.at(n, c - C, y, x);
          z.at(n, c, y, x) = m_c.at(n, c, 0, 0) * branch + u.at(n, c, y, x);
        }
  return naive_conv(z, params.out_proj);
}

std::vector<Tensor4> decoder_forward_standard(const std::vector<Tensor4>& enc_features,
                                              const DecoderParams& params,
                                              const DecoderConfig& config) {
  auto base_scale = [&](const Tensor4& like) {
    ScaleConversion conv = config.conversion;
    Tensor4 v(like.n(), 1, like.h(), like.w(), conv.base_kernel);
    return ScaleMap{std::move(v), conv};
  };

  std::vector<Tensor4> depths;
  Tensor4 f_dec = conv2d_standard(enc_features[0], params.top_conv);
  depths.push_back(feature_to_depth(f_dec, params.top_depth_head, config.range));
  for (int step = 0; step < 4; ++step) {
    const Tensor4& f_enc = enc_features[step + 1];
    const DcsdLevelParams& lvl = params.levels[step];
    const ScaleMap low = base_scale(f_dec);
    const ScaleMap high = base_scale(f_enc);

    Tensor4 f_s_fdec = dcsf_forward(conv2d_standard(f_dec, lvl.dec_dcsc),
                                    conv2d_standard(f_dec, lvl.dec_conv), low, lvl.dec_fuse);
    Tensor4 f_s_enc = dcsf_forward(conv2d_standard(f_enc, lvl.enc_dcsc), f_enc, high,
                                   lvl.enc_fuse);
    Tensor4 merged = concat_channels(resize(f_s_fdec, f_enc.h(), f_enc.w(), ResizeMode::kNearest),
                                     f_s_enc);
    Tensor4 f_s_dec = dcsf_forward(conv2d_standard(merged, lvl.merge_dcsc),
                                   conv2d_standard(merged, lvl.merge_conv), high, lvl.merge_fuse);
    f_dec = conv2d_standard(f_s_dec, lvl.squeeze);
    depths.push_back(feature_to_depth(f_dec, lvl.depth_head, config.range));
  }
  return depths;
}

}  // namespace dcs::oracle
