#include "dcs/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcs {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Tensor4 sigmoid_map(const Tensor4& t) {
  Tensor4 out = t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(out[i]);
  return out;
}

Tensor4 relu_map(const Tensor4& t) {
  Tensor4 out = t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  return out;
}

// Everything the backward pass needs from one forward evaluation.
struct DcsfTrace {
  Tensor4 u;        // C[f_dcsc, f_c]
  Tensor4 s_u;      // normalized scale map
  Tensor4 a_in, a;  // channel-path injection input / output
  Tensor4 p;        // global average pool of a
  Tensor4 q, rq;    // bottleneck pre/post relu
  Tensor4 m_c;      // channel weights (sigmoid of expansion)
  Tensor4 u_v;      // m_c (*) u
  Tensor4 b_in, b;  // spatial-path injection input / output (F')
  Tensor4 sp_in;    // C[avg pool, max pool] of b
  Tensor4 m_s;      // spatial weights
  Tensor4 z;        // m_c (*) C[m_s (*) f_dcsc, f_c] + u
  Tensor4 out;
};

DcsfTrace dcsf_run(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                   const DcsfParams& params) {
  if (!f_dcsc.same_dims(f_c))
    throw std::invalid_argument("dcsf_forward: branch dims differ, " + f_dcsc.dims_str() +
                                " vs " + f_c.dims_str());
  if (scale.values.n() != f_dcsc.n() || scale.values.h() != f_dcsc.h() ||
      scale.values.w() != f_dcsc.w())
    throw std::invalid_argument("dcsf_forward: scale map dims " + scale.values.dims_str() +
                                " do not match features " + f_dcsc.dims_str());
  params.validate(f_dcsc.c());

  const int C = f_dcsc.c();
  DcsfTrace t;
  t.u = concat_channels(f_dcsc, f_c);
  t.s_u = normalize_scale_map(scale);

  t.a_in = concat_channels(t.u, t.s_u);
  t.a = conv2d_standard(t.a_in, params.inject_c);
  t.p = global_avg_pool(t.a);
  t.q = conv2d_standard(t.p, params.se_reduce);
  t.rq = relu_map(t.q);
  t.m_c = sigmoid_map(conv2d_standard(t.rq, params.se_expand));

  t.u_v = t.u;
  for (int n = 0; n < t.u.n(); ++n)
    for (int ch = 0; ch < t.u.c(); ++ch) {
      const double w = t.m_c.at(n, ch, 0, 0);
      for (int y = 0; y < t.u.h(); ++y)
        for (int x = 0; x < t.u.w(); ++x) t.u_v.at(n, ch, y, x) = w * t.u.at(n, ch, y, x);
    }

  t.b_in = concat_channels(t.u_v, t.s_u);
  t.b = conv2d_standard(t.b_in, params.inject_s);
  t.sp_in = concat_channels(channel_pool(t.b, ChannelPoolMode::kAvg),
                            channel_pool(t.b, ChannelPoolMode::kMax));
  t.m_s = sigmoid_map(conv2d_standard(t.sp_in, params.spatial_conv));

  t.z = t.u;
  for (int n = 0; n < t.u.n(); ++n)
    for (int ch = 0; ch < 2 * C; ++ch)
      for (int y = 0; y < t.u.h(); ++y)
        for (int x = 0; x < t.u.w(); ++x) {
          const double branch = ch < C ? t.m_s.at(n, 0, y, x) * f_dcsc.at(n, ch, y, x)
                                       : f_c.at(n, ch - C, y, x);
          t.z.at(n, ch, y, x) = t.m_c.at(n, ch, 0, 0) * branch + t.u.at(n, ch, y, x);
        }
  t.out = conv2d_standard(t.z, params.out_proj);
  return t;
}

}  // namespace

DcsfParams DcsfParams::make(int branch_channels, int out_channels, int reduction) {
  if (branch_channels < 1) throw std::invalid_argument("DcsfParams: channels must be >= 1");
  const int c2 = 2 * branch_channels;
  const int bottleneck = std::max(4, c2 / std::max(1, reduction));
  if (out_channels < 0) out_channels = branch_channels;
  DcsfParams p;
  p.inject_c = ConvKernel(c2, c2 + 1, 1);
  p.se_reduce = ConvKernel(bottleneck, c2, 1);
  p.se_expand = ConvKernel(c2, bottleneck, 1);
  p.inject_s = ConvKernel(c2, c2 + 1, 1);
  p.spatial_conv = ConvKernel(1, 2, 7);
  p.out_proj = ConvKernel(out_channels, c2, 1);
  return p;
}

void DcsfParams::validate(int branch_channels) const {
  const int c2 = 2 * branch_channels;
  if (inject_c.in_channels != c2 + 1 || inject_c.out_channels != c2)
    throw std::invalid_argument("DcsfParams: inject_c must map 2C+1 -> 2C");
  if (se_reduce.in_channels != c2 || se_expand.out_channels != c2 ||
      se_expand.in_channels != se_reduce.out_channels)
    throw std::invalid_argument("DcsfParams: SE projections inconsistent with 2C");
  if (inject_s.in_channels != c2 + 1 || inject_s.out_channels != c2)
    throw std::invalid_argument("DcsfParams: inject_s must map 2C+1 -> 2C");
  if (spatial_conv.in_channels != 2 || spatial_conv.out_channels != 1 || spatial_conv.size != 7)
    throw std::invalid_argument("DcsfParams: spatial_conv must be 7x7, 2 -> 1");
  if (out_proj.in_channels != c2)
    throw std::invalid_argument("DcsfParams: out_proj must consume 2C channels");
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw std::invalid_argument("concat_channels: dims " + a.dims_str() + " vs " + b.dims_str());
  Tensor4 out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int n = 0; n < a.n(); ++n)
    for (int y = 0; y < a.h(); ++y)
      for (int x = 0; x < a.w(); ++x) {
        for (int c = 0; c < a.c(); ++c) out.at(n, c, y, x) = a.at(n, c, y, x);
        for (int c = 0; c < b.c(); ++c) out.at(n, a.c() + c, y, x) = b.at(n, c, y, x);
      }
  return out;
}

Tensor4 slice_channels(const Tensor4& t, int c_begin, int c_end) {
  if (c_begin < 0 || c_end > t.c() || c_begin >= c_end)
    throw std::invalid_argument("slice_channels: bad range");
  Tensor4 out(t.n(), c_end - c_begin, t.h(), t.w());
  for (int n = 0; n < t.n(); ++n)
    for (int c = c_begin; c < c_end; ++c)
      for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) out.at(n, c - c_begin, y, x) = t.at(n, c, y, x);
  return out;
}

Tensor4 se_channel_attention(const Tensor4& feature, const ConvKernel& se_reduce,
                             const ConvKernel& se_expand) {
  se_reduce.validate(feature.c());
  se_expand.validate(se_reduce.out_channels);
  Tensor4 p = global_avg_pool(feature);
  Tensor4 rq = relu_map(conv2d_standard(p, se_reduce));
  return sigmoid_map(conv2d_standard(rq, se_expand));
}

Tensor4 dcsf_spatial_attention(const Tensor4& u_v, const Tensor4& s_u, const DcsfParams& params) {
  if (u_v.n() != s_u.n() || u_v.h() != s_u.h() || u_v.w() != s_u.w() || s_u.c() != 1)
    throw std::invalid_argument("dcsf_spatial_attention: s_u must be n x 1 x h x w matching u_v");
  Tensor4 f_prime = conv2d_standard(concat_channels(u_v, s_u), params.inject_s);
  Tensor4 sp_in = concat_channels(channel_pool(f_prime, ChannelPoolMode::kAvg),
                                  channel_pool(f_prime, ChannelPoolMode::kMax));
  return sigmoid_map(conv2d_standard(sp_in, params.spatial_conv));
}

Tensor4 dcsf_forward(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                     const DcsfParams& params) {
  return dcsf_run(f_dcsc, f_c, scale, params).out;
}

DcsfGrads dcsf_backward(const Tensor4& f_dcsc, const Tensor4& f_c, const ScaleMap& scale,
                        const DcsfParams& params, const Tensor4& grad_output) {
  const DcsfTrace t = dcsf_run(f_dcsc, f_c, scale, params);
  if (!grad_output.same_dims(t.out))
    throw std::invalid_argument("dcsf_backward: grad_output dims " + grad_output.dims_str() +
                                " do not match output " + t.out.dims_str());
  const int C = f_dcsc.c();
  const int c2 = 2 * C;

  DcsfGrads g;
  g.grad_params.inject_c = ConvKernel(c2, c2 + 1, 1);
  g.grad_params.se_reduce =
      ConvKernel(params.se_reduce.out_channels, params.se_reduce.in_channels, 1);
  g.grad_params.se_expand =
      ConvKernel(params.se_expand.out_channels, params.se_expand.in_channels, 1);
  g.grad_params.inject_s = ConvKernel(c2, c2 + 1, 1);
  g.grad_params.spatial_conv = ConvKernel(1, 2, 7);
  g.grad_params.out_proj = ConvKernel(params.out_proj.out_channels, c2, 1);
  g.grad_f_dcsc = Tensor4(f_dcsc.n(), C, f_dcsc.h(), f_dcsc.w());
  g.grad_f_c = Tensor4(f_c.n(), C, f_c.h(), f_c.w());

  // out = out_proj(z)
  ConvGrads cg = conv2d_backward(t.z, params.out_proj, grad_output);
  g.grad_params.out_proj = std::move(cg.grad_kernel);
  Tensor4 g_z = std::move(cg.grad_input);

  Tensor4 g_u = g_z;  // residual term
  Tensor4 g_m_c(t.m_c.n(), t.m_c.c(), 1, 1);
  Tensor4 g_m_s(t.m_s.n(), 1, t.m_s.h(), t.m_s.w());

  // z = m_c (*) W + u, W = C[m_s (*) f_dcsc, f_c]
  for (int n = 0; n < t.u.n(); ++n)
    for (int ch = 0; ch < c2; ++ch)
      for (int y = 0; y < t.u.h(); ++y)
        for (int x = 0; x < t.u.w(); ++x) {
          const double gz = g_z.at(n, ch, y, x);
          const double branch = ch < C ? t.m_s.at(n, 0, y, x) * f_dcsc.at(n, ch, y, x)
                                       : f_c.at(n, ch - C, y, x);
          g_m_c.at(n, ch, 0, 0) += gz * branch;
          const double gw = gz * t.m_c.at(n, ch, 0, 0);
          if (ch < C) {
            g.grad_f_dcsc.at(n, ch, y, x) += gw * t.m_s.at(n, 0, y, x);
            g_m_s.at(n, 0, y, x) += gw * f_dcsc.at(n, ch, y, x);
          } else {
            g.grad_f_c.at(n, ch - C, y, x) += gw;
          }
        }

  // m_s = sigmoid(spatial_conv(sp_in))
  Tensor4 g_t_sp = g_m_s;
  for (std::size_t i = 0; i < g_t_sp.size(); ++i) g_t_sp[i] *= t.m_s[i] * (1.0 - t.m_s[i]);
  cg = conv2d_backward(t.sp_in, params.spatial_conv, g_t_sp);
  g.grad_params.spatial_conv = std::move(cg.grad_kernel);
  Tensor4 g_sp_in = std::move(cg.grad_input);

  // sp_in = C[channel avg, channel max] of b
  Tensor4 g_b(t.b.n(), t.b.c(), t.b.h(), t.b.w());
  for (int n = 0; n < t.b.n(); ++n)
    for (int y = 0; y < t.b.h(); ++y)
      for (int x = 0; x < t.b.w(); ++x) {
        const double ga = g_sp_in.at(n, 0, y, x) / t.b.c();
        for (int ch = 0; ch < t.b.c(); ++ch) g_b.at(n, ch, y, x) += ga;
        // max routes to the first channel attaining the maximum,
        // matching channel_pool's selection.
        const double mx = t.sp_in.at(n, 1, y, x);
        for (int ch = 0; ch < t.b.c(); ++ch) {
          if (t.b.at(n, ch, y, x) == mx) {
            g_b.at(n, ch, y, x) += g_sp_in.at(n, 1, y, x);
            break;
          }
        }
      }

  cg = conv2d_backward(t.b_in, params.inject_s, g_b);
  g.grad_params.inject_s = std::move(cg.grad_kernel);
  Tensor4 g_u_v = slice_channels(cg.grad_input, 0, c2);  // s_u channel is constant

  // u_v = m_c (*) u
  for (int n = 0; n < t.u.n(); ++n)
    for (int ch = 0; ch < c2; ++ch)
      for (int y = 0; y < t.u.h(); ++y)
        for (int x = 0; x < t.u.w(); ++x) {
          g_m_c.at(n, ch, 0, 0) += g_u_v.at(n, ch, y, x) * t.u.at(n, ch, y, x);
          g_u.at(n, ch, y, x) += g_u_v.at(n, ch, y, x) * t.m_c.at(n, ch, 0, 0);
        }

  // m_c = sigmoid(se_expand(relu(se_reduce(gap(a)))))
  Tensor4 g_s = g_m_c;
  for (std::size_t i = 0; i < g_s.size(); ++i) g_s[i] *= t.m_c[i] * (1.0 - t.m_c[i]);
  cg = conv2d_backward(t.rq, params.se_expand, g_s);
  g.grad_params.se_expand = std::move(cg.grad_kernel);
  Tensor4 g_rq = std::move(cg.grad_input);
  for (std::size_t i = 0; i < g_rq.size(); ++i)
    if (t.q[i] <= 0.0) g_rq[i] = 0.0;
  cg = conv2d_backward(t.p, params.se_reduce, g_rq);
  g.grad_params.se_reduce = std::move(cg.grad_kernel);
  Tensor4 g_p = std::move(cg.grad_input);

  Tensor4 g_a(t.a.n(), t.a.c(), t.a.h(), t.a.w());
  const double inv_hw = 1.0 / (static_cast<double>(t.a.h()) * t.a.w());
  for (int n = 0; n < t.a.n(); ++n)
    for (int ch = 0; ch < t.a.c(); ++ch) {
      const double gp = g_p.at(n, ch, 0, 0) * inv_hw;
      for (int y = 0; y < t.a.h(); ++y)
        for (int x = 0; x < t.a.w(); ++x) g_a.at(n, ch, y, x) = gp;
    }

  cg = conv2d_backward(t.a_in, params.inject_c, g_a);
  g.grad_params.inject_c = std::move(cg.grad_kernel);
  Tensor4 g_u_from_a = slice_channels(cg.grad_input, 0, c2);
  for (std::size_t i = 0; i < g_u.size(); ++i) g_u[i] += g_u_from_a[i];

  // u = C[f_dcsc, f_c]
  for (int n = 0; n < t.u.n(); ++n)
    for (int ch = 0; ch < c2; ++ch)
      for (int y = 0; y < t.u.h(); ++y)
        for (int x = 0; x < t.u.w(); ++x) {
          if (ch < C)
            g.grad_f_dcsc.at(n, ch, y, x) += g_u.at(n, ch, y, x);
          else
            g.grad_f_c.at(n, ch - C, y, x) += g_u.at(n, ch, y, x);
        }
  return g;
}

}  // namespace dcs
