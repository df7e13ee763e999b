#include "dcs/checks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dcs/conv.hpp"
#include "dcs/decoder.hpp"
#include "dcs/fusion.hpp"
#include "dcs/geometry.hpp"
#include "dcs/gradcheck.hpp"
#include "dcs/oracles.hpp"
#include "dcs/rng.hpp"
#include "dcs/scene.hpp"
#include "dcs/tensor.hpp"

namespace dcs::checks {

namespace {

// ---- helpers ---------------------------------------------------------------

Tensor4 rand_tensor(Rng& rng, int n, int c, int h, int w, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

ConvKernel rand_kernel(Rng& rng, int out_c, int in_c, int k, double scale = 0.5) {
  ConvKernel kernel(out_c, in_c, k);
  const double bound = scale / std::sqrt(static_cast<double>(in_c) * k * k);
  for (auto& w : kernel.weights) w = rng.uniform(-bound, bound);
  for (auto& b : kernel.bias) b = rng.uniform(-0.1, 0.1);
  return kernel;
}

DcsfParams rand_dcsf(Rng& rng, int branch_channels, int out_channels = -1) {
  DcsfParams p = DcsfParams::make(branch_channels, out_channels);
  auto fill = [&](ConvKernel& k) {
    const double bound = 0.5 / std::sqrt(static_cast<double>(k.in_channels) * k.size * k.size);
    for (auto& w : k.weights) w = rng.uniform(-bound, bound);
    for (auto& b : k.bias) b = rng.uniform(-0.1, 0.1);
  };
  fill(p.inject_c);
  fill(p.se_reduce);
  fill(p.se_expand);
  fill(p.inject_s);
  fill(p.spatial_conv);
  fill(p.out_proj);
  return p;
}

ScaleMap const_scale(const Tensor4& like, double value, double lo = 1.0, double hi = 9.0) {
  ScaleConversion conv;
  conv.scale_min = lo;
  conv.scale_max = hi;
  return ScaleMap{Tensor4(like.n(), 1, like.h(), like.w(), value), conv};
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Normwise relative deviation: max |a_i - b_i| over the largest value
// magnitude. Elementwise ratios blow up on near-zero outputs where the
// two evaluation orders differ only in final rounding.
double max_rel_diff(const Tensor4& a, const Tensor4& b) {
  double diff = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    mag = std::max({mag, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / std::max(mag, 1e-12);
}

CheckResult result(const std::string& suite, const std::string& name, bool pass, double metric,
                   const std::string& detail = "") {
  return CheckResult{suite, name, pass, metric, detail};
}

using CheckFn = std::function<CheckResult(std::uint64_t)>;

struct RegisteredCheck {
  std::string suite;
  std::string name;
  std::vector<std::string> covered_ops;
  CheckFn fn;
};

// ---- geometry --------------------------------------------------------------

CheckResult g_composition(std::uint64_t seed) {
  Rng rng = Rng(seed).split(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double l = rng.uniform(0.0, 5.0);
    const CameraIntrinsics intr{rng.uniform(100.0, 1000.0)};
    const double d1 = rng.uniform(0.5, 80.0);
    const double d2 = rng.uniform(0.5, 80.0);
    const double via = rescale_length(project_length(l, intr, d1), d1, d2);
    const double direct = project_length(l, intr, d2);
    worst = std::max(worst, std::abs(via - direct) /
                                std::max({std::abs(via), std::abs(direct), 1e-12}));
  }
  return result("geometry", "projection_rescale_composition", worst <= 1e-12, worst,
                "1000 draws, rel tol 1e-12");
}

CheckResult g_monotonic(std::uint64_t seed) {
  Rng rng = Rng(seed).split(2);
  bool ok = true;
  for (int trial = 0; trial < 50 && ok; ++trial) {
    ScaleConversion conv;
    conv.reference_depth = rng.uniform(5.0, 20.0);
    std::vector<double> depths(20);
    for (auto& d : depths) d = rng.uniform(0.2, 60.0);
    std::sort(depths.begin(), depths.end());
    double prev = depth_to_scale(depths[0], conv);
    for (std::size_t i = 1; i < depths.size(); ++i) {
      const double k = depth_to_scale(depths[i], conv);
      if (k > prev + 1e-15) ok = false;
      prev = k;
    }
  }
  return result("geometry", "depth_to_scale_monotonic", ok, ok ? 0.0 : 1.0,
                "50 sorted random depth ladders");
}

CheckResult g_unclamped_identity(std::uint64_t seed) {
  Rng rng = Rng(seed).split(3);
  ScaleConversion conv;
  conv.reference_depth = 10.0;
  const double product = conv.base_kernel * conv.reference_depth;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(product / conv.scale_max, product / conv.scale_min);
    const double k = depth_to_scale(d, conv);
    worst = std::max(worst, std::abs(k * d - product) / product);
  }
  return result("geometry", "unclamped_scale_depth_identity", worst <= 1e-12, worst,
                "k_d * D == k_r * D_r inside the clamp range");
}

CheckResult g_scale_map_oracle(std::uint64_t seed) {
  Rng rng = Rng(seed).split(4);
  ScaleConversion conv;
  conv.reference_depth = 10.0;
  const Tensor4 depth = rand_tensor(rng, 2, 1, 6, 7, 1.0, 100.0);
  const ScaleMap map = depth_map_to_scale_map(depth, conv);
  double worst = 0.0;
  for (int n = 0; n < depth.n(); ++n)
    for (int y = 0; y < depth.h(); ++y)
      for (int x = 0; x < depth.w(); ++x)
        worst = std::max(worst, std::abs(map.values.at(n, 0, y, x) -
                                         depth_to_scale(depth.at(n, 0, y, x), conv)));
  return result("geometry", "scale_map_pixelwise_oracle", worst == 0.0, worst,
                "map equals the scalar conversion applied per pixel");
}

CheckResult g_reference_depth(std::uint64_t seed) {
  Rng rng = Rng(seed).split(5);
  Tensor4 two(1, 1, 1, 2);
  two.at(0, 0, 0, 0) = 10.0;
  two.at(0, 0, 0, 1) = 30.0;
  bool ok = std::abs(reference_depth_from_map(two) - 20.0) <= 1e-12;

  const Tensor4 rnd = rand_tensor(rng, 1, 1, 5, 5, 0.5, 50.0);
  const double mean = reference_depth_from_map(rnd);
  ScaleConversion conv;
  conv.reference_depth = mean;
  const Tensor4 constant(1, 1, 4, 4, mean);
  const ScaleMap map = depth_map_to_scale_map(constant, conv);
  for (std::size_t i = 0; i < map.values.size(); ++i)
    if (std::abs(map.values[i] - conv.base_kernel) > 1e-12) ok = false;
  return result("geometry", "reference_depth_mean", ok, 0.0,
                "mean of map; constant depth at D_r maps to k_r");
}

CheckResult g_normalize(std::uint64_t seed) {
  Rng rng = Rng(seed).split(6);
  ScaleConversion conv;
  conv.scale_min = 1.0;
  conv.scale_max = 6.0;
  Tensor4 v(1, 1, 1, 3);
  v.at(0, 0, 0, 0) = 3.0;
  v.at(0, 0, 0, 1) = 6.0;
  v.at(0, 0, 0, 2) = 1.5;
  const Tensor4 s = normalize_scale_map(ScaleMap{v, conv});
  bool ok = std::abs(s.at(0, 0, 0, 0)) <= 1e-15 && std::abs(s.at(0, 0, 0, 1) - 1.0) <= 1e-15 &&
            std::abs(s.at(0, 0, 0, 2) + 0.5) <= 1e-15;

  const Tensor4 rv = rand_tensor(rng, 1, 1, 8, 8, conv.scale_min, conv.scale_max);
  const Tensor4 rs = normalize_scale_map(ScaleMap{rv, conv});
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (rs[i] < -1.0 - 1e-15 || rs[i] > 1.0 + 1e-15) ok = false;
  return result("geometry", "normalize_scale_map_values", ok, 0.0,
                "(k_d-3)/3 values and [-1,1] range for clamps within (0,6]");
}

// ---- conv ------------------------------------------------------------------

CheckResult c_reduction_scale3(std::uint64_t seed) {
  Rng rng = Rng(seed).split(10);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 2);
    const int c = 1 + static_cast<int>(rng.next_u64() % 8);
    const int oc = 1 + static_cast<int>(rng.next_u64() % 4);
    const int h = 4 + static_cast<int>(rng.next_u64() % 29);
    const int w = 4 + static_cast<int>(rng.next_u64() % 29);
    const Tensor4 input = rand_tensor(rng, n, c, h, w);
    const ConvKernel kernel = rand_kernel(rng, oc, c, 3);
    worst = std::max(worst, max_rel_diff(dcsconv_forward(input, kernel, const_scale(input, 3.0)),
                                         conv2d_standard(input, kernel)));
  }
  return result("conv", "dcsconv_reduces_to_standard_at_scale3", worst <= 1e-12, worst,
                "25 seeded instances, rel tol 1e-12");
}

CheckResult c_dilation(std::uint64_t seed) {
  Rng rng = Rng(seed).split(11);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Tensor4 input = rand_tensor(rng, 1, 2, 8, 9);
    const ConvKernel kernel = rand_kernel(rng, 3, 2, 3);
    worst = std::max(worst, max_rel_diff(dcsconv_forward(input, kernel, const_scale(input, 5.0)),
                                         conv2d_naive_oracle(input, kernel, 2)));

    // scale 1: all taps collapse to the center
    const Tensor4 collapsed = dcsconv_forward(input, kernel, const_scale(input, 1.0));
    Tensor4 expected(input.n(), kernel.out_channels, input.h(), input.w());
    for (int n = 0; n < input.n(); ++n)
      for (int oc = 0; oc < kernel.out_channels; ++oc)
        for (int y = 0; y < input.h(); ++y)
          for (int x = 0; x < input.w(); ++x) {
            double acc = kernel.bias[oc];
            for (int ic = 0; ic < input.c(); ++ic) {
              double wsum = 0.0;
              for (int t = 0; t < 9; ++t) wsum += kernel.w(oc, ic, t / 3, t % 3);
              acc += wsum * input.at(n, ic, y, x);
            }
            expected.at(n, oc, y, x) = acc;
          }
    worst = std::max(worst, max_rel_diff(collapsed, expected));
  }
  return result("conv", "dcsconv_dilation_equivalence", worst <= 1e-12, worst,
                "scale 5 == dilation 2; scale 1 == weight-sum times input");
}

CheckResult c_standard_vs_naive(std::uint64_t seed) {
  Rng rng = Rng(seed).split(12);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 2);
    const int c = 1 + static_cast<int>(rng.next_u64() % 5);
    const int oc = 1 + static_cast<int>(rng.next_u64() % 5);
    const int h = 1 + static_cast<int>(rng.next_u64() % 12);
    const int w = 1 + static_cast<int>(rng.next_u64() % 12);
    const Tensor4 input = rand_tensor(rng, n, c, h, w);
    const ConvKernel kernel = rand_kernel(rng, oc, c, 3);
    worst = std::max(worst, max_abs_diff(conv2d_standard(input, kernel),
                                         conv2d_naive_oracle(input, kernel, 1)));
  }
  return result("conv", "standard_conv_vs_naive_oracle", worst <= 1e-10, worst,
                "50 random shapes/seeds, abs tol 1e-10");
}

CheckResult c_linearity(std::uint64_t seed) {
  Rng rng = Rng(seed).split(13);
  const Tensor4 a = rand_tensor(rng, 1, 3, 7, 7);
  const Tensor4 b = rand_tensor(rng, 1, 3, 7, 7);
  ConvKernel kernel = rand_kernel(rng, 2, 3, 3);
  std::fill(kernel.bias.begin(), kernel.bias.end(), 0.0);
  const ScaleMap scale = const_scale(a, 2.4);
  const double alpha = 1.7, beta = -0.6;

  Tensor4 mixed = a;
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = alpha * a[i] + beta * b[i];
  const Tensor4 lhs = dcsconv_forward(mixed, kernel, scale);
  const Tensor4 fa = dcsconv_forward(a, kernel, scale);
  const Tensor4 fb = dcsconv_forward(b, kernel, scale);
  Tensor4 rhs = fa;
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = alpha * fa[i] + beta * fb[i];
  const double worst = max_rel_diff(lhs, rhs);
  return result("conv", "dcsconv_linear_in_input", worst <= 1e-12, worst,
                "zero-bias linearity, rel tol 1e-12");
}

// ---- dmsf ------------------------------------------------------------------

CheckResult m_eq4_value(std::uint64_t) {
  const auto a = dmsf_weights(3.0, {1.0, 3.0, 5.0}, 10.0);
  // Independent straight-line evaluation.
  const double g1 = std::exp(-(3.0 - 1.0) * (3.0 - 1.0) / 200.0);
  const double g2 = std::exp(0.0);
  const double g3 = std::exp(-(3.0 - 5.0) * (3.0 - 5.0) / 200.0);
  const double denom = std::exp(g1) + std::exp(g2) + std::exp(g3);
  const double e1 = std::exp(g1) / denom, e2 = std::exp(g2) / denom, e3 = std::exp(g3) / denom;
  double worst = std::max({std::abs(a[0] - e1), std::abs(a[1] - e2), std::abs(a[2] - e3)});
  worst = std::max({worst, std::abs(a[0] - 0.33113), std::abs(a[1] - 0.33775),
                    std::abs(a[2] - 0.33113)});
  return result("dmsf", "gaussian_softmax_reference_value", worst <= 1e-5, worst,
                "weights(3,{1,3,5},10) vs independent scalar evaluation");
}

CheckResult m_simplex(std::uint64_t seed) {
  Rng rng = Rng(seed).split(20);
  const std::array<double, 3> sizes{1.0, 3.0, 5.0};
  double worst_sum = 0.0;
  bool ok = true;
  for (int i = 0; i < 1000; ++i) {
    const double kd = rng.uniform(0.3, 12.0);
    const double sigma = rng.uniform(0.05, 20.0);
    const auto a = dmsf_weights(kd, sizes, sigma);
    worst_sum = std::max(worst_sum, std::abs(a[0] + a[1] + a[2] - 1.0));
    for (double w : a)
      if (!(w > 0.0 && w < 1.0)) ok = false;
    // nearest-branch argmax (skip near-equidistant draws)
    int nearest = 0, argmax = 0;
    for (int b = 1; b < 3; ++b) {
      if (std::abs(kd - sizes[b]) < std::abs(kd - sizes[nearest])) nearest = b;
      if (a[b] > a[argmax]) argmax = b;
    }
    double d0 = std::abs(kd - sizes[nearest]);
    bool tie = false;
    for (int b = 0; b < 3; ++b)
      if (b != nearest && std::abs(std::abs(kd - sizes[b]) - d0) < 1e-9) tie = true;
    // at tiny sigma the off-branch affinities can underflow to identical
    // values; only a materially larger weight counts as a violation
    if (!tie && argmax != nearest && a[argmax] - a[nearest] > 1e-12) ok = false;
  }
  // small-sigma limit: argmax dominance capped by e/(2+e)
  const auto lim = dmsf_weights(3.0, sizes, 1e-4);
  const double e = std::exp(1.0);
  const double expect_mid = e / (2.0 + e);
  if (std::abs(lim[1] - expect_mid) > 1e-6) ok = false;
  return result("dmsf", "weights_simplex_and_nearest_argmax", ok && worst_sum <= 1e-12, worst_sum,
                "1000 draws; sum 1 within 1e-12; argmax is nearest branch");
}

CheckResult m_forward_oracle(std::uint64_t seed) {
  Rng rng = Rng(seed).split(21);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Tensor4 input = rand_tensor(rng, 1, 2, 6, 6);
    DmsfParams params;
    params.branches[0] = rand_kernel(rng, 3, 2, 1);
    params.branches[1] = rand_kernel(rng, 3, 2, 3);
    params.branches[2] = rand_kernel(rng, 3, 2, 5);
    params.sigma = rng.uniform(0.5, 12.0);
    ScaleConversion conv;
    Tensor4 kd = rand_tensor(rng, 1, 1, 6, 6, 1.0, 9.0);
    const ScaleMap scale{kd, conv};
    worst = std::max(worst, max_abs_diff(dmsf_forward(input, params, scale),
                                         oracle::dmsf_pixel_oracle(input, params, scale)));
  }
  return result("dmsf", "dmsf_forward_vs_pixel_oracle", worst <= 1e-10, worst,
                "10 seeded instances, abs tol 1e-10");
}

// ---- fusion ----------------------------------------------------------------

CheckResult f_se_oracle(std::uint64_t seed) {
  Rng rng = Rng(seed).split(30);
  const Tensor4 feature = rand_tensor(rng, 2, 8, 5, 5);
  const ConvKernel reduce = rand_kernel(rng, 4, 8, 1);
  const ConvKernel expand = rand_kernel(rng, 8, 4, 1);
  const Tensor4 got = se_channel_attention(feature, reduce, expand);
  double worst = max_abs_diff(got, oracle::se_oracle(feature, reduce, expand));

  bool ok = worst <= 1e-12;
  for (std::size_t i = 0; i < got.size(); ++i)
    if (!(got[i] > 0.0 && got[i] < 1.0)) ok = false;

  // all-zero projections gate at sigmoid(0) = 0.5
  const ConvKernel zr(4, 8, 1), ze(8, 4, 1);
  const Tensor4 half = se_channel_attention(feature, zr, ze);
  for (std::size_t i = 0; i < half.size(); ++i)
    if (std::abs(half[i] - 0.5) > 1e-15) ok = false;
  return result("fusion", "se_attention_vs_scalar_oracle", ok, worst,
                "oracle equality, sigmoid range, zero-projection gate");
}

CheckResult f_spatial(std::uint64_t seed) {
  Rng rng = Rng(seed).split(31);
  const int C = 3;
  const Tensor4 u_v = rand_tensor(rng, 1, 2 * C, 9, 9);
  const Tensor4 s_u = rand_tensor(rng, 1, 1, 9, 9, -0.8, 0.8);
  DcsfParams params = rand_dcsf(rng, C);
  Tensor4 m_s = dcsf_spatial_attention(u_v, s_u, params);
  bool ok = true;
  for (std::size_t i = 0; i < m_s.size(); ++i)
    if (!(m_s[i] > 0.0 && m_s[i] < 1.0)) ok = false;

  // zero 7x7 conv gives exactly 0.5 everywhere
  DcsfParams zero = params;
  zero.spatial_conv = ConvKernel(1, 2, 7);
  m_s = dcsf_spatial_attention(u_v, s_u, zero);
  for (std::size_t i = 0; i < m_s.size(); ++i)
    if (std::abs(m_s[i] - 0.5) > 1e-15) ok = false;

  // constant inputs: constant on the interior, border differs via padding
  const Tensor4 cu(1, 2 * C, 9, 9, 0.37);
  const Tensor4 cs(1, 1, 9, 9, 0.1);
  m_s = dcsf_spatial_attention(cu, cs, params);
  const double center = m_s.at(0, 0, 4, 4);
  if (std::abs(m_s.at(0, 0, 3, 4) - center) > 1e-12) ok = false;
  return result("fusion", "spatial_attention_contract", ok, 0.0,
                "sigmoid range, zero-weight gate, interior constancy");
}

CheckResult f_dcsf_oracle(std::uint64_t seed) {
  Rng rng = Rng(seed).split(32);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int C = 4;
    const Tensor4 f_dcsc = rand_tensor(rng, 1, C, 6, 6);
    const Tensor4 f_c = rand_tensor(rng, 1, C, 6, 6);
    const DcsfParams params = rand_dcsf(rng, C);
    ScaleConversion conv;
    const ScaleMap scale{rand_tensor(rng, 1, 1, 6, 6, 1.0, 9.0), conv};
    worst = std::max(worst, max_abs_diff(dcsf_forward(f_dcsc, f_c, scale, params),
                                         oracle::dcsf_oracle(f_dcsc, f_c, scale, params)));
  }
  return result("fusion", "dcsf_forward_vs_straight_line_oracle", worst <= 1e-10, worst,
                "10 seeded instances, abs tol 1e-10");
}

CheckResult f_mc_permutation(std::uint64_t seed) {
  Rng rng = Rng(seed).split(33);
  const int C = 3;
  const Tensor4 f_dcsc = rand_tensor(rng, 1, C, 4, 4);
  const Tensor4 f_c = rand_tensor(rng, 1, C, 4, 4);
  const DcsfParams params = rand_dcsf(rng, C);
  ScaleConversion conv;
  Tensor4 kd = rand_tensor(rng, 1, 1, 4, 4, 1.5, 8.0);

  auto channel_weights = [&](const Tensor4& a, const Tensor4& b, const Tensor4& k) {
    const Tensor4 u = concat_channels(a, b);
    const Tensor4 s_u = normalize_scale_map(ScaleMap{k, conv});
    const Tensor4 injected = conv2d_standard(concat_channels(u, s_u), params.inject_c);
    return se_channel_attention(injected, params.se_reduce, params.se_expand);
  };

  // a fixed spatial permutation applied to every channel and the scale map
  std::vector<int> perm(16);
  for (int i = 0; i < 16; ++i) perm[i] = i;
  for (int i = 15; i > 0; --i) std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
  auto permute = [&](const Tensor4& t) {
    Tensor4 out = t;
    for (int c = 0; c < t.c(); ++c)
      for (int i = 0; i < 16; ++i) out.at(0, c, i / 4, i % 4) = t.at(0, c, perm[i] / 4, perm[i] % 4);
    return out;
  };

  const double worst = max_abs_diff(channel_weights(f_dcsc, f_c, kd),
                                    channel_weights(permute(f_dcsc), permute(f_c), permute(kd)));
  return result("fusion", "channel_attention_spatial_permutation_invariant", worst <= 1e-12,
                worst, "M_c depends on inputs only through channel averages");
}

CheckResult f_saturation(std::uint64_t seed) {
  Rng rng = Rng(seed).split(34);
  const int C = 3;
  const Tensor4 f_dcsc = rand_tensor(rng, 1, C, 5, 5);
  const Tensor4 f_c = rand_tensor(rng, 1, C, 5, 5);
  DcsfParams params = rand_dcsf(rng, C);
  // saturate both gates: zero weights, +20 biases
  params.se_expand = ConvKernel(2 * C, params.se_expand.in_channels, 1);
  std::fill(params.se_expand.bias.begin(), params.se_expand.bias.end(), 20.0);
  params.spatial_conv = ConvKernel(1, 2, 7);
  params.spatial_conv.bias[0] = 20.0;

  const ScaleMap scale = const_scale(f_dcsc, 3.0);
  const Tensor4 got = dcsf_forward(f_dcsc, f_c, scale, params);

  Tensor4 doubled = concat_channels(f_dcsc, f_c);
  for (std::size_t i = 0; i < doubled.size(); ++i) doubled[i] *= 2.0;
  const Tensor4 expected = conv2d_standard(doubled, params.out_proj);
  const double worst = max_abs_diff(got, expected);
  return result("fusion", "saturated_gates_reduce_to_residual_doubling", worst <= 1e-6, worst,
                "sigmoid(20) gates, F_s ~ out_proj(2U) within 1e-6");
}

// ---- decoder ---------------------------------------------------------------

DecoderConfig toy_config() {
  DecoderConfig config;
  config.conversion.reference_depth = 10.0;
  return config;
}

CheckResult d_contract(std::uint64_t seed) {
  const std::vector<int> enc_ch{4, 4, 4, 4, 4};
  const std::vector<int> dec_ch{4, 4, 4, 4, 4};
  const auto pyramid = make_feature_pyramid(64, 64, enc_ch, seed);
  const DecoderParams params = make_decoder_params(enc_ch, dec_ch, seed);
  const DecoderConfig config = toy_config();
  const auto depths = decoder_forward(pyramid, params, config);

  bool ok = depths.size() == 5;
  int expect_w = 4;
  for (const Tensor4& d : depths) {
    if (d.w() != expect_w || d.c() != 1) ok = false;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] < config.range.min_depth - 1e-12 || d[i] > config.range.max_depth + 1e-12)
        ok = false;
    expect_w *= 2;
  }
  return result("decoder", "pyramid_shape_and_range_contract", ok, 0.0,
                "five maps at 4..64 px, all depths within range");
}

CheckResult d_reduction(std::uint64_t seed) {
  const std::vector<int> enc_ch{4, 4, 4, 4, 4};
  const std::vector<int> dec_ch{4, 4, 4, 4, 4};
  const auto pyramid = make_feature_pyramid(64, 64, enc_ch, seed + 1);
  const DecoderParams params = make_decoder_params(enc_ch, dec_ch, seed + 1);
  const DecoderConfig config = toy_config();

  // constant prior at D_r: every scale map degenerates to k_r
  std::vector<Tensor4> prior;
  for (const Tensor4& f : pyramid)
    prior.emplace_back(f.n(), 1, f.h(), f.w(), config.conversion.reference_depth);

  const auto adaptive = decoder_forward(pyramid, params, config, prior);
  const auto standard = oracle::decoder_forward_standard(pyramid, params, config);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) worst = std::max(worst, max_abs_diff(adaptive[i], standard[i]));
  return result("decoder", "constant_prior_reduces_to_standard_decoder", worst <= 1e-10, worst,
                "1x4x64x64 pyramid, abs tol 1e-10");
}

CheckResult d_self_guidance(std::uint64_t seed) {
  const std::vector<int> enc_ch{3, 3, 3, 3, 3};
  const std::vector<int> dec_ch{3, 3, 3, 3, 3};
  const auto pyramid = make_feature_pyramid(32, 32, enc_ch, seed + 2);
  const DecoderParams params = make_decoder_params(enc_ch, dec_ch, seed + 2);
  const DecoderConfig config = toy_config();

  DecoderProbe probe;
  const auto depths = decoder_forward(pyramid, params, config, {}, &probe);

  double worst = 0.0;
  // closure: scale_low at step l is exactly the Eq.-3 conversion of the
  // previous prediction (with its per-map mean reference depth)
  for (int step = 0; step < 4; ++step) {
    ScaleConversion conv = config.conversion;
    conv.reference_depth = reference_depth_from_map(depths[step]);
    worst = std::max(worst, max_abs_diff(probe.scale_low[step].values,
                                         depth_map_to_scale_map(depths[step], conv).values));
  }

  // injection: a synthetic prediction at pyramid index 1 (level 3) must
  // drive the step-1 low-resolution scale map exactly per Eq. 3
  Rng rng = Rng(seed).split(40);
  Tensor4 synthetic = rand_tensor(rng, 1, 1, depths[1].h(), depths[1].w(), 4.0, 30.0);
  DecoderProbe inject;
  inject.inject_depth = {1, synthetic};
  decoder_forward(pyramid, params, config, {}, &inject);
  ScaleConversion conv = config.conversion;
  conv.reference_depth = reference_depth_from_map(synthetic);
  worst = std::max(worst, max_abs_diff(inject.scale_low[1].values,
                                       depth_map_to_scale_map(synthetic, conv).values));
  const bool changed = max_abs_diff(inject.scale_low[1].values, probe.scale_low[1].values) > 0.0;
  return result("decoder", "self_guidance_loop_closure", worst <= 1e-12 && changed, worst,
                "scale maps track previous/injected predictions per the conversion");
}

CheckResult d_feature_to_depth(std::uint64_t seed) {
  Rng rng = Rng(seed).split(41);
  const DepthRange range;
  const Tensor4 feature = rand_tensor(rng, 1, 2, 4, 4);

  ConvKernel head(1, 2, 3);
  head.bias[0] = -40.0;  // d -> 0
  double worst = std::abs(feature_to_depth(feature, head, range).at(0, 0, 0, 0) - 100.0);
  head.bias[0] = 40.0;  // d -> 1
  worst = std::max(worst, std::abs(feature_to_depth(feature, head, range).at(0, 0, 0, 0) - 0.1));
  head.bias[0] = 0.0;  // d = 0.5
  const double expected = 1.0 / (0.01 + (10.0 - 0.01) * 0.5);
  worst = std::max(worst,
                   std::abs(feature_to_depth(Tensor4(1, 2, 4, 4, 0.0), head, range).at(0, 0, 0, 0) -
                            expected));
  return result("decoder", "feature_to_depth_parameterization", worst <= 1e-9, worst,
                "sigmoid-disparity endpoints and midpoint");
}

// ---- gradcheck -------------------------------------------------------------

CheckResult gc_fd_basics(std::uint64_t) {
  Tensor4 x(1, 1, 1, 1, 3.0);
  auto sq = [](const Tensor4& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
    return s;
  };
  const Tensor4 g = finite_diff_grad(sq, x);
  double worst = std::abs(g.at(0, 0, 0, 0) - 6.0);

  Tensor4 lin_x(1, 1, 1, 4);
  std::array<double, 4> coeff{1.5, -2.0, 0.25, 3.0};
  for (int i = 0; i < 4; ++i) lin_x[i] = 0.3 * i - 0.5;
  auto lin = [&](const Tensor4& t) {
    double s = 7.0;
    for (int i = 0; i < 4; ++i) s += coeff[i] * t[i];
    return s;
  };
  const Tensor4 gl = finite_diff_grad(lin, lin_x);
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(gl[i] - coeff[i]));
  return result("gradcheck", "finite_difference_basics", worst <= 1e-9, worst,
                "quadratic and affine objectives");
}

// Weighted-sum objective so every output element contributes a distinct grad.
Tensor4 rand_like(Rng& rng, const Tensor4& t) {
  Tensor4 g(t.n(), t.c(), t.h(), t.w());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(-1.0, 1.0);
  return g;
}

double weighted_sum(const Tensor4& out, const Tensor4& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

CheckResult gc_dcsconv(std::uint64_t seed) {
  Rng rng = Rng(seed).split(50);
  const Tensor4 input = rand_tensor(rng, 1, 2, 7, 7);
  const ConvKernel kernel = rand_kernel(rng, 2, 2, 3);

  bool pass = true;
  double worst = 0.0;
  for (int variant = 0; variant < 2; ++variant) {
    ScaleConversion conv;
    ScaleMap scale = variant == 0 ? const_scale(input, 2.7)
                                  : ScaleMap{rand_tensor(rng, 1, 1, 7, 7, 2.1, 2.4), conv};
    const Tensor4 out = dcsconv_forward(input, kernel, scale);
    const Tensor4 lw = rand_like(rng, out);

    const DcsconvGrads analytic = dcsconv_backward(input, kernel, scale, lw, true);

    const Tensor4 gi = finite_diff_grad(
        [&](const Tensor4& x) { return weighted_sum(dcsconv_forward(x, kernel, scale), lw); },
        input);
    GradReport r = compare_grads("grad_input", analytic.grad_input, gi, 1e-4, 1e-8);
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);

    ConvKernel probe = kernel;
    auto kernel_loss = [&]() { return weighted_sum(dcsconv_forward(input, probe, scale), lw); };
    std::vector<double> gw = finite_diff_grad_vec(kernel_loss, probe.weights);
    std::vector<double> gb = finite_diff_grad_vec(kernel_loss, probe.bias);
    r = compare_grads("grad_kernel", analytic.grad_kernel.weights, gw, 1e-4, 1e-8);
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);
    r = compare_grads("grad_bias", analytic.grad_kernel.bias, gb, 1e-4, 1e-8);
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);

    const Tensor4 gs = finite_diff_grad(
        [&](const Tensor4& s) {
          return weighted_sum(dcsconv_forward(input, kernel, ScaleMap{s, scale.conversion}), lw);
        },
        scale.values);
    r = compare_grads("grad_scale", analytic.grad_scale, gs, 1e-4, 1e-8);
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);

    // zero upstream grad zeroes everything
    const DcsconvGrads z =
        dcsconv_backward(input, kernel, scale, Tensor4(1, 2, 7, 7, 0.0), true);
    for (std::size_t i = 0; i < z.grad_input.size(); ++i)
      if (z.grad_input[i] != 0.0) pass = false;
    for (double v : z.grad_kernel.weights)
      if (v != 0.0) pass = false;
  }
  return result("gradcheck", "dcsconv_backward_vs_finite_differences", pass, worst,
                "all four gradients, scale 2.7 and a random safe field");
}

CheckResult gc_glsconv(std::uint64_t seed) {
  Rng rng = Rng(seed).split(51);
  const Tensor4 input = rand_tensor(rng, 1, 2, 6, 6);
  const ConvKernel kernel = rand_kernel(rng, 2, 2, 3);
  ScaleHeadParams head;
  head.proj_weights = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
  head.proj_bias = rng.uniform(-0.2, 0.2);
  head.mode = DepthToScaleMode::kAffine;
  head.gain = 0.2;
  head.offset = 1.8;

  const GlsconvResult fwd = glsconv_forward(input, kernel, head);
  bool pass = true;
  // positivity and safe distance from kinks and clamp bounds
  for (std::size_t i = 0; i < fwd.learned_scale.values.size(); ++i) {
    const double k = fwd.learned_scale.values[i];
    if (!(k > head.conversion.scale_min + 0.1 && k < head.conversion.scale_max - 0.1))
      pass = false;
    const double odd_dist = std::abs(k - (2.0 * std::round((k - 1.0) / 2.0) + 1.0));
    if (odd_dist < 0.1) pass = false;
  }

  const Tensor4 lw = rand_like(rng, fwd.output);
  const GlsconvGrads analytic = glsconv_backward(input, kernel, head, lw);

  double worst = 0.0;
  auto update = [&](const GradReport& r) {
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);
  };

  ScaleHeadParams probe = head;
  auto head_loss = [&]() { return weighted_sum(glsconv_forward(input, kernel, probe).output, lw); };
  update(compare_grads("proj_weights", analytic.grad_proj_weights,
                       finite_diff_grad_vec(head_loss, probe.proj_weights), 1e-4, 1e-8));
  std::vector<double> scalars{probe.proj_bias, probe.gain, probe.offset};
  auto scalar_loss = [&]() {
    probe.proj_bias = scalars[0];
    probe.gain = scalars[1];
    probe.offset = scalars[2];
    return weighted_sum(glsconv_forward(input, kernel, probe).output, lw);
  };
  const std::vector<double> gs = finite_diff_grad_vec(scalar_loss, scalars);
  update(compare_grads("head_scalars",
                       {analytic.grad_proj_bias, analytic.grad_gain, analytic.grad_offset}, gs,
                       1e-4, 1e-8));
  probe = head;

  ConvKernel kprobe = kernel;
  auto kernel_loss = [&]() { return weighted_sum(glsconv_forward(input, kprobe, head).output, lw); };
  update(compare_grads("kernel_weights", analytic.grad_kernel.weights,
                       finite_diff_grad_vec(kernel_loss, kprobe.weights), 1e-4, 1e-8));
  update(compare_grads("kernel_bias", analytic.grad_kernel.bias,
                       finite_diff_grad_vec(kernel_loss, kprobe.bias), 1e-4, 1e-8));

  update(compare_grads(
      "input", analytic.grad_input,
      finite_diff_grad(
          [&](const Tensor4& x) { return weighted_sum(glsconv_forward(x, kernel, head).output, lw); },
          input),
      1e-4, 1e-8));

  // reduction: head pinned to a constant scale of 3 reduces to standard conv
  ScaleHeadParams fixed3 = head;
  fixed3.proj_weights = {0.0, 0.0};
  fixed3.proj_bias = 5.0;  // depth = softplus(5) + eps
  fixed3.mode = DepthToScaleMode::kAffine;
  fixed3.gain = 0.0;
  fixed3.offset = 3.0;
  const double red = max_rel_diff(glsconv_forward(input, kernel, fixed3).output,
                                  conv2d_standard(input, kernel));
  if (red > 1e-12) pass = false;
  return result("gradcheck", "glsconv_end_to_end_vs_finite_differences", pass, worst,
                "head, kernel and input gradients; constant-scale reduction");
}

CheckResult gc_dcsf(std::uint64_t seed) {
  Rng rng = Rng(seed).split(52);
  const int C = 2;
  const Tensor4 f_dcsc = rand_tensor(rng, 1, C, 5, 5);
  const Tensor4 f_c = rand_tensor(rng, 1, C, 5, 5);
  DcsfParams params = rand_dcsf(rng, C);
  ScaleConversion conv;
  const ScaleMap scale{rand_tensor(rng, 1, 1, 5, 5, 1.5, 8.0), conv};

  const Tensor4 out = dcsf_forward(f_dcsc, f_c, scale, params);
  const Tensor4 lw = rand_like(rng, out);
  const DcsfGrads analytic = dcsf_backward(f_dcsc, f_c, scale, params, lw);

  bool pass = true;
  double worst = 0.0;
  auto update = [&](const GradReport& r) {
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);
  };

  update(compare_grads(
      "f_dcsc", analytic.grad_f_dcsc,
      finite_diff_grad(
          [&](const Tensor4& x) { return weighted_sum(dcsf_forward(x, f_c, scale, params), lw); },
          f_dcsc),
      1e-4, 1e-8));
  update(compare_grads(
      "f_c", analytic.grad_f_c,
      finite_diff_grad(
          [&](const Tensor4& x) { return weighted_sum(dcsf_forward(f_dcsc, x, scale, params), lw); },
          f_c),
      1e-4, 1e-8));

  DcsfParams probe = params;
  auto loss = [&]() { return weighted_sum(dcsf_forward(f_dcsc, f_c, scale, probe), lw); };
  const std::pair<ConvKernel DcsfParams::*, const char*> members[] = {
      {&DcsfParams::inject_c, "inject_c"},       {&DcsfParams::se_reduce, "se_reduce"},
      {&DcsfParams::se_expand, "se_expand"},     {&DcsfParams::inject_s, "inject_s"},
      {&DcsfParams::spatial_conv, "spatial_conv"}, {&DcsfParams::out_proj, "out_proj"}};
  for (const auto& [member, name] : members) {
    update(compare_grads(std::string(name) + ".w", (analytic.grad_params.*member).weights,
                         finite_diff_grad_vec(loss, (probe.*member).weights), 1e-4, 1e-8));
    update(compare_grads(std::string(name) + ".b", (analytic.grad_params.*member).bias,
                         finite_diff_grad_vec(loss, (probe.*member).bias), 1e-4, 1e-8));
  }
  return result("gradcheck", "dcsf_backward_vs_finite_differences", pass, worst,
                "both feature inputs and every parameter bank");
}

template <class Fn>
void visit_decoder_kernels(DecoderParams& p, Fn&& fn) {
  fn("top_conv", p.top_conv);
  fn("top_depth_head", p.top_depth_head);
  for (int i = 0; i < 4; ++i) {
    const std::string lvl = "level" + std::to_string(3 - i) + ".";
    DcsdLevelParams& l = p.levels[i];
    fn(lvl + "dec_dcsc", l.dec_dcsc);
    fn(lvl + "dec_conv", l.dec_conv);
    fn(lvl + "enc_dcsc", l.enc_dcsc);
    fn(lvl + "merge_dcsc", l.merge_dcsc);
    fn(lvl + "merge_conv", l.merge_conv);
    fn(lvl + "squeeze", l.squeeze);
    fn(lvl + "depth_head", l.depth_head);
    const std::pair<DcsfParams*, const char*> fuses[] = {
        {&l.dec_fuse, "dec_fuse."}, {&l.enc_fuse, "enc_fuse."}, {&l.merge_fuse, "merge_fuse."}};
    for (const auto& [fuse, tag] : fuses) {
      fn(lvl + tag + "inject_c", fuse->inject_c);
      fn(lvl + tag + "se_reduce", fuse->se_reduce);
      fn(lvl + tag + "se_expand", fuse->se_expand);
      fn(lvl + tag + "inject_s", fuse->inject_s);
      fn(lvl + tag + "spatial_conv", fuse->spatial_conv);
      fn(lvl + tag + "out_proj", fuse->out_proj);
    }
  }
}

CheckResult gc_decoder(std::uint64_t seed) {
  const std::vector<int> enc_ch{4, 4, 4, 4, 4};
  const std::vector<int> dec_ch{4, 4, 4, 4, 4};
  const auto pyramid = make_feature_pyramid(16, 16, enc_ch, seed + 3);
  DecoderParams params = make_decoder_params(enc_ch, dec_ch, seed + 3);

  DecoderConfig config = toy_config();
  config.reference_depth_override = 10.0;

  // Prior guidance keeps the scale maps fixed (to ~2.4, away from the
  // bilinear kinks at odd integers), so the objective is smooth in
  // every parameter.
  Rng rng = Rng(seed).split(53);
  std::vector<Tensor4> prior;
  for (const Tensor4& f : pyramid)
    prior.push_back(rand_tensor(rng, f.n(), 1, f.h(), f.w(), 12.2, 12.8));

  auto loss = [&](const DecoderParams& p) {
    const auto depths = decoder_forward(pyramid, p, config, prior);
    double s = 0.0;
    for (std::size_t i = 0; i < depths.back().size(); ++i) s += depths.back()[i];
    return s / static_cast<double>(depths.back().size());
  };

  DecoderGrads analytic = decoder_backward(pyramid, params, config, prior);

  bool pass = true;
  double worst = 0.0;
  const double h = 1e-5;
  visit_decoder_kernels(params, [&](const std::string& name, ConvKernel& kernel) {
    ConvKernel* grad_kernel = nullptr;
    visit_decoder_kernels(analytic.params, [&](const std::string& gname, ConvKernel& gk) {
      if (gname == name) grad_kernel = &gk;
    });
    // sample a few weight elements plus one bias element per kernel
    std::vector<std::size_t> idx;
    for (int s = 0; s < 3; ++s) idx.push_back(rng.next_u64() % kernel.weights.size());
    std::vector<double> ana, num;
    for (std::size_t i : idx) {
      ana.push_back(grad_kernel->weights[i]);
      const double saved = kernel.weights[i];
      kernel.weights[i] = saved + h;
      const double fp = loss(params);
      kernel.weights[i] = saved - h;
      const double fm = loss(params);
      kernel.weights[i] = saved;
      num.push_back((fp - fm) / (2.0 * h));
    }
    const std::size_t bi = rng.next_u64() % kernel.bias.size();
    ana.push_back(grad_kernel->bias[bi]);
    const double saved = kernel.bias[bi];
    kernel.bias[bi] = saved + h;
    const double fp = loss(params);
    kernel.bias[bi] = saved - h;
    const double fm = loss(params);
    kernel.bias[bi] = saved;
    num.push_back((fp - fm) / (2.0 * h));

    const GradReport r = compare_grads(name, ana, num, 1e-3, 1e-8);
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);
  });

  // encoder feature gradients, sampled
  for (int lvl = 0; lvl < 5; ++lvl) {
    std::vector<std::size_t> idx;
    for (int s = 0; s < 3; ++s) idx.push_back(rng.next_u64() % pyramid[lvl].size());
    auto feature_loss = [&](const Tensor4& f) {
      std::vector<Tensor4> mod = pyramid;
      mod[lvl] = f;
      const auto depths = decoder_forward(mod, params, config, prior);
      double s = 0.0;
      for (std::size_t i = 0; i < depths.back().size(); ++i) s += depths.back()[i];
      return s / static_cast<double>(depths.back().size());
    };
    const Tensor4 num = finite_diff_grad(feature_loss, pyramid[lvl], h, idx);
    std::vector<double> ana_v, num_v;
    for (std::size_t i : idx) {
      ana_v.push_back(analytic.enc_features[lvl][i]);
      num_v.push_back(num[i]);
    }
    const GradReport r = compare_grads("enc" + std::to_string(4 - lvl), ana_v, num_v, 1e-3, 1e-8);
    pass = pass && r.pass;
    worst = std::max(worst, r.max_rel_error);
  }
  return result("gradcheck", "decoder_backward_vs_finite_differences", pass, worst,
                "sampled elements of every parameter tensor and encoder level");
}

CheckResult gc_negative_control(std::uint64_t seed) {
  Rng rng = Rng(seed).split(54);
  const Tensor4 input = rand_tensor(rng, 1, 1, 4, 4);
  const ConvKernel kernel = rand_kernel(rng, 1, 1, 3);
  const ScaleMap scale = const_scale(input, 2.5);
  const Tensor4 out = dcsconv_forward(input, kernel, scale);
  const Tensor4 lw = rand_like(rng, out);

  DcsconvGrads g = dcsconv_backward(input, kernel, scale, lw, false);
  // sabotage one kernel gradient element
  g.grad_kernel.weights[4] = -g.grad_kernel.weights[4];

  ConvKernel probe = kernel;
  auto loss = [&]() { return weighted_sum(dcsconv_forward(input, probe, scale), lw); };
  const std::vector<double> num = finite_diff_grad_vec(loss, probe.weights);
  const GradReport r = compare_grads("sabotaged_kernel", g.grad_kernel.weights, num, 1e-4, 1e-8);
  const bool detected = !r.pass && r.worst_index == 4;
  return result("gradcheck", "sabotaged_gradient_detected", detected, r.max_rel_error,
                "flipped sign must fail compare_grads at the flipped element");
}

// ---- registry --------------------------------------------------------------

const std::vector<RegisteredCheck>& registry() {
  static const std::vector<RegisteredCheck> checks = {
      {"geometry", "projection_rescale_composition", {"project_length", "rescale_length"},
       g_composition},
      {"geometry", "depth_to_scale_monotonic", {"depth_to_scale"}, g_monotonic},
      {"geometry", "unclamped_scale_depth_identity", {"depth_to_scale"}, g_unclamped_identity},
      {"geometry", "scale_map_pixelwise_oracle", {"depth_map_to_scale_map"}, g_scale_map_oracle},
      {"geometry", "reference_depth_mean", {"reference_depth_from_map"}, g_reference_depth},
      {"geometry", "normalize_scale_map_values", {"normalize_scale_map"}, g_normalize},

      {"conv", "dcsconv_reduces_to_standard_at_scale3", {"dcsconv_forward", "conv2d_standard"},
       c_reduction_scale3},
      {"conv", "dcsconv_dilation_equivalence", {"dcsconv_forward", "conv2d_naive_oracle"},
       c_dilation},
      {"conv", "standard_conv_vs_naive_oracle", {"conv2d_standard", "conv2d_naive_oracle"},
       c_standard_vs_naive},
      {"conv", "dcsconv_linear_in_input", {"dcsconv_forward"}, c_linearity},

      {"dmsf", "gaussian_softmax_reference_value", {"dmsf_weights"}, m_eq4_value},
      {"dmsf", "weights_simplex_and_nearest_argmax", {"dmsf_weights"}, m_simplex},
      {"dmsf", "dmsf_forward_vs_pixel_oracle", {"dmsf_forward"}, m_forward_oracle},

      {"fusion", "se_attention_vs_scalar_oracle", {"se_channel_attention"}, f_se_oracle},
      {"fusion", "spatial_attention_contract", {"dcsf_spatial_attention"}, f_spatial},
      {"fusion", "dcsf_forward_vs_straight_line_oracle", {"dcsf_forward"}, f_dcsf_oracle},
      {"fusion", "channel_attention_spatial_permutation_invariant", {"se_channel_attention"},
       f_mc_permutation},
      {"fusion", "saturated_gates_reduce_to_residual_doubling", {"dcsf_forward"}, f_saturation},

      {"decoder", "pyramid_shape_and_range_contract",
       {"decoder_forward", "dcsd_decode_level", "feature_to_depth"}, d_contract},
      {"decoder", "constant_prior_reduces_to_standard_decoder", {"decoder_forward"}, d_reduction},
      {"decoder", "self_guidance_loop_closure", {"decoder_forward"}, d_self_guidance},
      {"decoder", "feature_to_depth_parameterization", {"feature_to_depth"}, d_feature_to_depth},

      {"gradcheck", "finite_difference_basics", {}, gc_fd_basics},
      {"gradcheck", "dcsconv_backward_vs_finite_differences", {"dcsconv_backward"}, gc_dcsconv},
      {"gradcheck", "glsconv_end_to_end_vs_finite_differences", {"glsconv_forward"}, gc_glsconv},
      {"gradcheck", "dcsf_backward_vs_finite_differences", {"dcsf_forward"}, gc_dcsf},
      {"gradcheck", "decoder_backward_vs_finite_differences",
       {"decoder_forward", "dcsd_decode_level"}, gc_decoder},
      {"gradcheck", "sabotaged_gradient_detected", {"dcsconv_backward"}, gc_negative_control},
  };
  return checks;
}

const std::vector<std::string>& required_ops() {
  static const std::vector<std::string> ops = {
      // geometry
      "project_length", "rescale_length", "depth_to_scale", "depth_map_to_scale_map",
      "reference_depth_from_map", "normalize_scale_map",
      // conv
      "conv2d_standard", "conv2d_naive_oracle", "dcsconv_forward", "dcsconv_backward",
      "dmsf_weights", "dmsf_forward", "glsconv_forward",
      // fusion
      "se_channel_attention", "dcsf_spatial_attention", "dcsf_forward",
      // decoder
      "feature_to_depth", "dcsd_decode_level", "decoder_forward"};
  return ops;
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"geometry", "conv", "dmsf", "fusion", "decoder", "gradcheck"};
}

bool is_suite(const std::string& name) {
  if (name == "all") return true;
  const auto names = suite_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::string> missing_op_coverage() {
  std::set<std::string> covered;
  for (const auto& check : registry())
    covered.insert(check.covered_ops.begin(), check.covered_ops.end());
  std::vector<std::string> missing;
  for (const auto& op : required_ops())
    if (!covered.count(op)) missing.push_back(op);
  return missing;
}

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "all") return run_all(seed);
  std::vector<CheckResult> results;
  for (const auto& check : registry())
    if (check.suite == suite) results.push_back(check.fn(seed));
  return results;
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> results;
  for (const auto& check : registry()) results.push_back(check.fn(seed));
  const auto missing = missing_op_coverage();
  std::ostringstream detail;
  for (const auto& op : missing) detail << op << " ";
  results.push_back(result("registry", "operation_coverage", missing.empty(),
                           static_cast<double>(missing.size()),
                           missing.empty() ? "all contracted operations exercised"
                                           : "missing: " + detail.str()));
  return results;
}

void write_csv(const std::string& path, const std::vector<CheckResult>& results) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checks: cannot open '" + path + "'");
  os << "suite,name,pass,metric,detail\n";
  os.precision(17);
  for (const auto& r : results)
    os << r.suite << "," << r.name << "," << (r.pass ? 1 : 0) << "," << r.metric << ",\""
       << r.detail << "\"\n";
}

}  // namespace dcs::checks
