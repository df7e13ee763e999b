#include "dcs/conv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dcs/parallel.hpp"

namespace dcs {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Four zero-padded corners around a fractional sample position,
// with the bilinear weights needed for both value and gradients.
struct BilinearTaps {
  int y0, x0;
  double fy, fx;
  double v00, v01, v10, v11;

  double value() const {
    return (1.0 - fy) * (1.0 - fx) * v00 + (1.0 - fy) * fx * v01 + fy * (1.0 - fx) * v10 +
           fy * fx * v11;
  }
  double d_dy() const { return (1.0 - fx) * (v10 - v00) + fx * (v11 - v01); }
  double d_dx() const { return (1.0 - fy) * (v01 - v00) + fy * (v11 - v10); }
};

BilinearTaps gather(const Tensor4& f, int n, int c, double y, double x) {
  BilinearTaps t;
  t.y0 = static_cast<int>(std::floor(y));
  t.x0 = static_cast<int>(std::floor(x));
  t.fy = y - t.y0;
  t.fx = x - t.x0;
  auto tap = [&](int yy, int xx) -> double {
    if (yy < 0 || yy >= f.h() || xx < 0 || xx >= f.w()) return 0.0;
    return f.at(n, c, yy, xx);
  };
  t.v00 = tap(t.y0, t.x0);
  t.v01 = tap(t.y0, t.x0 + 1);
  t.v10 = tap(t.y0 + 1, t.x0);
  t.v11 = tap(t.y0 + 1, t.x0 + 1);
  return t;
}

void check_scale_map(const Tensor4& input, const ScaleMap& scale, const char* op) {
  if (scale.values.n() != input.n() || scale.values.c() != 1 ||
      scale.values.h() != input.h() || scale.values.w() != input.w()) {
    std::ostringstream os;
    os << op << ": scale map dims " << scale.values.dims_str() << " do not match input "
       << input.dims_str();
    throw std::invalid_argument(os.str());
  }
  const double lo = scale.conversion.scale_min, hi = scale.conversion.scale_max;
  for (std::size_t i = 0; i < scale.values.size(); ++i) {
    const double v = scale.values[i];
    if (!(std::isfinite(v) && v > 0.0 && v >= lo && v <= hi)) {
      std::ostringstream os;
      os << op << ": scale value " << v << " at flat index " << i << " violates clamp range ["
         << lo << "," << hi << "]";
      throw std::domain_error(os.str());
    }
  }
}

}  // namespace

ConvKernel::ConvKernel(int out_c, int in_c, int k)
    : out_channels(out_c), in_channels(in_c), size(k) {
  if (out_c < 1 || in_c < 1 || k < 1 || k % 2 == 0)
    throw std::invalid_argument("ConvKernel: channels >= 1 and odd size required");
  weights.assign(static_cast<std::size_t>(out_c) * in_c * k * k, 0.0);
  bias.assign(out_c, 0.0);
}

void ConvKernel::validate(int input_channels) const {
  if (in_channels != input_channels) {
    std::ostringstream os;
    os << "ConvKernel: kernel expects " << in_channels << " input channels, got "
       << input_channels;
    throw std::invalid_argument(os.str());
  }
  if (weights.size() != static_cast<std::size_t>(out_channels) * in_channels * size * size ||
      bias.size() != static_cast<std::size_t>(out_channels))
    throw std::invalid_argument("ConvKernel: weight/bias storage does not match dims");
}

Tensor4 conv2d_standard(const Tensor4& input, const ConvKernel& kernel) {
  kernel.validate(input.c());
  const int pad = (kernel.size - 1) / 2;
  Tensor4 out(input.n(), kernel.out_channels, input.h(), input.w());

  parallel_for(static_cast<std::size_t>(input.n()) * kernel.out_channels * input.h(),
               [&](std::size_t task) {
                 const int y = static_cast<int>(task % input.h());
                 const int oc = static_cast<int>((task / input.h()) % kernel.out_channels);
                 const int n = static_cast<int>(task / input.h() / kernel.out_channels);
                 for (int x = 0; x < input.w(); ++x) {
                   double acc = kernel.bias[oc];
                   for (int ic = 0; ic < input.c(); ++ic) {
                     for (int ky = 0; ky < kernel.size; ++ky) {
                       const int sy = y + ky - pad;
                       if (sy < 0 || sy >= input.h()) continue;
                       for (int kx = 0; kx < kernel.size; ++kx) {
                         const int sx = x + kx - pad;
                         if (sx < 0 || sx >= input.w()) continue;
                         acc += kernel.w(oc, ic, ky, kx) * input.at(n, ic, sy, sx);
                       }
                     }
                   }
                   out.at(n, oc, y, x) = acc;
                 }
               });
  return out;
}

Tensor4 conv2d_naive_oracle(const Tensor4& input, const ConvKernel& kernel, int dilation) {
  kernel.validate(input.c());
  if (dilation < 1) throw std::invalid_argument("conv2d_naive_oracle: dilation must be >= 1");
  const int half = (kernel.size - 1) / 2;
  Tensor4 out(input.n(), kernel.out_channels, input.h(), input.w());
  for (int n = 0; n < input.n(); ++n)
    for (int oc = 0; oc < kernel.out_channels; ++oc)
      for (int y = 0; y < input.h(); ++y)
        for (int x = 0; x < input.w(); ++x) {
          double acc = kernel.bias[oc];
          for (int ic = 0; ic < input.c(); ++ic)
            for (int ky = -half; ky <= half; ++ky)
              for (int kx = -half; kx <= half; ++kx) {
                const int sy = y + ky * dilation;
                const int sx = x + kx * dilation;
                double v = 0.0;
                if (sy >= 0 && sy < input.h() && sx >= 0 && sx < input.w())
                  v = input.at(n, ic, sy, sx);
                acc += kernel.w(oc, ic, ky + half, kx + half) * v;
              }
          out.at(n, oc, y, x) = acc;
        }
  return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const ConvKernel& kernel,
                          const Tensor4& grad_output) {
  kernel.validate(input.c());
  if (grad_output.n() != input.n() || grad_output.c() != kernel.out_channels ||
      grad_output.h() != input.h() || grad_output.w() != input.w())
    throw std::invalid_argument("conv2d_backward: grad_output dims " + grad_output.dims_str() +
                                " do not match forward output");
  const int pad = (kernel.size - 1) / 2;
  ConvGrads g{Tensor4(input.n(), input.c(), input.h(), input.w()),
              ConvKernel(kernel.out_channels, kernel.in_channels, kernel.size)};
  for (int n = 0; n < input.n(); ++n)
    for (int oc = 0; oc < kernel.out_channels; ++oc)
      for (int y = 0; y < input.h(); ++y)
        for (int x = 0; x < input.w(); ++x) {
          const double go = grad_output.at(n, oc, y, x);
          if (go == 0.0) continue;
          g.grad_kernel.bias[oc] += go;
          for (int ic = 0; ic < input.c(); ++ic)
            for (int ky = 0; ky < kernel.size; ++ky) {
              const int sy = y + ky - pad;
              if (sy < 0 || sy >= input.h()) continue;
              for (int kx = 0; kx < kernel.size; ++kx) {
                const int sx = x + kx - pad;
                if (sx < 0 || sx >= input.w()) continue;
                g.grad_kernel.w(oc, ic, ky, kx) += go * input.at(n, ic, sy, sx);
                g.grad_input.at(n, ic, sy, sx) += go * kernel.w(oc, ic, ky, kx);
              }
            }
        }
  return g;
}

Tensor4 dcsconv_forward(const Tensor4& input, const ConvKernel& kernel, const ScaleMap& scale) {
  kernel.validate(input.c());
  if (kernel.size != 3) throw std::invalid_argument("dcsconv_forward: kernel must be 3x3");
  check_scale_map(input, scale, "dcsconv_forward");

  Tensor4 out(input.n(), kernel.out_channels, input.h(), input.w());
  parallel_for(static_cast<std::size_t>(input.n()) * kernel.out_channels * input.h(),
               [&](std::size_t task) {
                 const int y = static_cast<int>(task % input.h());
                 const int oc = static_cast<int>((task / input.h()) % kernel.out_channels);
                 const int n = static_cast<int>(task / input.h() / kernel.out_channels);
                 for (int x = 0; x < input.w(); ++x) {
                   const double r = (scale.values.at(n, 0, y, x) - 1.0) * 0.5;
                   double acc = kernel.bias[oc];
                   for (int ic = 0; ic < input.c(); ++ic)
                     for (int i = -1; i <= 1; ++i)
                       for (int j = -1; j <= 1; ++j)
                         acc += kernel.w(oc, ic, i + 1, j + 1) *
                                gather(input, n, ic, y + r * i, x + r * j).value();
                   out.at(n, oc, y, x) = acc;
                 }
               });
  return out;
}

DcsconvGrads dcsconv_backward(const Tensor4& input, const ConvKernel& kernel,
                              const ScaleMap& scale, const Tensor4& grad_output,
                              bool propagate_scale) {
  kernel.validate(input.c());
  if (kernel.size != 3) throw std::invalid_argument("dcsconv_backward: kernel must be 3x3");
  check_scale_map(input, scale, "dcsconv_backward");
  if (grad_output.n() != input.n() || grad_output.c() != kernel.out_channels ||
      grad_output.h() != input.h() || grad_output.w() != input.w())
    throw std::invalid_argument("dcsconv_backward: grad_output dims " + grad_output.dims_str() +
                                " do not match forward output");

  DcsconvGrads g{Tensor4(input.n(), input.c(), input.h(), input.w()),
                 ConvKernel(kernel.out_channels, kernel.in_channels, 3),
                 Tensor4(input.n(), 1, input.h(), input.w())};

  auto scatter = [&](int n, int ic, int yy, int xx, double v) {
    if (yy < 0 || yy >= input.h() || xx < 0 || xx >= input.w()) return;
    g.grad_input.at(n, ic, yy, xx) += v;
  };

  for (int n = 0; n < input.n(); ++n)
    for (int y = 0; y < input.h(); ++y)
      for (int x = 0; x < input.w(); ++x) {
        const double r = (scale.values.at(n, 0, y, x) - 1.0) * 0.5;
        for (int i = -1; i <= 1; ++i)
          for (int j = -1; j <= 1; ++j) {
            // d(sample pos)/d(k_d) = (i/2, j/2)
            const double sy = y + r * i;
            const double sx = x + r * j;
            for (int ic = 0; ic < input.c(); ++ic) {
              const BilinearTaps t = gather(input, n, ic, sy, sx);
              const double value = t.value();
              double wg = 0.0;  // sum over oc of go * w
              for (int oc = 0; oc < kernel.out_channels; ++oc) {
                const double go = grad_output.at(n, oc, y, x);
                if (go == 0.0) continue;
                g.grad_kernel.w(oc, ic, i + 1, j + 1) += go * value;
                wg += go * kernel.w(oc, ic, i + 1, j + 1);
              }
              if (wg != 0.0) {
                scatter(n, ic, t.y0, t.x0, wg * (1.0 - t.fy) * (1.0 - t.fx));
                scatter(n, ic, t.y0, t.x0 + 1, wg * (1.0 - t.fy) * t.fx);
                scatter(n, ic, t.y0 + 1, t.x0, wg * t.fy * (1.0 - t.fx));
                scatter(n, ic, t.y0 + 1, t.x0 + 1, wg * t.fy * t.fx);
                if (propagate_scale)
                  g.grad_scale.at(n, 0, y, x) +=
                      wg * (0.5 * i * t.d_dy() + 0.5 * j * t.d_dx());
              }
            }
          }
        for (int oc = 0; oc < kernel.out_channels; ++oc)
          g.grad_kernel.bias[oc] += grad_output.at(n, oc, y, x);
      }
  return g;
}

void DmsfParams::validate(int input_channels) const {
  if (!(sigma > 0.0)) throw std::domain_error("DmsfParams: sigma must be > 0");
  for (int b = 0; b < 3; ++b) {
    branches[b].validate(input_channels);
    if (branches[b].size % 2 == 0) throw std::invalid_argument("DmsfParams: branch sizes odd");
    if (b > 0 && branches[b].size <= branches[b - 1].size)
      throw std::invalid_argument("DmsfParams: branch sizes must be strictly increasing");
    if (branches[b].out_channels != branches[0].out_channels)
      throw std::invalid_argument("DmsfParams: branch output widths must agree");
  }
}

std::array<double, 3> dmsf_weights(double k_d, const std::array<double, 3>& branch_sizes,
                                   double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("dmsf_weights: sigma must be > 0");
  std::array<double, 3> g;
  for (int i = 0; i < 3; ++i) {
    const double d = k_d - branch_sizes[i];
    g[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  const double m = std::max({g[0], g[1], g[2]});
  std::array<double, 3> e;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    e[i] = std::exp(g[i] - m);
    sum += e[i];
  }
  for (int i = 0; i < 3; ++i) e[i] /= sum;
  return e;
}

Tensor4 dmsf_forward(const Tensor4& input, const DmsfParams& params, const ScaleMap& scale) {
  params.validate(input.c());
  check_scale_map(input, scale, "dmsf_forward");

  std::array<Tensor4, 3> branch_out;
  std::array<double, 3> sizes;
  for (int b = 0; b < 3; ++b) {
    branch_out[b] = conv2d_standard(input, params.branches[b]);
    sizes[b] = params.branches[b].size;
  }

  Tensor4 out(input.n(), params.branches[0].out_channels, input.h(), input.w());
  for (int n = 0; n < input.n(); ++n)
    for (int y = 0; y < input.h(); ++y)
      for (int x = 0; x < input.w(); ++x) {
        const auto a = dmsf_weights(scale.values.at(n, 0, y, x), sizes, params.sigma);
        for (int c = 0; c < out.c(); ++c)
          out.at(n, c, y, x) = a[0] * branch_out[0].at(n, c, y, x) +
                               a[1] * branch_out[1].at(n, c, y, x) +
                               a[2] * branch_out[2].at(n, c, y, x);
      }
  return out;
}

void ScaleHeadParams::validate(int input_channels) const {
  if (proj_weights.size() != static_cast<std::size_t>(input_channels))
    throw std::invalid_argument("ScaleHeadParams: projection width does not match input channels");
  conversion.validate();
  if (!(eps > 0.0)) throw std::domain_error("ScaleHeadParams: eps must be > 0");
}

namespace {

// Shared forward of the scale head; z and depth are per-pixel intermediates.
void glsconv_head_forward(const Tensor4& input, const ScaleHeadParams& head, Tensor4& z_out,
                          Tensor4& depth_out, Tensor4& scale_out) {
  for (int n = 0; n < input.n(); ++n)
    for (int y = 0; y < input.h(); ++y)
      for (int x = 0; x < input.w(); ++x) {
        double z = head.proj_bias;
        for (int ic = 0; ic < input.c(); ++ic)
          z += head.proj_weights[ic] * input.at(n, ic, y, x);
        const double depth = softplus(z) + head.eps;
        double k;
        if (head.mode == DepthToScaleMode::kFixed)
          k = head.conversion.base_kernel * head.conversion.reference_depth / depth;
        else
          k = head.gain * depth + head.offset;
        z_out.at(n, 0, y, x) = z;
        depth_out.at(n, 0, y, x) = depth;
        scale_out.at(n, 0, y, x) =
            std::clamp(k, head.conversion.scale_min, head.conversion.scale_max);
      }
}

}  // namespace

GlsconvResult glsconv_forward(const Tensor4& input, const ConvKernel& kernel,
                              const ScaleHeadParams& head) {
  head.validate(input.c());
  Tensor4 z(input.n(), 1, input.h(), input.w());
  Tensor4 depth(input.n(), 1, input.h(), input.w());
  Tensor4 k(input.n(), 1, input.h(), input.w());
  glsconv_head_forward(input, head, z, depth, k);
  ScaleMap scale{std::move(k), head.conversion};
  Tensor4 out = dcsconv_forward(input, kernel, scale);
  return GlsconvResult{std::move(out), std::move(scale)};
}

GlsconvGrads glsconv_backward(const Tensor4& input, const ConvKernel& kernel,
                              const ScaleHeadParams& head, const Tensor4& grad_output) {
  head.validate(input.c());
  Tensor4 z(input.n(), 1, input.h(), input.w());
  Tensor4 depth(input.n(), 1, input.h(), input.w());
  Tensor4 k(input.n(), 1, input.h(), input.w());
  glsconv_head_forward(input, head, z, depth, k);
  ScaleMap scale{k, head.conversion};

  DcsconvGrads dg = dcsconv_backward(input, kernel, scale, grad_output, /*propagate_scale=*/true);

  GlsconvGrads g;
  g.grad_input = std::move(dg.grad_input);
  g.grad_kernel = std::move(dg.grad_kernel);
  g.grad_proj_weights.assign(input.c(), 0.0);

  for (int n = 0; n < input.n(); ++n)
    for (int y = 0; y < input.h(); ++y)
      for (int x = 0; x < input.w(); ++x) {
        const double gs = dg.grad_scale.at(n, 0, y, x);
        if (gs == 0.0) continue;
        const double d = depth.at(n, 0, y, x);
        double k_raw;
        double dk_dd;
        if (head.mode == DepthToScaleMode::kFixed) {
          k_raw = head.conversion.base_kernel * head.conversion.reference_depth / d;
          dk_dd = -head.conversion.base_kernel * head.conversion.reference_depth / (d * d);
        } else {
          k_raw = head.gain * d + head.offset;
          dk_dd = head.gain;
        }
        // Clamp kills the gradient outside the open range.
        if (!(k_raw > head.conversion.scale_min && k_raw < head.conversion.scale_max)) continue;
        if (head.mode == DepthToScaleMode::kAffine) {
          g.grad_gain += gs * d;
          g.grad_offset += gs;
        }
        const double gd = gs * dk_dd;                      // d loss / d depth
        const double gz = gd * sigmoid(z.at(n, 0, y, x));  // through softplus
        g.grad_proj_bias += gz;
        for (int ic = 0; ic < input.c(); ++ic) {
          g.grad_proj_weights[ic] += gz * input.at(n, ic, y, x);
          g.grad_input.at(n, ic, y, x) += gz * head.proj_weights[ic];
        }
      }
  return g;
}

}  // namespace dcs
