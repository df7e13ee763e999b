#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dcs/conv.hpp"
#include "dcs/geometry.hpp"
#include "dcs/parallel.hpp"
#include "dcs/rng.hpp"

using namespace dcs;

namespace {

Tensor4 rand_tensor(Rng& rng, int n, int c, int h, int w, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

ConvKernel rand_kernel(Rng& rng, int oc, int ic, int k) {
  ConvKernel kernel(oc, ic, k);
  for (auto& w : kernel.weights) w = rng.uniform(-0.5, 0.5);
  for (auto& b : kernel.bias) b = rng.uniform(-0.1, 0.1);
  return kernel;
}

ScaleMap const_scale(const Tensor4& like, double v) {
  return ScaleMap{Tensor4(like.n(), 1, like.h(), like.w(), v), ScaleConversion{}};
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("conv") {

TEST_CASE("identity kernel reproduces the input") {
  Rng rng(1);
  const Tensor4 input = rand_tensor(rng, 1, 2, 5, 6);
  ConvKernel id(2, 2, 3);
  id.w(0, 0, 1, 1) = 1.0;
  id.w(1, 1, 1, 1) = 1.0;
  CHECK(max_abs_diff(conv2d_standard(input, id), input) == doctest::Approx(0.0));
}

TEST_CASE("standard conv matches the naive oracle") {
  Rng rng(2);
  const Tensor4 input = rand_tensor(rng, 2, 3, 7, 9);
  const ConvKernel kernel = rand_kernel(rng, 4, 3, 3);
  CHECK(max_abs_diff(conv2d_standard(input, kernel), conv2d_naive_oracle(input, kernel, 1)) <=
        1e-12);
  const ConvKernel k5 = rand_kernel(rng, 2, 3, 5);
  CHECK(max_abs_diff(conv2d_standard(input, k5), conv2d_naive_oracle(input, k5, 1)) <= 1e-12);
}

TEST_CASE("standard conv is thread-count invariant") {
  Rng rng(3);
  const Tensor4 input = rand_tensor(rng, 1, 4, 17, 19);
  const ConvKernel kernel = rand_kernel(rng, 4, 4, 3);
  const int saved = num_threads();
  set_num_threads(1);
  const Tensor4 a = conv2d_standard(input, kernel);
  set_num_threads(7);
  const Tensor4 b = conv2d_standard(input, kernel);
  set_num_threads(saved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("conv2d_backward matches finite differences through the oracle") {
  Rng rng(4);
  const Tensor4 input = rand_tensor(rng, 1, 2, 4, 4);
  const ConvKernel kernel = rand_kernel(rng, 2, 2, 3);
  const Tensor4 ones(1, 2, 4, 4, 1.0);
  const ConvGrads g = conv2d_backward(input, kernel, ones);
  const double h = 1e-6;
  Tensor4 probe = input;
  probe[5] += h;
  double fp = 0.0, fm = 0.0;
  const Tensor4 op = conv2d_standard(probe, kernel);
  for (std::size_t i = 0; i < op.size(); ++i) fp += op[i];
  probe[5] -= 2 * h;
  const Tensor4 om = conv2d_standard(probe, kernel);
  for (std::size_t i = 0; i < om.size(); ++i) fm += om[i];
  CHECK(g.grad_input[5] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("dcsconv at the base scale equals standard conv") {
  Rng rng(5);
  const Tensor4 input = rand_tensor(rng, 1, 3, 8, 8);
  const ConvKernel kernel = rand_kernel(rng, 2, 3, 3);
  CHECK(max_abs_diff(dcsconv_forward(input, kernel, const_scale(input, 3.0)),
                     conv2d_standard(input, kernel)) <= 1e-12);
}

TEST_CASE("dcsconv at scale 5 equals dilation-2 convolution") {
  Rng rng(6);
  const Tensor4 input = rand_tensor(rng, 1, 2, 9, 9);
  const ConvKernel kernel = rand_kernel(rng, 2, 2, 3);
  CHECK(max_abs_diff(dcsconv_forward(input, kernel, const_scale(input, 5.0)),
                     conv2d_naive_oracle(input, kernel, 2)) <= 1e-12);
}

TEST_CASE("dcsconv validates kernel and scale map") {
  Rng rng(7);
  const Tensor4 input = rand_tensor(rng, 1, 2, 4, 4);
  CHECK_THROWS_AS(dcsconv_forward(input, rand_kernel(rng, 2, 2, 5), const_scale(input, 3.0)),
                  std::invalid_argument);
  const ConvKernel kernel = rand_kernel(rng, 2, 2, 3);
  ScaleMap bad_dims = const_scale(input, 3.0);
  bad_dims.values = Tensor4(1, 1, 3, 3, 3.0);
  CHECK_THROWS_AS(dcsconv_forward(input, kernel, bad_dims), std::invalid_argument);
  ScaleMap out_of_range = const_scale(input, 3.0);
  out_of_range.values.at(0, 0, 0, 0) = 42.0;  // above scale_max
  CHECK_THROWS(dcsconv_forward(input, kernel, out_of_range));
}

TEST_CASE("dcsconv_backward suppresses grad_scale when not propagating") {
  Rng rng(8);
  const Tensor4 input = rand_tensor(rng, 1, 1, 5, 5);
  const ConvKernel kernel = rand_kernel(rng, 1, 1, 3);
  const ScaleMap scale = const_scale(input, 2.6);
  const Tensor4 go = rand_tensor(rng, 1, 1, 5, 5);
  const DcsconvGrads g = dcsconv_backward(input, kernel, scale, go, false);
  for (std::size_t i = 0; i < g.grad_scale.size(); ++i) CHECK(g.grad_scale[i] == 0.0);
  const DcsconvGrads gp = dcsconv_backward(input, kernel, scale, go, true);
  double any = 0.0;
  for (std::size_t i = 0; i < gp.grad_scale.size(); ++i) any += std::abs(gp.grad_scale[i]);
  CHECK(any > 0.0);
}

TEST_CASE("dmsf_weights reference value and simplex") {
  const auto w = dmsf_weights(3.0, {1.0, 3.0, 5.0}, 10.0);
  CHECK(w[0] == doctest::Approx(0.33113).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(0.33775).epsilon(1e-4));
  CHECK(w[2] == doctest::Approx(0.33113).epsilon(1e-4));
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(dmsf_weights(3.0, {1.0, 3.0, 5.0}, 0.0), std::domain_error);
}

TEST_CASE("small sigma concentrates weight on the nearest branch") {
  const auto w = dmsf_weights(4.8, {1.0, 3.0, 5.0}, 0.5);
  CHECK(w[2] > w[1]);
  CHECK(w[1] > w[0]);
}

TEST_CASE("glsconv emits a clamped positive scale map") {
  Rng rng(9);
  const Tensor4 input = rand_tensor(rng, 1, 3, 6, 6);
  const ConvKernel kernel = rand_kernel(rng, 2, 3, 3);
  ScaleHeadParams head;
  head.proj_weights = {0.2, -0.1, 0.3};
  head.proj_bias = 0.5;
  head.conversion.reference_depth = 1.0;
  const GlsconvResult r = glsconv_forward(input, kernel, head);
  CHECK(r.output.c() == 2);
  for (std::size_t i = 0; i < r.learned_scale.values.size(); ++i) {
    CHECK(r.learned_scale.values[i] >= head.conversion.scale_min);
    CHECK(r.learned_scale.values[i] <= head.conversion.scale_max);
  }
}

}  // TEST_SUITE
