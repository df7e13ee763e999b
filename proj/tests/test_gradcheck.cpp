#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dcs/conv.hpp"
#include "dcs/geometry.hpp"
#include "dcs/gradcheck.hpp"
#include "dcs/rng.hpp"

using namespace dcs;

TEST_SUITE("gradcheck") {

TEST_CASE("central differences recover polynomial gradients") {
  Tensor4 x(1, 1, 1, 3, std::vector<double>{1.0, -2.0, 0.5});
  auto f = [](const Tensor4& t) {
    return t[0] * t[0] + 3.0 * t[1] - t[2] * t[2] * t[2];
  };
  const Tensor4 g = finite_diff_grad(f, x);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(g[2] == doctest::Approx(-0.75).epsilon(1e-7));
}

TEST_CASE("element subsets are honored") {
  Tensor4 x(1, 1, 1, 4, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  auto f = [](const Tensor4& t) { return t[0] + 2.0 * t[1] + 3.0 * t[2] + 4.0 * t[3]; };
  const Tensor4 g = finite_diff_grad(f, x, 1e-5, std::vector<std::size_t>{1, 3});
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(2.0));
  CHECK(g[2] == 0.0);
  CHECK(g[3] == doctest::Approx(4.0));
  CHECK_THROWS_AS(finite_diff_grad(f, x, 1e-5, std::vector<std::size_t>{9}), std::out_of_range);
}

TEST_CASE("compare_grads passes matching and flags mismatched gradients") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  GradReport ok = compare_grads("match", a, {1.0, 2.0 + 1e-9, 3.0}, 1e-4, 1e-8);
  CHECK(ok.pass);
  GradReport bad = compare_grads("mismatch", a, {1.0, -2.0, 3.0}, 1e-4, 1e-8);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_index == 1);
  CHECK_THROWS_AS(compare_grads("len", a, {1.0}, 1e-4, 1e-8), std::invalid_argument);
}

TEST_CASE("sabotaged analytic gradient is detected") {
  Rng rng(31);
  Tensor4 input(1, 1, 5, 5);
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform(-1.0, 1.0);
  ConvKernel kernel(1, 1, 3);
  for (auto& w : kernel.weights) w = rng.uniform(-0.5, 0.5);
  const ScaleMap scale{Tensor4(1, 1, 5, 5, 2.5), ScaleConversion{}};
  const Tensor4 ones(1, 1, 5, 5, 1.0);

  DcsconvGrads g = dcsconv_backward(input, kernel, scale, ones, false);
  ConvKernel probe = kernel;
  auto loss = [&] {
    const Tensor4 out = dcsconv_forward(input, probe, scale);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i];
    return s;
  };
  const std::vector<double> numeric = finite_diff_grad_vec(loss, probe.weights);
  CHECK(compare_grads("kernel", g.grad_kernel.weights, numeric, 1e-4, 1e-8).pass);

  g.grad_kernel.weights[2] = -g.grad_kernel.weights[2];  // flip one sign
  const GradReport r = compare_grads("kernel", g.grad_kernel.weights, numeric, 1e-4, 1e-8);
  CHECK_FALSE(r.pass);
  CHECK(r.worst_index == 2);
}

}  // TEST_SUITE
