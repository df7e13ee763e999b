#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dcs/fusion.hpp"
#include "dcs/geometry.hpp"
#include "dcs/oracles.hpp"
#include "dcs/rng.hpp"

using namespace dcs;

namespace {

Tensor4 rand_tensor(Rng& rng, int n, int c, int h, int w, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

DcsfParams rand_dcsf(Rng& rng, int c, int out = -1) {
  DcsfParams p = DcsfParams::make(c, out);
  auto fill = [&](ConvKernel& k) {
    for (auto& w : k.weights) w = rng.uniform(-0.3, 0.3);
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

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("concat and slice are inverses") {
  Rng rng(11);
  const Tensor4 a = rand_tensor(rng, 1, 2, 3, 3);
  const Tensor4 b = rand_tensor(rng, 1, 3, 3, 3);
  const Tensor4 cat = concat_channels(a, b);
  REQUIRE(cat.c() == 5);
  CHECK(max_abs_diff(slice_channels(cat, 0, 2), a) == 0.0);
  CHECK(max_abs_diff(slice_channels(cat, 2, 5), b) == 0.0);
  CHECK_THROWS_AS(concat_channels(a, rand_tensor(rng, 1, 2, 4, 3)), std::invalid_argument);
  CHECK_THROWS_AS(slice_channels(cat, 3, 2), std::invalid_argument);
}

TEST_CASE("zero SE projections gate at one half") {
  Rng rng(12);
  const Tensor4 f = rand_tensor(rng, 1, 4, 3, 3);
  const Tensor4 m = se_channel_attention(f, ConvKernel(2, 4, 1), ConvKernel(4, 2, 1));
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("SE gate matches the scalar oracle") {
  Rng rng(13);
  const Tensor4 f = rand_tensor(rng, 2, 6, 4, 4);
  ConvKernel reduce(3, 6, 1), expand(6, 3, 1);
  for (auto& w : reduce.weights) w = rng.uniform(-0.5, 0.5);
  for (auto& w : expand.weights) w = rng.uniform(-0.5, 0.5);
  CHECK(max_abs_diff(se_channel_attention(f, reduce, expand), oracle::se_oracle(f, reduce, expand)) <=
        1e-12);
}

TEST_CASE("dcsf matches the straight-line oracle") {
  Rng rng(14);
  const int C = 3;
  const Tensor4 f_dcsc = rand_tensor(rng, 1, C, 5, 5);
  const Tensor4 f_c = rand_tensor(rng, 1, C, 5, 5);
  const DcsfParams params = rand_dcsf(rng, C);
  const ScaleMap scale{rand_tensor(rng, 1, 1, 5, 5, 1.0, 9.0), ScaleConversion{}};
  CHECK(max_abs_diff(dcsf_forward(f_dcsc, f_c, scale, params),
                     oracle::dcsf_oracle(f_dcsc, f_c, scale, params)) <= 1e-10);
}

TEST_CASE("dcsf supports a custom output width") {
  Rng rng(15);
  const int C = 3;
  const Tensor4 f_dcsc = rand_tensor(rng, 1, C, 4, 4);
  const Tensor4 f_c = rand_tensor(rng, 1, C, 4, 4);
  const DcsfParams params = rand_dcsf(rng, C, 5);
  const ScaleMap scale{Tensor4(1, 1, 4, 4, 3.0), ScaleConversion{}};
  CHECK(dcsf_forward(f_dcsc, f_c, scale, params).c() == 5);
}

TEST_CASE("mismatched branches are rejected") {
  Rng rng(16);
  const Tensor4 a = rand_tensor(rng, 1, 3, 4, 4);
  const Tensor4 b = rand_tensor(rng, 1, 2, 4, 4);
  const DcsfParams params = rand_dcsf(rng, 3);
  const ScaleMap scale{Tensor4(1, 1, 4, 4, 3.0), ScaleConversion{}};
  CHECK_THROWS_AS(dcsf_forward(a, b, scale, params), std::invalid_argument);
  CHECK_THROWS_AS(DcsfParams::make(0), std::invalid_argument);
}

}  // TEST_SUITE
