#include <benchmark/benchmark.h>

#include "dcs/conv.hpp"
#include "dcs/fusion.hpp"
#include "dcs/geometry.hpp"
#include "dcs/rng.hpp"
#include "dcs/tensor.hpp"

namespace {

using namespace dcs;

struct Fixture {
  Tensor4 input;
  ConvKernel kernel;
  ScaleMap scale;

  explicit Fixture(int c, int hw) : input(1, c, hw, hw), kernel(c, c, 3) {
    Rng rng(1234);
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform(-1.0, 1.0);
    for (auto& w : kernel.weights) w = rng.uniform(-0.1, 0.1);
    Tensor4 kd(1, 1, hw, hw);
    for (std::size_t i = 0; i < kd.size(); ++i) kd[i] = rng.uniform(1.2, 8.8);
    scale = ScaleMap{kd, ScaleConversion{}};
  }
};

void BM_Conv2dStandard(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_standard(f.input, f.kernel));
}
BENCHMARK(BM_Conv2dStandard)->Args({16, 64})->Args({16, 128});

void BM_Dcsconv(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(dcsconv_forward(f.input, f.kernel, f.scale));
}
BENCHMARK(BM_Dcsconv)->Args({16, 64})->Args({16, 128});

void BM_Dmsf(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Fixture f(c, static_cast<int>(state.range(1)));
  Rng rng(99);
  DmsfParams params;
  params.branches = {ConvKernel(c, c, 1), ConvKernel(c, c, 3), ConvKernel(c, c, 5)};
  for (auto& k : params.branches)
    for (auto& w : k.weights) w = rng.uniform(-0.1, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(dmsf_forward(f.input, params, f.scale));
}
BENCHMARK(BM_Dmsf)->Args({8, 64});

void BM_Dcsf(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Fixture f(c, static_cast<int>(state.range(1)));
  Rng rng(7);
  DcsfParams params = DcsfParams::make(c);
  auto fill = [&](ConvKernel& k) {
    for (auto& w : k.weights) w = rng.uniform(-0.1, 0.1);
  };
  fill(params.inject_c);
  fill(params.se_reduce);
  fill(params.se_expand);
  fill(params.inject_s);
  fill(params.spatial_conv);
  fill(params.out_proj);
  for (auto _ : state)
    benchmark::DoNotOptimize(dcsf_forward(f.input, f.input, f.scale, params));
}
BENCHMARK(BM_Dcsf)->Args({8, 64});

}  // namespace

BENCHMARK_MAIN();
