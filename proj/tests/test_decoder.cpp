#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dcs/decoder.hpp"
#include "dcs/geometry.hpp"
#include "dcs/parallel.hpp"
#include "dcs/scene.hpp"

using namespace dcs;

TEST_SUITE("decoder") {

TEST_CASE("feature_to_depth stays inside the range and hits the midpoint") {
  const DepthRange range;  // 0.1 .. 100
  ConvKernel head(1, 2, 3);
  const Tensor4 zeros(1, 2, 3, 3, 0.0);
  const Tensor4 mid = feature_to_depth(zeros, head, range);
  // sigmoid(0) = 0.5 -> disparity halfway between 1/100 and 1/0.1
  const double expected = 1.0 / (0.01 + (10.0 - 0.01) * 0.5);
  CHECK(mid.at(0, 0, 1, 1) == doctest::Approx(expected).epsilon(1e-12));

  head.bias[0] = 50.0;
  CHECK(feature_to_depth(zeros, head, range).at(0, 0, 0, 0) == doctest::Approx(0.1));
  head.bias[0] = -50.0;
  CHECK(feature_to_depth(zeros, head, range).at(0, 0, 0, 0) == doctest::Approx(100.0));
}

TEST_CASE("depth range is validated") {
  DepthRange bad;
  bad.min_depth = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = DepthRange{};
  bad.max_depth = bad.min_depth;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("feature pyramid shapes, coarsest first") {
  const std::vector<int> ch{8, 6, 5, 4, 3};
  const auto pyr = make_feature_pyramid(32, 48, ch, 99);
  REQUIRE(pyr.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(pyr[i].c() == ch[i]);
    CHECK(pyr[i].h() == 32 / (1 << (4 - i)));
    CHECK(pyr[i].w() == 48 / (1 << (4 - i)));
  }
  // identical seed, identical pyramid
  const auto again = make_feature_pyramid(32, 48, ch, 99);
  for (int i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < pyr[i].size(); ++j) CHECK(pyr[i][j] == again[i][j]);
}

TEST_CASE("synthetic scene respects its depth bounds and seed") {
  const SyntheticScene scene = make_scene(24, 32, 7, 2.0, 40.0);
  CHECK(scene.image.c() == 3);
  CHECK(scene.depth.c() == 1);
  for (std::size_t i = 0; i < scene.depth.size(); ++i) {
    CHECK(scene.depth[i] >= 2.0);
    CHECK(scene.depth[i] <= 40.0);
  }
  const SyntheticScene again = make_scene(24, 32, 7, 2.0, 40.0);
  for (std::size_t i = 0; i < scene.image.size(); ++i) CHECK(scene.image[i] == again.image[i]);
}

TEST_CASE("decoder emits five in-range depth maps, doubling resolution") {
  const std::vector<int> ch{4, 4, 4, 4, 4};
  const auto pyr = make_feature_pyramid(32, 32, ch, 21);
  const DecoderParams params = make_decoder_params(ch, ch, 21);
  DecoderConfig config;
  config.conversion.reference_depth = 10.0;
  const auto depths = decoder_forward(pyr, params, config);
  REQUIRE(depths.size() == 5);
  int expect = 2;
  for (const auto& d : depths) {
    CHECK(d.w() == expect);
    CHECK(d.c() == 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d[i] >= config.range.min_depth);
      CHECK(d[i] <= config.range.max_depth);
    }
    expect *= 2;
  }
}

TEST_CASE("decoder is thread-count invariant") {
  const std::vector<int> ch{3, 3, 3, 3, 3};
  const auto pyr = make_feature_pyramid(32, 32, ch, 22);
  const DecoderParams params = make_decoder_params(ch, ch, 22);
  DecoderConfig config;
  config.conversion.reference_depth = 10.0;
  const int saved = num_threads();
  set_num_threads(1);
  const auto a = decoder_forward(pyr, params, config);
  set_num_threads(6);
  const auto b = decoder_forward(pyr, params, config);
  set_num_threads(saved);
  for (int i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(a[i][j] == b[i][j]);
}

TEST_CASE("probe injection redirects the guiding scale map") {
  const std::vector<int> ch{3, 3, 3, 3, 3};
  const auto pyr = make_feature_pyramid(32, 32, ch, 23);
  const DecoderParams params = make_decoder_params(ch, ch, 23);
  DecoderConfig config;
  config.conversion.reference_depth = 10.0;

  DecoderProbe base;
  const auto depths = decoder_forward(pyr, params, config, {}, &base);
  REQUIRE(base.scale_low.size() == 4);

  Tensor4 synthetic(1, 1, depths[0].h(), depths[0].w(), 0.0);
  for (std::size_t i = 0; i < synthetic.size(); ++i) synthetic[i] = 5.0 + 0.5 * (i % 7);
  DecoderProbe probe;
  probe.inject_depth = {0, synthetic};
  decoder_forward(pyr, params, config, {}, &probe);

  ScaleConversion conv = config.conversion;
  conv.reference_depth = reference_depth_from_map(synthetic);
  const ScaleMap expected = depth_map_to_scale_map(synthetic, conv);
  for (std::size_t i = 0; i < expected.values.size(); ++i)
    CHECK(probe.scale_low[0].values[i] == doctest::Approx(expected.values[i]).epsilon(1e-13));
}

TEST_CASE("malformed inputs are rejected") {
  const std::vector<int> ch{3, 3, 3, 3, 3};
  const auto pyr = make_feature_pyramid(32, 32, ch, 24);
  const DecoderParams params = make_decoder_params(ch, ch, 24);
  DecoderConfig config;
  config.conversion.reference_depth = 10.0;
  std::vector<Tensor4> four(pyr.begin(), pyr.end() - 1);
  CHECK_THROWS_AS(decoder_forward(four, params, config), std::invalid_argument);
  std::vector<Tensor4> bad_prior(5, Tensor4(1, 1, 2, 2, 10.0));
  CHECK_THROWS_AS(decoder_forward(pyr, params, config, bad_prior), std::invalid_argument);
}

}  // TEST_SUITE
