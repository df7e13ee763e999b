#include <doctest.h>

#include <limits>
#include <stdexcept>

#include "dcs/parallel.hpp"
#include "dcs/tensor.hpp"

using dcs::Tensor4;

TEST_SUITE("tensor") {

TEST_CASE("construction and indexing") {
  Tensor4 t(2, 3, 4, 5, 1.5);
  CHECK(t.size() == 120);
  CHECK(t.at(1, 2, 3, 4) == 1.5);
  t.at(1, 2, 3, 4) = -7.0;
  CHECK(t[t.index(1, 2, 3, 4)] == -7.0);
  CHECK(t.dims_str() == "2x3x4x5");
  CHECK_THROWS_AS(Tensor4(0, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(Tensor4(1, 1, 2, 2, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("finiteness guard") {
  Tensor4 t(1, 1, 1, 2);
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.require_finite("test"), std::domain_error);
}

TEST_CASE("bilinear_sample interpolates the four neighbors") {
  Tensor4 t(1, 1, 2, 2, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(dcs::bilinear_sample(t, 0, 0, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK(dcs::bilinear_sample(t, 0, 0, 1.0, 1.0) == doctest::Approx(4.0));
  CHECK(dcs::bilinear_sample(t, 0, 0, 0.5, 0.5) == doctest::Approx(2.5));
  CHECK(dcs::bilinear_sample(t, 0, 0, 0.0, 0.5) == doctest::Approx(1.5));
  CHECK(dcs::bilinear_sample(t, 0, 0, 0.25, 0.0) == doctest::Approx(1.5));
}

TEST_CASE("bilinear_sample uses zero padding outside the grid") {
  Tensor4 t(1, 1, 2, 2, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  // only the in-grid corner contributes
  CHECK(dcs::bilinear_sample(t, 0, 0, -0.5, -0.5) == doctest::Approx(0.25 * 1.0));
  CHECK(dcs::bilinear_sample(t, 0, 0, 1.5, 1.5) == doctest::Approx(0.25 * 4.0));
  CHECK(dcs::bilinear_sample(t, 0, 0, -2.0, 0.0) == doctest::Approx(0.0));
  CHECK(dcs::bilinear_sample(t, 0, 0, 0.0, 5.0) == doctest::Approx(0.0));
}

TEST_CASE("global_avg_pool") {
  Tensor4 t(1, 2, 2, 2, std::vector<double>{1, 2, 3, 4, 10, 10, 10, 10});
  const Tensor4 p = dcs::global_avg_pool(t);
  CHECK(p.h() == 1);
  CHECK(p.w() == 1);
  CHECK(p.at(0, 0, 0, 0) == doctest::Approx(2.5));
  CHECK(p.at(0, 1, 0, 0) == doctest::Approx(10.0));
}

TEST_CASE("channel_pool avg and max") {
  Tensor4 t(1, 3, 1, 2, std::vector<double>{1, -1, 5, 2, 0, -1});
  const Tensor4 avg = dcs::channel_pool(t, dcs::ChannelPoolMode::kAvg);
  const Tensor4 mx = dcs::channel_pool(t, dcs::ChannelPoolMode::kMax);
  CHECK(avg.c() == 1);
  CHECK(avg.at(0, 0, 0, 0) == doctest::Approx(2.0));
  CHECK(avg.at(0, 0, 0, 1) == doctest::Approx(0.0));
  CHECK(mx.at(0, 0, 0, 0) == doctest::Approx(5.0));
  CHECK(mx.at(0, 0, 0, 1) == doctest::Approx(2.0));
}

TEST_CASE("nearest resize picks floor(dst * scale)") {
  Tensor4 t(1, 1, 1, 2, std::vector<double>{10.0, 20.0});
  const Tensor4 up = dcs::resize(t, 1, 4, dcs::ResizeMode::kNearest);
  CHECK(up.at(0, 0, 0, 0) == 10.0);
  CHECK(up.at(0, 0, 0, 1) == 10.0);
  CHECK(up.at(0, 0, 0, 2) == 20.0);
  CHECK(up.at(0, 0, 0, 3) == 20.0);
}

TEST_CASE("bilinear resize, align-corners-false with edge clamp") {
  Tensor4 t(1, 1, 1, 2, std::vector<double>{1.0, 3.0});
  const Tensor4 up = dcs::resize(t, 1, 4, dcs::ResizeMode::kBilinear);
  CHECK(up.at(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(up.at(0, 0, 0, 1) == doctest::Approx(1.5));
  CHECK(up.at(0, 0, 0, 2) == doctest::Approx(2.5));
  CHECK(up.at(0, 0, 0, 3) == doctest::Approx(3.0));
}

TEST_CASE("resize is thread-count invariant") {
  Tensor4 t(1, 2, 16, 16);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.37 * static_cast<double>(i % 97) - 1.0;
  const int saved = dcs::num_threads();
  dcs::set_num_threads(1);
  const Tensor4 a = dcs::resize(t, 33, 47, dcs::ResizeMode::kBilinear);
  dcs::set_num_threads(5);
  const Tensor4 b = dcs::resize(t, 33, 47, dcs::ResizeMode::kBilinear);
  dcs::set_num_threads(saved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

}  // TEST_SUITE
