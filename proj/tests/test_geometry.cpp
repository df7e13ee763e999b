#include <doctest.h>

#include <stdexcept>

#include "dcs/geometry.hpp"

using namespace dcs;

TEST_SUITE("geometry") {

TEST_CASE("project_length is inverse-proportional to depth") {
  const CameraIntrinsics intr{700.0};
  CHECK(project_length(1.0, intr, 10.0) == doctest::Approx(70.0));
  CHECK(project_length(2.0, intr, 10.0) == doctest::Approx(140.0));
  CHECK(project_length(1.0, intr, 20.0) == doctest::Approx(35.0));
  CHECK_THROWS_AS(project_length(1.0, intr, 0.0), std::domain_error);
  CHECK_THROWS_AS(project_length(1.0, CameraIntrinsics{-1.0}, 5.0), std::domain_error);
  CHECK_THROWS_AS(project_length(-1.0, intr, 5.0), std::domain_error);
}

TEST_CASE("rescale_length moves an image length between depths") {
  CHECK(rescale_length(70.0, 10.0, 20.0) == doctest::Approx(35.0));
  CHECK(rescale_length(35.0, 20.0, 10.0) == doctest::Approx(70.0));
  CHECK_THROWS_AS(rescale_length(1.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(rescale_length(1.0, 1.0, -2.0), std::domain_error);
}

TEST_CASE("depth_to_scale clamps the converted size") {
  ScaleConversion conv;
  conv.reference_depth = 10.0;
  CHECK(depth_to_scale(10.0, conv) == doctest::Approx(3.0));
  CHECK(depth_to_scale(20.0, conv) == doctest::Approx(1.5));
  CHECK(depth_to_scale(5.0, conv) == doctest::Approx(6.0));
  CHECK(depth_to_scale(1.0, conv) == doctest::Approx(conv.scale_max));   // 30 clamped
  CHECK(depth_to_scale(100.0, conv) == doctest::Approx(conv.scale_min)); // 0.3 clamped
  CHECK_THROWS_AS(depth_to_scale(0.0, conv), std::domain_error);
}

TEST_CASE("conversion parameters are validated") {
  ScaleConversion bad;
  bad.scale_min = 4.0;  // above base_kernel
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = ScaleConversion{};
  bad.reference_depth = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("depth_map_to_scale_map rejects bad inputs") {
  ScaleConversion conv;
  conv.reference_depth = 10.0;
  CHECK_THROWS_AS(depth_map_to_scale_map(Tensor4(1, 2, 2, 2, 1.0), conv), std::invalid_argument);
  Tensor4 depth(1, 1, 2, 2, 5.0);
  depth.at(0, 0, 1, 1) = -3.0;
  CHECK_THROWS_AS(depth_map_to_scale_map(depth, conv), std::domain_error);
}

TEST_CASE("reference_depth_from_map is the mean and requires positive depth") {
  Tensor4 depth(1, 1, 1, 4, std::vector<double>{1.0, 2.0, 3.0, 6.0});
  CHECK(reference_depth_from_map(depth) == doctest::Approx(3.0));
  depth[2] = 0.0;
  CHECK_THROWS_AS(reference_depth_from_map(depth), std::domain_error);
}

TEST_CASE("normalize_scale_map centers at the base kernel size") {
  ScaleConversion conv;
  Tensor4 v(1, 1, 1, 3, std::vector<double>{3.0, 9.0, 1.0});
  const Tensor4 s = normalize_scale_map(ScaleMap{v, conv});
  CHECK(s.at(0, 0, 0, 0) == doctest::Approx(0.0));
  CHECK(s.at(0, 0, 0, 1) == doctest::Approx(2.0));
  CHECK(s.at(0, 0, 0, 2) == doctest::Approx(-2.0 / 3.0));
}

}  // TEST_SUITE
