#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dcs/pgm.hpp"
#include "dcs/tensor.hpp"
#include "dcs/tensor_io.hpp"

using dcs::Tensor4;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream os(path, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("tensor_io") {

TEST_CASE("round trip preserves float32-representable values") {
  Tensor4 t(2, 3, 4, 5);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(static_cast<float>(0.37 * static_cast<double>(i) - 11.0));
  const std::string path = tmp_path("dcs_roundtrip.dten");
  dcs::write_tensor(path, t);
  const Tensor4 back = dcs::read_tensor(path);
  REQUIRE(back.same_dims(t));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);
  std::remove(path.c_str());
}

TEST_CASE("storage narrows to 32-bit floats") {
  Tensor4 t(1, 1, 1, 1, 0.1);  // not representable in binary32
  const std::string path = tmp_path("dcs_narrow.dten");
  dcs::write_tensor(path, t);
  const Tensor4 back = dcs::read_tensor(path);
  CHECK(back[0] == static_cast<double>(static_cast<float>(0.1)));
  CHECK(back[0] != 0.1);
  std::remove(path.c_str());
}

TEST_CASE("bad magic is reported at offset 0") {
  const std::string path = tmp_path("dcs_badmagic.dten");
  Tensor4 t(1, 1, 1, 1, 2.0);
  dcs::write_tensor(path, t);
  auto bytes = read_bytes(path);
  bytes[0] = 'X';
  write_bytes(path, bytes);
  CHECK_THROWS_AS(dcs::read_tensor(path), dcs::TensorFormatError);
  try {
    dcs::read_tensor(path);
  } catch (const dcs::TensorFormatError& e) {
    CHECK(e.byte_offset() == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("non-rank-4 payload is rejected") {
  const std::string path = tmp_path("dcs_rank3.dten");
  Tensor4 t(1, 1, 1, 1, 2.0);
  dcs::write_tensor(path, t);
  auto bytes = read_bytes(path);
  bytes[8] = 3;  // rank field
  write_bytes(path, bytes);
  CHECK_THROWS_AS(dcs::read_tensor(path), dcs::TensorFormatError);
  std::remove(path.c_str());
}

TEST_CASE("truncated payload is rejected") {
  const std::string path = tmp_path("dcs_trunc.dten");
  Tensor4 t(1, 1, 2, 2, 1.0);
  dcs::write_tensor(path, t);
  auto bytes = read_bytes(path);
  bytes.resize(bytes.size() - 5);
  write_bytes(path, bytes);
  CHECK_THROWS_AS(dcs::read_tensor(path), dcs::TensorFormatError);
  std::remove(path.c_str());
}

TEST_CASE("missing file is an error") {
  CHECK_THROWS(dcs::read_tensor(tmp_path("dcs_does_not_exist.dten")));
}

}  // TEST_SUITE

TEST_SUITE("pgm") {

TEST_CASE("16-bit round trip within quantization bound") {
  Tensor4 t(1, 1, 3, 4);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = 0.1 + (100.0 - 0.1) * static_cast<double>(i) / static_cast<double>(t.size() - 1);
  const std::string path = tmp_path("dcs_depth.pgm");
  dcs::write_pgm16(path, t, 0.1, 100.0);
  const Tensor4 back = dcs::read_pgm16(path, 0.1, 100.0);
  REQUIRE(back.same_dims(t));
  const double bound = (100.0 - 0.1) / 65535.0;
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(back[i] - t[i]) <= bound);
  std::remove(path.c_str());
}

TEST_CASE("range endpoints map to 0 and 65535") {
  const std::string path = tmp_path("dcs_endpoints.pgm");
  dcs::write_pgm16(path, Tensor4(1, 1, 2, 2, 5.0), 5.0, 9.0);
  auto bytes = read_bytes(path);
  // last 8 bytes are the four 16-bit samples
  for (std::size_t i = bytes.size() - 8; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
  dcs::write_pgm16(path, Tensor4(1, 1, 2, 2, 9.0), 5.0, 9.0);
  bytes = read_bytes(path);
  for (std::size_t i = bytes.size() - 8; i < bytes.size(); ++i)
    CHECK(static_cast<unsigned char>(bytes[i]) == 0xFF);
  std::remove(path.c_str());
}

TEST_CASE("multi-channel maps are rejected") {
  CHECK_THROWS_AS(dcs::write_pgm16(tmp_path("dcs_bad.pgm"), Tensor4(1, 2, 2, 2), 0.0, 1.0),
                  std::invalid_argument);
}

}  // TEST_SUITE
