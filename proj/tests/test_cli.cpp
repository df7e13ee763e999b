#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "dcs/tensor.hpp"
#include "dcs/tensor_io.hpp"

#ifndef DCS_CLI_PATH
#error "DCS_CLI_PATH must point at the built CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(DCS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

fs::path tmp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("check succeeds on a correct build and writes a CSV report") {
  const fs::path dir = tmp_dir("dcs_cli_check");
  CHECK(run("check --suite geometry --seed 42 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "checks_geometry.csv"));
  fs::remove_all(dir);
}

TEST_CASE("unknown suite is a usage error") {
  CHECK(run("check --suite bogus") == 2);
  CHECK(run("definitely-not-a-subcommand") == 2);
}

TEST_CASE("convert round-trips a depth tensor and rejects bad inputs") {
  const fs::path dir = tmp_dir("dcs_cli_convert");
  dcs::Tensor4 t(1, 1, 4, 4);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 + static_cast<double>(i);
  const fs::path dten = dir / "map.dten";
  dcs::write_tensor(dten.string(), t);
  const fs::path pgm = dir / "map.pgm";
  CHECK(run("convert " + dten.string() + " " + pgm.string() + " --min-depth 0 --max-depth 20") ==
        0);
  CHECK(fs::exists(pgm));

  // multi-channel input -> usage error
  dcs::write_tensor((dir / "multi.dten").string(), dcs::Tensor4(1, 2, 4, 4, 1.0));
  CHECK(run("convert " + (dir / "multi.dten").string() + " " + pgm.string()) == 2);
  // missing input -> I/O error
  CHECK(run("convert " + (dir / "missing.dten").string() + " " + pgm.string()) == 3);
  fs::remove_all(dir);
}

TEST_CASE("demo writes depth and scale maps plus a summary") {
  const fs::path dir = tmp_dir("dcs_cli_demo");
  CHECK(run("demo --out " + dir.string() + " --size 32x32 --seed 5") == 0);
  for (int level = 0; level <= 4; ++level) {
    CHECK(fs::exists(dir / ("depth_l" + std::to_string(level) + ".pgm")));
    CHECK(fs::exists(dir / ("depth_l" + std::to_string(level) + ".dten")));
  }
  for (int level = 0; level <= 3; ++level)
    CHECK(fs::exists(dir / ("scale_l" + std::to_string(level) + ".pgm")));
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(run("demo --out " + dir.string() + " --size 30x30") == 2);  // not a multiple of 16
  fs::remove_all(dir);
}

TEST_CASE("demo with a constant-depth prior writes mid-gray scale maps") {
  const fs::path dir = tmp_dir("dcs_cli_demo_prior");
  CHECK(run("demo --out " + dir.string() +
            " --size 32x32 --seed 5 --prior given --min-depth 10 --max-depth 10") == 0);
  // constant guiding depth => k_d == base kernel => normalized scale 0,
  // which the [-1,1] PGM mapping sends to the mid-gray code 32767/32768
  std::ifstream is(dir / "scale_l3.pgm", std::ios::binary);
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  CHECK(line == "P5");
  std::vector<char> bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  const unsigned hi = static_cast<unsigned char>(bytes[bytes.size() - 2]);
  const unsigned lo = static_cast<unsigned char>(bytes[bytes.size() - 1]);
  const unsigned value = hi * 256 + lo;
  CHECK(value >= 32766);
  CHECK(value <= 32769);
  fs::remove_all(dir);
}

TEST_CASE("bench validates its operator name") {
  CHECK(run("bench warp --size 16x16 --iters 1") == 2);
  CHECK(run("bench conv --size 32x32 --iters 3 --threads 2") == 0);
}

}  // TEST_SUITE
