#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dcs::checks {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double metric = 0.0;  // worst observed error / deviation for the check
  std::string detail;
};

// Suites: geometry, conv, dmsf, fusion, decoder, gradcheck.
std::vector<std::string> suite_names();
bool is_suite(const std::string& name);

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed);

// Runs every suite (the "all" suite) and appends a coverage check
// asserting the registry exercises every library operation it is
// contracted to cover.
std::vector<CheckResult> run_all(std::uint64_t seed);

// Operations not exercised by any registered check; empty when the
// registry provides full coverage.
std::vector<std::string> missing_op_coverage();

void write_csv(const std::string& path, const std::vector<CheckResult>& results);

}  // namespace dcs::checks
