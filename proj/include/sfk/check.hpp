#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sfk/measure.hpp"

namespace sfk {

struct CaseFailure {
  std::size_t index = 0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t cases = 0;
  std::vector<CaseFailure> failures;
  double seconds = 0.0;

  bool passed() const { return cases > 0 && failures.empty(); }
};

// Sorted by name.
const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);
// Per-suite seed derived from the run seed and the suite name.
std::uint64_t suite_seed(std::uint64_t seed, std::string_view name);
SuiteReport run_suite(std::string_view name, std::uint64_t seed, const EvalConfig& cfg = {});

}  // namespace sfk
