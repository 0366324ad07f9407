#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfk/check.hpp"
#include "sfk/measure.hpp"

namespace sfk {

inline constexpr const char* kReportVersion = "1.0";

enum class OutputFormat : std::uint8_t { Text, Json };

struct RunConfig {
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::uint64_t max_terms = 1'000'000;
  std::uint64_t samples = 1000;
  OutputFormat output = OutputFormat::Text;

  EvalConfig eval() const { return {tol, max_terms, seed}; }
};

nlohmann::json config_json(const RunConfig& cfg);
nlohmann::json eval_json(const EvalResult& r);
nlohmann::json suite_json(const SuiteReport& r);
// {version, command, config, results}
nlohmann::json make_report(const std::string& command, const RunConfig& cfg, nlohmann::json results);

}  // namespace sfk
