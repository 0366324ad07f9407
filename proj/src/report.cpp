#include "sfk/report.hpp"

namespace sfk {

nlohmann::json config_json(const RunConfig& cfg) {
  return {{"seed", cfg.seed},
          {"tol", cfg.tol},
          {"max_terms", cfg.max_terms},
          {"samples", cfg.samples},
          {"output", cfg.output == OutputFormat::Json ? "json" : "text"}};
}

nlohmann::json eval_json(const EvalResult& r) {
  nlohmann::json j = {{"value", r.value.str()}, {"mode", eval_mode_name(r.mode)}};
  if (r.mode == EvalMode::Truncated) j["error_bound"] = r.error_bound;
  return j;
}

nlohmann::json suite_json(const SuiteReport& r) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) failures.push_back({{"case", f.index}, {"detail", f.detail}});
  return {{"suite", r.suite},
          {"cases", r.cases},
          {"passed", r.cases - r.failures.size()},
          {"failures", failures},
          {"seeds", nlohmann::json::array({r.seed})}};
}

nlohmann::json make_report(const std::string& command, const RunConfig& cfg, nlohmann::json results) {
  if (!results.is_array()) results = nlohmann::json::array({results});
  return {{"version", kReportVersion}, {"command", command}, {"config", config_json(cfg)}, {"results", results}};
}

}  // namespace sfk
