#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "sfk/check.hpp"

using namespace sfk;

namespace {

struct Criterion {
  int number;
  const char* title;
  std::vector<std::string> suites;
  std::size_t min_cases;  // total across the suites
  double limit_seconds;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c = {
      {1, "extended-real conventions over a 12-value lattice", {"extreal"}, 144, 1.0},
      {2, "Fubini on 200 random finite pairs", {"fubini"}, 200, 10.0},
      {3, "diagonal of the infinite-uniform product is 0", {"diagonal"}, 1, 1.0},
      {4, "500 composites classify and match the oracle", {"composition"}, 500, 20.0},
      {5, "RN roundtrip on 300 pairs and the normal vs sum-of-Lebesgue counterexample",
       {"rn-counterexample", "rn-roundtrip"}, 301, 30.0},
      {6, "rn_equal uniqueness on exhaustive 4-point spaces", {"rn-uniqueness"}, 100, 10.0},
      {7, "Lebesgue decomposition: 200 oracle pairs, 50 re-presentations, three-part example",
       {"decomposition"}, 251, 30.0},
      {8, "disintegration: 100 Bayes tables, Beta posterior grid, infinite atom failure", {"disintegration"}, 102,
       60.0},
      {9, "randomisation: pushforwards, normal CDF, isomorphisms, finite-mass rejection", {"randomise"}, 100, 60.0},
      {10, "PPL: let-commutativity, importance, rejection KS, Beta-Bernoulli posterior mean",
       {"beta-bernoulli", "importance", "let-commutativity", "rejection"}, 114, 120.0},
      {11, "top 0-inf-sets over 200 measures", {"top-sets"}, 200, 10.0},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 0;
  int failed = 0;
  for (const auto& c : criteria()) {
    auto start = std::chrono::steady_clock::now();
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;
    for (const auto& name : c.suites) {
      SuiteReport r = run_suite(name, seed);
      cases += r.cases;
      failures += r.failures.size();
      if (first_failure.empty() && !r.failures.empty())
        first_failure = name + "#" + std::to_string(r.failures.front().index) + ": " + r.failures.front().detail;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool ok = failures == 0 && cases >= c.min_cases && secs < c.limit_seconds;
    std::printf("criterion %2d %s  %s  %zu/%zu cases, %.2fs (limit %.0fs)\n", c.number, ok ? "PASS" : "FAIL", c.title,
                cases - failures, cases, secs, c.limit_seconds);
    if (!first_failure.empty()) std::printf("    %s\n", first_failure.c_str());
    if (cases < c.min_cases) std::printf("    expected at least %zu cases\n", c.min_cases);
    failed += ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria().size()) - failed, criteria().size());
  return failed == 0 ? 0 : 1;
}
