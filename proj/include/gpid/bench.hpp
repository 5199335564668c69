#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpid {

struct CriterionResult {
  std::string name;  // "<suite>.<check>"
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CriterionResult> criteria;
  nlohmann::json data = nlohmann::json::object();
  double seconds = 0.0;

  bool passed() const;
};

struct BenchOptions {
  int jobs = 1;  // worker threads for independent instances; timing runs stay serial
  std::uint64_t seed = 20240607;
  int scaling_reps = 5;
};

// canonical, coop, rotation, doubling, scaling, gradient, invariance
std::span<const std::string_view> suite_names();

// ValidationError for an unknown name.
SuiteResult run_suite(std::string_view name, const BenchOptions& opts = {});

nlohmann::json to_json(const SuiteResult& r);

}  // namespace gpid
