#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ssmp/map_spec.hpp"
#include "ssmp/stats.hpp"

namespace ssmp {

struct BatteryOptions {
  std::uint64_t seed = 20241019;
  unsigned jobs = 0;
  /// Multiplies every sample size; 1 is the full battery.
  double size = 1.0;
  /// Criteria with data files write them here when set.
  std::filesystem::path data_dir;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  /// Checks that decide pass.
  std::vector<TestReport> reports;
  /// Extra numbers reported without a verdict (halved mesh and the like).
  std::vector<TestReport> info;
  /// File name -> CSV text.
  std::map<std::string, std::string> data;
  double seconds = 0.0;
};

constexpr int kCriteria = 12;

std::string criterion_title(int id);

/// Runs one criterion (1..12); module errors become a failed report.
CriterionResult run_criterion(int id, const BatteryOptions& opts);

/// Runs the listed criteria (all by default), calling `progress` after each.
std::vector<CriterionResult> run_battery(const BatteryOptions& opts, std::vector<int> ids = {},
                                         const std::function<void(const CriterionResult&)>& progress = {});

nlohmann::json to_json(const CriterionResult& r);

/// One line: "PASS  3  title  (12.3 s)" or FAIL with the first failing statistic.
std::string summary_line(const CriterionResult& r);

// Specs shared by the battery, the CLI and the tests.
MapSpec weakly_reversible_spec();
MapSpec exp_jump_spec(double beta, double rate);
MapSpec slow_mixing_spec();
MapSpec entrance_spec();

}  // namespace ssmp
