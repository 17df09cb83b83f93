#pragma once

// The acceptance suite: one entry per criterion, each a list of measured
// values with their bounds. Reports carry no wall-clock data, so a fixed seed
// gives byte-identical output.

#include <cstdint>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "se3kit/io.hpp"

namespace se3kit {

struct Metric {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool strict_upper = true;

  bool checked() const { return std::isfinite(lower) || std::isfinite(upper); }
  bool passed() const;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  double budget_seconds = 0.0;  // 0: no time limit
  std::vector<Metric> metrics;

  bool passed() const;
};

inline constexpr int kCriterionCount = 7;

/// Runs criterion `id` in 1..7 with a seed derived from `seed`.
CriterionResult run_criterion(int id, std::uint64_t seed);

Json criterion_to_json(const CriterionResult& c);

/// Runs every criterion and assembles the report.
Json selftest_report(std::uint64_t seed);

}  // namespace se3kit
