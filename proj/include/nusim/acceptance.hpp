#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nusim {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t master_seed = 20261019;
  /// Worker threads for the ensembles; 0 uses the environment default.
  unsigned parallelism = 0;
  /// Called as soon as each criterion is decided.
  std::function<void(const CriterionResult&)> on_result;
};

/// Runs the nine acceptance criteria at their full trial counts.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {});

/// "PASS criterion 3 (title): detail"
std::string format_result(const CriterionResult& r);

}  // namespace nusim
