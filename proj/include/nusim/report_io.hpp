#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nusim/ensemble.hpp"
#include "nusim/oracle.hpp"

namespace nusim {

inline constexpr const char* kSummaryCsvHeader = "scenario,trials,master_seed,label,count,frequency,std_error";

/// One row per outcome label under kSummaryCsvHeader.
void write_summary_csv(std::ostream& out, const EnsembleReport& report);

/// Structured summary: labels, invariant counters, tallies and, when given,
/// the exact law for comparison.
void write_summary_json(std::ostream& out, const EnsembleReport& report,
                        const std::vector<LawEntry>& exact = {});

/// One JSON record per line: every event, then dense weight samples if any,
/// then a closing record with the outcome. With `weights`, records that carry a
/// snapshot also list the component weights.
void write_trajectory_jsonl(std::ostream& out, const TrajectoryRecord& rec, bool weights = false);

void write_law_json(std::ostream& out, const std::string& scenario, const std::vector<LawEntry>& law);

}  // namespace nusim
