#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nusim/scenario.hpp"

namespace nusim {

/// Particle and detector with one capture current. `pieces` splits the window
/// into that many equal constant-rate pieces carrying the same total.
Scenario scenario_primary_only(double total = 0.6, int pieces = 1);

/// Detector plus one observer who looks when the capture probability is 0.5.
Scenario scenario_observer();

/// A second observer looks while the primary current is still running.
Scenario scenario_two_observers();

/// A second observer looks after the primary current has ended, leaving the
/// residual capture branch as a phantom.
Scenario scenario_two_observers_late();

/// Counter advancing through k readings, each realized before the next can
/// become ready. Throws ConfigError for k < 2.
Scenario scenario_counter_chain(int k);

/// Recurrent atom with a strong and a weak (shelving) decay channel.
/// Throws ConfigError unless strong_rate >= 10 x weak_rate > 0.
Scenario scenario_three_level_atom(double strong_rate, double weak_rate);

/// Small random scenario: one realized root feeding up to four ready sinks,
/// at most four edges, root totals summing to at most 1.
Scenario random_scenario(std::uint64_t seed);

/// Stable list of built-in names accepted by `builtin`.
std::vector<std::string> builtin_names();

/// Built-in by name with default parameters ("counter-chain" has k = 5,
/// "three-level-atom" has rates 100 and 1). Throws ConfigError if unknown.
Scenario builtin(std::string_view name);

/// Staircase approximation of an exponential law with rate `rate`, as
/// transfer pieces from local time 0: exact at piece boundaries, and the last
/// piece takes the remaining mass so the total is `scale`.
RateProfile exponential_staircase(double rate, double scale = 1.0, int pieces = 24,
                                  double span_in_means = 8.0);

}  // namespace nusim
