#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "nusim/reduction.hpp"
#include "nusim/state.hpp"

namespace nusim {

struct EngineOptions {
  bool record_snapshots = true;
  /// > 0: also record weight snapshots every `sample_interval` (for plotting).
  double sample_interval = 0.0;
  /// > 0: discrete cross-check mode; hits are decided once per step of this
  /// size and land on the step end.
  double fixed_dt = 0.0;
  std::uint64_t max_collapses = 100'000'000;
};

namespace detail {

/// Drives `state` forward until the first stochastic choice (returned, state
/// left at the hit time, not yet collapsed), the horizon, or quiescence.
/// Boundary events are appended to `log` when given.
std::optional<Hit> run_until_hit(SystemState& state, double horizon, Rng& rng,
                                 const EngineOptions& options, TrajectoryRecord* log);

void log_events(TrajectoryRecord& log, const SystemState& state, std::vector<Event>&& events,
                bool with_snapshot);

}  // namespace detail

/// One trajectory, deterministic in (model, seed). Contract violations end
/// the trajectory and are reported in `failure` rather than thrown.
TrajectoryRecord run_trajectory(std::shared_ptr<const Model> model, std::uint64_t seed,
                                const EngineOptions& options = {});

}  // namespace nusim
