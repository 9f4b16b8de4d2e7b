#pragma once

#include <vector>

#include "nusim/state.hpp"

namespace nusim {

/// Instantaneous transfer rates, constant until the next breakpoint.
struct FlowSnapshot {
  double time = 0.0;
  std::vector<double> edge_rate;  ///< effective rate per edge; 0 if inactive or blocked
  std::vector<double> inflow;     ///< per component key
  std::vector<double> outflow;    ///< per component key

  double net(int key) const noexcept { return inflow[key] - outflow[key]; }
  /// J_n clamped at zero: the part that can drive a stochastic choice.
  double positive_inflow(int key) const noexcept { return net(key) > 0.0 ? net(key) : 0.0; }
  bool any_flow() const noexcept;
};

/// Profile-local time of an edge at simulation time t, snapped onto a piece
/// boundary when within rounding distance of it.
double local_time(const SystemState& state, const Model::Edge& edge, double t) noexcept;

/// Opens and closes interaction windows at time t, instantiating targets as
/// ready components with zero weight. Events are returned in processing order.
/// Throws ConfigError if creation would duplicate an existing component.
std::vector<Event> activate_interactions(SystemState& state, double t);

/// Rates in effect on [t, next breakpoint). Blocked edges carry zero; a dry
/// component (zero weight) passes on at most what flows into it.
FlowSnapshot compute_flows(const SystemState& state, double t);

struct Breakpoint {
  double time = kInfinity;
  std::vector<int> exhausting;  ///< components whose weight reaches zero exactly here
};

/// Next window/piece boundary of any edge whose source exists, or the next
/// time a draining component empties.
Breakpoint next_breakpoint(const SystemState& state, const FlowSnapshot& flows, double t);

/// Exact transfer over [t, t + dt] with rates held fixed. Weights of the
/// `exhausting` components are set to exactly zero; tiny negative rounding is
/// clamped, anything larger throws StepSizeError.
void integrate(SystemState& state, const FlowSnapshot& flows, double dt,
               const std::vector<int>& exhausting = {});

/// Advance by dt from state.time. Throws StepSizeError if dt <= 0 or a
/// breakpoint lies strictly inside (t, t + dt).
void advance(SystemState& state, double dt);

}  // namespace nusim
