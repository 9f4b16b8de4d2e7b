#pragma once

#include <optional>
#include <vector>

#include "nusim/dynamics.hpp"
#include "nusim/rng.hpp"
#include "nusim/state.hpp"

namespace nusim {

/// Transition blocking: true iff both components hold a ready state of the
/// same object. Symmetric.
bool blocked(const Component& a, const Component& b) noexcept;

/// Whether edge `edge` is blocked in this state. A missing target is judged
/// by its template's ready flags. Always false when the scenario disables
/// blocking (diagnostic mode).
bool edge_blocked(const SystemState& state, int edge);

/// Indices of all edges whose (source, target) pair is blocked.
std::vector<int> blocked_edges(const SystemState& state);

/// Per-component collapse hazard at one instant.
///
/// `rate[n]` is the probability per unit time J_n+/s for components holding at
/// least one ready state (zero for all others). This is the unconditional
/// density: integrated over a window it gives the probability of a choice in
/// that window. The hazard conditional on no choice so far is
/// `conditional_total()`, which divides by the fraction of the modulus still
/// held by components without ready states.
struct HazardState {
  std::vector<double> rate;
  double total = 0.0;
  double s = 0.0;
  double live_mass = 0.0;

  double live_fraction() const noexcept { return live_mass / s; }
  double conditional_total() const noexcept;
};

/// Throws DegenerateSystem when the total modulus is zero.
HazardState hazards(const SystemState& state, const FlowSnapshot& flows);

/// Conditional hazard over one piece of constant rates:
/// lambda(u) = jtot / (live0 - drain * u), u measured from the piece start.
struct PieceHazard {
  double live0 = 0.0;  ///< modulus without ready states at the piece start
  double drain = 0.0;  ///< net outflow from those components
  double jtot = 0.0;   ///< sum of positive net inflows into ready components

  static PieceHazard from(const SystemState& state, const FlowSnapshot& flows);

  /// Integrated hazard over [0, u]; +inf once the live mass is exhausted.
  double cumulative(double u) const noexcept;
  /// u such that cumulative(u) = budget (may exceed the piece).
  double solve(double budget) const noexcept;
};

struct Hit {
  double time = 0.0;
  int component = -1;

  friend bool operator==(const Hit&, const Hit&) = default;
};

/// First stochastic choice after state.time and before `horizon`, sampled by
/// exact inverse CDF over the piecewise hazard (window openings included).
/// The state is not modified.
std::optional<Hit> sample_next_hit(const SystemState& state, double horizon, Rng& rng);

/// Realizes every state of `chosen`, removes all other components and
/// renormalizes to s = 1. Throws ContractViolation if `chosen` is missing or
/// has no ready state.
std::vector<Event> collapse(SystemState& state, int chosen, double t);

}  // namespace nusim
