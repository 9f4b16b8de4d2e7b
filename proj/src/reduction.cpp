#include "nusim/reduction.hpp"

#include <cmath>

#include "nusim/engine.hpp"
#include "nusim/errors.hpp"

namespace nusim {

bool blocked(const Component& a, const Component& b) noexcept {
  return (a.ready_mask & b.ready_mask) != 0;
}

bool edge_blocked(const SystemState& state, int edge) {
  const auto& model = state.model();
  if (!model.blocking()) return false;
  const auto& e = model.edges()[edge];
  const auto* src = state.find(e.source);
  if (!src) return false;
  const auto* dst = state.find(e.target);
  const std::uint64_t target_ready = dst ? dst->ready_mask : model.templates()[e.target].ready_mask;
  return (src->ready_mask & target_ready) != 0;
}

std::vector<int> blocked_edges(const SystemState& state) {
  std::vector<int> out;
  for (std::size_t i = 0; i < state.model().edges().size(); ++i)
    if (edge_blocked(state, static_cast<int>(i))) out.push_back(static_cast<int>(i));
  return out;
}

double HazardState::conditional_total() const noexcept {
  if (total <= 0.0) return 0.0;
  if (live_mass <= 0.0) return kInfinity;
  return total * s / live_mass;
}

HazardState hazards(const SystemState& state, const FlowSnapshot& flows) {
  if (!(state.s > 0.0)) throw DegenerateSystem("total square modulus is zero");
  HazardState h;
  h.s = state.s;
  h.rate.assign(state.size(), 0.0);
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto* c = state.find(static_cast<int>(k));
    if (!c) continue;
    if (!c->has_ready()) {
      h.live_mass += c->weight;
      continue;
    }
    h.rate[k] = flows.positive_inflow(static_cast<int>(k)) / state.s;
    h.total += h.rate[k];
  }
  return h;
}

PieceHazard PieceHazard::from(const SystemState& state, const FlowSnapshot& flows) {
  PieceHazard p;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto* c = state.find(static_cast<int>(k));
    if (!c) continue;
    const int key = static_cast<int>(k);
    if (c->has_ready()) {
      p.jtot += flows.positive_inflow(key);
    } else {
      p.live0 += c->weight;
      p.drain -= flows.net(key);
    }
  }
  return p;
}

double PieceHazard::cumulative(double u) const noexcept {
  if (jtot <= 0.0 || u <= 0.0) return 0.0;
  if (live0 <= 0.0) return kInfinity;
  if (drain == 0.0) return jtot * u / live0;
  const double x = drain * u / live0;
  if (x >= 1.0) return kInfinity;
  return jtot / drain * -std::log1p(-x);
}

double PieceHazard::solve(double budget) const noexcept {
  if (jtot <= 0.0) return kInfinity;
  if (live0 <= 0.0) return 0.0;
  if (drain == 0.0) return budget * live0 / jtot;
  return live0 / drain * -std::expm1(-budget * drain / jtot);
}

std::optional<Hit> sample_next_hit(const SystemState& state, double horizon, Rng& rng) {
  SystemState copy = state;
  EngineOptions options;
  options.record_snapshots = false;
  return detail::run_until_hit(copy, horizon, rng, options, nullptr);
}

std::vector<Event> collapse(SystemState& state, int chosen, double t) {
  const auto& model = state.model();
  if (chosen < 0 || static_cast<std::size_t>(chosen) >= state.size() || !state.exists(chosen))
    throw ContractViolation("collapse onto a component that does not exist");
  if (!state.at(chosen).has_ready())
    throw ContractViolation("collapse onto '" + model.component_id(chosen) +
                            "', which holds no ready states");

  std::vector<Event> events;
  events.push_back({t, EventKind::Collapse, chosen, -1});
  for (std::size_t k = 0; k < state.size(); ++k)
    if (static_cast<int>(k) != chosen) state.remove(static_cast<int>(k));

  int survivor = chosen;
  const int relabel = model.templates()[chosen].realizes_as;
  if (relabel >= 0 && relabel != chosen) {
    state.remove(chosen);
    state.create(relabel, t, 1.0, 0);
    events.push_back({t, EventKind::ComponentCreated, relabel, -1});
    survivor = relabel;
  } else {
    auto& c = state.at(chosen);
    c.ready_mask = 0;
    c.weight = 1.0;
    c.epoch = t;
  }
  state.s = 1.0;

  // Edges touching removed components are gone; anchored out-edges of the
  // survivor restart from its new epoch.
  const auto edges = model.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const bool touches_removed = !state.exists(e.source) || !state.exists(e.target);
    const bool restarts = e.source == survivor && e.anchor == Anchor::SourceEpoch;
    if (touches_removed || restarts) {
      state.edge_open[i] = 0;
      state.edge_blocked[i] = 0;
    }
  }
  return events;
}

}  // namespace nusim
