#include "nusim/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "nusim/errors.hpp"
#include "nusim/reduction.hpp"

namespace nusim {

namespace {

constexpr double kNegativeTolerance = 1e-12;

double snap_tolerance(double t) noexcept { return 1e-11 * std::max(1.0, std::abs(t)); }

}  // namespace

bool FlowSnapshot::any_flow() const noexcept {
  return std::any_of(edge_rate.begin(), edge_rate.end(), [](double r) { return r > 0.0; });
}

double local_time(const SystemState& state, const Model::Edge& edge, double t) noexcept {
  if (edge.anchor == Anchor::Absolute) return t;
  const auto* src = state.find(edge.source);
  if (!src) return t;
  const double local = t - src->epoch;
  const double tol = snap_tolerance(t);
  for (const auto& p : edge.profile.pieces()) {
    if (std::abs(local - p.begin) <= tol) return p.begin;
    if (std::abs(local - p.end) <= tol) return p.end;
  }
  return local;
}

std::vector<Event> activate_interactions(SystemState& state, double t) {
  std::vector<Event> events;
  const auto& model = state.model();
  const auto edges = model.edges();
  const std::size_t max_passes = edges.size() + model.templates().size() + 2;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      const int ei = static_cast<int>(i);
      const bool source = state.exists(e.source);
      const bool open = source && e.profile.in_window(local_time(state, e, t));
      if (open && !state.edge_open[i]) {
        state.edge_open[i] = 1;
        events.push_back({t, EventKind::InteractionStart, e.source, ei});
      } else if (!open && state.edge_open[i]) {
        state.edge_open[i] = 0;
        state.edge_blocked[i] = 0;
        if (source) events.push_back({t, EventKind::InteractionEnd, e.source, ei});
      }
      if (open && e.creates_ready && !state.exists(e.target)) {
        const auto& tmpl = model.templates()[e.target];
        state.create(e.target, t, 0.0, tmpl.ready_mask);
        events.push_back({t, EventKind::ComponentCreated, e.target, ei});
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!state.edge_open[i]) continue;
    const bool b = edge_blocked(state, static_cast<int>(i));
    if (b && !state.edge_blocked[i])
      events.push_back({t, EventKind::EdgeBlocked, edges[i].target, static_cast<int>(i)});
    state.edge_blocked[i] = b ? 1 : 0;
  }
  return events;
}

FlowSnapshot compute_flows(const SystemState& state, double t) {
  const auto& model = state.model();
  const auto edges = model.edges();
  const std::size_t n = model.templates().size();
  FlowSnapshot f;
  f.time = t;
  f.edge_rate.assign(edges.size(), 0.0);
  f.inflow.assign(n, 0.0);
  f.outflow.assign(n, 0.0);

  std::vector<double> raw(edges.size(), 0.0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!state.exists(e.source) || !state.exists(e.target)) continue;
    if (edge_blocked(state, static_cast<int>(i))) continue;
    raw[i] = e.profile.rate_at(local_time(state, e, t));
  }

  // Throttle dry sources: out-edges of an empty component are scaled so that it
  // passes on no more than it receives. Greatest fixed point from factor 1.
  std::vector<double> factor(n, 1.0);
  std::vector<int> dry;
  for (std::size_t k = 0; k < n; ++k) {
    const auto* c = state.find(static_cast<int>(k));
    if (c && c->weight <= 0.0) dry.push_back(static_cast<int>(k));
  }
  for (std::size_t iter = 0; iter < 64 && !dry.empty(); ++iter) {
    bool changed = false;
    for (int k : dry) {
      double out = 0.0, in = 0.0;
      for (int e : model.out_edges(k)) out += raw[e];
      if (out <= 0.0) continue;
      for (int e : model.in_edges(k)) in += raw[e] * factor[edges[e].source];
      const double phi = std::min(1.0, in / out);
      if (phi != factor[k]) {
        factor[k] = phi;
        changed = true;
      }
    }
    if (!changed) break;
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double r = raw[i] * factor[edges[i].source];
    f.edge_rate[i] = r;
    f.outflow[edges[i].source] += r;
    f.inflow[edges[i].target] += r;
  }
  return f;
}

Breakpoint next_breakpoint(const SystemState& state, const FlowSnapshot& flows, double t) {
  const auto& model = state.model();
  double edge_time = kInfinity;
  for (const auto& e : model.edges()) {
    const auto* src = state.find(e.source);
    if (!src) continue;
    const double origin = e.anchor == Anchor::Absolute ? 0.0 : src->epoch;
    double nb = e.profile.next_boundary(local_time(state, e, t));
    double next = origin + nb;
    while (std::isfinite(nb) && next <= t) {
      nb = e.profile.next_boundary(nb);
      next = origin + nb;
    }
    edge_time = std::min(edge_time, next);
  }

  Breakpoint bp;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto* c = state.find(static_cast<int>(k));
    if (!c || c->weight <= 0.0) continue;
    const double net = flows.net(static_cast<int>(k));
    if (net >= 0.0) continue;
    const double when = t + c->weight / -net;
    if (when < bp.time) {
      bp.time = when;
      bp.exhausting.assign(1, static_cast<int>(k));
    } else if (when == bp.time) {
      bp.exhausting.push_back(static_cast<int>(k));
    }
  }
  if (edge_time < bp.time) {
    bp.time = edge_time;
    bp.exhausting.clear();
  }
  return bp;
}

void integrate(SystemState& state, const FlowSnapshot& flows, double dt,
               const std::vector<int>& exhausting) {
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (!state.exists(static_cast<int>(k))) continue;
    auto& c = state.at(static_cast<int>(k));
    const double net = flows.net(static_cast<int>(k));
    if (net == 0.0) continue;
    double w = c.weight + net * dt;
    if (w < 0.0) {
      if (w < -kNegativeTolerance * std::max(1.0, state.s))
        throw StepSizeError("step drives component '" + state.model().component_id(c.key) +
                            "' negative (" + std::to_string(w) + ")");
      w = 0.0;
    }
    c.weight = w;
  }
  for (int k : exhausting)
    if (state.exists(k)) state.at(k).weight = 0.0;
}

void advance(SystemState& state, double dt) {
  if (!(dt > 0.0)) throw StepSizeError("advance needs dt > 0");
  const double t = state.time;
  const auto flows = compute_flows(state, t);
  const auto bp = next_breakpoint(state, flows, t);
  const double end = t + dt;
  if (bp.time < end - snap_tolerance(end))
    throw StepSizeError("step (" + std::to_string(t) + ", " + std::to_string(end) +
                        ") crosses a breakpoint at " + std::to_string(bp.time));
  integrate(state, flows, dt, bp.time <= end ? bp.exhausting : std::vector<int>{});
  state.time = end;
}

}  // namespace nusim
