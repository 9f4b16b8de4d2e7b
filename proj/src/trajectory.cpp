#include <algorithm>
#include <cmath>

#include "nusim/engine.hpp"
#include "nusim/errors.hpp"

namespace nusim {

namespace detail {

void log_events(TrajectoryRecord& log, const SystemState& state, std::vector<Event>&& events,
                bool with_snapshot) {
  if (events.empty()) return;
  std::uint32_t snap = kNoSnapshot;
  if (with_snapshot) {
    snap = static_cast<std::uint32_t>(log.snapshots.size());
    log.snapshots.push_back(snapshot_of(state));
  }
  for (auto& e : events) {
    e.snapshot = snap;
    log.events.push_back(e);
  }
}

namespace {

int choose_component(const SystemState& state, const FlowSnapshot& flows, double jtot, Rng& rng) {
  const double u = rng.uniform() * jtot;
  double acc = 0.0;
  int chosen = -1;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto* c = state.find(static_cast<int>(k));
    if (!c || !c->has_ready()) continue;
    const double j = flows.positive_inflow(static_cast<int>(k));
    if (j <= 0.0) continue;
    acc += j;
    chosen = static_cast<int>(k);
    if (u < acc) break;
  }
  return chosen;
}

void track_drift(TrajectoryRecord* log, const SystemState& state) {
  if (log) log->max_modulus_drift = std::max(log->max_modulus_drift, std::abs(total_modulus(state) - state.s));
}

}  // namespace

std::optional<Hit> run_until_hit(SystemState& state, double horizon, Rng& rng,
                                 const EngineOptions& options, TrajectoryRecord* log) {
  const bool discrete = options.fixed_dt > 0.0;
  double budget = discrete ? 0.0 : rng.exponential();
  for (;;) {
    const double t = state.time;
    if (t >= horizon) return std::nullopt;
    const auto flows = compute_flows(state, t);
    const auto piece = PieceHazard::from(state, flows);
    auto bp = next_breakpoint(state, flows, t);
    double end = bp.time;
    if (horizon < end) {
      end = horizon;
      bp.exhausting.clear();
    }
    if (!std::isfinite(end) && piece.jtot <= 0.0) return std::nullopt;  // quiescent
    double sample_at = kInfinity;
    if (log && options.sample_interval > 0.0) {
      sample_at = (std::floor(t / options.sample_interval) + 1.0) * options.sample_interval;
      if (sample_at < end) {
        end = sample_at;
        bp.exhausting.clear();
      }
    }
    if (discrete && t + options.fixed_dt < end) {
      end = t + options.fixed_dt;
      bp.exhausting.clear();
    }

    if (piece.jtot > 0.0) {
      double hit_after = -1.0;
      const double span = end - t;
      if (piece.live0 <= 0.0) {
        hit_after = 0.0;
      } else if (discrete) {
        const double lambda = piece.cumulative(span);
        if (rng.uniform() < -std::expm1(-lambda)) hit_after = span;
      } else {
        const double lambda = piece.cumulative(span);
        if (budget <= lambda) {
          hit_after = std::min(piece.solve(budget), span);
        } else {
          budget -= lambda;
        }
      }
      if (hit_after >= 0.0) {
        if (hit_after > 0.0)
          integrate(state, flows, hit_after, hit_after == span ? bp.exhausting : std::vector<int>{});
        state.time = t + hit_after;
        track_drift(log, state);
        const int chosen = choose_component(state, flows, piece.jtot, rng);
        return Hit{state.time, chosen};
      }
    }

    integrate(state, flows, end - t, bp.exhausting);
    state.time = end;
    track_drift(log, state);
    auto events = activate_interactions(state, end);
    if (log) {
      log_events(*log, state, std::move(events), options.record_snapshots);
      if (end == sample_at) {
        log->samples.push_back({end, static_cast<std::uint32_t>(log->snapshots.size())});
        log->snapshots.push_back(snapshot_of(state));
      }
    }
  }
}

}  // namespace detail

TrajectoryRecord run_trajectory(std::shared_ptr<const Model> model, std::uint64_t seed,
                                const EngineOptions& options) {
  TrajectoryRecord rec;
  rec.model = model;
  rec.seed = seed;
  try {
    SystemState state = SystemState::initial(model);
    Rng rng(seed);
    detail::log_events(rec, state, activate_interactions(state, 0.0), options.record_snapshots);
    if (options.sample_interval > 0.0) {
      rec.samples.push_back({0.0, static_cast<std::uint32_t>(rec.snapshots.size())});
      rec.snapshots.push_back(snapshot_of(state));
    }
    const double horizon = model->horizon();
    for (;;) {
      const auto hit = detail::run_until_hit(state, horizon, rng, options, &rec);
      if (!hit) break;
      if (hit->component < 0) throw ContractViolation("stochastic choice without a candidate");
      detail::log_events(rec, state, {{hit->time, EventKind::StochasticHit, hit->component, -1}},
                         options.record_snapshots);
      auto events = collapse(state, hit->component, hit->time);
      auto created = activate_interactions(state, hit->time);
      events.insert(events.end(), created.begin(), created.end());
      detail::log_events(rec, state, std::move(events), options.record_snapshots);
      rec.collapse_sequence.push_back(hit->component);
      if (rec.collapse_sequence.size() > options.max_collapses)
        throw ContractViolation("collapse limit exceeded; set a horizon");
    }
    rec.end_time = std::isfinite(horizon) ? std::max(state.time, horizon) : state.time;
    rec.outcome = model->classify(rec.collapse_sequence);
  } catch (const std::exception& e) {
    rec.failure = e.what();
    rec.outcome = "failed";
  }
  return rec;
}

}  // namespace nusim
