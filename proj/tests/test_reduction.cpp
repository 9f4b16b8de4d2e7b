#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nusim/errors.hpp"
#include "nusim/oracle.hpp"
#include "nusim/reduction.hpp"
#include "nusim/scenario_library.hpp"
#include "nusim/stats.hpp"
#include "support.hpp"

using namespace nusim;
using namespace nusim::test;

namespace {

SystemState started(const Scenario& sc) {
  auto st = SystemState::initial(compile(sc));
  activate_interactions(st, 0.0);
  return st;
}

// Places the given components with their template ready flags.
SystemState handmade(std::shared_ptr<const Model> m, std::vector<std::pair<const char*, double>> parts, double t,
                     bool realized = false) {
  SystemState st(m);
  st.time = t;
  for (auto [id, w] : parts) {
    const int k = *m->key_of(id);
    st.create(k, t, w, realized ? 0 : m->templates()[k].ready_mask);
  }
  st.s = total_modulus(st);
  return st;
}

SystemState observer_in_look() {
  auto st = started(scenario_observer());
  const double t_ob = *st.model().scenario().annotation("t_ob");
  advance(st, t_ob);
  activate_interactions(st, st.time);
  return st;
}

const Component& get(const SystemState& st, const char* id) { return st.at(*st.model().key_of(id)); }

}  // namespace

TEST_CASE("blocking between the rows of the look") {
  const auto st = observer_in_look();
  CHECK(blocked(get(st, "capture"), get(st, "look-capture")));
  CHECK(blocked(get(st, "look-ground"), get(st, "look-capture")));
  CHECK(blocked(get(st, "look-capture"), get(st, "look-ground")));
  CHECK_FALSE(blocked(get(st, "ground"), get(st, "look-ground")));
  CHECK_FALSE(blocked(get(st, "ground"), get(st, "capture")));
}

TEST_CASE("the edge into the doubly-seen capture row is blocked") {
  auto m = compile(scenario_two_observers());
  const auto st = handmade(m, {{"look-ground", 0.0}, {"late-capture", 0.3}, {"look2-capture", 0.0}}, 9.2);
  auto realized = st;
  realized.at(*m->key_of("look-ground")).ready_mask = 0;
  realized.at(*m->key_of("look-ground")).weight = 0.7;
  realized.s = total_modulus(realized);
  CHECK(edge_blocked(realized, *m->edge_of("look2-at-late")));
  CHECK_FALSE(edge_blocked(realized, *m->edge_of("look2-at-ground")));
  const auto all = blocked_edges(realized);
  CHECK(std::find(all.begin(), all.end(), *m->edge_of("look2-at-late")) != all.end());
}

TEST_CASE("a second observer cannot read the dormant phantom") {
  auto m = compile(scenario_two_observers_late());
  auto st = handmade(m, {{"look-ground", 0.8}, {"late-capture", 0.2}}, 11.0);
  st.at(*m->key_of("look-ground")).ready_mask = 0;
  CHECK(edge_blocked(st, *m->edge_of("look2-at-late")));
}

TEST_CASE("no ready states means nothing is blocked") {
  const auto st = started(scenario_primary_only());
  CHECK(blocked_edges(st).empty());
}

TEST_CASE("blocking is symmetric and can be switched off") {
  const auto st = observer_in_look();
  CHECK(blocked(get(st, "look-capture"), get(st, "capture")) == blocked(get(st, "capture"), get(st, "look-capture")));
  auto sc = scenario_observer();
  sc.blocking = false;
  auto m = compile(sc);
  auto free = handmade(m, {{"capture", 0.5}, {"look-capture", 0.0}, {"ground", 0.5}}, 8.34);
  free.at(*m->key_of("ground")).ready_mask = 0;
  CHECK_FALSE(edge_blocked(free, *m->edge_of("look-at-capture")));
}

TEST_CASE("hazard equals the inflow when s = 1") {
  const auto st = started(scenario_primary_only());
  const auto f = compute_flows(st, 1.0);
  const auto h = hazards(st, f);
  const int cap = *st.model().key_of("capture");
  CHECK(h.rate[cap] == doctest::Approx(0.06));
  CHECK(h.total == doctest::Approx(0.06));
  for (double x : h.rate) CHECK(x >= 0.0);

  const auto quiet = hazards(st, compute_flows(st, 20.0));
  CHECK(quiet.total == 0.0);
  CHECK(quiet.conditional_total() == 0.0);
}

TEST_CASE("zero modulus is degenerate") {
  auto m = compile(scenario_primary_only());
  SystemState st(m);
  CHECK_THROWS_AS(hazards(st, compute_flows(st, 0.0)), DegenerateSystem);
}

TEST_CASE("piece hazard inverts its own cumulative") {
  for (const PieceHazard p : {PieceHazard{0.8, 0.0, 0.3}, PieceHazard{0.8, 0.5, 0.3}, PieceHazard{0.8, 0.7, 0.7}}) {
    for (double u : {0.01, 0.2, 1.0}) {
      const double c = p.cumulative(u);
      if (std::isinf(c)) continue;
      CHECK(p.solve(c) == doctest::Approx(u).epsilon(1e-12));
    }
  }
  // Full drain exactly at u = live0 / drain.
  const PieceHazard drained{0.5, 0.5, 0.5};
  CHECK(std::isinf(drained.cumulative(1.0)));
}

TEST_CASE("zero current never hits") {
  const auto st = started(scenario_primary_only(0.0));
  Rng rng(5);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(sample_next_hit(st, kInfinity, rng).has_value());
}

TEST_CASE("hit probability over a window equals its transfer total") {
  constexpr int n = 100'000;
  const auto st = started(scenario_primary_only(0.6));
  const double T = st.model().edges()[0].profile.window_end();
  Rng rng(2026);
  int hits = 0;
  std::vector<double> times;
  for (int i = 0; i < n; ++i) {
    if (const auto h = sample_next_hit(st, kInfinity, rng)) {
      ++hits;
      times.push_back(h->time);
    }
  }
  const double f = static_cast<double>(hits) / n;
  CHECK(std::abs(f - 0.6) <= 3.0 * binomial_sigma(0.6, n));
  // Given a hit, the time is uniform over the window.
  const auto ks = ks_test(times, [&](double t) { return std::clamp(t / T, 0.0, 1.0); });
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("the choice between ready sinks follows their currents") {
  constexpr int n = 100'000;
  const auto st = started(sink_fan({0.2, 0.6}));
  Rng rng(77);
  int first = 0, any = 0;
  for (int i = 0; i < n; ++i) {
    if (const auto h = sample_next_hit(st, kInfinity, rng)) {
      ++any;
      if (h->component == *st.model().key_of("s1")) ++first;
    }
  }
  CHECK(std::abs(static_cast<double>(any) / n - 0.8) <= 3.0 * binomial_sigma(0.8, n));
  CHECK(std::abs(static_cast<double>(first) / any - 0.25) <= 3.0 * binomial_sigma(0.25, any));
}

TEST_CASE("scaling all weights and currents together leaves the hit law unchanged") {
  auto base = sink_fan({0.3, 0.4});
  auto scaled = base;
  scaled.components[0].initial_weight = 0.25;
  for (auto& e : scaled.edges) e.profile = e.profile.scaled(0.25);
  const auto a = started(base);
  const auto b = started(scaled);
  CHECK(hazards(a, compute_flows(a, 0.5)).conditional_total() ==
        doctest::Approx(hazards(b, compute_flows(b, 0.5)).conditional_total()).epsilon(1e-14));
  Rng ra(9), rb(9);
  for (int i = 0; i < 200; ++i) {
    const auto ha = sample_next_hit(a, kInfinity, ra);
    const auto hb = sample_next_hit(b, kInfinity, rb);
    REQUIRE(ha.has_value() == hb.has_value());
    if (ha) {
      CHECK(ha->component == hb->component);
      CHECK(ha->time == doctest::Approx(hb->time).epsilon(1e-12));
    }
  }
}

TEST_CASE("collapse onto the capture row leaves it alone and realized") {
  auto st = started(scenario_primary_only());
  advance(st, 4.0);
  const int cap = *st.model().key_of("capture");
  collapse(st, cap, st.time);
  CHECK(st.exists(cap));
  CHECK_FALSE(st.exists(*st.model().key_of("ground")));
  CHECK(st.at(cap).weight == 1.0);
  CHECK(st.at(cap).ready_mask == 0);
  CHECK(st.s == 1.0);
  for (const auto& s : states_of(st.model(), st.at(cap))) CHECK(s.status == StateStatus::Realized);
}

TEST_CASE("an observer seeing the capture becomes conscious of it") {
  auto m = compile(scenario_observer());
  auto st = handmade(m, {{"capture", 0.6}, {"look-capture", 0.4}}, 8.34);
  st.at(*m->key_of("capture")).ready_mask = 0;
  const int look = *m->key_of("look-capture");
  collapse(st, look, st.time);
  const auto states = states_of(*m, st.at(look));
  CHECK(states.size() == 2);
  for (const auto& s : states) {
    CHECK(s.status == StateStatus::Realized);
    if (s.object.name == "observer") CHECK(s.label == "B1");
  }
}

TEST_CASE("an observer seeing the ground row sees the detector in its ground state") {
  auto st = observer_in_look();
  advance(st, 0.005);
  const int lg = *st.model().key_of("look-ground");
  REQUIRE(st.at(lg).weight > 0.0);
  collapse(st, lg, st.time);
  for (std::size_t k = 0; k < st.size(); ++k) CHECK(st.exists(static_cast<int>(k)) == (static_cast<int>(k) == lg));
  for (const auto& s : states_of(st.model(), st.at(lg))) {
    CHECK(s.status == StateStatus::Realized);
    if (s.object.name == "detector") CHECK(s.label == "D0");
    if (s.object.name == "observer") CHECK(s.label == "B0");
  }
}

TEST_CASE("collapse contract") {
  auto st = started(scenario_primary_only());
  CHECK_THROWS_AS(collapse(st, *st.model().key_of("ground"), 0.0), ContractViolation);
  auto m = compile(scenario_observer());
  auto empty = SystemState::initial(m);
  CHECK_THROWS_AS(collapse(empty, *m->key_of("look-capture"), 0.0), ContractViolation);
}
