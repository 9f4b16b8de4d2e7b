#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nusim/dynamics.hpp"
#include "nusim/errors.hpp"
#include "nusim/scenario_library.hpp"
#include "support.hpp"

using namespace nusim;
using namespace nusim::test;

namespace {

SystemState started(const Scenario& sc) {
  auto st = SystemState::initial(compile(sc));
  activate_interactions(st, 0.0);
  return st;
}

double weight(const SystemState& st, const char* id) {
  const auto* c = st.find(*st.model().key_of(id));
  return c ? c->weight : -1.0;
}

double net_sum(const FlowSnapshot& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.inflow.size(); ++k) s += f.net(static_cast<int>(k));
  return s;
}

}  // namespace

TEST_CASE("the first look spawns zero-weight ready rows") {
  auto st = started(scenario_observer());
  const double t_ob = *st.model().scenario().annotation("t_ob");
  advance(st, t_ob);
  CHECK_FALSE(st.exists(*st.model().key_of("look-capture")));
  const auto events = activate_interactions(st, st.time);
  int created = 0;
  for (const auto& e : events)
    if (e.kind == EventKind::ComponentCreated) ++created;
  CHECK(created == 2);
  CHECK(weight(st, "look-capture") == 0.0);
  CHECK(weight(st, "look-ground") == 0.0);
  CHECK(st.at(*st.model().key_of("look-ground")).ready_mask != 0);
}

TEST_CASE("activation without a window opening changes nothing") {
  auto st = started(scenario_observer());
  advance(st, 1.0);
  const auto before = snapshot_of(st);
  CHECK(activate_interactions(st, st.time).empty());
  CHECK(snapshot_of(st) == before);
}

TEST_CASE("flows during the look feed the ground row and never the blocked row") {
  auto st = started(scenario_observer());
  const double t_ob = *st.model().scenario().annotation("t_ob");
  advance(st, t_ob);
  activate_interactions(st, st.time);
  const auto f = compute_flows(st, st.time);
  const auto& m = st.model();
  CHECK(f.inflow[*m.key_of("look-ground")] > 0.0);
  CHECK(f.inflow[*m.key_of("look-capture")] == 0.0);
  CHECK(f.edge_rate[*m.edge_of("look-at-capture")] == 0.0);
  CHECK(std::abs(net_sum(f)) < 1e-15);
}

TEST_CASE("single edge bookkeeping and a quiet system") {
  auto st = started(scenario_primary_only());
  const auto& m = st.model();
  const auto& e = m.edges()[*m.edge_of("primary")];
  const double T = e.profile.window_end();
  const double r = 0.6 / T;

  const auto f = compute_flows(st, 0.25 * T);
  CHECK(f.outflow[*m.key_of("ground")] == doctest::Approx(r));
  CHECK(f.inflow[*m.key_of("capture")] == doctest::Approx(r));
  CHECK(std::abs(net_sum(f)) < 1e-15);

  const auto quiet = compute_flows(st, T + 1.0);
  CHECK_FALSE(quiet.any_flow());
  for (double x : quiet.edge_rate) CHECK(x == 0.0);
}

TEST_CASE("half the window moves half the transfer total") {
  auto st = started(scenario_primary_only());
  const double T = st.model().edges()[0].profile.window_end();
  advance(st, T / 2);
  CHECK(weight(st, "ground") == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(weight(st, "capture") == doctest::Approx(0.3).epsilon(1e-14));
  advance(st, T / 2);
  CHECK(weight(st, "capture") == doctest::Approx(0.6).epsilon(1e-14));
  const auto before = snapshot_of(st);
  advance(st, 5.0);
  CHECK(snapshot_of(st) == before);
  CHECK(st.s == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("a split window moves the same total") {
  auto st = started(scenario_primary_only(0.6, 2));
  double t = 0.0;
  for (;;) {
    const auto f = compute_flows(st, t);
    const auto bp = next_breakpoint(st, f, t);
    if (std::isinf(bp.time)) break;
    integrate(st, f, bp.time - t, bp.exhausting);
    t = st.time = bp.time;
  }
  CHECK(weight(st, "capture") == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("the look window drains the ground branch into its ready row") {
  auto st = started(scenario_observer());
  const auto& m = st.model();
  const double t_ob = *m.scenario().annotation("t_ob");
  const double w = *m.scenario().annotation("look_width");
  advance(st, t_ob);
  activate_interactions(st, st.time);
  advance(st, w);
  CHECK(weight(st, "look-ground") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(weight(st, "ground")) < 1e-14);
  CHECK(weight(st, "look-capture") == 0.0);
  CHECK(weight(st, "capture") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(total_modulus(st) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("advance refuses steps across a breakpoint and empty steps") {
  auto st = started(scenario_primary_only());
  const double T = st.model().edges()[0].profile.window_end();
  CHECK_THROWS_AS(advance(st, 0.0), StepSizeError);
  CHECK_THROWS_AS(advance(st, -1.0), StepSizeError);
  CHECK_THROWS_AS(advance(st, 2 * T), StepSizeError);
}

TEST_CASE("an exhausting component ends at exactly zero") {
  auto sc = sink_fan({1.0});
  auto st = started(sc);
  const auto f = compute_flows(st, 0.0);
  const auto bp = next_breakpoint(st, f, 0.0);
  CHECK(bp.time == doctest::Approx(1.0));
  integrate(st, f, bp.time, bp.exhausting);
  CHECK(weight(st, "root") == 0.0);
  CHECK(weight(st, "s1") == doctest::Approx(1.0).epsilon(1e-15));
}
