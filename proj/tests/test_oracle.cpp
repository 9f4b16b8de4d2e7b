#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "nusim/ensemble.hpp"
#include "nusim/errors.hpp"
#include "nusim/oracle.hpp"
#include "nusim/scenario_library.hpp"
#include "nusim/stats.hpp"
#include "support.hpp"

using namespace nusim;
using namespace nusim::test;

namespace {

std::map<std::string, double> as_map(const std::vector<LawEntry>& law) {
  std::map<std::string, double> m;
  for (const auto& e : law) m[e.label] = e.probability;
  return m;
}

double leaf_sum(const Model& m, const OracleOptions& o = {}) {
  double s = 0.0;
  for (const auto& leaf : event_tree(m, o)) s += leaf.probability;
  return s;
}

}  // namespace

TEST_CASE("observer law is one half, one tenth, four tenths") {
  auto law = as_map(outcome_law(scenario_observer()));
  CHECK(law["capture-at-first-look"] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(law["ground-then-capture"] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(law["ground-no-capture"] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(law["anomalous"] == 0.0);
}

TEST_CASE("primary-only law and its independence of the profile shape") {
  for (int pieces : {1, 2, 7}) {
    auto law = as_map(outcome_law(scenario_primary_only(0.6, pieces)));
    CHECK(law["capture"] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(law["no-capture"] == doctest::Approx(0.4).epsilon(1e-12));
  }
  auto zero = as_map(outcome_law(scenario_primary_only(0.0)));
  CHECK(zero["capture"] == 0.0);
  CHECK(zero["no-capture"] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("three sinks share out their totals, closed form and fine grid agree") {
  const std::vector<double> totals{0.17, 0.31, 0.22};
  auto sc = sink_fan(totals);
  sc.edges[1].profile = RateProfile({{0.0, 0.4, 0.2}, {0.4, 1.0, (0.31 - 0.08) / 0.6}});
  sc.edges[2].profile = RateProfile::uniform(0.3, 0.9, 0.22);
  const auto exact = as_map(outcome_law(sc));
  CHECK(exact.at("s1") == doctest::Approx(0.17).epsilon(1e-12));
  CHECK(exact.at("s2") == doctest::Approx(0.31).epsilon(1e-12));
  CHECK(exact.at("s3") == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(exact.at("none") == doctest::Approx(0.30).epsilon(1e-12));

  OracleOptions fine;
  fine.fine_grid = true;
  const auto grid = as_map(outcome_law(sc, fine));
  for (const auto& [label, p] : exact) CHECK(std::abs(grid.at(label) - p) < 1e-6);
}

TEST_CASE("fine grid agrees with the closed form on every built-in and random scenario") {
  OracleOptions fine;
  fine.fine_grid = true;
  std::vector<Scenario> all{scenario_primary_only(), scenario_observer(), scenario_two_observers(),
                            scenario_two_observers_late(), scenario_counter_chain(4)};
  for (std::uint64_t i = 0; i < 12; ++i) all.push_back(random_scenario(i));
  for (const auto& sc : all) {
    CAPTURE(sc.name);
    const auto a = as_map(outcome_law(sc));
    const auto b = as_map(outcome_law(sc, fine));
    auto labels = a;
    labels.insert(b.begin(), b.end());
    for (const auto& [label, unused] : labels) {
      CAPTURE(label);
      const double pa = a.count(label) ? a.at(label) : 0.0;
      const double pb = b.count(label) ? b.at(label) : 0.0;
      CHECK(std::abs(pa - pb) < 1e-6);
    }
  }
}

TEST_CASE("leaf probabilities sum to one") {
  std::vector<Scenario> all{scenario_primary_only(), scenario_observer(), scenario_two_observers(),
                            scenario_two_observers_late(), scenario_counter_chain(5)};
  for (std::uint64_t i = 0; i < 30; ++i) all.push_back(random_scenario(1000 + i));
  for (const auto& sc : all) {
    CAPTURE(sc.name);
    CHECK(std::abs(leaf_sum(*compile(sc)) - 1.0) < 1e-12);
  }
}

TEST_CASE("hit-time CDF of a constant current rises linearly then plateaus") {
  const auto m = compile(scenario_primary_only());
  const auto cdf = hit_time_cdf(*m, "capture");
  const double T = m->edges()[0].profile.window_end();
  const double r = 0.6 / T;
  for (double t : {0.0, 0.1 * T, 0.5 * T, 0.99 * T}) CHECK(cdf(t) == doctest::Approx(r * t).epsilon(1e-12));
  CHECK(cdf(T) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cdf(3 * T) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cdf.limit() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cdf.support_end() == doctest::Approx(T));
}

TEST_CASE("a component without current is never hit") {
  const auto m = compile(sink_fan({0.4, 0.0}));
  const auto cdf = hit_time_cdf(*m, "s2");
  CHECK(cdf(0.5) == 0.0);
  CHECK(cdf(10.0) == 0.0);
  CHECK(cdf.limit() == 0.0);
}

TEST_CASE("the ground row of the look is hit with certainty within the look") {
  const auto m = compile(scenario_observer());
  const double t_ob = *m->scenario().annotation("t_ob");
  const double w = *m->scenario().annotation("look_width");
  const auto cdf = hit_time_cdf(*m, "look-ground");
  CHECK(cdf(t_ob) == 0.0);
  CHECK(cdf(t_ob + w) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cdf.limit() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hit_time_cdf(*m, "look-capture").limit() == 0.0);
}

TEST_CASE("unknown component ids are rejected") {
  const auto m = compile(scenario_observer());
  CHECK_THROWS_AS(hit_time_cdf(*m, "nope"), ConfigError);
  CHECK_THROWS_AS(hit_time_cdf(*m, "capture", std::string_view("nope")), ConfigError);
}

TEST_CASE("weak-branch law of the atom from the shelved level") {
  const auto m = compile(scenario_three_level_atom(100.0, 1.0));
  const auto cdf = hit_time_cdf(*m, "weak", std::string_view("shelved"));
  CHECK(cdf.limit() == doctest::Approx(1.0).epsilon(1e-12));
  // The staircase is exact at its piece boundaries (every third of a mean).
  for (double t : {1.0 / 3.0, 1.0, 2.0}) CHECK(cdf(t) == doctest::Approx(1.0 - std::exp(-t)).epsilon(1e-12));
  CHECK(std::isfinite(cdf.support_end()));
}

TEST_CASE("recurrent models need a horizon and a budget") {
  auto sc = scenario_three_level_atom(100.0, 1.0);
  sc.horizon.reset();
  CHECK_THROWS_AS(outcome_law(sc), OracleError);

  auto tight = scenario_three_level_atom(100.0, 1.0);
  tight.horizon = 0.3;
  OracleOptions o;
  o.max_pieces = 10'000;
  CHECK_THROWS_AS(outcome_law(tight, o), OracleError);
}

TEST_CASE("short-horizon atom: oracle and engine agree on the short sequences") {
  auto sc = scenario_three_level_atom(10.0, 1.0);
  sc.horizon = 0.2;
  const auto m = compile(sc);
  // Every hit time matters under a horizon, so the full tree is out of reach;
  // sequences of up to two collapses are still exact.
  OracleOptions o;
  o.max_events = 2;
  const auto law = outcome_law(*m, o);
  double total = 0.0, truncated = 0.0;
  for (const auto& e : law) {
    total += e.probability;
    if (e.label == kTruncatedLabel) truncated = e.probability;
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
  CHECK(truncated > 0.0);
  CHECK(truncated < 0.5);

  constexpr std::uint64_t n = 100'000;
  EnsembleOptions eo;
  eo.trials = n;
  eo.master_seed = 31;
  const auto rep = run_ensemble(m, eo);
  // Only labels above 5%; four sigma keeps the family-wise false alarm rate
  // below 1e-3 for the handful checked.
  int checked = 0;
  for (const auto& e : law) {
    if (e.probability < 0.05 || e.label == kTruncatedLabel) continue;
    ++checked;
    CAPTURE(e.label);
    CHECK(std::abs(rep.frequency(e.label) - e.probability) <= 4.0 * binomial_sigma(e.probability, n));
  }
  CHECK(checked >= 2);
}

TEST_CASE("truncation leaves shallow trees untouched") {
  OracleOptions o;
  o.max_events = 5;
  auto a = as_map(outcome_law(scenario_two_observers()));
  auto b = as_map(outcome_law(scenario_two_observers(), o));
  CHECK(b.count(kTruncatedLabel) == 0);
  for (const auto& [label, p] : a) CHECK(std::abs(b[label] - p) < 1e-12);
}

TEST_CASE("without blocking the forbidden rows gain weight") {
  auto sc = scenario_two_observers();
  sc.blocking = false;
  CHECK(as_map(outcome_law(sc))["anomalous"] > 0.05);

  auto chain = scenario_counter_chain(3);
  chain.blocking = false;
  auto law = as_map(outcome_law(chain));
  CHECK(law["0-1-2"] < 0.99);
  double skips = 0.0;
  for (const auto& [label, p] : law)
    if (label != "0-1-2") skips += p;
  CHECK(skips > 0.1);
}

TEST_CASE("a two-reading counter is the observer shape") {
  auto law = as_map(outcome_law(scenario_counter_chain(2)));
  CHECK(law["0-1"] == doctest::Approx(1.0).epsilon(1e-12));
}
