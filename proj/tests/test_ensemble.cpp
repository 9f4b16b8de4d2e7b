#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "nusim/ensemble.hpp"
#include "nusim/errors.hpp"
#include "nusim/scenario_library.hpp"
#include "nusim/stats.hpp"
#include "support.hpp"

using namespace nusim;
using namespace nusim::test;

namespace {

EnsembleReport ensemble(const Scenario& sc, std::uint64_t n, std::uint64_t seed, unsigned par = 1,
                        bool keep = false, EngineOptions engine = {}) {
  EnsembleOptions o;
  o.trials = n;
  o.master_seed = seed;
  o.parallelism = par;
  o.keep_outcomes = keep;
  o.engine = engine;
  return run_ensemble(compile(sc), o);
}

double snapshot_weight(const Snapshot& s, int key) {
  for (const auto& e : s)
    if (e.key == key) return e.weight;
  return -1.0;
}

}  // namespace

TEST_CASE("same scenario and seed give the same log") {
  const auto m = compile(scenario_two_observers());
  for (std::uint64_t seed : {1ull, 7ull, 123456789ull}) {
    const auto a = run_trajectory(m, seed);
    const auto b = run_trajectory(m, seed);
    CHECK(same_log(a, b));
    CHECK(a.outcome == b.outcome);
  }
}

TEST_CASE("event logs are ordered and every hit is followed by its collapse") {
  const auto m = compile(scenario_two_observers());
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto rec = run_trajectory(m, derive_seed(5, seed));
    REQUIRE_FALSE(rec.failure.has_value());
    for (std::size_t i = 1; i < rec.events.size(); ++i) REQUIRE(rec.events[i].time >= rec.events[i - 1].time);
    for (std::size_t i = 0; i < rec.events.size(); ++i) {
      if (rec.events[i].kind != EventKind::StochasticHit) continue;
      REQUIRE(i + 1 < rec.events.size());
      CHECK(rec.events[i + 1].kind == EventKind::Collapse);
      CHECK(rec.events[i + 1].time == rec.events[i].time);
      CHECK(rec.events[i + 1].component == rec.events[i].component);
    }
  }
}

TEST_CASE("collapse times in the two-observer trace follow the observation schedule") {
  const auto m = compile(scenario_two_observers());
  const double t_ob = *m->scenario().annotation("t_ob");
  const double t_ob2 = *m->scenario().annotation("t_ob2");
  const int o1 = *m->object_index(ObjectId{"observer1"});
  const int o2 = *m->object_index(ObjectId{"observer2"});
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto rec = run_trajectory(m, seed == 0 ? 7 : seed);
    double t_first = -1.0, t_second = -1.0;
    for (const auto& e : rec.events) {
      if (e.kind != EventKind::Collapse) continue;
      const auto& labels = m->templates()[e.component].labels;
      if (t_first < 0.0 && labels[o1].starts_with("B")) t_first = e.time;
      if (t_second < 0.0 && labels[o2].starts_with("B")) t_second = e.time;
    }
    REQUIRE(t_first > t_ob);
    REQUIRE(t_second >= t_ob2);
    CHECK(t_second > t_first);
    CHECK(rec.end_time >= t_second);
  }
}

TEST_CASE("primary-only capture frequency over 100k seeds") {
  const auto rep = ensemble(scenario_primary_only(), 100'000, 11, 4);
  CHECK(std::abs(rep.frequency("capture") - 0.6) <= 0.005);
  CHECK(rep.invariants.total() == 0);
}

TEST_CASE("observer ensemble frequencies within three sigma") {
  const auto rep = ensemble(scenario_observer(), 100'000, 42, 4);
  for (const auto& [label, p] : {std::pair{"capture-at-first-look", 0.5}, std::pair{"ground-then-capture", 0.1},
                                 std::pair{"ground-no-capture", 0.4}}) {
    CAPTURE(label);
    CHECK(std::abs(rep.frequency(label) - p) <= 3.0 * binomial_sigma(p, rep.trials));
  }
  CHECK(rep.count("anomalous") == 0);
  std::uint64_t total = 0;
  double freq = 0.0;
  for (const auto& l : rep.labels) {
    total += l.count;
    freq += l.frequency;
  }
  CHECK(total == rep.trials);
  CHECK(freq == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.invariants.total() == 0);
  CHECK(rep.invariants.max_modulus_drift < 1e-9);
}

TEST_CASE("the dormant phantom keeps its residual weight without further events") {
  const auto m = compile(scenario_observer());
  const int late = *m->key_of("late-capture");
  const int look_ground = *m->key_of("look-ground");
  int seen = 0;
  for (std::uint64_t seed = 0; seed < 400 && seen < 40; ++seed) {
    const auto rec = run_trajectory(m, derive_seed(99, seed));
    if (rec.outcome != "ground-no-capture") continue;
    ++seen;
    std::size_t after = 0;
    for (std::size_t i = 0; i < rec.events.size(); ++i)
      if (rec.events[i].kind == EventKind::Collapse && rec.events[i].component == look_ground) after = i;
    for (std::size_t i = after + 1; i < rec.events.size(); ++i) {
      CHECK(rec.events[i].kind != EventKind::StochasticHit);
      CHECK(rec.events[i].kind != EventKind::Collapse);
    }
    CHECK(snapshot_weight(rec.snapshots.back(), late) == doctest::Approx(0.2).epsilon(1e-12));
  }
  CHECK(seen >= 20);
}

TEST_CASE("reports do not depend on the worker count") {
  const auto one = ensemble(scenario_two_observers(), 20'000, 3, 1, true);
  const auto eight = ensemble(scenario_two_observers(), 20'000, 3, 8, true);
  CHECK(same_statistics(one, eight));
  CHECK(one.outcomes.size() == 20'000);
}

TEST_CASE("an ensemble of one") {
  const auto rep = ensemble(scenario_observer(), 1, 1);
  std::uint64_t total = 0;
  int nonzero = 0;
  for (const auto& l : rep.labels) {
    total += l.count;
    nonzero += l.count > 0;
  }
  CHECK(total == 1);
  CHECK(nonzero == 1);
  CHECK_THROWS_AS(ensemble(scenario_observer(), 0, 1), ConfigError);
}

TEST_CASE("default parallelism comes from the environment") {
  setenv("NUSIM_PARALLELISM", "3", 1);
  CHECK(default_parallelism() == 3);
  setenv("NUSIM_PARALLELISM", "lots", 1);
  CHECK(default_parallelism() == 1);
  setenv("NUSIM_PARALLELISM", "0", 1);
  CHECK(default_parallelism() == 1);
  unsetenv("NUSIM_PARALLELISM");
  CHECK(default_parallelism() == 1);
}

TEST_CASE("discrete stepping reproduces the continuous law") {
  EngineOptions discrete;
  discrete.fixed_dt = 1e-3;
  const auto rep = ensemble(scenario_observer(), 4'000, 8, 8, false, discrete);
  for (const auto& [label, p] : {std::pair{"capture-at-first-look", 0.5}, std::pair{"ground-then-capture", 0.1}}) {
    CAPTURE(label);
    CHECK(std::abs(rep.frequency(label) - p) <= 3.0 * binomial_sigma(p, rep.trials) + 1e-3);
  }
  CHECK(rep.invariants.total() == 0);
}

TEST_CASE("dense sampling adds weight samples at the requested spacing") {
  EngineOptions dense;
  dense.sample_interval = 0.5;
  const auto m = compile(scenario_primary_only());
  const auto rec = run_trajectory(m, 4, dense);
  REQUIRE(rec.samples.size() >= 10);
  for (std::size_t i = 1; i < rec.samples.size(); ++i)
    CHECK(rec.samples[i].time - rec.samples[i - 1].time == doctest::Approx(0.5));
  const auto plain = run_trajectory(m, 4);
  CHECK(plain.samples.empty());
  CHECK(plain.outcome == rec.outcome);
}

TEST_CASE("invariant checker flags a realized state turning ready") {
  const auto m = compile(scenario_primary_only());
  auto rec = run_trajectory(m, 1);
  InvariantCounts clean;
  check_invariants(rec, clean);
  CHECK(clean.total() == 0);

  auto forged = rec;
  Snapshot extra = forged.snapshots.back();
  for (auto& e : extra) e.ready_mask |= 1;
  forged.snapshots.push_back(extra);
  Snapshot negative = extra;
  negative.front().weight = -0.5;
  forged.snapshots.push_back(negative);
  InvariantCounts bad;
  check_invariants(forged, bad);
  CHECK(bad.realized_to_ready > 0);
  CHECK(bad.negative_weight > 0);
  CHECK(bad.modulus_drift == 1);
}
