#include <doctest.h>

#include <cmath>

#include "nusim/dynamics.hpp"
#include "nusim/errors.hpp"
#include "nusim/scenario_library.hpp"
#include "nusim/state.hpp"
#include "support.hpp"

using namespace nusim;
using namespace nusim::test;

namespace {

SystemState observer_at_first_look() {
  auto model = compile(scenario_observer());
  auto st = SystemState::initial(model);
  activate_interactions(st, 0.0);
  advance(st, *model->scenario().annotation("t_ob"));
  activate_interactions(st, st.time);
  return st;
}

}  // namespace

TEST_CASE("total modulus of the two-branch state at the first look is one") {
  const auto st = observer_at_first_look();
  const auto& m = st.model();
  CHECK(st.at(*m.key_of("ground")).weight == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st.at(*m.key_of("capture")).weight == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(total_modulus(st) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(st.s - total_modulus(st)) < 1e-12);
}

TEST_CASE("total modulus of an empty system is zero") {
  const SystemState st(compile(scenario_primary_only()));
  CHECK(total_modulus(st) == 0.0);
}

TEST_CASE("a lone component keeps its unnormalized weight") {
  SystemState st(compile(scenario_primary_only()));
  st.create(*st.model().key_of("capture"), 3.0, 0.5, 0);
  CHECK(total_modulus(st) == 0.5);
}

TEST_CASE("contains_ready distinguishes ready, realized and absent states") {
  const auto st = observer_at_first_look();
  const auto& m = st.model();
  const auto& capture = st.at(*m.key_of("capture"));
  const auto& ground = st.at(*m.key_of("ground"));
  CHECK(contains_ready(m, capture, ObjectId{"detector"}));
  CHECK_FALSE(contains_ready(m, ground, ObjectId{"detector"}));
  CHECK_FALSE(contains_ready(m, capture, ObjectId{"particle"}));
  CHECK_FALSE(contains_ready(m, capture, ObjectId{"no-such-object"}));
}

TEST_CASE("components created by an interaction hold only ready interaction states") {
  const auto st = observer_at_first_look();
  const auto& m = st.model();
  for (const char* id : {"look-ground", "look-capture"}) {
    const int k = *m.key_of(id);
    REQUIRE(st.exists(k));
    CHECK(st.at(k).weight == 0.0);
    for (const auto& s : states_of(m, st.at(k))) CHECK(s.status == StateStatus::Ready);
  }
  for (const auto& s : states_of(m, st.at(*m.key_of("ground")))) CHECK(s.status == StateStatus::Realized);
}

TEST_CASE("rate profiles vanish outside their window and integrate exactly") {
  const RateProfile p({{1.0, 2.0, 0.3}, {3.0, 4.0, 0.1}});
  CHECK(p.rate_at(0.5) == 0.0);
  CHECK(p.rate_at(2.5) == 0.0);
  CHECK(p.rate_at(4.0) == 0.0);
  CHECK(p.rate_at(1.0) == 0.3);
  CHECK(p.integral(0.0, 10.0) == doctest::Approx(0.4));
  CHECK(p.total() == doctest::Approx(0.4));
  CHECK(p.integral(1.5, 3.5) == doctest::Approx(0.2));
  CHECK(p.next_boundary(2.0) == 3.0);
  CHECK(std::isinf(p.next_boundary(4.0)));
  CHECK(p.window_begin() == 1.0);
  CHECK(p.window_end() == 4.0);
  CHECK(RateProfile::uniform(2.0, 6.0, 0.8).rate_at(3.0) == doctest::Approx(0.2));
}

TEST_CASE("validation names the offending field") {
  auto base = sink_fan({0.3, 0.2});

  SUBCASE("dangling id") {
    auto sc = base;
    sc.edges[1].target = "missing";
    try {
      validate(sc);
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(e.path() == "edges[1].target");
    }
  }
  SUBCASE("negative rate names the edge") {
    auto sc = base;
    sc.edges[0].profile = RateProfile({{0.0, 1.0, -1.0}});
    try {
      validate(sc);
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(e.path() == "edges[0].pieces[0].rate");
      CHECK(std::string(e.what()).find("e1") != std::string::npos);
    }
  }
  SUBCASE("window inversion") {
    auto sc = base;
    sc.edges[0].profile = RateProfile({{2.0, 1.0, 0.1}});
    CHECK_THROWS_AS(validate(sc), ConfigError);
  }
  SUBCASE("transfer total above one") {
    auto sc = base;
    sc.edges[0].profile = RateProfile::uniform(0.0, 1.0, 1.5);
    CHECK_THROWS_AS(validate(sc), ConfigError);
  }
  SUBCASE("two states of one object") {
    auto sc = base;
    sc.components[1].states.push_back(ready("source", "c"));
    CHECK_THROWS_AS(validate(sc), ConfigError);
  }
  SUBCASE("zero total modulus") {
    auto sc = base;
    sc.components[0].initial_weight = 0.0;
    CHECK_THROWS_AS(validate(sc), ConfigError);
  }
  SUBCASE("duplicate object") {
    auto sc = base;
    sc.objects.push_back({"source"});
    CHECK_THROWS_AS(validate(sc), ConfigError);
  }
}

TEST_CASE("snapshot hash depends on weights and ready flags") {
  const auto a = observer_at_first_look();
  auto b = a;
  CHECK(snapshot_hash(snapshot_of(a)) == snapshot_hash(snapshot_of(b)));
  b.at(*b.model().key_of("ground")).weight += 1e-15;
  CHECK(snapshot_hash(snapshot_of(a)) != snapshot_hash(snapshot_of(b)));
}
