#include "nusim/scenario_library.hpp"

#include <algorithm>
#include <cmath>

#include "nusim/errors.hpp"
#include "nusim/rng.hpp"

namespace nusim {

namespace {

constexpr double kPrimaryEnd = 10.0;
constexpr double kPrimaryTotal = 0.6;
constexpr double kLookWidth = 0.01;

StateSpec ready(std::string object, std::string label) { return {{std::move(object)}, std::move(label), true}; }
StateSpec real(std::string object, std::string label) { return {{std::move(object)}, std::move(label), false}; }

ComponentSpec component(std::string id, std::vector<StateSpec> states,
                        std::optional<double> weight = std::nullopt) {
  return {std::move(id), std::move(states), weight, std::nullopt};
}

EdgeSpec edge(std::string id, std::string source, std::string target, RateProfile profile,
              Anchor anchor = Anchor::Absolute) {
  return {std::move(id), std::move(source), std::move(target), std::move(profile), anchor, true};
}

ClassifierRule rule(std::string label, std::vector<std::string> sequence) {
  return {std::move(label), std::move(sequence), std::nullopt};
}

ClassifierRule catch_all(std::string label) { return {std::move(label), std::nullopt, std::nullopt}; }

std::vector<ObjectId> objects(std::initializer_list<const char*> names) {
  std::vector<ObjectId> out;
  for (const char* n : names) out.push_back({n});
  return out;
}

// Times of the observer schedule. The primary rate is fixed by the capture
// total; the first look comes when half the mass has been transferred.
struct Schedule {
  double rate = kPrimaryTotal / kPrimaryEnd;
  double t_ob = 0.5 / rate;
  double w = kLookWidth;
};

}  // namespace

RateProfile exponential_staircase(double rate, double scale, int pieces, double span_in_means) {
  const double h = span_in_means / (rate * pieces);
  std::vector<RatePiece> out;
  for (int i = 0; i < pieces; ++i) {
    const double a = i * h;
    const double b = (i + 1) * h;
    const double mass = i + 1 == pieces ? std::exp(-rate * a) : std::exp(-rate * a) - std::exp(-rate * b);
    out.push_back({a, b, scale * mass / h});
  }
  return RateProfile(std::move(out));
}

Scenario scenario_primary_only(double total, int pieces) {
  if (!(total >= 0.0 && total <= 1.0)) throw ConfigError("total", "capture total must lie in [0, 1]");
  if (pieces < 1) throw ConfigError("pieces", "need at least one piece");
  Scenario sc;
  sc.name = "primary-only";
  sc.description = "Particle and detector; the capture current carries the total capture probability.";
  sc.objects = objects({"particle", "detector"});
  sc.components = {
      component("ground", {real("particle", "psi"), real("detector", "D0")}, 1.0),
      component("capture", {ready("detector", "D1")}),
  };
  std::vector<RatePiece> ps;
  const double len = kPrimaryEnd / pieces;
  // Uneven split across pieces so the shape differs from the single-piece case.
  double weight_sum = 0.0;
  for (int i = 0; i < pieces; ++i) weight_sum += i + 1;
  for (int i = 0; i < pieces; ++i)
    ps.push_back({i * len, (i + 1) * len, total * (i + 1) / weight_sum / len});
  sc.edges = {edge("primary", "ground", "capture", RateProfile(std::move(ps)))};
  sc.classifier.mode = ClassifierMode::Rules;
  sc.classifier.rules = {rule("capture", {"capture"}), rule("no-capture", {})};
  sc.expected = {{"capture", total}, {"no-capture", 1.0 - total}};
  return sc;
}

Scenario scenario_observer() {
  const Schedule s;
  Scenario sc;
  sc.name = "observer";
  sc.description =
      "An observer looks at the detector when the capture probability has reached one half.";
  sc.objects = objects({"particle", "detector", "observer"});
  sc.components = {
      component("ground", {real("particle", "psi"), real("detector", "D0"), real("observer", "X")}, 1.0),
      component("capture", {ready("detector", "D1"), real("observer", "X")}),
      component("look-ground", {ready("particle", "psi'"), ready("detector", "D0"), ready("observer", "B0")}),
      component("look-capture", {ready("detector", "D1'"), ready("observer", "B1")}),
      component("late-capture", {ready("detector", "D1"), ready("observer", "B1")}),
  };
  const double t_end = kPrimaryEnd + s.w;
  sc.edges = {
      edge("primary", "ground", "capture",
           RateProfile({{0.0, s.t_ob, s.rate}, {s.t_ob + s.w, t_end, s.rate}})),
      edge("look-at-capture", "capture", "look-capture", RateProfile::uniform(s.t_ob, s.t_ob + s.w, 1.0)),
      edge("look-at-ground", "ground", "look-ground", RateProfile::uniform(s.t_ob, s.t_ob + s.w, 0.5)),
      // After the observer has seen the ground state the residual 0.1 of
      // capture is 0.2 of the renormalized branch.
      edge("late-primary", "look-ground", "late-capture",
           RateProfile::uniform(s.t_ob + s.w, t_end, 0.1 / 0.5)),
  };
  sc.classifier.mode = ClassifierMode::Rules;
  sc.classifier.rules = {
      rule("capture-at-first-look", {"capture", "look-capture"}),
      rule("ground-then-capture", {"look-ground", "late-capture"}),
      rule("ground-no-capture", {"look-ground"}),
      catch_all("anomalous"),
  };
  sc.expected = {{"capture-at-first-look", 0.5},
                 {"ground-then-capture", 0.1},
                 {"ground-no-capture", 0.4},
                 {"anomalous", 0.0}};
  sc.annotations = {{"t_ob", s.t_ob}, {"look_width", s.w}};
  return sc;
}

Scenario scenario_two_observers() {
  const Schedule s;
  const double t_ob2 = s.t_ob + s.w + 0.05 / s.rate;
  const double t_end = kPrimaryEnd + 2.0 * s.w;
  Scenario sc;
  sc.name = "two-observers";
  sc.description = "A second observer looks while the primary current is still running.";
  sc.objects = objects({"particle", "detector", "observer1", "observer2"});
  sc.components = {
      component("ground", {real("particle", "psi"), real("detector", "D0"), real("observer1", "X"),
                           real("observer2", "X")}, 1.0),
      component("capture", {ready("detector", "D1"), real("observer1", "X"), real("observer2", "X")}),
      component("look-ground", {ready("particle", "psi'"), ready("detector", "D0"), ready("observer1", "B0"),
                                real("observer2", "X")}),
      component("look-capture", {ready("detector", "D1'"), ready("observer1", "B1"), real("observer2", "X")}),
      component("late-capture", {ready("detector", "D1"), ready("observer1", "B1"), real("observer2", "X")}),
      component("look2-ground", {ready("particle", "psi''"), ready("detector", "D0"),
                                 ready("observer1", "B0"), ready("observer2", "B0")}),
      component("look2-capture", {ready("detector", "D1''"), ready("observer1", "B1"), ready("observer2", "B1")}),
      component("look2-late", {ready("detector", "D1"), ready("observer1", "B1"), ready("observer2", "B1")}),
  };
  sc.edges = {
      edge("primary", "ground", "capture", RateProfile({{0.0, s.t_ob, s.rate}})),
      edge("look-at-capture", "capture", "look-capture", RateProfile::uniform(s.t_ob, s.t_ob + s.w, 1.0)),
      edge("look-at-ground", "ground", "look-ground", RateProfile::uniform(s.t_ob, s.t_ob + s.w, 0.5)),
      edge("late-primary", "look-ground", "late-capture", RateProfile::uniform(s.t_ob + s.w, t_ob2, 0.1)),
      edge("look2-at-capture", "look-capture", "look2-capture", RateProfile::uniform(t_ob2, t_ob2 + s.w, 1.0)),
      edge("look2-at-late", "late-capture", "look2-capture", RateProfile::uniform(t_ob2, t_ob2 + s.w, 1.0)),
      edge("look2-at-ground", "look-ground", "look2-ground", RateProfile::uniform(t_ob2, t_ob2 + s.w, 0.9)),
      edge("last-primary", "look2-ground", "look2-late", RateProfile::uniform(t_ob2 + s.w, t_end, 0.05 / 0.45)),
  };
  sc.classifier.mode = ClassifierMode::Rules;
  sc.classifier.rules = {
      rule("capture-at-first-look", {"capture", "look-capture", "look2-capture"}),
      rule("capture-before-second-look", {"look-ground", "late-capture", "look2-capture"}),
      rule("capture-after-second-look", {"look-ground", "look2-ground", "look2-late"}),
      rule("no-capture", {"look-ground", "look2-ground"}),
      catch_all("anomalous"),
  };
  sc.expected = {{"capture-at-first-look", 0.5},
                 {"capture-before-second-look", 0.05},
                 {"capture-after-second-look", 0.05},
                 {"no-capture", 0.4},
                 {"anomalous", 0.0}};
  sc.annotations = {{"t_ob", s.t_ob}, {"t_ob2", t_ob2}, {"look_width", s.w}};
  return sc;
}

Scenario scenario_two_observers_late() {
  const Schedule s;
  const double t_end = kPrimaryEnd + s.w;
  const double t_ob2 = t_end + 1.0;
  Scenario sc;
  sc.name = "two-observers-late";
  sc.description = "A second observer looks after the primary current has ended.";
  sc.objects = objects({"particle", "detector", "observer1", "observer2"});
  sc.components = {
      component("ground", {real("particle", "psi"), real("detector", "D0"), real("observer1", "X"),
                           real("observer2", "X")}, 1.0),
      component("capture", {ready("detector", "D1"), real("observer1", "X"), real("observer2", "X")}),
      component("look-ground", {ready("particle", "psi'"), ready("detector", "D0"), ready("observer1", "B0"),
                                real("observer2", "X")}),
      component("look-capture", {ready("detector", "D1'"), ready("observer1", "B1"), real("observer2", "X")}),
      component("late-capture", {ready("detector", "D1"), ready("observer1", "B1"), real("observer2", "X")}),
      component("look2-ground", {ready("particle", "psi''"), ready("detector", "D0"),
                                 ready("observer1", "B0"), ready("observer2", "B0")}),
      component("look2-capture", {ready("detector", "D1''"), ready("observer1", "B1"), ready("observer2", "B1")}),
  };
  sc.edges = {
      edge("primary", "ground", "capture", RateProfile({{0.0, s.t_ob, s.rate}})),
      edge("look-at-capture", "capture", "look-capture", RateProfile::uniform(s.t_ob, s.t_ob + s.w, 1.0)),
      edge("look-at-ground", "ground", "look-ground", RateProfile::uniform(s.t_ob, s.t_ob + s.w, 0.5)),
      edge("late-primary", "look-ground", "late-capture", RateProfile::uniform(s.t_ob + s.w, t_end, 0.2)),
      edge("look2-at-capture", "look-capture", "look2-capture", RateProfile::uniform(t_ob2, t_ob2 + s.w, 1.0)),
      edge("look2-at-late", "late-capture", "look2-capture", RateProfile::uniform(t_ob2, t_ob2 + s.w, 1.0)),
      edge("look2-at-ground", "look-ground", "look2-ground", RateProfile::uniform(t_ob2, t_ob2 + s.w, 0.8)),
  };
  sc.classifier.mode = ClassifierMode::Rules;
  sc.classifier.rules = {
      rule("capture-at-first-look", {"capture", "look-capture", "look2-capture"}),
      rule("ground-then-capture", {"look-ground", "late-capture", "look2-capture"}),
      rule("ground-no-capture", {"look-ground", "look2-ground"}),
      catch_all("anomalous"),
  };
  sc.expected = {{"capture-at-first-look", 0.5},
                 {"ground-then-capture", 0.1},
                 {"ground-no-capture", 0.4},
                 {"anomalous", 0.0}};
  sc.annotations = {{"t_ob", s.t_ob}, {"t_ob2", t_ob2}, {"look_width", s.w}};
  return sc;
}

Scenario scenario_counter_chain(int k) {
  if (k < 2) throw ConfigError("k", "a counter chain needs at least two readings");
  if (k > 60) throw ConfigError("k", "at most 60 readings");
  constexpr double rate = 1.0;
  const double delay = 0.5 / rate;
  Scenario sc;
  sc.name = "counter-chain";
  sc.description = "A counter advancing through " + std::to_string(k) + " readings in view of an observer.";
  sc.objects = objects({"counter", "observer"});
  std::string reading_law;
  for (int j = 0; j < k; ++j) {
    const std::string n = std::to_string(j);
    if (j == 0) {
      sc.components.push_back(component("r0", {real("counter", "0"), real("observer", "B0")}, 1.0));
    } else {
      sc.components.push_back(component("r" + n, {ready("counter", n), ready("observer", "B" + n)}));
    }
    if (!reading_law.empty()) reading_law += '-';
    reading_law += n;
  }
  // Each tick starts `delay` after its source was realized (or created) and
  // carries the whole source; a still-ready reading passes nothing on.
  for (int j = 0; j + 1 < k; ++j) {
    sc.edges.push_back(edge("tick" + std::to_string(j), "r" + std::to_string(j), "r" + std::to_string(j + 1),
                            RateProfile({{delay, 3.0 * delay, rate}}), Anchor::SourceEpoch));
  }
  sc.classifier.mode = ClassifierMode::Readings;
  sc.classifier.object = ObjectId{"counter"};
  sc.expected = {{reading_law, 1.0}};
  sc.annotations = {{"k", static_cast<double>(k)}, {"tick_delay", delay}};
  return sc;
}

Scenario scenario_three_level_atom(double strong_rate, double weak_rate) {
  if (!(std::isfinite(strong_rate) && std::isfinite(weak_rate) && weak_rate > 0.0))
    throw ConfigError("weak_rate", "rates must be finite and positive");
  if (!(strong_rate >= 10.0 * weak_rate))
    throw ConfigError("strong_rate", "strong rate must be at least 10 x the weak rate");
  const double total = strong_rate + weak_rate;
  Scenario sc;
  sc.name = "three-level-atom";
  sc.description = "Atom cycling on a strong transition with occasional shelving through a weak one.";
  sc.objects = objects({"atom", "field"});
  auto strong = component("strong", {ready("atom", "g"), ready("field", "strong-photon")});
  strong.realizes_as = "ground";
  auto weak = component("weak", {ready("atom", "g"), ready("field", "weak-photon")});
  weak.realizes_as = "ground";
  sc.components = {
      component("ground", {real("atom", "g")}, 1.0),
      strong,
      component("shelved", {ready("atom", "e2")}),
      weak,
  };
  const auto from_ground = exponential_staircase(total);
  const auto weak_decay = exponential_staircase(weak_rate);
  sc.edges = {
      edge("excite-strong", "ground", "strong", from_ground.scaled(strong_rate / total), Anchor::SourceEpoch),
      edge("shelve", "ground", "shelved", from_ground.scaled(weak_rate / total), Anchor::SourceEpoch),
      edge("weak-decay", "shelved", "weak", weak_decay, Anchor::SourceEpoch),
      // Strong cycling would restart from the weak photon's ground state; this
      // ready-to-ready transfer is what blocking suppresses.
      edge("restart-strong", "weak", "strong", weak_decay.scaled(0.5), Anchor::SourceEpoch),
  };
  sc.horizon = 50.0 / weak_rate;
  sc.classifier.mode = ClassifierMode::Sequence;
  sc.annotations = {{"strong_rate", strong_rate}, {"weak_rate", weak_rate}};
  return sc;
}

Scenario random_scenario(std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ 0x5eed5eed5eedull));
  auto uniform = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
  auto pick = [&](int n) { return static_cast<int>(rng.bits() % static_cast<std::uint64_t>(n)); };

  Scenario sc;
  sc.name = "random-" + std::to_string(seed);
  sc.description = "Randomly generated scenario";
  sc.objects = objects({"system", "meter-a", "meter-b"});
  const int sinks = 1 + pick(4);
  sc.components.push_back(component("root", {real("system", "s0")}, 1.0));
  for (int j = 0; j < sinks; ++j) {
    const std::string n = std::to_string(j + 1);
    sc.components.push_back(component("k" + n, {ready(pick(2) ? "meter-b" : "meter-a", "m" + n)}));
  }
  const bool cut = rng.uniform() < 0.25;
  if (cut) sc.horizon = uniform(2.0, 10.0);

  double budget = rng.uniform() < 0.25 ? 1.0 : uniform(0.2, 1.0);
  std::vector<double> share(sinks);
  double share_sum = 0.0;
  for (auto& x : share) share_sum += (x = uniform(0.05, 1.0));

  std::vector<RateProfile> feed;
  for (int j = 0; j < sinks; ++j) {
    const double total = budget * share[j] / share_sum;
    const double begin = uniform(0.0, 6.0);
    const double len = uniform(0.5, 4.0);
    RateProfile p;
    if (pick(2) == 0) {
      p = RateProfile::uniform(begin, begin + len, total);
    } else {
      const double mid = begin + len * uniform(0.2, 0.8);
      const double frac = uniform(0.1, 0.9);
      p = RateProfile({{begin, mid, total * frac / (mid - begin)},
                       {mid, begin + len, total * (1.0 - frac) / (begin + len - mid)}});
    }
    feed.push_back(p);
    sc.edges.push_back(edge("e" + std::to_string(j + 1), "root", "k" + std::to_string(j + 1), p));
  }

  if (sinks >= 2 && sinks < 4 && rng.uniform() < 0.7) {
    const int from = pick(sinks);
    int to = pick(sinks - 1);
    if (to >= from) ++to;
    const double beta = uniform(0.1, 1.0);
    const std::string src = "k" + std::to_string(from + 1);
    const std::string dst = "k" + std::to_string(to + 1);
    const int kind = pick(3);
    if (kind == 0) {
      sc.edges.push_back(edge("relay", src, dst, feed[from].scaled(beta)));
    } else if (kind == 1 && !cut) {
      sc.edges.push_back(edge("relay", src, dst, RateProfile::uniform(0.0, uniform(0.5, 3.0), beta),
                              Anchor::SourceEpoch));
    } else {
      const double begin = std::max(0.0, feed[from].window_end() + uniform(-1.0, 2.0));
      sc.edges.push_back(edge("relay", src, dst, RateProfile::uniform(begin, begin + uniform(0.5, 3.0), beta)));
    }
  }
  sc.classifier.mode = ClassifierMode::Sequence;
  return sc;
}

std::vector<std::string> builtin_names() {
  return {"primary-only", "observer", "two-observers", "two-observers-late", "counter-chain", "three-level-atom"};
}

Scenario builtin(std::string_view name) {
  if (name == "primary-only") return scenario_primary_only();
  if (name == "observer") return scenario_observer();
  if (name == "two-observers") return scenario_two_observers();
  if (name == "two-observers-late") return scenario_two_observers_late();
  if (name == "counter-chain") return scenario_counter_chain(5);
  if (name == "three-level-atom") return scenario_three_level_atom(100.0, 1.0);
  throw ConfigError("scenario", "unknown built-in scenario '" + std::string(name) + "'");
}

}  // namespace nusim
