#pragma once

// Small builders for hand-made test scenarios.

#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nusim/scenario.hpp"

namespace nusim::test {

inline StateSpec ready(std::string object, std::string label) { return {{std::move(object)}, std::move(label), true}; }
inline StateSpec real(std::string object, std::string label) { return {{std::move(object)}, std::move(label), false}; }

inline ComponentSpec comp(std::string id, std::vector<StateSpec> states, std::optional<double> weight = std::nullopt) {
  return {std::move(id), std::move(states), weight, std::nullopt};
}

inline EdgeSpec edge(std::string id, std::string source, std::string target, RateProfile profile,
                     Anchor anchor = Anchor::Absolute) {
  return {std::move(id), std::move(source), std::move(target), std::move(profile), anchor, true};
}

inline std::vector<ObjectId> objects(std::initializer_list<const char*> names) {
  std::vector<ObjectId> out;
  for (const char* n : names) out.push_back({n});
  return out;
}

/// Realized root "root" feeding ready sinks "s1".."sk" (distinct meters), each
/// by a uniform window [0, T) carrying totals[i]. Sequence classifier.
inline Scenario sink_fan(const std::vector<double>& totals, double T = 1.0) {
  Scenario sc;
  sc.name = "fan";
  sc.objects = objects({"source"});
  sc.components.push_back(comp("root", {real("source", "a")}, 1.0));
  for (std::size_t i = 0; i < totals.size(); ++i) {
    const std::string meter = "m" + std::to_string(i + 1);
    sc.objects.push_back({meter});
    const std::string id = "s" + std::to_string(i + 1);
    sc.components.push_back(comp(id, {real("source", "b"), ready(meter, "hit")}));
    sc.edges.push_back(edge("e" + std::to_string(i + 1), "root", id, RateProfile::uniform(0.0, T, totals[i])));
  }
  sc.classifier.mode = ClassifierMode::Sequence;
  return sc;
}

}  // namespace nusim::test
