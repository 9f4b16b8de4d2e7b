#include "nusim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "nusim/errors.hpp"

namespace nusim {

namespace {

std::string indexed(std::string_view field, std::size_t i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

std::optional<double> Scenario::annotation(std::string_view key) const {
  for (const auto& a : annotations) {
    if (a.key == key) return a.value;
  }
  return std::nullopt;
}

void validate(const Scenario& sc) {
  if (sc.objects.size() > 64) throw ConfigError("objects", "at most 64 objects are supported");
  std::set<std::string> object_names;
  for (std::size_t i = 0; i < sc.objects.size(); ++i) {
    const auto& name = sc.objects[i].name;
    if (name.empty()) throw ConfigError(indexed("objects", i), "empty object id");
    if (!object_names.insert(name).second)
      throw ConfigError(indexed("objects", i), "duplicate object id '" + name + "'");
  }

  if (sc.components.empty()) throw ConfigError("components", "no components declared");
  std::set<std::string> component_ids;
  for (std::size_t i = 0; i < sc.components.size(); ++i) {
    const auto& c = sc.components[i];
    if (c.id.empty()) throw ConfigError(indexed("components", i) + ".id", "empty component id");
    if (c.id == "none")
      throw ConfigError(indexed("components", i) + ".id", "'none' is reserved");
    if (!component_ids.insert(c.id).second)
      throw ConfigError(indexed("components", i) + ".id", "duplicate component id '" + c.id + "'");
  }

  double initial_total = 0.0;
  for (std::size_t i = 0; i < sc.components.size(); ++i) {
    const auto& c = sc.components[i];
    const std::string path = indexed("components", i);
    std::set<std::string> seen;
    for (const auto& st : c.states) {
      const std::string spath = path + ".states." + st.object.name;
      if (!object_names.contains(st.object.name))
        throw ConfigError(spath, "undeclared object '" + st.object.name + "' in component '" + c.id + "'");
      if (!seen.insert(st.object.name).second)
        throw ConfigError(spath, "more than one state for object '" + st.object.name + "'");
      if (st.label.empty()) throw ConfigError(spath, "empty state label");
    }
    if (c.initial_weight) {
      if (!finite_nonnegative(*c.initial_weight))
        throw ConfigError(path + ".initial_weight", "weight must be finite and >= 0");
      initial_total += *c.initial_weight;
    }
    if (c.realizes_as && !component_ids.contains(*c.realizes_as))
      throw ConfigError(path + ".realizes_as", "unknown component '" + *c.realizes_as + "'");
  }
  if (!(initial_total > 0.0))
    throw ConfigError("components", "initial weights must sum to a positive modulus");

  std::set<std::string> edge_ids;
  for (std::size_t i = 0; i < sc.edges.size(); ++i) {
    const auto& e = sc.edges[i];
    const std::string path = indexed("edges", i);
    const std::string who = " in edge '" + e.id + "'";
    if (e.id.empty()) throw ConfigError(path + ".id", "empty edge id");
    if (!edge_ids.insert(e.id).second)
      throw ConfigError(path + ".id", "duplicate edge id '" + e.id + "'");
    if (!component_ids.contains(e.source))
      throw ConfigError(path + ".source", "unknown component '" + e.source + "'" + who);
    if (!component_ids.contains(e.target))
      throw ConfigError(path + ".target", "unknown component '" + e.target + "'" + who);
    if (e.source == e.target) throw ConfigError(path + ".target", "self-loop" + who);
    if (e.profile.empty()) throw ConfigError(path + ".pieces", "empty rate profile" + who);
    const auto pieces = e.profile.pieces();
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const auto& p = pieces[k];
      const std::string ppath = path + "." + indexed("pieces", k);
      if (!std::isfinite(p.begin) || !std::isfinite(p.end))
        throw ConfigError(ppath, "non-finite window bound" + who);
      if (!(p.begin < p.end))
        throw ConfigError(ppath, "window inversion (begin >= end)" + who);
      if (!finite_nonnegative(p.rate))
        throw ConfigError(ppath + ".rate", "negative or non-finite rate " + std::to_string(p.rate) + who);
      if (k > 0 && p.begin < pieces[k - 1].end)
        throw ConfigError(ppath, "overlapping pieces" + who);
    }
    if (e.profile.total() > 1.0 + 1e-9)
      throw ConfigError(path, "transfer total " + std::to_string(e.profile.total()) + " exceeds 1" + who);

    const auto target = std::find_if(sc.components.begin(), sc.components.end(),
                                     [&](const ComponentSpec& c) { return c.id == e.target; });
    if (e.creates_ready) {
      const bool any_ready = std::any_of(target->states.begin(), target->states.end(),
                                         [](const StateSpec& s) { return s.ready; });
      if (!any_ready)
        throw ConfigError(path + ".creates_ready",
                          "created target '" + e.target + "' has no ready states" + who);
    } else if (!target->initial_weight) {
      throw ConfigError(path + ".creates_ready",
                        "target '" + e.target + "' is never instantiated" + who);
    }
  }

  if (sc.horizon && !(std::isfinite(*sc.horizon) && *sc.horizon > 0.0))
    throw ConfigError("horizon", "horizon must be finite and > 0");

  const auto& cl = sc.classifier;
  switch (cl.mode) {
    case ClassifierMode::Rules:
      if (cl.rules.empty()) throw ConfigError("classifier.rules", "rules mode needs at least one rule");
      for (std::size_t i = 0; i < cl.rules.size(); ++i) {
        const auto& r = cl.rules[i];
        const std::string path = "classifier." + indexed("rules", i);
        if (r.label.empty()) throw ConfigError(path + ".label", "empty label");
        if (r.sequence) {
          for (const auto& id : *r.sequence)
            if (!component_ids.contains(id))
              throw ConfigError(path + ".sequence", "unknown component '" + id + "'");
        }
        if (r.final_component && *r.final_component != "none" &&
            !component_ids.contains(*r.final_component))
          throw ConfigError(path + ".final", "unknown component '" + *r.final_component + "'");
      }
      break;
    case ClassifierMode::Readings:
      if (!cl.object || !object_names.contains(cl.object->name))
        throw ConfigError("classifier.object", "readings mode needs a declared object");
      break;
    case ClassifierMode::Sequence:
      break;
  }

  std::set<std::string> labels;
  double law_total = 0.0;
  for (std::size_t i = 0; i < sc.expected.size(); ++i) {
    const auto& l = sc.expected[i];
    const std::string path = indexed("expected", i);
    if (l.label.empty()) throw ConfigError(path, "empty label");
    if (!labels.insert(l.label).second) throw ConfigError(path, "duplicate label '" + l.label + "'");
    if (!(l.probability >= 0.0 && l.probability <= 1.0))
      throw ConfigError(path, "probability outside [0, 1]");
    law_total += l.probability;
  }
  if (!sc.expected.empty() && std::abs(law_total - 1.0) > 1e-9)
    throw ConfigError("expected", "declared outcome probabilities sum to " + std::to_string(law_total));
}

Model::Model(Scenario sc) : scenario_(std::move(sc)) {
  validate(scenario_);
  const auto& objs = scenario_.objects;
  templates_.reserve(scenario_.components.size());
  for (const auto& c : scenario_.components) {
    Template t;
    t.id = c.id;
    t.labels.resize(objs.size());
    for (const auto& st : c.states) {
      const int o = *object_index(st.object);
      t.labels[o] = st.label;
      t.present_mask |= std::uint64_t{1} << o;
      if (st.ready) t.ready_mask |= std::uint64_t{1} << o;
    }
    t.initial_weight = c.initial_weight.value_or(-1.0);
    templates_.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < scenario_.components.size(); ++i) {
    if (const auto& r = scenario_.components[i].realizes_as) templates_[i].realizes_as = *key_of(*r);
  }

  out_edges_.resize(templates_.size());
  in_edges_.resize(templates_.size());
  for (const auto& e : scenario_.edges) {
    Edge ed{e.id, *key_of(e.source), *key_of(e.target), e.anchor, e.creates_ready, e.profile};
    out_edges_[ed.source].push_back(static_cast<int>(edges_.size()));
    in_edges_[ed.target].push_back(static_cast<int>(edges_.size()));
    (ed.anchor == Anchor::Absolute ? has_absolute_ : has_anchored_) = true;
    edges_.push_back(std::move(ed));
  }

  // Recurrence: any relabeling, or a cycle in the component graph.
  recurrent_ = std::any_of(templates_.begin(), templates_.end(),
                           [](const Template& t) { return t.realizes_as >= 0; });
  if (!recurrent_) {
    std::vector<int> color(templates_.size(), 0);
    std::function<bool(int)> cyclic = [&](int v) {
      color[v] = 1;
      for (int e : out_edges_[v]) {
        const int w = edges_[e].target;
        if (color[w] == 1 || (color[w] == 0 && cyclic(w))) return true;
      }
      color[v] = 2;
      return false;
    };
    for (std::size_t v = 0; v < templates_.size() && !recurrent_; ++v)
      if (color[v] == 0) recurrent_ = cyclic(static_cast<int>(v));
  }

  const auto& cl = scenario_.classifier;
  if (cl.mode == ClassifierMode::Readings) {
    readings_object_ = *object_index(*cl.object);
    for (std::size_t k = 0; k < templates_.size(); ++k) {
      const auto& t = templates_[k];
      if (t.initial_weight >= 0.0 && !t.labels[readings_object_].empty()) {
        initial_reading_key_ = static_cast<int>(k);
        break;
      }
    }
  }
  for (const auto& r : cl.rules) {
    CompiledRule cr{r.label, std::nullopt, std::nullopt};
    if (r.sequence) {
      std::vector<int> keys;
      for (const auto& id : *r.sequence) keys.push_back(*key_of(id));
      cr.sequence = std::move(keys);
    }
    if (r.final_component)
      cr.final_key = *r.final_component == "none" ? -1 : *key_of(*r.final_component);
    rules_.push_back(std::move(cr));
  }
}

std::optional<int> Model::key_of(std::string_view component_id) const {
  for (std::size_t i = 0; i < scenario_.components.size(); ++i)
    if (scenario_.components[i].id == component_id) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> Model::edge_of(std::string_view edge_id) const {
  for (std::size_t i = 0; i < scenario_.edges.size(); ++i)
    if (scenario_.edges[i].id == edge_id) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> Model::object_index(const ObjectId& object) const {
  for (std::size_t i = 0; i < scenario_.objects.size(); ++i)
    if (scenario_.objects[i] == object) return static_cast<int>(i);
  return std::nullopt;
}

std::string Model::classify(std::span<const int> collapsed) const {
  const auto& cl = scenario_.classifier;
  switch (cl.mode) {
    case ClassifierMode::Sequence: {
      if (collapsed.empty()) return "none";
      std::string label;
      for (int k : collapsed) {
        if (!label.empty()) label += '>';
        label += templates_[k].id;
      }
      return label;
    }
    case ClassifierMode::Readings: {
      std::string label;
      auto append = [&](const std::string& reading) {
        if (reading.empty()) return;
        if (!label.empty()) label += '-';
        label += reading;
      };
      if (initial_reading_key_ >= 0) append(templates_[initial_reading_key_].labels[readings_object_]);
      for (int k : collapsed) append(templates_[k].labels[readings_object_]);
      return label.empty() ? "none" : label;
    }
    case ClassifierMode::Rules:
      break;
  }
  const int final_key = collapsed.empty() ? -1 : collapsed.back();
  for (const auto& r : rules_) {
    if (r.sequence && !std::equal(r.sequence->begin(), r.sequence->end(), collapsed.begin(), collapsed.end()))
      continue;
    if (r.final_key && *r.final_key != final_key) continue;
    return r.label;
  }
  return "unclassified";
}

std::shared_ptr<const Model> compile(Scenario sc) { return std::make_shared<const Model>(std::move(sc)); }

}  // namespace nusim
