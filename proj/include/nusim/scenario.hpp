#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nusim/rate_profile.hpp"

namespace nusim {

/// Label of a physical object ("detector", "observer1"). Exact-match identity.
struct ObjectId {
  std::string name;

  friend auto operator<=>(const ObjectId&, const ObjectId&) = default;
};

/// One object's state inside a component template; `ready` is its status when
/// the component is instantiated.
struct StateSpec {
  ObjectId object;
  std::string label;
  bool ready = false;

  friend bool operator==(const StateSpec&, const StateSpec&) = default;
};

/// Declarative description of a component. Components with an initial weight
/// exist at t = 0; the others appear when an interaction creates them.
struct ComponentSpec {
  std::string id;
  std::vector<StateSpec> states;
  std::optional<double> initial_weight;
  /// After a collapse onto this component it continues as a fresh, realized
  /// instance of the named component (used by recurrent scenarios).
  std::optional<std::string> realizes_as;

  friend bool operator==(const ComponentSpec&, const ComponentSpec&) = default;
};

/// Time origin of an edge's rate profile.
enum class Anchor {
  Absolute,     ///< profile times are simulation times
  SourceEpoch,  ///< profile times count from the source's creation or last collapse
};

struct EdgeSpec {
  std::string id;
  std::string source;
  std::string target;
  RateProfile profile;
  Anchor anchor = Anchor::Absolute;
  /// Instantiate the target (with its template's ready flags) when the window
  /// opens and the target does not exist.
  bool creates_ready = true;

  friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

enum class ClassifierMode {
  Rules,     ///< first matching rule wins; a rule without conditions matches anything
  Sequence,  ///< label is the collapse sequence, e.g. "s1>s2", or "none"
  Readings,  ///< label is the realized labels of one object in order, e.g. "0-1-2"
};

struct ClassifierRule {
  std::string label;
  std::optional<std::vector<std::string>> sequence;  ///< exact collapse sequence
  std::optional<std::string> final_component;        ///< last collapse, or "none"

  friend bool operator==(const ClassifierRule&, const ClassifierRule&) = default;
};

struct Classifier {
  ClassifierMode mode = ClassifierMode::Sequence;
  std::vector<ClassifierRule> rules;
  std::optional<ObjectId> object;  ///< Readings mode only

  friend bool operator==(const Classifier&, const Classifier&) = default;
};

struct LawEntry {
  std::string label;
  double probability = 0.0;

  friend bool operator==(const LawEntry&, const LawEntry&) = default;
};

struct Annotation {
  std::string key;
  double value = 0.0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// A complete, declarative scenario: objects, components, current edges,
/// outcome classification and the declared analytic outcome law.
struct Scenario {
  std::string name;
  std::string description;
  std::vector<ObjectId> objects;
  std::vector<ComponentSpec> components;
  std::vector<EdgeSpec> edges;
  bool blocking = true;  ///< transition blocking between ready states; off = diagnostic
  std::optional<double> horizon;
  Classifier classifier;
  std::vector<LawEntry> expected;
  std::vector<Annotation> annotations;  ///< observation schedule etc. (t_ob, t_ob2)

  std::optional<double> annotation(std::string_view key) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws ConfigError naming the offending field.
void validate(const Scenario& sc);

/// Indexed, validated form of a Scenario used by the engine and the oracle.
class Model {
 public:
  struct Template {
    std::string id;
    std::vector<std::string> labels;  ///< per object index; empty when absent
    std::uint64_t present_mask = 0;
    std::uint64_t ready_mask = 0;
    double initial_weight = -1.0;  ///< < 0: not initially present
    int realizes_as = -1;
  };

  struct Edge {
    std::string id;
    int source = -1;
    int target = -1;
    Anchor anchor = Anchor::Absolute;
    bool creates_ready = true;
    RateProfile profile;
  };

  explicit Model(Scenario sc);

  const Scenario& scenario() const noexcept { return scenario_; }
  std::span<const Template> templates() const noexcept { return templates_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const int> out_edges(int key) const noexcept { return out_edges_[key]; }
  std::span<const int> in_edges(int key) const noexcept { return in_edges_[key]; }
  std::size_t object_count() const noexcept { return scenario_.objects.size(); }

  std::optional<int> key_of(std::string_view component_id) const;
  std::optional<int> edge_of(std::string_view edge_id) const;
  std::optional<int> object_index(const ObjectId& object) const;
  const std::string& component_id(int key) const { return templates_[key].id; }

  bool blocking() const noexcept { return scenario_.blocking; }
  double horizon() const noexcept { return scenario_.horizon.value_or(kInfinity); }
  bool has_anchored_edges() const noexcept { return has_anchored_; }
  bool has_absolute_edges() const noexcept { return has_absolute_; }
  /// True when a collapse can lead back to an earlier configuration
  /// (realizes_as relabeling or a cycle in the edge graph).
  bool recurrent() const noexcept { return recurrent_; }

  /// Outcome label for a terminal collapse sequence (template keys).
  std::string classify(std::span<const int> collapsed) const;

 private:
  Scenario scenario_;
  std::vector<Template> templates_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_edges_;
  std::vector<std::vector<int>> in_edges_;
  bool has_anchored_ = false;
  bool has_absolute_ = false;
  bool recurrent_ = false;
  int readings_object_ = -1;
  int initial_reading_key_ = -1;
  struct CompiledRule {
    std::string label;
    std::optional<std::vector<int>> sequence;
    std::optional<int> final_key;  ///< -1 = "none"
  };
  std::vector<CompiledRule> rules_;
};

std::shared_ptr<const Model> compile(Scenario sc);

}  // namespace nusim
