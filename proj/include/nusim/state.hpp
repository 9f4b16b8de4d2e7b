#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nusim/scenario.hpp"

namespace nusim {

enum class StateStatus { Ready, Realized };

struct SubsystemState {
  ObjectId object;
  std::string label;
  StateStatus status = StateStatus::Realized;

  friend bool operator==(const SubsystemState&, const SubsystemState&) = default;
};

/// A live decoherent branch. Labels come from the template (`key`); the only
/// per-instance state is which objects are still ready, the square modulus and
/// the timing. Ready bits can only be cleared (by collapse), never set.
struct Component {
  int key = -1;
  std::uint64_t ready_mask = 0;
  double weight = 0.0;
  double created_at = 0.0;
  /// Origin for SourceEpoch-anchored edges: creation time, reset on collapse.
  double epoch = 0.0;
  /// Unique per instance within a trajectory (components can be re-created).
  std::uint64_t serial = 0;

  bool has_ready() const noexcept { return ready_mask != 0; }
};

std::vector<SubsystemState> states_of(const Model& model, const Component& c);

bool contains_ready(const Component& c, int object_index) noexcept;
bool contains_ready(const Model& model, const Component& c, const ObjectId& object);

/// All components, the current time and the total square modulus. One slot per
/// component template; an empty slot means the component does not exist.
class SystemState {
 public:
  SystemState() = default;
  explicit SystemState(std::shared_ptr<const Model> model);

  /// State at t = 0 with the initial components (activation not yet applied).
  static SystemState initial(std::shared_ptr<const Model> model);

  const Model& model() const noexcept { return *model_; }
  const std::shared_ptr<const Model>& model_ptr() const noexcept { return model_; }

  double time = 0.0;
  double s = 0.0;  ///< maintained total square modulus

  bool exists(int key) const noexcept { return slots_[key].has_value(); }
  Component& at(int key) { return *slots_[key]; }
  const Component& at(int key) const { return *slots_[key]; }
  const Component* find(int key) const noexcept { return slots_[key] ? &*slots_[key] : nullptr; }
  std::size_t size() const noexcept { return slots_.size(); }

  Component& create(int key, double t, double weight, std::uint64_t ready_mask);
  void remove(int key) { slots_[key].reset(); }

  /// Per-edge bookkeeping for InteractionStart/End and EdgeBlocked events.
  std::vector<std::uint8_t> edge_open;
  std::vector<std::uint8_t> edge_blocked;

  /// Multiply all weights (and s) by c. Rates are not part of the state; use
  /// scale_rates on the model side for invariance checks.
  void scale_weights(double c);

 private:
  std::shared_ptr<const Model> model_;
  std::vector<std::optional<Component>> slots_;
  std::uint64_t next_serial_ = 1;
};

/// Sum of component weights (recomputed, independent of `state.s`).
double total_modulus(const SystemState& state) noexcept;

enum class EventKind {
  ComponentCreated,
  EdgeBlocked,
  StochasticHit,
  Collapse,
  InteractionStart,
  InteractionEnd,
};

const char* to_string(EventKind kind) noexcept;

struct SnapshotEntry {
  int key = -1;
  std::uint64_t serial = 0;
  double weight = 0.0;
  std::uint64_t ready_mask = 0;

  friend bool operator==(const SnapshotEntry&, const SnapshotEntry&) = default;
};

using Snapshot = std::vector<SnapshotEntry>;

Snapshot snapshot_of(const SystemState& state);
std::uint64_t snapshot_hash(const Snapshot& snap) noexcept;

inline constexpr std::uint32_t kNoSnapshot = 0xffffffffu;

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::ComponentCreated;
  int component = -1;
  int edge = -1;
  std::uint32_t snapshot = kNoSnapshot;

  friend bool operator==(const Event&, const Event&) = default;
};

struct WeightSample {
  double time = 0.0;
  std::uint32_t snapshot = kNoSnapshot;

  friend bool operator==(const WeightSample&, const WeightSample&) = default;
};

/// Ordered log of one trajectory plus its classification.
struct TrajectoryRecord {
  std::shared_ptr<const Model> model;
  std::uint64_t seed = 0;
  std::vector<Event> events;
  std::vector<Snapshot> snapshots;
  std::vector<WeightSample> samples;
  std::vector<int> collapse_sequence;
  std::string outcome;
  double end_time = 0.0;
  /// Largest |sum of weights - reference modulus| seen between collapses.
  double max_modulus_drift = 0.0;
  /// Engine contract violation that ended the trajectory, if any.
  std::optional<std::string> failure;
};

bool same_log(const TrajectoryRecord& a, const TrajectoryRecord& b);

}  // namespace nusim
