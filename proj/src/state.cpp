#include "nusim/state.hpp"

#include <bit>
#include <cstring>

namespace nusim {

std::vector<SubsystemState> states_of(const Model& model, const Component& c) {
  std::vector<SubsystemState> out;
  const auto& t = model.templates()[c.key];
  for (std::size_t o = 0; o < t.labels.size(); ++o) {
    if (t.labels[o].empty()) continue;
    const bool ready = (c.ready_mask >> o) & 1u;
    out.push_back({model.scenario().objects[o], t.labels[o],
                   ready ? StateStatus::Ready : StateStatus::Realized});
  }
  return out;
}

bool contains_ready(const Component& c, int object_index) noexcept {
  return object_index >= 0 && object_index < 64 && ((c.ready_mask >> object_index) & 1u);
}

bool contains_ready(const Model& model, const Component& c, const ObjectId& object) {
  const auto o = model.object_index(object);
  return o && contains_ready(c, *o);
}

SystemState::SystemState(std::shared_ptr<const Model> model) : model_(std::move(model)) {
  slots_.resize(model_->templates().size());
  edge_open.assign(model_->edges().size(), 0);
  edge_blocked.assign(model_->edges().size(), 0);
}

SystemState SystemState::initial(std::shared_ptr<const Model> model) {
  SystemState st(std::move(model));
  const auto templates = st.model().templates();
  for (std::size_t k = 0; k < templates.size(); ++k) {
    const auto& t = templates[k];
    if (t.initial_weight >= 0.0) {
      st.create(static_cast<int>(k), 0.0, t.initial_weight, t.ready_mask);
      st.s += t.initial_weight;
    }
  }
  return st;
}

Component& SystemState::create(int key, double t, double weight, std::uint64_t ready_mask) {
  slots_[key] = Component{key, ready_mask, weight, t, t, next_serial_++};
  return *slots_[key];
}

void SystemState::scale_weights(double c) {
  for (auto& slot : slots_)
    if (slot) slot->weight *= c;
  s *= c;
}

double total_modulus(const SystemState& state) noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k)
    if (const auto* c = state.find(static_cast<int>(k))) sum += c->weight;
  return sum;
}

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::ComponentCreated: return "ComponentCreated";
    case EventKind::EdgeBlocked: return "EdgeBlocked";
    case EventKind::StochasticHit: return "StochasticHit";
    case EventKind::Collapse: return "Collapse";
    case EventKind::InteractionStart: return "InteractionStart";
    case EventKind::InteractionEnd: return "InteractionEnd";
  }
  return "?";
}

Snapshot snapshot_of(const SystemState& state) {
  Snapshot snap;
  for (std::size_t k = 0; k < state.size(); ++k)
    if (const auto* c = state.find(static_cast<int>(k)))
      snap.push_back({c->key, c->serial, c->weight, c->ready_mask});
  return snap;
}

std::uint64_t snapshot_hash(const Snapshot& snap) noexcept {
  // FNV-1a over (key, weight bits) pairs.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& e : snap) {
    mix(static_cast<std::uint64_t>(e.key));
    mix(std::bit_cast<std::uint64_t>(e.weight));
  }
  return h;
}

bool same_log(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  return a.seed == b.seed && a.events == b.events && a.snapshots == b.snapshots &&
         a.collapse_sequence == b.collapse_sequence && a.outcome == b.outcome &&
         a.end_time == b.end_time;
}

}  // namespace nusim
