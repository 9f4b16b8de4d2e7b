#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nusim/engine.hpp"
#include "nusim/scenario.hpp"

namespace nusim {

/// Per-trajectory tallies filled by an inspection hook; merged in trajectory
/// order, so sample vectors are identical for any parallelism.
struct Tally {
  std::map<std::string, std::uint64_t> counts;
  std::map<std::string, std::vector<double>> samples;

  void merge(const Tally& other);
  std::uint64_t count(const std::string& key) const;

  friend bool operator==(const Tally&, const Tally&) = default;
};

using TrajectoryHook = std::function<void(const TrajectoryRecord&, Tally&)>;

struct LabelStat {
  std::string label;
  std::uint64_t count = 0;
  double frequency = 0.0;
  double std_error = 0.0;  ///< binomial sqrt(p (1 - p) / n)

  friend bool operator==(const LabelStat&, const LabelStat&) = default;
};

/// Invariant violations counted over all logged snapshots.
struct InvariantCounts {
  std::uint64_t negative_weight = 0;
  std::uint64_t realized_to_ready = 0;
  std::uint64_t modulus_drift = 0;  ///< trajectories with |sum of weights - s| >= 1e-9
  std::uint64_t blocked_weight = 0;  ///< weight > 0 on a component never reachable by an unblocked edge
  std::uint64_t failed = 0;          ///< trajectories ended by an engine error
  double max_modulus_drift = 0.0;

  std::uint64_t total() const noexcept {
    return negative_weight + realized_to_ready + modulus_drift + blocked_weight + failed;
  }

  friend bool operator==(const InvariantCounts&, const InvariantCounts&) = default;
};

struct EnsembleOptions {
  std::uint64_t trials = 1;
  std::uint64_t master_seed = 0;
  /// 0: take NUSIM_PARALLELISM from the environment, else 1.
  unsigned parallelism = 0;
  EngineOptions engine;
  bool keep_outcomes = false;
  TrajectoryHook hook;
};

struct EnsembleReport {
  std::string scenario;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  unsigned parallelism = 1;
  std::vector<LabelStat> labels;  ///< sorted by label
  InvariantCounts invariants;
  Tally tally;
  std::vector<std::string> outcomes;  ///< per trajectory index, when kept
  double wall_seconds = 0.0;

  const LabelStat* find(const std::string& label) const;
  double frequency(const std::string& label) const;
  std::uint64_t count(const std::string& label) const;
};

/// Everything but wall-clock and worker count.
bool same_statistics(const EnsembleReport& a, const EnsembleReport& b);

/// Default worker count: NUSIM_PARALLELISM if set to a positive integer, else 1.
unsigned default_parallelism();

/// Trajectory i uses seed derive_seed(master_seed, i). Throws ConfigError for
/// trials == 0.
EnsembleReport run_ensemble(std::shared_ptr<const Model> model, const EnsembleOptions& options);

/// Invariant checks over one trajectory log (accumulated into `counts`).
void check_invariants(const TrajectoryRecord& rec, InvariantCounts& counts);

}  // namespace nusim
