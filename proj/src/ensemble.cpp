#include "nusim/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <unordered_map>

#include "nusim/errors.hpp"
#include "nusim/rng.hpp"

namespace nusim {

namespace {

constexpr std::uint64_t kChunk = 256;
constexpr double kDriftLimit = 1e-9;

struct ChunkResult {
  std::map<std::string, std::uint64_t> counts;
  InvariantCounts invariants;
  Tally tally;
  std::vector<std::string> outcomes;
};

void add(InvariantCounts& into, const InvariantCounts& from) {
  into.negative_weight += from.negative_weight;
  into.realized_to_ready += from.realized_to_ready;
  into.modulus_drift += from.modulus_drift;
  into.blocked_weight += from.blocked_weight;
  into.failed += from.failed;
  into.max_modulus_drift = std::max(into.max_modulus_drift, from.max_modulus_drift);
}

}  // namespace

void Tally::merge(const Tally& other) {
  for (const auto& [k, v] : other.counts) counts[k] += v;
  for (const auto& [k, v] : other.samples) {
    auto& dst = samples[k];
    dst.insert(dst.end(), v.begin(), v.end());
  }
}

std::uint64_t Tally::count(const std::string& key) const {
  const auto it = counts.find(key);
  return it == counts.end() ? 0 : it->second;
}

const LabelStat* EnsembleReport::find(const std::string& label) const {
  for (const auto& l : labels)
    if (l.label == label) return &l;
  return nullptr;
}

double EnsembleReport::frequency(const std::string& label) const {
  const auto* l = find(label);
  return l ? l->frequency : 0.0;
}

std::uint64_t EnsembleReport::count(const std::string& label) const {
  const auto* l = find(label);
  return l ? l->count : 0;
}

bool same_statistics(const EnsembleReport& a, const EnsembleReport& b) {
  return a.scenario == b.scenario && a.trials == b.trials && a.master_seed == b.master_seed &&
         a.labels == b.labels && a.invariants == b.invariants && a.tally == b.tally &&
         a.outcomes == b.outcomes;
}

unsigned default_parallelism() {
  if (const char* env = std::getenv("NUSIM_PARALLELISM")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<unsigned>(v);
  }
  return 1;
}

void check_invariants(const TrajectoryRecord& rec, InvariantCounts& counts) {
  if (rec.failure) ++counts.failed;
  const Model& model = *rec.model;
  const auto edges = model.edges();

  std::size_t first_post_collapse = rec.snapshots.size();
  for (const auto& e : rec.events) {
    if (e.kind == EventKind::Collapse && e.snapshot != kNoSnapshot) {
      first_post_collapse = e.snapshot;
      break;
    }
  }

  double drift = rec.max_modulus_drift;
  double reference = 0.0;
  if (!rec.snapshots.empty())
    for (const auto& x : rec.snapshots.front()) reference += x.weight;

  std::unordered_map<std::uint64_t, std::uint64_t> last_mask;
  std::unordered_map<std::uint64_t, bool> fed;
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
    const auto& snap = rec.snapshots[i];
    if (i == first_post_collapse) reference = 1.0;
    if (i == 0)
      for (const auto& x : snap)
        if (x.weight > 0.0) fed[x.serial] = true;
    double sum = 0.0;
    for (const auto& x : snap) {
      sum += x.weight;
      if (x.weight < 0.0) ++counts.negative_weight;
      const auto it = last_mask.find(x.serial);
      if (it != last_mask.end() && (x.ready_mask & ~it->second) != 0) ++counts.realized_to_ready;
      last_mask[x.serial] = x.ready_mask;
      if (x.ready_mask != 0 && x.weight > 0.0 && !fed[x.serial]) ++counts.blocked_weight;
    }
    drift = std::max(drift, std::abs(sum - reference));

    // A ready component may gain weight only after some inbound edge has had
    // a present, non-blocking source.
    for (const auto& x : snap) {
      if (fed[x.serial]) continue;
      for (int ei : model.in_edges(x.key)) {
        const int src = edges[ei].source;
        const auto s = std::find_if(snap.begin(), snap.end(), [&](const SnapshotEntry& y) { return y.key == src; });
        if (s == snap.end()) continue;
        if (!model.blocking() || (s->ready_mask & x.ready_mask) == 0) {
          fed[x.serial] = true;
          break;
        }
      }
    }
  }
  if (drift >= kDriftLimit) ++counts.modulus_drift;
  counts.max_modulus_drift = std::max(counts.max_modulus_drift, drift);
}

EnsembleReport run_ensemble(std::shared_ptr<const Model> model, const EnsembleOptions& options) {
  if (options.trials == 0) throw ConfigError("trials", "an ensemble needs at least one trial");
  const auto start = std::chrono::steady_clock::now();
  const unsigned workers_wanted = options.parallelism ? options.parallelism : default_parallelism();
  const std::uint64_t chunks = (options.trials + kChunk - 1) / kChunk;
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(workers_wanted, chunks));

  EngineOptions engine = options.engine;
  engine.record_snapshots = true;

  std::vector<ChunkResult> results(chunks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      ChunkResult& out = results[c];
      const std::uint64_t lo = c * kChunk;
      const std::uint64_t hi = std::min(options.trials, lo + kChunk);
      for (std::uint64_t i = lo; i < hi; ++i) {
        const auto rec = run_trajectory(model, derive_seed(options.master_seed, i), engine);
        ++out.counts[rec.outcome];
        check_invariants(rec, out.invariants);
        if (options.hook) options.hook(rec, out.tally);
        if (options.keep_outcomes) out.outcomes.push_back(rec.outcome);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  EnsembleReport report;
  report.scenario = model->scenario().name;
  report.trials = options.trials;
  report.master_seed = options.master_seed;
  report.parallelism = std::max(1u, workers);
  std::map<std::string, std::uint64_t> counts;
  for (auto& r : results) {
    for (const auto& [k, v] : r.counts) counts[k] += v;
    add(report.invariants, r.invariants);
    report.tally.merge(r.tally);
    if (options.keep_outcomes)
      report.outcomes.insert(report.outcomes.end(), std::make_move_iterator(r.outcomes.begin()),
                             std::make_move_iterator(r.outcomes.end()));
  }
  // Declared labels appear even when never observed.
  for (const auto& e : model->scenario().expected) counts.try_emplace(e.label, 0);
  const double n = static_cast<double>(options.trials);
  for (const auto& [label, count] : counts) {
    const double p = static_cast<double>(count) / n;
    report.labels.push_back({label, count, p, std::sqrt(p * (1.0 - p) / n)});
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nusim
