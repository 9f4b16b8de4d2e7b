#include "nusim/report_io.hpp"

#include <cstdio>
#include <limits>

#include <json.hpp>

#include "nusim/config.hpp"

namespace nusim {

namespace {

using nlohmann::ordered_json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json weights_of(const Model& model, const Snapshot& snap) {
  ordered_json w = ordered_json::object();
  for (const auto& e : snap) w[model.component_id(e.key)] = e.weight;
  return w;
}

}  // namespace

void write_summary_csv(std::ostream& out, const EnsembleReport& report) {
  out << kSummaryCsvHeader << '\n';
  for (const auto& l : report.labels) {
    out << csv_field(report.scenario) << ',' << report.trials << ',' << report.master_seed << ','
        << csv_field(l.label) << ',' << l.count << ',' << format_double(l.frequency) << ','
        << format_double(l.std_error) << '\n';
  }
}

void write_summary_json(std::ostream& out, const EnsembleReport& report, const std::vector<LawEntry>& exact) {
  ordered_json j;
  j["scenario"] = report.scenario;
  j["trials"] = report.trials;
  j["master_seed"] = report.master_seed;
  j["parallelism"] = report.parallelism;
  j["wall_seconds"] = report.wall_seconds;
  ordered_json labels = ordered_json::array();
  for (const auto& l : report.labels) {
    ordered_json row = {{"label", l.label}, {"count", l.count}, {"frequency", l.frequency}, {"std_error", l.std_error}};
    for (const auto& e : exact)
      if (e.label == l.label) row["exact"] = e.probability;
    labels.push_back(row);
  }
  j["labels"] = labels;
  if (!exact.empty()) {
    ordered_json law = ordered_json::object();
    for (const auto& e : exact) law[e.label] = e.probability;
    j["exact_law"] = law;
  }
  const auto& inv = report.invariants;
  j["invariants"] = {{"negative_weight", inv.negative_weight},
                     {"realized_to_ready", inv.realized_to_ready},
                     {"modulus_drift", inv.modulus_drift},
                     {"blocked_weight", inv.blocked_weight},
                     {"failed", inv.failed},
                     {"max_modulus_drift", inv.max_modulus_drift}};
  if (!report.tally.counts.empty()) j["tally"] = report.tally.counts;
  out << j.dump(2) << '\n';
}

void write_trajectory_jsonl(std::ostream& out, const TrajectoryRecord& rec, bool weights) {
  const Model& model = *rec.model;
  std::size_t seq = 0;
  std::size_t next_sample = 0;
  // Samples go before any event strictly later than them.
  auto flush_samples = [&](double before) {
    for (; next_sample < rec.samples.size() && rec.samples[next_sample].time < before; ++next_sample) {
      const auto& s = rec.samples[next_sample];
      ordered_json j;
      j["seq"] = seq++;
      j["time"] = s.time;
      j["kind"] = "Sample";
      j["snapshot_hash"] = hex(snapshot_hash(rec.snapshots[s.snapshot]));
      j["weights"] = weights_of(model, rec.snapshots[s.snapshot]);
      out << j.dump() << '\n';
    }
  };
  for (const auto& e : rec.events) {
    flush_samples(e.time);
    ordered_json j;
    j["seq"] = seq++;
    j["time"] = e.time;
    j["kind"] = to_string(e.kind);
    j["component"] = e.component >= 0 ? ordered_json(model.component_id(e.component)) : ordered_json(nullptr);
    j["edge"] = e.edge >= 0 ? ordered_json(model.edges()[e.edge].id) : ordered_json(nullptr);
    if (e.snapshot != kNoSnapshot) {
      j["snapshot_hash"] = hex(snapshot_hash(rec.snapshots[e.snapshot]));
      if (weights) j["weights"] = weights_of(model, rec.snapshots[e.snapshot]);
    } else {
      j["snapshot_hash"] = nullptr;
    }
    out << j.dump() << '\n';
  }
  flush_samples(std::numeric_limits<double>::infinity());
  ordered_json end;
  end["seq"] = seq;
  end["time"] = rec.end_time;
  end["kind"] = "End";
  end["outcome"] = rec.outcome;
  end["seed"] = rec.seed;
  if (rec.failure) end["failure"] = *rec.failure;
  out << end.dump() << '\n';
}

void write_law_json(std::ostream& out, const std::string& scenario, const std::vector<LawEntry>& law) {
  ordered_json j;
  j["scenario"] = scenario;
  ordered_json l = ordered_json::object();
  for (const auto& e : law) l[e.label] = e.probability;
  j["law"] = l;
  out << j.dump(2) << '\n';
}

}  // namespace nusim
