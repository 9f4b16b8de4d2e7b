#include "nusim/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "nusim/ensemble.hpp"
#include "nusim/oracle.hpp"
#include "nusim/rng.hpp"
#include "nusim/scenario_library.hpp"
#include "nusim/stats.hpp"

namespace nusim {

namespace {

constexpr std::uint64_t kLargeN = 100'000;
constexpr std::uint64_t kChainN = 10'000;
constexpr std::size_t kDarkIntervals = 10'000;
constexpr int kRandomScenarios = 50;
constexpr int kRandomFailuresAllowed = 2;
constexpr double kSigmas = 3.0;

std::string fmt(double x, int digits = 5) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

void accumulate(InvariantCounts& into, const InvariantCounts& from) {
  into.negative_weight += from.negative_weight;
  into.realized_to_ready += from.realized_to_ready;
  into.modulus_drift += from.modulus_drift;
  into.blocked_weight += from.blocked_weight;
  into.failed += from.failed;
  into.max_modulus_drift = std::max(into.max_modulus_drift, from.max_modulus_drift);
}

const SnapshotEntry* entry(const Snapshot& snap, int key) {
  for (const auto& e : snap)
    if (e.key == key) return &e;
  return nullptr;
}

struct LawCheck {
  bool ok = true;
  double worst_z = 0.0;
  std::string worst_label;
};

// Every label of the exact law within kSigmas binomial errors; labels the law
// gives probability 0 (or 1) must be matched exactly.
LawCheck check_law(const EnsembleReport& r, const std::vector<LawEntry>& law) {
  LawCheck c;
  std::set<std::string> known;
  for (const auto& e : law) {
    known.insert(e.label);
    const double f = r.frequency(e.label);
    const double sigma = binomial_sigma(e.probability, r.trials);
    double z = 0.0;
    if (sigma > 0.0) {
      z = std::abs(f - e.probability) / sigma;
    } else if (std::abs(f - e.probability) > 1e-12) {
      z = kInfinity;
    }
    if (z > c.worst_z) {
      c.worst_z = z;
      c.worst_label = e.label;
    }
    if (z > kSigmas) c.ok = false;
  }
  for (const auto& l : r.labels) {
    if (l.count > 0 && !known.contains(l.label)) {
      c.ok = false;
      c.worst_z = kInfinity;
      c.worst_label = l.label;
    }
  }
  return c;
}

class Suite {
 public:
  explicit Suite(const AcceptanceOptions& o) : opt_(o) {}

  std::vector<CriterionResult> run() {
    guarded(1, "observer outcome law", [&](CriterionResult& r) { observer(r); });
    guarded(3, "two-observer agreement", [&](CriterionResult& r) { two_observers(r); });
    guarded(4, "phantom inertness", [&](CriterionResult& r) { phantom(r); });
    guarded(5, "oracle equivalence", [&](CriterionResult& r) { oracle_equivalence(r); });
    guarded(7, "sequential counter readings", [&](CriterionResult& r) { counter(r); });
    guarded(8, "fluorescent pulsing", [&](CriterionResult& r) { atom(r); });
    guarded(9, "determinism across parallelism", [&](CriterionResult& r) { determinism(r); });
    guarded(6, "conservation and monotonicity", [&](CriterionResult& r) { conservation(r); });
    std::sort(results_.begin(), results_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return results_;
  }

 private:
  template <class F>
  void guarded(int id, std::string title, F&& body) {
    CriterionResult r{id, std::move(title), false, "", 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // Criterion 2 is decided inside the observer run and reported beside it.
    if (id == 1 && pending_) {
      pending_->seconds = r.seconds;
      emit(r);
      emit(*pending_);
      pending_.reset();
      return;
    }
    emit(r);
  }

  void emit(const CriterionResult& r) {
    if (opt_.on_result) opt_.on_result(r);
    results_.push_back(r);
  }

  EnsembleReport ensemble(const std::shared_ptr<const Model>& model, std::uint64_t trials, std::uint64_t seed,
                          TrajectoryHook hook = {}, unsigned parallelism = 0, bool keep = false) {
    EnsembleOptions eo;
    eo.trials = trials;
    eo.master_seed = seed;
    eo.parallelism = parallelism ? parallelism : opt_.parallelism;
    eo.hook = std::move(hook);
    eo.keep_outcomes = keep;
    auto r = run_ensemble(model, eo);
    accumulate(all_, r.invariants);
    ++ensembles_;
    trajectories_ += r.trials;
    return r;
  }

  std::uint64_t seed(std::uint64_t stream) const { return derive_seed(opt_.master_seed, stream); }

  static TrajectoryHook observer_hook(const Model& m) {
    const int cap = *m.key_of("capture");
    const int look = *m.key_of("look-capture");
    const double t_ob = *m.scenario().annotation("t_ob");
    return [=](const TrajectoryRecord& rec, Tally& t) {
      for (const auto& snap : rec.snapshots) {
        const auto* c = entry(snap, cap);
        const auto* l = entry(snap, look);
        if (!c || !l || c->ready_mask == 0) continue;
        ++t.counts["fourth-checked"];
        if (l->weight != 0.0) ++t.counts["fourth-nonzero"];
      }
      if (rec.outcome == "capture-at-first-look") {
        double t_pr = -1.0, t_sc = -1.0;
        for (const auto& e : rec.events) {
          if (e.kind != EventKind::Collapse) continue;
          if (e.component == cap) t_pr = e.time;
          if (e.component == look) t_sc = e.time;
        }
        if (!(t_sc > t_ob && t_ob > t_pr && t_pr > 0.0)) ++t.counts["order-violations"];
      }
    };
  }

  void observer(CriterionResult& r) {
    const auto model = compile(scenario_observer());
    const auto rep = ensemble(model, kLargeN, seed(1), observer_hook(*model));
    const auto law = model->scenario().expected;
    const auto check = check_law(rep, law);
    const double capture = rep.frequency("capture-at-first-look") + rep.frequency("ground-then-capture");
    const bool capture_ok = std::abs(capture - 0.6) <= 0.005;
    const auto order = rep.tally.count("order-violations");
    std::ostringstream d;
    for (const char* label : {"capture-at-first-look", "ground-then-capture", "ground-no-capture"}) {
      double p = 0.0;
      for (const auto& e : law)
        if (e.label == label) p = e.probability;
      d << label << " " << fmt(rep.frequency(label)) << " (" << p << " +/- "
        << fmt(kSigmas * binomial_sigma(p, rep.trials), 4) << "), ";
    }
    d << "anomalous " << rep.count("anomalous") << ", total capture " << fmt(capture) << " (0.6 +/- 0.005), "
      << "ordering violations " << order << ", N=" << rep.trials;
    r.passed = check.ok && capture_ok && order == 0;
    r.detail = d.str();

    CriterionResult four{2, "fourth component eliminated", false, "", 0.0};
    const auto checked = rep.tally.count("fourth-checked");
    const auto nonzero = rep.tally.count("fourth-nonzero");
    four.passed = checked > 0 && nonzero == 0;
    four.detail = "look-capture weight nonzero at " + std::to_string(nonzero) + " of " + std::to_string(checked) +
                  " logged instants while the capture branch was still ready, N=" + std::to_string(rep.trials);
    pending_ = four;
  }

  void two_observers(CriterionResult& r) {
    const auto model = compile(scenario_two_observers());
    const Model& m = *model;
    const int o1 = *m.object_index(ObjectId{"observer1"});
    const int o2 = *m.object_index(ObjectId{"observer2"});
    const int det = *m.object_index(ObjectId{"detector"});
    auto hook = [&m, o1, o2, det](const TrajectoryRecord& rec, Tally& t) {
      bool captured = false, seen2 = false;
      std::string last1, last2;
      for (int k : rec.collapse_sequence) {
        const auto& labels = m.templates()[k].labels;
        if (!seen2 && !labels[o2].empty() && labels[o2].front() == 'B') {
          seen2 = true;
          if (labels[o2] == "B1" && !captured) ++t.counts["b1-without-capture"];
        }
        if (labels[det].rfind("D1", 0) == 0) captured = true;
        if (!labels[o1].empty() && labels[o1].front() == 'B') last1 = labels[o1];
        if (!labels[o2].empty() && labels[o2].front() == 'B') last2 = labels[o2];
      }
      if (!last1.empty() && !last2.empty()) {
        ++t.counts["both-realized"];
        if (last1 != last2) ++t.counts["disagree"];
      }
    };
    const auto rep = ensemble(model, kLargeN, seed(3), hook);
    const auto bad = rep.tally.count("b1-without-capture");
    const auto both = rep.tally.count("both-realized");
    const auto disagree = rep.tally.count("disagree");
    r.passed = bad == 0 && disagree == 0 && both == rep.trials;
    r.detail = "second observer first realized B1 without prior capture: " + std::to_string(bad) +
               "; brain labels agree in " + std::to_string(both - disagree) + " of " + std::to_string(both) +
               " trajectories with both observers realized, N=" + std::to_string(rep.trials);
  }

  void phantom(CriterionResult& r) {
    const auto model = compile(scenario_two_observers_late());
    const Model& m = *model;
    const int late = *m.key_of("late-capture");
    const int look2 = *m.key_of("look2-capture");
    const double primary_end = m.edges()[*m.edge_of("late-primary")].profile.window_end();
    const double t_ob2 = *m.scenario().annotation("t_ob2");
    auto hook = [=](const TrajectoryRecord& rec, Tally& t) {
      if (rec.outcome != "ground-no-capture") return;
      ++t.counts["ground-no-capture"];
      std::uint64_t bad = 0;
      for (int k : rec.collapse_sequence)
        if (k == late || k == look2) ++bad;
      double residual = -1.0;
      bool present_at_look = false;
      for (const auto& e : rec.events) {
        if (e.snapshot == kNoSnapshot) continue;
        const auto& snap = rec.snapshots[e.snapshot];
        if (const auto* l2 = entry(snap, look2); l2 && l2->weight > 0.0) ++bad;
        const auto* ph = entry(snap, late);
        if (!ph || e.time < primary_end) continue;
        if (residual < 0.0) residual = ph->weight;
        if (std::abs(ph->weight - residual) > 1e-12) ++bad;
        if (e.time >= t_ob2 && ph->weight > 0.0) present_at_look = true;
      }
      if (present_at_look) ++t.counts["phantom-present-at-second-look"];
      t.counts["violations"] += bad;
    };
    const auto rep = ensemble(model, kLargeN, seed(4), hook);
    const auto runs = rep.tally.count("ground-no-capture");
    const auto present = rep.tally.count("phantom-present-at-second-look");
    const auto bad = rep.tally.count("violations");
    r.passed = runs > 0 && present == runs && bad == 0;
    r.detail = "phantom-driven hits or transfers: " + std::to_string(bad) + " over " + std::to_string(runs) +
               " ground-no-capture trajectories (phantom present at the second look in " + std::to_string(present) +
               "), N=" + std::to_string(rep.trials);
  }

  bool scenario_agrees(const Scenario& sc, std::uint64_t ensemble_seed, std::string* worst) {
    const auto model = compile(sc);
    std::vector<LawEntry> law;
    try {
      law = outcome_law(*model);
    } catch (const std::exception& e) {
      if (worst) *worst = sc.name + ": oracle error " + e.what();
      return false;
    }
    const auto rep = ensemble(model, kLargeN, ensemble_seed);
    const auto c = check_law(rep, law);
    if (worst) *worst = sc.name + " worst |z| " + fmt(c.worst_z, 2) + " (" + c.worst_label + ")";
    return c.ok;
  }

  void oracle_equivalence(CriterionResult& r) {
    std::ostringstream d;
    bool builtins_ok = true;
    int idx = 0;
    for (const auto& sc : {scenario_primary_only(), scenario_observer(), scenario_two_observers(),
                           scenario_two_observers_late(), scenario_counter_chain(5)}) {
      std::string note;
      bool ok = scenario_agrees(sc, seed(500 + idx), &note);
      if (!ok) {
        d << "retry " << note << "; ";
        ok = scenario_agrees(sc, seed(600 + idx), &note);
        if (!ok) d << "built-in failed twice: " << note << "; ";
      }
      builtins_ok = builtins_ok && ok;
      ++idx;
    }

    auto random_pass = [&](std::uint64_t stream, std::vector<std::string>& failed) {
      for (int i = 0; i < kRandomScenarios; ++i) {
        const auto sc = random_scenario(derive_seed(opt_.master_seed, 5000 + static_cast<std::uint64_t>(i)));
        std::string note;
        if (!scenario_agrees(sc, seed(stream + static_cast<std::uint64_t>(i)), &note)) failed.push_back(note);
      }
    };
    std::vector<std::string> failed;
    random_pass(10'000, failed);
    int passes = 1;
    if (static_cast<int>(failed.size()) > kRandomFailuresAllowed) {
      d << "first pass had " << failed.size() << " failures, re-run with fresh seeds; ";
      failed.clear();
      random_pass(20'000, failed);
      passes = 2;
    }
    const bool random_ok = static_cast<int>(failed.size()) <= kRandomFailuresAllowed;
    d << "built-ins " << (builtins_ok ? "all within 3 sigma" : "FAILED") << "; random scenarios: "
      << failed.size() << " of " << kRandomScenarios << " outside 3 sigma (allowed " << kRandomFailuresAllowed
      << ", pass " << passes << ")";
    for (const auto& f : failed) d << "; " << f;
    d << ", N=" << kLargeN << " each";
    r.passed = builtins_ok && random_ok;
    r.detail = d.str();
  }

  void counter(CriterionResult& r) {
    const auto model = compile(scenario_counter_chain(5));
    auto hook = [](const TrajectoryRecord& rec, Tally& t) {
      std::vector<int> readings;
      std::stringstream ss(rec.outcome);
      std::string part;
      while (std::getline(ss, part, '-')) {
        try {
          readings.push_back(std::stoi(part));
        } catch (...) {
          readings.push_back(-1);
        }
      }
      bool skipped = false;
      for (std::size_t i = 0; i < readings.size(); ++i)
        if (readings[i] != static_cast<int>(i)) skipped = true;
      if (skipped) ++t.counts["skipped"];
      if (!skipped && readings.size() == 5) ++t.counts["complete"];
    };
    const auto rep = ensemble(model, kChainN, seed(7), hook);
    const auto skipped = rep.tally.count("skipped");
    const auto complete = rep.tally.count("complete");
    r.passed = skipped == 0 && complete == rep.trials;
    r.detail = "trajectories with a skipped reading: " + std::to_string(skipped) + "; complete 0-1-2-3-4: " +
               std::to_string(complete) + " of " + std::to_string(rep.trials);
  }

  void atom(CriterionResult& r) {
    constexpr double strong = 100.0, weak = 1.0;
    const auto model = compile(scenario_three_level_atom(strong, weak));
    const Model& m = *model;
    const int k_strong = *m.key_of("strong");
    const int k_shelved = *m.key_of("shelved");
    const int k_weak = *m.key_of("weak");
    const auto law = hit_time_cdf(m, "weak", std::string_view("shelved"));
    // Intervals opening later than this could be cut by the horizon.
    const double last_start = m.horizon() - law.support_end();

    auto hook = [=](const TrajectoryRecord& rec, Tally& t) {
      double dark_since = -1.0;
      bool bright_open = false;
      std::uint64_t photons = 0;
      for (const auto& e : rec.events) {
        if (e.kind != EventKind::Collapse) continue;
        if (e.component == k_shelved) {
          if (dark_since >= 0.0) ++t.counts["unclosed-dark"];
          if (bright_open) {
            ++t.counts["bright-intervals"];
            t.counts["bright-photons"] += photons;
          }
          dark_since = e.time;
          bright_open = false;
        } else if (e.component == k_weak) {
          if (dark_since < 0.0) {
            ++t.counts["weak-without-shelving"];
          } else if (dark_since < last_start) {
            t.samples["dark"].push_back(e.time - dark_since);
          }
          dark_since = -1.0;
          bright_open = true;
          photons = 0;
        } else if (e.component == k_strong) {
          if (dark_since >= 0.0) ++t.counts["strong-in-dark"];
          ++photons;
        }
      }
    };

    Tally all;
    std::uint64_t round = 0, trajectories = 0;
    while (all.samples["dark"].size() < kDarkIntervals && round < 64) {
      const auto rep = ensemble(model, 128, seed(8000 + round), hook);
      all.merge(rep.tally);
      trajectories += rep.trials;
      ++round;
    }
    auto dark = all.samples["dark"];
    if (dark.size() < kDarkIntervals)
      throw std::runtime_error("only " + std::to_string(dark.size()) + " dark intervals collected");
    dark.resize(kDarkIntervals);
    const auto ks = ks_test(dark, [&](double x) { return law(x); });
    const auto in_dark = all.count("strong-in-dark");
    const auto unclosed = all.count("unclosed-dark") + all.count("weak-without-shelving");
    const auto bright = all.count("bright-intervals");
    const double per_bright = bright ? static_cast<double>(all.count("bright-photons")) / bright : 0.0;
    r.passed = ks.p_value >= 0.01 && in_dark == 0 && unclosed == 0 && bright > 0 && per_bright >= 10.0;
    r.detail = "KS D=" + fmt(ks.statistic, 5) + " p=" + fmt(ks.p_value, 4) + " over " + std::to_string(ks.n) +
               " dark intervals (alpha 0.01); strong photons inside dark intervals " + std::to_string(in_dark) +
               "; broken alternations " + std::to_string(unclosed) + "; mean strong photons per bright interval " +
               fmt(per_bright, 1) + " over " + std::to_string(bright) + " intervals; " + std::to_string(trajectories) +
               " trajectories";
  }

  void determinism(CriterionResult& r) {
    const auto model = compile(scenario_two_observers());
    auto tally_hook = [](const TrajectoryRecord& rec, Tally& t) {
      t.samples["end"].push_back(rec.events.empty() ? 0.0 : rec.events.back().time);
    };
    const auto one = ensemble(model, kLargeN, seed(9), tally_hook, 1, true);
    const auto eight = ensemble(model, kLargeN, seed(9), tally_hook, 8, true);
    const bool same = same_statistics(one, eight);
    const auto a = run_trajectory(model, seed(99));
    const auto b = run_trajectory(model, seed(99));
    r.passed = same && same_log(a, b);
    r.detail = std::string("parallelism 1 vs ") + std::to_string(eight.parallelism) + ": reports " +
               (same ? "identical" : "DIFFER") + " (labels, invariants, per-trajectory outcomes and event times); " +
               "repeated trace " + (same_log(a, b) ? "identical" : "DIFFERS") + ", N=" + std::to_string(kLargeN);
  }

  void conservation(CriterionResult& r) {
    r.passed = all_.max_modulus_drift < 1e-9 && all_.realized_to_ready == 0 && all_.negative_weight == 0 &&
               all_.blocked_weight == 0 && all_.failed == 0 && all_.modulus_drift == 0;
    r.detail = "max |s - 1| between collapses " + sci(all_.max_modulus_drift) + "; realized-to-ready " +
               std::to_string(all_.realized_to_ready) + "; negative weights " + std::to_string(all_.negative_weight) +
               "; blocked components with weight " + std::to_string(all_.blocked_weight) + "; failed trajectories " +
               std::to_string(all_.failed) + "; over " + std::to_string(ensembles_) + " ensembles, " +
               std::to_string(trajectories_) + " trajectories";
  }

  AcceptanceOptions opt_;
  std::vector<CriterionResult> results_;
  std::optional<CriterionResult> pending_;
  InvariantCounts all_;
  std::uint64_t ensembles_ = 0;
  std::uint64_t trajectories_ = 0;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) { return Suite(options).run(); }

std::string format_result(const CriterionResult& r) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1fs", r.seconds);
  return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.title +
         "): " + r.detail + " [" + secs + "]";
}

}  // namespace nusim
