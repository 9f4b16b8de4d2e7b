#include "nusim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/quadrature/gauss.hpp>

#include "nusim/errors.hpp"

namespace nusim {

namespace {

double slack(double t) { return 1e-11 * std::max(1.0, std::abs(t)); }

// One branch between collapses: which templates are instantiated and how.
struct Config {
  std::vector<char> present;
  std::vector<double> weight;
  std::vector<std::uint64_t> ready;
  std::vector<double> epoch;
};

// Keyed by the collapse sequence that follows the node.
using Law = std::map<std::vector<int>, double>;

// Interval [a, b) over which every rate is constant.
struct Piece {
  double a = 0.0;
  double b = kInfinity;
  std::vector<double> net;
  std::vector<double> rate;
  std::vector<int> exhausting;
  double live = 0.0;
  double drain = 0.0;
  double jtot = 0.0;
};

// Survival over u time units of a piece: the conditional hazard is
// jtot / (live - drain * u), so survival is a power of the live-mass ratio.
double survival(double live, double drain, double jtot, double u) {
  if (jtot <= 0.0) return 1.0;
  if (live <= 0.0) return 0.0;
  if (u <= 0.0) return 1.0;
  if (drain == 0.0) return std::exp(-jtot * u / live);
  const double x = drain * u / live;
  if (x >= 1.0) return 0.0;
  return std::exp(jtot / drain * std::log1p(-x));
}

class Walker {
 public:
  Walker(const Model& model, const OracleOptions& options) : m_(model), opt_(options) {
    horizon_ = model.horizon();
    for (const auto& e : model.edges()) {
      if (e.anchor != Anchor::Absolute) continue;
      for (const auto& p : e.profile.pieces()) {
        grid_.push_back(p.begin);
        grid_.push_back(p.end);
      }
    }
    if (std::isfinite(horizon_)) grid_.push_back(horizon_);
    std::sort(grid_.begin(), grid_.end());
    grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
    translation_free_ = !model.has_absolute_edges() && !std::isfinite(horizon_);

    const auto& gl = boost::math::quadrature::gauss<double, 16>::abscissa();
    const auto& gw = boost::math::quadrature::gauss<double, 16>::weights();
    for (std::size_t i = 0; i < gl.size(); ++i) {
      nodes_.push_back({0.5 * (1.0 - gl[i]), 0.5 * gw[i]});
      if (gl[i] != 0.0) nodes_.push_back({0.5 * (1.0 + gl[i]), 0.5 * gw[i]});
    }
  }

  Config empty() const {
    const std::size_t n = m_.templates().size();
    return {std::vector<char>(n, 0), std::vector<double>(n, 0.0),
            std::vector<std::uint64_t>(n, 0), std::vector<double>(n, 0.0)};
  }

  Config initial() const {
    Config c = empty();
    const auto tm = m_.templates();
    for (std::size_t k = 0; k < tm.size(); ++k) {
      if (tm[k].initial_weight < 0.0) continue;
      c.present[k] = 1;
      c.weight[k] = tm[k].initial_weight;
      c.ready[k] = tm[k].ready_mask;
    }
    activate(c, 0.0);
    return c;
  }

  // A lone realized instance of `key`, as right after a collapse onto it.
  Config realized(int key, double t) const {
    Config c = empty();
    c.present[key] = 1;
    c.weight[key] = 1.0;
    c.epoch[key] = t;
    activate(c, t);
    return c;
  }

  Config after_collapse(int chosen, double t) const {
    const int relabel = m_.templates()[chosen].realizes_as;
    return realized(relabel >= 0 ? relabel : chosen, t);
  }

  double origin(const Config& c, const Model::Edge& e) const {
    return e.anchor == Anchor::Absolute ? 0.0 : c.epoch[e.source];
  }

  double local(const Config& c, const Model::Edge& e, double t) const {
    const double x = t - origin(c, e);
    for (const auto& p : e.profile.pieces()) {
      if (std::abs(x - p.begin) <= slack(t)) return p.begin;
      if (std::abs(x - p.end) <= slack(t)) return p.end;
    }
    return x;
  }

  void activate(Config& c, double t) const {
    const auto edges = m_.edges();
    for (bool grew = true; grew;) {
      grew = false;
      for (const auto& e : edges) {
        if (!e.creates_ready || !c.present[e.source] || c.present[e.target]) continue;
        const auto pieces = e.profile.pieces();
        double last = -kInfinity;
        for (const auto& p : pieces) last = std::max(last, p.end);
        const double x = local(c, e, t);
        if (x < pieces.front().begin || x >= last) continue;
        c.present[e.target] = 1;
        c.weight[e.target] = 0.0;
        c.ready[e.target] = m_.templates()[e.target].ready_mask;
        c.epoch[e.target] = t;
        grew = true;
      }
    }
  }

  Piece piece(const Config& c, double t) const {
    const auto edges = m_.edges();
    const std::size_t nk = m_.templates().size();
    Piece p;
    p.a = t;

    double b = kInfinity;
    const auto g = std::upper_bound(grid_.begin(), grid_.end(), t + slack(t));
    if (g != grid_.end()) b = *g;
    for (const auto& e : edges) {
      if (e.anchor == Anchor::Absolute || !c.present[e.source]) continue;
      for (const auto& q : e.profile.pieces()) {
        for (double x : {q.begin, q.end}) {
          const double at = c.epoch[e.source] + x;
          if (at > t + slack(t)) b = std::min(b, at);
        }
      }
    }
    const double probe = std::isfinite(b) ? 0.5 * (t + b) : t + 1.0;

    std::vector<double> raw(edges.size(), 0.0);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (!c.present[e.source] || !c.present[e.target]) continue;
      if (m_.blocking() && (c.ready[e.source] & c.ready[e.target]) != 0) continue;
      raw[i] = e.profile.rate_at(probe - origin(c, e));
    }

    // An empty source can only pass on what reaches it: scale its out-edges by
    // min(1, in / out), iterated down from 1 to the largest consistent factors.
    std::vector<double> scale(nk, 1.0);
    for (int round = 0; round < 64; ++round) {
      std::vector<double> next(nk, 1.0);
      for (std::size_t k = 0; k < nk; ++k) {
        if (!c.present[k] || c.weight[k] > 0.0) continue;
        double in = 0.0, out = 0.0;
        for (int e : m_.in_edges(static_cast<int>(k))) in += raw[e] * scale[edges[e].source];
        for (int e : m_.out_edges(static_cast<int>(k))) out += raw[e];
        if (out > 0.0) next[k] = std::min(1.0, in / out);
      }
      if (next == scale) break;
      scale = std::move(next);
    }

    p.rate.assign(edges.size(), 0.0);
    p.net.assign(nk, 0.0);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const double r = raw[i] * scale[edges[i].source];
      p.rate[i] = r;
      p.net[edges[i].target] += r;
      p.net[edges[i].source] -= r;
    }

    double dry_at = kInfinity;
    for (std::size_t k = 0; k < nk; ++k) {
      if (!c.present[k] || c.weight[k] <= 0.0 || p.net[k] >= 0.0) continue;
      dry_at = std::min(dry_at, t + c.weight[k] / -p.net[k]);
    }
    if (dry_at <= b) {
      b = dry_at;
      for (std::size_t k = 0; k < nk; ++k)
        if (c.present[k] && c.weight[k] > 0.0 && p.net[k] < 0.0 &&
            t + c.weight[k] / -p.net[k] == dry_at)
          p.exhausting.push_back(static_cast<int>(k));
    }
    if (horizon_ < b) {
      b = horizon_;
      p.exhausting.clear();
    }
    p.b = b;

    for (std::size_t k = 0; k < nk; ++k) {
      if (!c.present[k]) continue;
      if (c.ready[k] != 0) {
        p.jtot += std::max(p.net[k], 0.0);
      } else {
        p.live += c.weight[k];
        p.drain -= p.net[k];
      }
    }
    return p;
  }

  void evolve(Config& c, const Piece& p, double to) const {
    const double du = to - p.a;
    for (std::size_t k = 0; k < c.present.size(); ++k) {
      if (!c.present[k]) continue;
      double w = c.weight[k] + p.net[k] * du;
      if (w < 0.0) {
        if (w < -1e-12) throw OracleError("negative weight in event tree");
        w = 0.0;
      }
      c.weight[k] = w;
    }
    if (to == p.b)
      for (int k : p.exhausting) c.weight[k] = 0.0;
  }

  // Probability mass of a hit in [a, b) and its split over ready components,
  // starting from survival 1.
  struct PieceOutcome {
    double survive = 1.0;
    std::vector<std::pair<int, double>> hits;
  };

  PieceOutcome resolve(const Config& c, const Piece& p) const {
    PieceOutcome out;
    std::vector<int> targets;
    for (std::size_t k = 0; k < c.present.size(); ++k)
      if (c.present[k] && c.ready[k] != 0 && p.net[k] > 0.0) targets.push_back(static_cast<int>(k));
    const double span = p.b - p.a;
    if (!opt_.fine_grid || !std::isfinite(span) || p.live <= 0.0) {
      out.survive = p.live <= 0.0 ? 0.0 : survival(p.live, p.drain, p.jtot, span);
      for (int k : targets) out.hits.emplace_back(k, (1.0 - out.survive) * p.net[k] / p.jtot);
      return out;
    }

    // RK4 on (cumulative hazard, integral of survival / live mass).
    const auto steps = static_cast<long>(std::ceil(1.0 / opt_.fine_step));
    const double h = span / static_cast<double>(steps);
    const bool drains = p.drain > 0.0 && p.live - p.drain * span <= 1e-12 * p.live;
    const long run = drains ? steps - 1 : steps;
    auto live_at = [&](double u) { return p.live - p.drain * u; };
    auto deriv = [&](double u, double cum) {
      const double l = live_at(u);
      return std::pair{p.jtot / l, std::exp(-cum) / l};
    };
    double cum = 0.0, acc = 0.0;
    for (long i = 0; i < run; ++i) {
      const double u = static_cast<double>(i) * h;
      const auto k1 = deriv(u, cum);
      const auto k2 = deriv(u + 0.5 * h, cum + 0.5 * h * k1.first);
      const auto k3 = deriv(u + 0.5 * h, cum + 0.5 * h * k2.first);
      const auto k4 = deriv(u + h, cum + h * k3.first);
      cum += h / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
      acc += h / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
    }
    // A drained piece ends in a certain hit; the last cell's mass is split by share.
    const double rest = drains ? std::exp(-cum) : 0.0;
    out.survive = drains ? 0.0 : std::exp(-cum);
    for (int k : targets) out.hits.emplace_back(k, p.net[k] * acc + rest * p.net[k] / p.jtot);
    return out;
  }

  // Law of the rest of the tree for a hit on `n` somewhere in piece p, when it
  // does not depend on the hit time; nullopt otherwise.
  std::optional<Law> fixed_child(const Piece& p, int n) {
    if (opt_.max_events > 0) return std::nullopt;  // memo entries would ignore depth
    if (translation_free_) {
      auto it = free_memo_.find(n);
      if (it == free_memo_.end()) it = free_memo_.emplace(n, from(after_collapse(n, p.a), p.a)).first;
      return it->second;
    }
    if (m_.has_anchored_edges()) return std::nullopt;
    const double mid = std::isfinite(p.b) ? 0.5 * (p.a + p.b) : p.a + 1.0;
    Config child = after_collapse(n, mid);
    const Piece q = piece(child, mid);
    if (std::any_of(q.rate.begin(), q.rate.end(), [](double r) { return r > 0.0; })) return std::nullopt;
    const auto key = std::pair{n, p.b};
    auto it = idle_memo_.find(key);
    if (it == idle_memo_.end()) it = idle_memo_.emplace(key, from(std::move(child), mid)).first;
    return it->second;
  }

  Law hit_time_average(const Piece& p, int n, double mass) {
    if (!std::isfinite(p.b))
      throw OracleError("post-collapse law depends on the hit time over an unbounded piece");
    Law acc;
    double norm = 0.0;
    const int splits = std::max(1, opt_.quadrature_splits);
    const double width = (p.b - p.a) / splits;
    for (int s = 0; s < splits; ++s) {
      for (const auto& [x, w] : nodes_) {
        const double u = (s + x) * width;
        const double density = survival(p.live, p.drain, p.jtot, u) / (p.live - p.drain * u);
        const double weight = w * density;
        if (!(weight > 0.0)) continue;
        const double tau = p.a + u;
        for (const auto& [seq, pr] : from(after_collapse(n, tau), tau)) acc[seq] += weight * pr;
        norm += weight;
      }
    }
    if (!(norm > 0.0)) throw OracleError("vanishing hit-time density");
    for (auto& [seq, pr] : acc) pr *= mass / norm;
    return acc;
  }

  static void graft(Law& law, int n, const Law& child, double mass) {
    for (const auto& [seq, pr] : child) {
      std::vector<int> full;
      full.reserve(seq.size() + 1);
      full.push_back(n);
      full.insert(full.end(), seq.begin(), seq.end());
      law[full] += mass * pr;
    }
  }

  Law from(Config c, double t) {
    struct Depth {
      int& d;
      explicit Depth(int& x) : d(++x) {}
      ~Depth() { --d; }
    } depth(depth_);
    const bool last = opt_.max_events > 0 && depth_ > opt_.max_events;
    Law law;
    double alive = 1.0;
    for (;;) {
      if (++pieces_ > opt_.max_pieces) throw OracleError("event tree exceeds the evaluation budget");
      if (t >= horizon_ - slack(horizon_)) break;
      const Piece p = piece(c, t);
      if (!std::isfinite(p.b) && p.jtot <= 0.0) break;
      if (p.jtot > 0.0) {
        const auto res = resolve(c, p);
        for (const auto& [n, share] : res.hits) {
          const double mass = alive * share;
          if (!(mass > 0.0)) continue;
          if (last) {
            law[{n, -1}] += mass;
          } else if (p.live <= 0.0) {
            graft(law, n, from(after_collapse(n, t), t), mass);
          } else if (auto fixed = fixed_child(p, n)) {
            graft(law, n, *fixed, mass);
          } else {
            graft(law, n, hit_time_average(p, n, 1.0), mass);
          }
        }
        alive *= res.survive;
        if (!(alive > 0.0)) return law;
      }
      evolve(c, p, p.b);
      t = p.b;
      activate(c, t);
    }
    law[{}] += alive;
    return law;
  }

  const Model& model() const noexcept { return m_; }

 private:
  const Model& m_;
  OracleOptions opt_;
  double horizon_ = kInfinity;
  std::vector<double> grid_;
  bool translation_free_ = false;
  std::vector<std::pair<double, double>> nodes_;  // on [0, 1]
  std::size_t pieces_ = 0;
  int depth_ = 0;
  std::map<int, Law> free_memo_;
  std::map<std::pair<int, double>, Law> idle_memo_;
};

int require_key(const Model& model, std::string_view id) {
  const auto key = model.key_of(id);
  if (!key) throw ConfigError("component", "unknown component '" + std::string(id) + "'");
  return *key;
}

}  // namespace

std::vector<OracleLeaf> event_tree(const Model& model, const OracleOptions& options) {
  if (model.recurrent() && !std::isfinite(model.horizon()))
    throw OracleError("scenario '" + model.scenario().name +
                      "' is recurrent; the event tree needs a horizon");
  Walker walker(model, options);
  const Law law = walker.from(walker.initial(), 0.0);
  std::vector<OracleLeaf> leaves;
  leaves.reserve(law.size());
  for (const auto& [seq, pr] : law) {
    if (!seq.empty() && seq.back() < 0)
      leaves.push_back({seq, pr, kTruncatedLabel});
    else
      leaves.push_back({seq, pr, model.classify(seq)});
  }
  return leaves;
}

std::vector<LawEntry> outcome_law(const Model& model, const OracleOptions& options) {
  std::map<std::string, double> by_label;
  for (const auto& leaf : event_tree(model, options)) by_label[leaf.label] += leaf.probability;
  // Named outcomes that no branch reaches still belong to the law.
  for (const auto& r : model.scenario().classifier.rules) by_label.try_emplace(r.label, 0.0);
  for (const auto& e : model.scenario().expected) by_label.try_emplace(e.label, 0.0);
  std::vector<LawEntry> out;
  for (const auto& [label, pr] : by_label) out.push_back({label, pr});
  return out;
}

std::vector<LawEntry> outcome_law(const Scenario& sc, const OracleOptions& options) {
  return outcome_law(*compile(sc), options);
}

double HitTimeCdf::operator()(double t) const noexcept {
  const Segment* seg = nullptr;
  for (const auto& s : segments_) {
    if (s.begin > t) break;
    seg = &s;
  }
  if (!seg) return 0.0;
  const double u = std::min(t, seg->end) - seg->begin;
  return seg->value_at_begin + seg->mass * (1.0 - survival(seg->live, seg->drain, seg->total, u));
}

double HitTimeCdf::support_end() const noexcept {
  return segments_.empty() ? 0.0 : segments_.back().end;
}

HitTimeCdf hit_time_cdf(const Model& model, std::string_view component,
                        std::optional<std::string_view> from) {
  const int target = require_key(model, component);
  OracleOptions options;
  Walker walker(model, options);
  Config c = from ? walker.realized(require_key(model, *from), 0.0) : walker.initial();
  const double horizon = model.horizon();

  HitTimeCdf cdf;
  double alive = 1.0, value = 0.0, t = 0.0;
  for (std::size_t guard = 0; t < horizon; ++guard) {
    if (guard > options.max_pieces) throw OracleError("hit-time CDF exceeds the evaluation budget");
    const Piece p = walker.piece(c, t);
    if (!std::isfinite(p.b) && p.jtot <= 0.0) break;
    if (p.jtot > 0.0) {
      const double share = c.present[target] && c.ready[target] != 0 ? std::max(p.net[target], 0.0) / p.jtot : 0.0;
      HitTimeCdf::Segment seg{p.a, p.live <= 0.0 ? p.a : p.b, value, alive * share, p.live, p.drain, p.jtot};
      const double stay = p.live <= 0.0 ? 0.0 : survival(p.live, p.drain, p.jtot, p.b - p.a);
      value += seg.mass * (1.0 - stay);
      if (seg.mass > 0.0) cdf.segments_.push_back(seg);
      alive *= stay;
      if (!(alive > 0.0)) break;
    }
    walker.evolve(c, p, p.b);
    t = p.b;
    walker.activate(c, t);
  }
  cdf.limit_ = value;
  return cdf;
}

}  // namespace nusim
