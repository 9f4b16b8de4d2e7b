#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nusim/scenario.hpp"

namespace nusim {

/// Exact outcome probabilities by enumerating the collapse event tree over
/// constant-rate pieces. Shares no stepping or sampling code with the engine.
struct OracleOptions {
  /// Replace the closed-form piece integrals by RK4 on a grid of
  /// `fine_step` x piece length (self-consistency check).
  bool fine_grid = false;
  double fine_step = 1e-4;
  /// Sub-intervals per piece for the hit-time quadrature (16 Gauss-Legendre
  /// nodes each); only used when a post-collapse law depends on the hit time.
  int quadrature_splits = 1;
  /// Stop expanding branches after this many collapses (0: never). Their mass
  /// goes to a leaf labelled kTruncatedLabel; shorter sequences stay exact.
  int max_events = 0;
  /// Piece evaluations before giving up with OracleError.
  std::size_t max_pieces = 4'000'000;
};

inline constexpr const char* kTruncatedLabel = "(truncated)";

struct OracleLeaf {
  std::vector<int> sequence;  ///< collapsed template keys, in order; -1 ends a truncated branch
  double probability = 0.0;
  std::string label;
};

/// All terminal collapse sequences with their probabilities. Throws
/// OracleError for a recurrent model without horizon or when the budget runs out.
std::vector<OracleLeaf> event_tree(const Model& model, const OracleOptions& options = {});

/// Leaf probabilities aggregated by outcome label, sorted by label.
std::vector<LawEntry> outcome_law(const Model& model, const OracleOptions& options = {});
std::vector<LawEntry> outcome_law(const Scenario& sc, const OracleOptions& options = {});

/// CDF of "the first collapse chooses `component` at or before t".
class HitTimeCdf {
 public:
  struct Segment {
    double begin = 0.0;
    double end = 0.0;
    double value_at_begin = 0.0;
    double mass = 0.0;   ///< survival at begin x share of this component
    double live = 0.0;   ///< modulus without ready states at begin
    double drain = 0.0;  ///< its net outflow
    double total = 0.0;  ///< summed positive inflow into ready components
  };

  double operator()(double t) const noexcept;
  /// Value as t grows without bound (within the horizon).
  double limit() const noexcept { return limit_; }
  /// Time after which the CDF is constant.
  double support_end() const noexcept;
  const std::vector<Segment>& segments() const noexcept { return segments_; }

 private:
  friend HitTimeCdf hit_time_cdf(const Model&, std::string_view, std::optional<std::string_view>);
  std::vector<Segment> segments_;
  double limit_ = 0.0;
};

/// From the scenario's initial state, or from a lone realized instance of
/// `from` at t = 0. Throws ConfigError for unknown component ids.
HitTimeCdf hit_time_cdf(const Model& model, std::string_view component,
                        std::optional<std::string_view> from = std::nullopt);

}  // namespace nusim
