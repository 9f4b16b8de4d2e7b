#pragma once

#include <limits>
#include <span>
#include <vector>

namespace nusim {

/// Constant rate on the half-open interval [begin, end).
struct RatePiece {
  double begin = 0.0;
  double end = 0.0;
  double rate = 0.0;

  friend bool operator==(const RatePiece&, const RatePiece&) = default;
};

/// Piecewise-constant, nonnegative probability-current profile.
///
/// Times are local to the edge anchor (absolute time, or time since the source
/// component's epoch). The profile is zero outside its pieces; gaps between
/// pieces are zero-rate. Pieces are kept sorted and non-overlapping.
class RateProfile {
 public:
  RateProfile() = default;
  explicit RateProfile(std::vector<RatePiece> pieces);

  /// Single piece carrying `total` uniformly over [begin, end).
  static RateProfile uniform(double begin, double end, double total);

  std::span<const RatePiece> pieces() const noexcept { return pieces_; }
  bool empty() const noexcept { return pieces_.empty(); }

  /// Right-continuous: the rate in effect on [t, t + eps).
  double rate_at(double t) const noexcept;
  /// Largest rate on the open interval (a, b).
  double max_rate_over(double a, double b) const noexcept;
  double integral(double a, double b) const noexcept;
  double total() const noexcept;

  double window_begin() const noexcept;
  double window_end() const noexcept;
  bool in_window(double t) const noexcept { return !empty() && t >= window_begin() && t < window_end(); }

  /// Smallest piece boundary strictly greater than t, or +inf.
  double next_boundary(double t) const noexcept;

  RateProfile scaled(double factor) const;

  friend bool operator==(const RateProfile&, const RateProfile&) = default;

 private:
  std::vector<RatePiece> pieces_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace nusim
