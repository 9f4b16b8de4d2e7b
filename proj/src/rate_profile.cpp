#include "nusim/rate_profile.hpp"

#include <algorithm>

namespace nusim {

RateProfile::RateProfile(std::vector<RatePiece> pieces) : pieces_(std::move(pieces)) {
  std::sort(pieces_.begin(), pieces_.end(),
            [](const RatePiece& a, const RatePiece& b) { return a.begin < b.begin; });
}

RateProfile RateProfile::uniform(double begin, double end, double total) {
  return RateProfile({RatePiece{begin, end, total / (end - begin)}});
}

double RateProfile::rate_at(double t) const noexcept {
  for (const auto& p : pieces_) {
    if (t < p.begin) break;
    if (t < p.end) return p.rate;
  }
  return 0.0;
}

double RateProfile::max_rate_over(double a, double b) const noexcept {
  double best = 0.0;
  for (const auto& p : pieces_) {
    if (p.end > a && p.begin < b) best = std::max(best, p.rate);
  }
  return best;
}

double RateProfile::integral(double a, double b) const noexcept {
  double sum = 0.0;
  for (const auto& p : pieces_) {
    const double lo = std::max(a, p.begin);
    const double hi = std::min(b, p.end);
    if (hi > lo) sum += p.rate * (hi - lo);
  }
  return sum;
}

double RateProfile::total() const noexcept {
  double sum = 0.0;
  for (const auto& p : pieces_) sum += p.rate * (p.end - p.begin);
  return sum;
}

double RateProfile::window_begin() const noexcept {
  return pieces_.empty() ? kInfinity : pieces_.front().begin;
}

double RateProfile::window_end() const noexcept {
  double end = -kInfinity;
  for (const auto& p : pieces_) end = std::max(end, p.end);
  return end;
}

double RateProfile::next_boundary(double t) const noexcept {
  double best = kInfinity;
  for (const auto& p : pieces_) {
    if (p.begin > t) best = std::min(best, p.begin);
    if (p.end > t) best = std::min(best, p.end);
  }
  return best;
}

RateProfile RateProfile::scaled(double factor) const {
  auto pieces = pieces_;
  for (auto& p : pieces) p.rate *= factor;
  return RateProfile(std::move(pieces));
}

}  // namespace nusim
