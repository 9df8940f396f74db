#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "luq/common.hpp"

namespace luq {

/// Counter-style deterministic random stream. Substreams are derived by
/// hashing (parent state, key words), so any worker can rebuild the stream
/// for (round, client slot) without coordination. Draw sequences are stable
/// across platforms: no standard-library distributions are involved.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(mix(seed + kGolden)) {}

  /// Independent substream keyed by up to two words.
  Stream child(std::uint64_t a, std::uint64_t b = 0) const {
    Stream s(*this);
    s.state_ = mix(mix(state_ ^ (kGolden + a)) + (b + 1) * kGolden);
    s.cached_valid_ = false;
    return s;
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (second value cached).
  double next_gaussian() {
    if (cached_valid_) {
      cached_valid_ = false;
      return cached_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    cached_valid_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n).
  std::size_t next_below(std::size_t n) {
    require(n > 0, ErrorCode::invalid_argument, "next_below: empty range");
    return static_cast<std::size_t>(next_unit() * static_cast<double>(n)) % n;
  }

  /// Index drawn proportionally to the given nonnegative weights.
  std::size_t next_weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    require(total > 0.0, ErrorCode::invalid_argument, "next_weighted: zero total weight");
    const double u = next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double cached_ = 0.0;
  bool cached_valid_ = false;
};

}  // namespace luq
