#pragma once

#include <cstdint>
#include <string_view>

namespace ntkes {

/// Counter-based random stream.
///
/// A stream is an immutable 64-bit key. Draw i is a pure function of
/// (key, i), so consumers can address draws directly and streams derived by
/// name or index never interfere with each other. The mixing function is the
/// SplitMix64 finaliser, so `bits(i)` equals the (i+1)-th output of a
/// SplitMix64 generator seeded with `key`.
class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  /// Root stream for a user seed.
  static Stream root(std::uint64_t seed) noexcept;

  Stream child(std::string_view name) const noexcept;
  Stream child(std::uint64_t index) const noexcept;

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t bits(std::uint64_t counter) const noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const noexcept;
  /// Standard normal via inverse CDF.
  double normal(std::uint64_t counter) const noexcept;
  /// +1 or -1 with equal probability.
  double sign(std::uint64_t counter) const noexcept;

 private:
  std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Inverse of the standard normal CDF for p in (0, 1).
///
/// Acklam's rational approximation: relative error below 1.15e-9 over the
/// whole open interval. Uses only +, *, /, sqrt and log so results are
/// reproducible wherever those are correctly rounded.
double normal_quantile(double p) noexcept;

}  // namespace ntkes
