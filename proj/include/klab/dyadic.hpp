#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace klab {

/// Exact non-negative dyadic rational m / 2^k with k ≤ kMaxExponent.
///
/// Stored as a fixed-point integer over 2^-kMaxExponent, so addition and
/// comparison are plain 128-bit integer operations. Values up to 2^7 are
/// representable; every arithmetic operation is overflow-checked.
class Dyadic {
 public:
  static constexpr int kMaxExponent = 120;

  constexpr Dyadic() = default;

  /// 2^-exponent. Throws std::domain_error when exponent is outside [0, 120].
  static Dyadic pow2_neg(int exponent);
  /// numerator / 2^exponent.
  static Dyadic from_ratio(std::uint64_t numerator, int exponent);
  static Dyadic one() { return pow2_neg(0); }
  /// Parses "p/q" with q a power of two, or an integer.
  static Dyadic parse(std::string_view text);

  bool is_zero() const { return raw_ == 0; }

  Dyadic& operator+=(const Dyadic& other);
  /// Throws std::domain_error when the result would be negative.
  Dyadic& operator-=(const Dyadic& other);
  friend Dyadic operator+(Dyadic a, const Dyadic& b) { return a += b; }
  friend Dyadic operator-(Dyadic a, const Dyadic& b) { return a -= b; }
  Dyadic times(std::uint64_t factor) const;
  /// Halves `count` times; throws if precision would be lost.
  Dyadic shifted_down(int count) const;

  friend bool operator==(const Dyadic&, const Dyadic&) = default;
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    return a.raw_ <=> b.raw_;
  }

  /// Exact test of value ≤ 1/k.
  bool at_most_reciprocal(std::uint64_t k) const;
  /// Exact test of value < 1/k.
  bool below_reciprocal(std::uint64_t k) const;

  /// ⌈-log2 value⌉ for a nonzero value (may be negative for values above 1).
  int ceil_neg_log2() const;
  /// The j with value ∈ [2^-j, 2^-j+1).
  int leading_exponent() const;

  double to_double() const;
  /// Reduced "p/q" form ("0", "1", "3/8", ...).
  std::string str() const;

 private:
  using Raw = unsigned __int128;
  explicit constexpr Dyadic(Raw raw) : raw_(raw) {}
  Raw raw_ = 0;
};

}  // namespace klab
