#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

namespace klab {

/// Finite binary word. Stored as a string of '0'/'1' characters so that
/// programs, conditions and outputs print and hash without conversion.
///
/// The ordering is length-lexicographic (shorter words first, then
/// lexicographic), which is the effective ordering used wherever a
/// construction asks for "the least" string.
class Bitstring {
 public:
  Bitstring() = default;
  /// Throws std::invalid_argument on characters other than '0' and '1'.
  explicit Bitstring(std::string_view bits);

  static Bitstring repeat(char bit, std::size_t count);

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] == '1'; }
  const std::string& str() const { return bits_; }

  void push_back(bool bit) { bits_.push_back(bit ? '1' : '0'); }
  Bitstring& operator+=(const Bitstring& other) {
    bits_ += other.bits_;
    return *this;
  }
  friend Bitstring operator+(Bitstring lhs, const Bitstring& rhs) {
    lhs += rhs;
    return lhs;
  }

  /// Bits [pos, pos + count).
  Bitstring substr(std::size_t pos, std::size_t count = std::string::npos) const;
  bool is_prefix_of(const Bitstring& other) const;
  /// True when neither word is a prefix of the other.
  bool incomparable_with(const Bitstring& other) const {
    return !is_prefix_of(other) && !other.is_prefix_of(*this);
  }

  friend bool operator==(const Bitstring&, const Bitstring&) = default;
  friend std::strong_ordering operator<=>(const Bitstring& a, const Bitstring& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.bits_.compare(b.bits_) <=> 0;
  }

  /// Renders ε as "-" so that every word is a non-empty token in text files.
  std::string token() const { return bits_.empty() ? std::string("-") : bits_; }
  static Bitstring from_token(std::string_view token);

 private:
  std::string bits_;
};

std::ostream& operator<<(std::ostream& os, const Bitstring& b);

/// Position of `b` in the length-lexicographic enumeration (ε = 0, "0" = 1,
/// "1" = 2, "00" = 3, ...). Throws std::overflow_error past 63 bits.
std::uint64_t rank_of(const Bitstring& b);
/// Inverse of rank_of.
Bitstring from_rank(std::uint64_t n);

/// Self-delimiting code u(x) = 1^{|x|} 0 x.
Bitstring self_delimit(const Bitstring& x);
/// Reads one u(x) starting at `pos`; returns x and advances pos.
std::optional<Bitstring> read_self_delimited(const Bitstring& code, std::size_t& pos);

/// ⟨σ, n⟩ = u(σ) u(from_rank(n)).
Bitstring pair_with_number(const Bitstring& sigma, std::uint64_t n);
/// ⟨⟨σ, n⟩, m⟩.
Bitstring triple_with_numbers(const Bitstring& sigma, std::uint64_t n, std::uint64_t m);
/// Inverts pair_with_number; nullopt when `code` is not a well-formed pair.
std::optional<std::pair<Bitstring, std::uint64_t>> unpair(const Bitstring& code);

/// 1^e 0, the framing prefix of slot e.
Bitstring encode_slot(std::size_t e);

}  // namespace klab

template <>
struct std::hash<klab::Bitstring> {
  std::size_t operator()(const klab::Bitstring& b) const noexcept {
    return std::hash<std::string>{}(b.str());
  }
};
