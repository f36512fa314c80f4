#include "klab/dyadic.hpp"

#include <charconv>
#include <limits>
#include <stdexcept>

namespace klab {

namespace {

using Raw = unsigned __int128;
constexpr Raw kRawMax = std::numeric_limits<Raw>::max();

int bit_width128(Raw v) {
  int w = 0;
  while (v != 0) {
    v >>= 1;
    ++w;
  }
  return w;
}

std::string u128_to_string(Raw v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

}  // namespace

Dyadic Dyadic::pow2_neg(int exponent) {
  if (exponent < 0 || exponent > kMaxExponent) {
    throw std::domain_error("Dyadic: exponent out of range: " + std::to_string(exponent));
  }
  return Dyadic(Raw{1} << (kMaxExponent - exponent));
}

Dyadic Dyadic::from_ratio(std::uint64_t numerator, int exponent) {
  if (exponent < 0 || exponent > kMaxExponent) {
    throw std::domain_error("Dyadic: exponent out of range: " + std::to_string(exponent));
  }
  Raw base = Raw{1} << (kMaxExponent - exponent);
  Raw n = numerator;
  if (n != 0 && base > kRawMax / n) throw std::overflow_error("Dyadic: value too large");
  return Dyadic(n * base);
}

Dyadic Dyadic::parse(std::string_view text) {
  auto parse_u64 = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("Dyadic: malformed number: " + std::string(text));
    }
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return from_ratio(parse_u64(text), 0);
  const std::uint64_t num = parse_u64(text.substr(0, slash));
  const std::uint64_t den = parse_u64(text.substr(slash + 1));
  if (den == 0 || (den & (den - 1)) != 0) {
    throw std::invalid_argument("Dyadic: denominator is not a power of two: " + std::string(text));
  }
  return from_ratio(num, bit_width128(den) - 1);
}

Dyadic& Dyadic::operator+=(const Dyadic& other) {
  if (raw_ > kRawMax - other.raw_) throw std::overflow_error("Dyadic: addition overflow");
  raw_ += other.raw_;
  return *this;
}

Dyadic& Dyadic::operator-=(const Dyadic& other) {
  if (other.raw_ > raw_) throw std::domain_error("Dyadic: negative result");
  raw_ -= other.raw_;
  return *this;
}

Dyadic Dyadic::times(std::uint64_t factor) const {
  Raw f = factor;
  if (f != 0 && raw_ > kRawMax / f) throw std::overflow_error("Dyadic: multiplication overflow");
  return Dyadic(raw_ * f);
}

Dyadic Dyadic::shifted_down(int count) const {
  if (count < 0) throw std::domain_error("Dyadic: negative shift");
  if (count >= 128 || (raw_ & ((Raw{1} << count) - 1)) != 0) {
    throw std::domain_error("Dyadic: shift loses precision");
  }
  return Dyadic(raw_ >> count);
}

bool Dyadic::at_most_reciprocal(std::uint64_t k) const {
  // value ≤ 1/k  ⟺  raw·k ≤ 2^120
  const Raw unit = Raw{1} << kMaxExponent;
  if (k == 0) return true;
  if (raw_ > kRawMax / k) return false;
  return raw_ * k <= unit;
}

bool Dyadic::below_reciprocal(std::uint64_t k) const {
  const Raw unit = Raw{1} << kMaxExponent;
  if (k == 0) return true;
  if (raw_ > kRawMax / k) return false;
  return raw_ * k < unit;
}

int Dyadic::leading_exponent() const {
  if (raw_ == 0) throw std::domain_error("Dyadic: leading exponent of zero");
  return kMaxExponent - (bit_width128(raw_) - 1);
}

int Dyadic::ceil_neg_log2() const {
  // v ∈ [2^-j, 2^-j+1) puts -log2 v in (j-1, j].
  return leading_exponent();
}

double Dyadic::to_double() const {
  double hi = static_cast<double>(static_cast<std::uint64_t>(raw_ >> 64));
  double lo = static_cast<double>(static_cast<std::uint64_t>(raw_));
  double v = hi * 18446744073709551616.0 + lo;
  for (int i = 0; i < kMaxExponent; ++i) v *= 0.5;
  return v;
}

std::string Dyadic::str() const {
  if (raw_ == 0) return "0";
  Raw num = raw_;
  int exp = kMaxExponent;
  while (exp > 0 && (num & 1) == 0) {
    num >>= 1;
    --exp;
  }
  if (exp == 0) return u128_to_string(num);
  return u128_to_string(num) + "/" + u128_to_string(Raw{1} << exp);
}

}  // namespace klab
