#include "klab/bitstring.hpp"

#include <bit>
#include <stdexcept>

namespace klab {

Bitstring::Bitstring(std::string_view bits) : bits_(bits) {
  for (char c : bits_) {
    if (c != '0' && c != '1') {
      throw std::invalid_argument("bitstring contains non-binary character: " + std::string(bits));
    }
  }
}

Bitstring Bitstring::repeat(char bit, std::size_t count) {
  Bitstring b;
  b.bits_.assign(count, bit == '1' ? '1' : '0');
  return b;
}

Bitstring Bitstring::substr(std::size_t pos, std::size_t count) const {
  Bitstring b;
  b.bits_ = bits_.substr(pos, count);
  return b;
}

bool Bitstring::is_prefix_of(const Bitstring& other) const {
  return size() <= other.size() && other.bits_.compare(0, size(), bits_) == 0;
}

Bitstring Bitstring::from_token(std::string_view token) {
  if (token == "-") return Bitstring();
  return Bitstring(token);
}

std::ostream& operator<<(std::ostream& os, const Bitstring& b) { return os << b.token(); }

std::uint64_t rank_of(const Bitstring& b) {
  if (b.size() > 62) throw std::overflow_error("rank_of: bitstring longer than 62 bits");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < b.size(); ++i) value = (value << 1) | (b[i] ? 1u : 0u);
  return ((std::uint64_t{1} << b.size()) - 1) + value;
}

Bitstring from_rank(std::uint64_t n) {
  if (n >= (std::uint64_t{1} << 62)) throw std::overflow_error("from_rank: index too large");
  const std::uint64_t shifted = n + 1;
  const int len = std::bit_width(shifted) - 1;
  Bitstring b;
  for (int i = len - 1; i >= 0; --i) b.push_back(((shifted >> i) & 1u) != 0);
  return b;
}

Bitstring self_delimit(const Bitstring& x) {
  Bitstring out = Bitstring::repeat('1', x.size());
  out.push_back(false);
  out += x;
  return out;
}

std::optional<Bitstring> read_self_delimited(const Bitstring& code, std::size_t& pos) {
  std::size_t k = 0;
  std::size_t p = pos;
  while (p < code.size() && code[p]) {
    ++k;
    ++p;
  }
  if (p >= code.size()) return std::nullopt;
  ++p;  // terminating 0
  if (p + k > code.size()) return std::nullopt;
  Bitstring x = code.substr(p, k);
  pos = p + k;
  return x;
}

Bitstring pair_with_number(const Bitstring& sigma, std::uint64_t n) {
  return self_delimit(sigma) + self_delimit(from_rank(n));
}

Bitstring triple_with_numbers(const Bitstring& sigma, std::uint64_t n, std::uint64_t m) {
  return pair_with_number(pair_with_number(sigma, n), m);
}

std::optional<std::pair<Bitstring, std::uint64_t>> unpair(const Bitstring& code) {
  std::size_t pos = 0;
  auto first = read_self_delimited(code, pos);
  if (!first) return std::nullopt;
  auto second = read_self_delimited(code, pos);
  if (!second || pos != code.size()) return std::nullopt;
  return std::make_pair(*first, rank_of(*second));
}

Bitstring encode_slot(std::size_t e) {
  Bitstring b = Bitstring::repeat('1', e);
  b.push_back(false);
  return b;
}

}  // namespace klab
