#pragma once

// Binary lambda calculus: self-delimiting term encoding plus a bounded
// normal-order evaluator. Terms use 0-based de Bruijn indices internally;
// the wire encoding is
//   00 M      abstraction
//   01 M N    application
//   1^{i+1} 0 variable with index i
// A program is a closed term. It is applied to the condition (or the empty
// list) and its normal form is decoded as a list of bits, with
//   nil  = λλ0,  bit 0 = λλ1,  bit 1 = λλ0,  cons h t = λ(0 h t).

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "klab/bitstring.hpp"

namespace klab::blc {

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum class Kind : std::uint8_t { kVar, kLam, kApp };
  Kind kind;
  std::uint32_t index = 0;  // kVar
  TermPtr left;             // kLam body, kApp function
  TermPtr right;            // kApp argument
  std::uint32_t size = 1;
  std::uint32_t free_levels = 0;  // 1 + largest free index, 0 when closed
};

TermPtr var(std::uint32_t index);
TermPtr lam(TermPtr body);
TermPtr app(TermPtr f, TermPtr a);

Bitstring encode(const TermPtr& t);
/// Parses a term occupying all of `program`; nullopt unless it is a closed term.
std::optional<TermPtr> parse_closed(const Bitstring& program);

TermPtr encode_bits(const Bitstring& bits);
std::optional<Bitstring> decode_bits(const TermPtr& t);

struct Limits {
  std::uint64_t max_steps = 0;
  std::uint32_t max_size = 1u << 12;
};

/// Normal form within the limits, and the number of β-steps used.
struct Normalized {
  TermPtr term;
  std::uint64_t steps = 0;
};
std::optional<Normalized> normalize(const TermPtr& t, const Limits& limits);

/// Result of running a program: output bits and cost (β-steps + 1).
struct Outcome {
  Bitstring output;
  std::uint64_t steps = 0;
};
std::optional<Outcome> run(const TermPtr& program, const std::optional<Bitstring>& input,
                           const Limits& limits);

/// Every closed term whose encoding is exactly `length` bits, in
/// lexicographic order of encodings.
std::vector<std::pair<Bitstring, TermPtr>> closed_terms_of_length(std::size_t length);

}  // namespace klab::blc
