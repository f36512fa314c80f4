#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "klab/bitstring.hpp"
#include "klab/dyadic.hpp"

namespace klab {

/// Domain of a machine that grows while a construction runs. Tracks the
/// minimal-code set M and the first-found minimal code per output (N) as
/// programs arrive.
class DynamicDomain {
 public:
  struct Entry {
    Bitstring program;
    Bitstring output;
    std::uint64_t stage = 0;
  };

  /// Adds a program and returns the indices of the entries that left M
  /// because of it.
  std::vector<std::size_t> add(Bitstring program, Bitstring output, std::uint64_t stage);

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }

  bool in_m(std::size_t i) const { return in_m_[i]; }
  /// Entry index of n* for `output`, if it has appeared.
  std::optional<std::size_t> nstar(const Bitstring& output) const;
  bool in_n(std::size_t i) const;
  /// Current K of `output` (length of its shortest code), if coded.
  std::optional<std::size_t> best_length(const Bitstring& output) const;
  /// Σ 2^-|p| over the domain.
  const Dyadic& weight() const { return weight_; }

 private:
  struct OutputState {
    std::size_t best = 0;
    std::size_t nstar = 0;
    std::vector<std::size_t> minimal;
  };

  std::vector<Entry> entries_;
  std::vector<bool> in_m_;
  std::unordered_map<Bitstring, OutputState> outputs_;
  Dyadic weight_;
};

}  // namespace klab
