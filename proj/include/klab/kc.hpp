#pragma once

// Online Kraft–Chaitin allocation. A builder owns a pool of free subtree
// roots kept in binary-carry normal form (at most one free node per length,
// pairwise incomparable); the free lengths spell out the binary expansion of
// the unallocated weight. A request for length l takes the longest free node
// ν with |ν| ≤ l, grants ν0^{l-|ν|} and returns the siblings ν0^i1 to the
// pool. Such a node exists exactly when the remaining weight is ≥ 2^-l, so a
// request succeeds iff it keeps the allocated weight within capacity.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "klab/bitstring.hpp"
#include "klab/dyadic.hpp"
#include "klab/machine.hpp"

namespace klab {

/// (output, length) demand, optionally under a condition.
struct Request {
  Bitstring output;
  std::size_t length = 0;
  std::optional<Bitstring> condition;

  friend bool operator==(const Request&, const Request&) = default;
};

struct Grant {
  Request request;
  Bitstring codeword;
};

class KcBuilder {
 public:
  static constexpr std::size_t kMaxLength = Dyadic::kMaxExponent;

  /// Throws InvalidCapacity unless 0 < capacity ≤ 1.
  explicit KcBuilder(Dyadic capacity = Dyadic::one());

  /// Codeword of exactly r.length bits, or nullopt (Overflow) with the
  /// builder unchanged. Throws std::invalid_argument past kMaxLength.
  std::optional<Bitstring> request(const Request& r);

  const Dyadic& capacity() const { return capacity_; }
  const Dyadic& allocated() const { return allocated_; }
  Dyadic remaining() const { return capacity_ - allocated_; }
  const std::vector<Grant>& grants() const { return grants_; }

  /// Free nodes ordered by length.
  std::vector<Bitstring> free_nodes() const;

  /// Pool normal form: free nodes pairwise incomparable, one per length at
  /// most, and free weight = capacity - allocated.
  bool check_pool(std::string* why = nullptr) const;
  /// check_pool plus: grants have their requested lengths and grants together
  /// with free nodes form an antichain.
  bool check_invariants(std::string* why = nullptr) const;

 private:
  Dyadic capacity_;
  Dyadic allocated_;
  std::array<std::optional<Bitstring>, kMaxLength + 1> free_;
  std::vector<Grant> grants_;
};

/// Parses a dyadic capacity ("1", "3/4", ...); InvalidCapacity otherwise.
Dyadic parse_capacity(const std::string& text);

/// One independent pool per condition, each with the same capacity.
class ConditionalKcBuilder {
 public:
  explicit ConditionalKcBuilder(Dyadic per_condition_capacity = Dyadic::one());

  /// Throws std::invalid_argument when the request carries no condition.
  std::optional<Bitstring> conditional_request(const Request& r);

  const std::map<Bitstring, KcBuilder>& pools() const { return pools_; }
  /// All grants across pools, in grant order.
  const std::vector<Grant>& grants() const { return grants_; }

 private:
  Dyadic capacity_;
  std::map<Bitstring, KcBuilder> pools_;
  std::vector<Grant> grants_;
};

/// Request-table machine for a granted stream. Entry i is given step cost
/// i + 1, so the compiled machine enumerates its domain in grant order.
MachineSpec compile(const std::vector<Grant>& grants);

/// Request-stream files: one request per line, "<output> <length> [<condition>]",
/// "-" for the empty word, '#' starts a comment.
std::vector<Request> parse_request_stream(std::istream& in, const std::string& origin);
void write_request_stream(std::ostream& out, const std::vector<Request>& requests);

struct KcFuzzOptions {
  std::uint64_t seed = 1;
  std::uint64_t streams = 10000;
  std::size_t max_length = 24;
  std::size_t max_requests = 1000;
  unsigned threads = 1;
};

struct KcFuzzReport {
  std::uint64_t streams = 0;
  std::uint64_t requests = 0;
  std::uint64_t granted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t exact_streams = 0;  // streams whose lengths partition the capacity exactly
  std::uint64_t failures = 0;
  std::string first_failure;  // "stream <i>: <reason>"
};

/// Seeded random request streams. Half the streams draw lengths freely (and
/// overflow), half are shuffled exact partitions of 1. Checks that a request
/// is granted iff 2^-length fits in the remaining capacity, that codewords
/// have the requested length, and the builder invariants after each stream.
/// Stream i depends only on (seed, i), so the report is thread-independent.
KcFuzzReport fuzz_kc(const KcFuzzOptions& opt);

}  // namespace klab
