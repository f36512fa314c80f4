#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "klab/bitstring.hpp"
#include "klab/registry.hpp"

namespace klab {

inline constexpr std::uint64_t kAllStages = std::numeric_limits<std::uint64_t>::max();

/// "program enters the domain at `stage` with `output`".
struct HaltEvent {
  Bitstring program;
  std::optional<Bitstring> condition;
  Bitstring output;
  std::uint64_t stage = 0;
  std::uint64_t steps = 0;

  friend bool operator==(const HaltEvent&, const HaltEvent&) = default;
};

/// Canonical event order: stage, then length-lexicographic program order.
bool canonical_before(const HaltEvent& a, const HaltEvent& b);

struct EnumerateOptions {
  std::optional<Bitstring> condition;
  unsigned threads = 1;
  /// Skip slots whose output never depends on the condition.
  bool condition_readers_only = false;
};

/// Halt events of the framed machine over `slots` discovered by stage
/// `up_to`, in canonical order. The result for a smaller `up_to` is a prefix
/// of the result for a larger one, and it does not depend on `threads`.
std::vector<HaltEvent> enumerate_slots(const std::vector<Slot>& slots, const ExecutionBudget& budget,
                                       std::uint64_t up_to, const EnumerateOptions& options = {});

/// Domain of U (the registry's prefix-free slots).
std::vector<HaltEvent> enumerate_domain(const Registry& registry, std::uint64_t up_to,
                                        unsigned threads = 1);
/// Domain of the plain machine V.
std::vector<HaltEvent> enumerate_plain(const Registry& registry, std::uint64_t up_to,
                                       unsigned threads = 1);

}  // namespace klab
