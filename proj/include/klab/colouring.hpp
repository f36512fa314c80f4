#pragma once

// Colouring reduction: codes a toy c.e. target into the minimal-code set of
// a machine by colouring its domain and, when an element enters the target,
// invalidating one small colour through shorter codes in an ε-budget slot.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "klab/dynamic.hpp"
#include "klab/dyadic.hpp"
#include "klab/kc.hpp"
#include "klab/registry.hpp"
#include "klab/trace.hpp"

namespace klab {

struct ColouringConfig {
  Registry base;
  /// target[n] = stage t ≥ 1 at which n enters, or nullopt if never.
  std::vector<std::optional<std::uint64_t>> target;
  /// Budget of the invalidation requests; at most 2^-|ρ| for the slot prefix ρ.
  Dyadic epsilon = Dyadic::pow2_neg(2);
  /// Last stage simulated; 0 means the base saturation stage.
  std::uint64_t stages = 0;
};

nlohmann::json colouring_config_to_json(const ColouringConfig& cfg);
ColouringConfig colouring_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// One request-table slot holding `codes` codes of `program_length` bits with
/// pairwise distinct outputs, discovered evenly over stages 1..stages.
Registry make_fresh_code_registry(std::size_t codes, std::size_t program_length, std::uint64_t stages);

/// Least k with 1/k < 2^-(n+2)·ε.
std::uint64_t minimal_colour_count(const Dyadic& epsilon, unsigned n);

struct ColouringState {
  unsigned n = 0;
  std::uint64_t k = 0;
  std::vector<std::int32_t> colour;  // per domain entry; -1 = uncoloured
  std::vector<Dyadic> weight;        // per colour
  std::vector<std::optional<std::uint64_t>> large_since;
  std::optional<std::uint32_t> invalidated_colour;
  std::uint64_t min_small_count = 0;
};

struct Invalidation {
  unsigned n = 0;
  std::uint64_t stage = 0;
  std::uint32_t colour = 0;
  Request request;  // (U(σ), |σ| - 1)
  Bitstring invalidated;
  Bitstring code;
};

struct ColouringRun {
  ColouringConfig config;
  Bitstring slot_prefix;  // ρ of the invalidation slot
  std::uint64_t last_stage = 0;
  DynamicDomain domain;
  std::vector<ColouringState> colourings;
  std::vector<Invalidation> log;
  Dyadic wt_a;
  Trace trace;
};

/// Runs every colouring (one per target element) over the growing domain.
/// BudgetViolation if the invalidation weight would exceed ε.
ColouringRun colouring_simulate(const ColouringConfig& cfg, unsigned threads = 1);

struct Recovery {
  bool bit = false;
  std::uint64_t stage = 0;
};

/// Decides target(n) from the final minimal-code set: the first stage t at
/// which every colour still small at t has a final member coloured by t.
/// NoSuchStage when no stage within the run qualifies.
Recovery colouring_recover(const ColouringRun& run, unsigned n);

/// Adds recovery records and the audit block to run.trace.
void colouring_audit(ColouringRun& run);

}  // namespace klab
