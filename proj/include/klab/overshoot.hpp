#pragma once

// Overshoot penalizer: every stage-s minimal code n*_s that is more than
// k + d bits longer than the final n* receives a code of length |n*_s| - d in
// an ε-budget slot, so weakly random strings cannot be such overshoots and
// |n*| ≥ |σ| - k - d can be read off any weakly random σ that was some n*_s.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "json.hpp"
#include "klab/dyadic.hpp"
#include "klab/engine.hpp"
#include "klab/registry.hpp"
#include "klab/trace.hpp"

namespace klab {

struct OvershootConfig {
  Registry base;
  unsigned d = 0;
  unsigned k = 0;
  /// Explicit X; when absent, X is every program that was ever some n*_s
  /// and satisfies K(σ) > |σ| - d in the final machine.
  std::optional<std::vector<Bitstring>> x;
};

nlohmann::json overshoot_config_to_json(const OvershootConfig& cfg);
OvershootConfig overshoot_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct OvershootRequest {
  Bitstring n;        // the output whose minimal code overshot
  Bitstring nstar_s;  // the overshooting code, now requested as an output
  std::uint64_t stage = 0;
  std::size_t length = 0;  // |n*_s| - d
  Bitstring code;          // granted program, slot prefix included

  friend bool operator==(const OvershootRequest& a, const OvershootRequest& b) {
    return a.n == b.n && a.nstar_s == b.nstar_s && a.stage == b.stage && a.length == b.length;
  }
};

struct OvershootInference {
  Bitstring sigma;
  Bitstring n;                    // σ was n*_s for this n
  std::int64_t inferred_min = 0;  // |σ| - k - d
  std::size_t actual = 0;         // |n*|
  bool in_final_n = false;
};

struct OvershootRun {
  OvershootConfig config;
  Bitstring slot_prefix;
  Dyadic epsilon;
  unsigned iterations = 0;
  std::vector<OvershootRequest> requests;
  Dyadic weight;
  std::map<Bitstring, Dyadic> weight_per_n;
  std::shared_ptr<const StageLedger> ledger;  // final machine, slot included
  std::vector<OvershootInference> inferences;
  Trace trace;
};

/// Iterates request rounds until the request set is stable (the granted codes
/// change the machine, hence n* and the overshoots). InvariantFailure if it
/// does not settle; BudgetViolation if the slot overflows.
OvershootRun overshoot_penalize(const OvershootConfig& cfg, unsigned threads = 1);

void overshoot_audit(OvershootRun& run);

}  // namespace klab
