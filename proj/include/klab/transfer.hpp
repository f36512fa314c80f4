#pragma once

// Request transfer along a semi-low set. A_n = {(σ, s) : K(σ|n) ≤ s ≤ smax}
// is the request set generating K(·|n). A listing of pairs (σ, s) is walked
// round by round; a pair is added to B unless some n ∈ X in the current
// window would then see wt(B ∪ A_n) > 2.
//
// At scale the universe is n < N. The window of round r is n ≥ θ_r with
// θ_r = min(H, ⌊r·H/(R-1)⌋), H = ⌊N/2⌋, so the last round tests exactly the
// tail [H, N) over which tail-max is taken.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "klab/dyadic.hpp"
#include "klab/engine.hpp"
#include "klab/registry.hpp"
#include "klab/trace.hpp"

namespace klab {

struct TransferConfig {
  Registry registry;
  std::uint64_t universe = 16;  // conditions n < universe
  /// X as a subset of the universe; all of it when absent.
  std::optional<std::vector<std::uint64_t>> x;
  unsigned rounds = 3;
  /// Largest s listed; 0 means the largest finite tail-max.
  std::uint32_t smax = 0;
};

nlohmann::json transfer_config_to_json(const TransferConfig& cfg);
TransferConfig transfer_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct TransferPair {
  Bitstring sigma;
  std::uint32_t s = 0;
  friend auto operator<=>(const TransferPair&, const TransferPair&) = default;
};

/// Answers "X ∩ W_e(D, θ) ≠ ∅" for the candidate D = B ∪ {pair}. Supplied
/// answers are checked against direct evaluation (OracleInconsistent).
using TransferOracle = std::function<bool(const TransferPair& pair, std::uint64_t theta)>;

struct TransferRun {
  TransferConfig config;
  std::vector<std::uint64_t> x;
  std::uint32_t smax = 0;
  std::uint64_t tail_start = 0;
  std::vector<Bitstring> outputs;
  std::vector<Dyadic> wt_a;  // per n
  std::vector<TransferPair> b;
  Dyadic wt_b;
  Dyadic max_window_weight;  // max over steps and n in the window of wt(B ∪ A_n)
  std::map<Bitstring, std::optional<std::uint32_t>> tail_max;  // over X ∩ [H, N)
  std::uint64_t listing_length = 0;
  Trace trace;
};

TransferRun semilow_transfer(const TransferConfig& cfg, const ComplexityEngine& engine,
                             const TransferOracle& oracle = {});

void transfer_audit(TransferRun& run);

}  // namespace klab
