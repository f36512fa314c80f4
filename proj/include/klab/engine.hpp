#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "klab/bitstring.hpp"
#include "klab/dyadic.hpp"
#include "klab/enumerate.hpp"
#include "klab/registry.hpp"

namespace klab {

inline constexpr std::uint32_t kInfinity = std::numeric_limits<std::uint32_t>::max();

/// A complexity value with the program witnessing it. Infinity is an
/// explicit value (no program found), never an omitted key.
struct Complexity {
  std::uint32_t value = kInfinity;
  Bitstring witness;

  bool finite() const { return value != kInfinity; }
  friend bool operator==(const Complexity&, const Complexity&) = default;
};

/// "inf" for Infinity, else the decimal value.
std::string render_value(std::uint32_t value);

struct ComplexityTable {
  std::uint64_t stage = 0;
  std::string machine;  // "U", "V"
  std::optional<Bitstring> condition;
  std::map<Bitstring, Complexity> entries;
};

/// M_s (programs of minimal length for their output) and N_s (first-found
/// minimal program per output) with the replacement history of every n*_s.
struct MinimalCodes {
  std::uint64_t stage = 0;
  std::set<Bitstring> M;
  std::map<Bitstring, Bitstring> N;  // output -> n*_s
  std::map<Bitstring, std::vector<Bitstring>> history;
};

struct SemimeasureTable {
  std::uint64_t stage = 0;
  std::map<Bitstring, Dyadic> Q;
  Dyadic omega;
};

/// Stagewise view of one machine's domain. Built from canonically ordered
/// halt events and immutable afterwards, so it can be shared across threads.
class StageLedger {
 public:
  struct Improvement {
    std::uint64_t stage;
    std::size_t event_index;
  };

  StageLedger() = default;
  /// Throws std::invalid_argument if `events` are not in canonical order.
  explicit StageLedger(std::vector<HaltEvent> events);

  const std::vector<HaltEvent>& events() const { return events_; }
  /// Number of events discovered by stage s.
  std::size_t count_through(std::uint64_t s) const;
  /// Stage of the last event (0 when empty).
  std::uint64_t last_stage() const { return events_.empty() ? 0 : events_.back().stage; }

  /// min |ρ| over events by stage s producing `output`.
  Complexity value(const Bitstring& output, std::uint64_t s) const;
  ComplexityTable table(std::uint64_t s) const;
  MinimalCodes minimal_codes(std::uint64_t s) const;
  SemimeasureTable semimeasure(std::uint64_t s) const;
  Dyadic omega(std::uint64_t s) const;

  /// Successive n*_s for `output` in discovery order (strictly shorter each
  /// time); empty when the output never appears.
  const std::vector<Improvement>& improvements(const Bitstring& output) const;
  /// Every output appearing in the ledger, in length-lexicographic order.
  std::vector<Bitstring> outputs() const;

 private:
  std::vector<HaltEvent> events_;
  std::vector<Dyadic> omega_prefix_;  // omega_prefix_[i] = Σ over events[0, i)
  std::unordered_map<Bitstring, std::vector<Improvement>> improvements_;
};

/// One row of a symmetry-of-information audit.
struct SoiRow {
  Bitstring sigma;
  std::uint64_t n = 0;
  std::uint32_t k_pair = kInfinity;
  std::uint32_t k_n = kInfinity;
  std::uint32_t k_sigma_given_nstar = kInfinity;
  std::optional<std::int64_t> deviation;  // K(⟨σ,n⟩) - K(n) - K(σ|n*)
};

struct SoiReport {
  std::vector<SoiRow> rows;
  std::optional<std::int64_t> min, max;
  std::int64_t spread() const { return (min && max) ? *max - *min : 0; }
};

struct CodingTheoremReport {
  /// max over σ of K(σ) - ⌈-log2 Q(σ)⌉, and the σ attaining it first.
  std::int64_t max_gap = 0;
  std::int64_t min_gap = 0;
  Bitstring argmax;
  std::size_t outputs = 0;
};

struct StageAuditReport {
  std::uint64_t stages_checked = 0;
  std::uint64_t k_monotone_violations = 0;
  std::uint64_t c_monotone_violations = 0;
  std::uint64_t omega_monotone_violations = 0;
  std::uint64_t omega_bound_violations = 0;
  std::uint64_t n_subset_m_violations = 0;
  std::uint64_t replacement_violations = 0;
  std::uint64_t kraft_violations = 0;
  std::uint64_t replacements_seen = 0;
  bool clean() const {
    return k_monotone_violations + c_monotone_violations + omega_monotone_violations +
               omega_bound_violations + n_subset_m_violations + replacement_violations +
               kraft_violations ==
           0;
  }
};

/// Exact complexity tables for a registry at its bounded scale.
///
/// The unconditional and plain domains are enumerated once; conditional
/// domains are enumerated per condition on first use and cached. Condition-
/// independent slots are shared between all conditional ledgers.
class ComplexityEngine {
 public:
  explicit ComplexityEngine(Registry registry, unsigned threads = 1);
  /// Rebuilds an engine from recorded events (see Snapshot). Conditional
  /// ledgers not supplied are enumerated on demand.
  ComplexityEngine(Registry registry, std::vector<HaltEvent> u_events, std::vector<HaltEvent> v_events,
                   std::map<Bitstring, std::vector<HaltEvent>> conditional_events, unsigned threads = 1);

  const Registry& registry() const { return registry_; }
  const std::string& registry_hash() const { return hash_; }
  /// Stage at which the full budget (L, S) is in force.
  std::uint64_t full_stage() const { return registry_.budget.saturation_stage(); }

  const StageLedger& u() const { return u_; }
  const StageLedger& v() const { return v_; }
  std::shared_ptr<const StageLedger> conditional(const Bitstring& condition) const;
  /// Conditions whose ledgers are currently cached, in order.
  std::vector<Bitstring> cached_conditions() const;

  Complexity k_at_stage(const Bitstring& sigma, std::uint64_t s) const { return u_.value(sigma, s); }
  Complexity k(const Bitstring& sigma) const { return k_at_stage(sigma, full_stage()); }
  Complexity cond_k_at_stage(const Bitstring& sigma, const Bitstring& tau, std::uint64_t s) const;
  Complexity cond_k(const Bitstring& sigma, const Bitstring& tau) const {
    return cond_k_at_stage(sigma, tau, full_stage());
  }
  Complexity c_at_stage(const Bitstring& sigma, std::uint64_t s) const { return v_.value(sigma, s); }
  Complexity c(const Bitstring& sigma) const { return c_at_stage(sigma, full_stage()); }

  MinimalCodes minimal_codes(std::uint64_t s) const { return u_.minimal_codes(s); }
  SemimeasureTable omega_and_semimeasure(std::uint64_t s) const { return u_.semimeasure(s); }

  /// K of the number n (via its length-lexicographic word) and n*.
  Complexity k_number(std::uint64_t n) const { return k(from_rank(n)); }

  SoiReport soi_audit(const std::vector<std::pair<Bitstring, std::uint64_t>>& sample) const;
  CodingTheoremReport coding_theorem_gap() const;
  /// max over ρ in the final M of |ρ| - K(ρ) over those ρ that are themselves
  /// coded at scale; the measured weak-randomness constant.
  std::int64_t weak_randomness_constant() const;

  /// Least m in [2^n, 2^{n+1}) with C(m) ≥ n. ScaleExceeded when the plain
  /// budget cannot certify C(m) ≥ n.
  std::uint64_t incompressible_witness(unsigned n) const;
  /// #{m ∈ [2^n, 2^{n+1}) : C(m) < n}.
  std::uint64_t count_compressible(unsigned n) const;

  /// Checks the stage invariants for every stage 0..last.
  StageAuditReport audit_stages(std::uint64_t last) const;

 private:
  std::shared_ptr<const StageLedger> build_conditional(const Bitstring& condition) const;

  Registry registry_;
  std::string hash_;
  unsigned threads_;
  StageLedger u_;
  StageLedger v_;
  std::vector<HaltEvent> independent_events_;
  bool has_condition_readers_ = false;
  mutable std::mutex cache_mu_;
  mutable std::map<Bitstring, std::shared_ptr<const StageLedger>> cache_;
};

}  // namespace klab
