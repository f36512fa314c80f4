#pragma once

// Priority construction of a semi-low set of minimal codes. U runs a base
// machine V under "000" and a Kraft-Chaitin machine Q under "1". Strategies
// R_0, P_0, R_1, P_1, ... claim strings of N_s; every first claim of σ puts
// a fresh value k on a Q-code of length |σ| - 1, so the claimed minimal code
// is replaced by one no longer than it.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "klab/dynamic.hpp"
#include "klab/dyadic.hpp"
#include "klab/kc.hpp"
#include "klab/registry.hpp"
#include "klab/trace.hpp"

namespace klab {

/// A toy c.e. set of strings with a stage enumeration.
struct WSet {
  enum class Kind { kEmpty, kAll, kResidue, kExplicit };
  Kind kind = Kind::kEmpty;
  std::uint64_t modulus = 1;
  std::uint64_t residue = 0;
  std::uint64_t from_stage = 0;
  std::map<Bitstring, std::uint64_t> members;  // explicit: string -> entry stage

  bool contains(const Bitstring& s, std::uint64_t stage) const;
  nlohmann::json to_json() const;
  static WSet from_json(const nlohmann::json& j);
};

struct PriorityConfig {
  Registry v;
  std::vector<WSet> w;  // W_e beyond the list is empty
  unsigned requirements = 10;
  std::uint64_t stages = 10000;
  std::uint64_t window = 1000;
};

nlohmann::json priority_config_to_json(const PriorityConfig& cfg);
PriorityConfig priority_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Seeded base machine whose minimal codes churn: `outputs` outputs receive a
/// code at a random stage, and some later receive a shorter one. Codes come
/// from a Kraft-Chaitin builder; requests that would overflow are dropped.
Registry make_churn_registry(std::uint64_t seed, std::size_t outputs, std::uint64_t stages,
                             std::size_t min_length, std::size_t max_length);

enum class Directive { kAvoid, kMeet };

struct StrategyState {
  bool is_r = false;
  unsigned index = 0;  // e for R_e, n for P_n
  std::set<Bitstring> claims;
  Directive directive = Directive::kAvoid;
  bool considered = false;
  std::uint64_t last_change = 0;  // directive change (R) or claim change (P)
  std::vector<std::pair<std::uint64_t, Directive>> directive_log;

  std::size_t floor() const { return 2 * index + 4; }
  std::string name() const { return (is_r ? "R" : "P") + std::to_string(index); }
};

struct PriorityCounters {
  std::uint64_t stages = 0;
  std::uint64_t w_bound_violations = 0;
  std::uint64_t single_claimer_violations = 0;
  std::uint64_t floor_violations = 0;
  std::uint64_t flip_violations = 0;  // meet -> avoid without total loss of claims
  Dyadic max_ever_claimed;
  std::vector<Dyadic> max_w;  // per R_e
};

struct PriorityRun {
  PriorityConfig config;
  std::vector<StrategyState> strategies;  // in priority order
  DynamicDomain domain;
  std::set<Bitstring> n_set;  // N at the last stage
  std::map<Bitstring, std::size_t> highest_claimer;
  std::map<Bitstring, std::size_t> owner;
  Dyadic ever_claimed;
  std::vector<Grant> q_grants;
  std::uint64_t last_stage = 0;
  PriorityCounters counters;
  std::set<Bitstring> x;
  Trace trace;
};

/// BudgetViolation if the ever-claimed weight would exceed 1/2.
PriorityRun priority_construct(const PriorityConfig& cfg, unsigned threads = 1);

struct SemilowAnswer {
  bool intersects = false;
  std::uint64_t settled_at = 0;
};

/// Finite-trace decision of X ∩ W_e ≠ ∅. Unsettled when the relevant
/// strategies changed within the last `window` stages.
SemilowAnswer semilow_answer(const PriorityRun& run, unsigned e);

/// X ∩ W_e ≠ ∅ by direct inspection of the final X.
bool x_meets_w(const PriorityRun& run, unsigned e);

void priority_audit(PriorityRun& run, unsigned answer_up_to);

}  // namespace klab
