#pragma once

// Finite-scale profiles of conditional complexity. A limit supremum over an
// index range is read as the tail-max: the maximum over the trailing window
// of the index order (the top half unless configured otherwise).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "klab/bitstring.hpp"
#include "klab/dyadic.hpp"
#include "klab/engine.hpp"
#include "klab/registry.hpp"

namespace klab {

/// Profile values are signed so differences fit; nullopt is Infinity (or an
/// undefined difference) and compares above every finite value.
using ProfileValue = std::optional<std::int64_t>;

std::string render_profile_value(const ProfileValue& v);
ProfileValue from_complexity(const Complexity& c);

struct IndexSet {
  enum class Kind { kAll, kM, kN, kE, kExplicit };
  Kind kind = Kind::kAll;
  std::uint64_t n = 0;              // kAll: conditions 0..n-1 as words
  std::optional<std::uint64_t> stage;  // kM, kN: stage of M_s / N_s (full when absent)
  std::vector<std::uint64_t> script;   // kE: the enumeration (a_m)
  std::vector<Bitstring> list;         // kExplicit

  std::string describe() const;
};

struct ProfileRow {
  std::string index;  // decimal for numeric indices, token for strings
  Bitstring condition;
  ProfileValue value;
};

struct Profile {
  Bitstring subject;
  std::string index_set;
  std::uint64_t stage = 0;
  std::size_t window = 0;      // trailing rows in the tail
  std::size_t tail_start = 0;  // first row of the tail
  std::vector<ProfileRow> rows;
  ProfileValue tail_max;
  ProfileValue full_max;
  std::vector<std::string> argmax;  // indices attaining full_max

  bool empty() const { return rows.empty(); }
};

/// Fills tail and argmax statistics from `rows`. window = 0 means the top
/// half, ⌈size/2⌉ rows; a window larger than the row count covers all rows.
void compute_statistics(Profile& p, std::size_t window);

/// Nondeficiency indices of a finite enumeration: m with a_m < a_n for every
/// later n. Throws ConfigError unless the script is injective.
std::vector<std::uint64_t> nondeficient_indices(const std::vector<std::uint64_t>& script);

/// Conditions of `index` in profile order. IndexOutOfScale when the set lists
/// more than 2^16 conditions or an index word exceeds the bounded universe.
std::vector<ProfileRow> index_conditions(const ComplexityEngine& engine, const IndexSet& index);

Profile limsup_profile(const ComplexityEngine& engine, const Bitstring& sigma, const IndexSet& index,
                       std::uint64_t stage, std::size_t window = 0);

struct JumpReport {
  Profile jump;    // K(⟨σ,n⟩) - K(n) for n < N
  Profile by_nstar;  // K(σ | n*) over the same n
  ProfileValue spread;  // max |jump(n) - K(σ|n*)| over rows where both are finite
};

JumpReport jump_profile(const ComplexityEngine& engine, const Bitstring& sigma, std::uint64_t N,
                        std::size_t window = 0);

/// Inner profiles over m < M of K(⟨⟨σ,n⟩,m⟩) - K(m), one per n < N; the
/// outer profile lists the inner tail-maxes. A finite-scale proxy, not the
/// limit object. ScaleExceeded when N·M > 2^16.
struct DoubleJumpReport {
  std::vector<Profile> inner;
  Profile outer;
};

DoubleJumpReport double_jump_profile(const ComplexityEngine& engine, const Bitstring& sigma, std::uint64_t N,
                                     std::uint64_t M, std::size_t window = 0);

struct TrueStageReport {
  std::vector<std::uint64_t> e;
  Profile over_e;
  Profile over_all;
};

TrueStageReport true_stage_profile(const ComplexityEngine& engine, const Bitstring& sigma,
                                   const std::vector<std::uint64_t>& script, std::size_t window = 0);

/// ρ = u(k) ⌢ (1 u(σ) for σ ∈ D in length-lexicographic order) ⌢ 0, with u
/// the self-delimiting code and k written as its word. Injective on (D, k).
Bitstring encode_dk(const std::vector<Bitstring>& d, std::uint64_t k);
/// Inverse of encode_dk; nullopt when `rho` is not an encoding.
std::optional<std::pair<std::vector<Bitstring>, std::uint64_t>> decode_dk(const Bitstring& rho);

struct ECompressRow {
  Bitstring sigma;
  std::uint32_t k = kInfinity;
  std::uint32_t k_given_rho = kInfinity;
  bool in_d = false;
  bool ok = true;  // K(σ|ρ) <= K(σ) - e, vacuous for σ ∈ D
};

struct ECompressResult {
  unsigned e = 0;
  unsigned c = 0;  // length of the conditional Kraft-Chaitin slot prefix
  Bitstring slot_prefix;
  std::vector<Bitstring> d;
  std::uint64_t k = 0;
  Bitstring rho;
  Dyadic total_mass;  // Σ 2^-K(σ) over all outputs
  Dyadic residual;    // Σ over σ ∉ D
  Dyadic threshold;   // 2^-(e+c+1)
  Registry registry;  // the base registry with the slot mounted
  std::vector<ECompressRow> rows;
  std::size_t failures = 0;
  std::size_t k_changed = 0;  // outputs whose K moved when the slot was mounted
};

/// Mounts a conditional Kraft-Chaitin slot with prefix 1^i 0 (i = slot count,
/// so c = i + 1), picks D greedily by largest mass 2^-K(σ) (ties in
/// length-lexicographic order) until the residual mass drops below
/// 2^-(e+c+1), and requests (σ, K(σ) - (e+c)) under condition ⟨D, e+c⟩ for
/// σ ∉ D. Verifies K(σ|ρ) <= K(σ) - e over every output at scale.
/// ScaleExceeded when D would have to contain every output.
ECompressResult e_compressing_search(const ComplexityEngine& engine, unsigned e, unsigned threads = 1);

/// Stage assignment h for F(n) = K_{h(n)}(n).
struct StageAssignment {
  enum class Kind { kFull, kZero, kIdentity, kLinear };
  Kind kind = Kind::kFull;
  std::uint64_t slope = 1;
  std::uint64_t offset = 0;

  std::uint64_t at(std::uint64_t n, std::uint64_t full_stage) const;
  std::string describe() const;
};

struct SolovayRow {
  std::uint64_t n = 0;
  std::uint64_t stage = 0;
  std::uint32_t f = kInfinity;
  std::uint32_t k = kInfinity;
  bool hit = false;
};

struct SolovayReport {
  std::string h;
  std::vector<SolovayRow> rows;
  std::size_t hits = 0;
  std::size_t violations = 0;  // F(n) < K(n)
  double density() const { return rows.empty() ? 0.0 : static_cast<double>(hits) / rows.size(); }
};

SolovayReport solovay_hitting(const ComplexityEngine& engine, const StageAssignment& h, std::uint64_t N);

struct CrossMachineRow {
  Bitstring output;
  std::uint32_t k_a = kInfinity;
  std::uint32_t k_b = kInfinity;
};

struct CrossMachineReport {
  std::vector<CrossMachineRow> rows;  // outputs coded by both machines
  std::uint32_t c = 0;                // max |K_A - K_B|
  std::size_t only_a = 0, only_b = 0;
  Profile over_m_a;  // K_A(σ|τ) for τ ∈ M_A
  Profile over_n_b;  // K_B(σ|τ) for τ ∈ N_B
};

CrossMachineReport cross_machine_audit(const ComplexityEngine& a, const ComplexityEngine& b,
                                       const Bitstring& sigma, std::size_t window = 0);

/// CSV rendering: provenance lines start with '#'; data rows follow a header.
std::string profile_csv(const Profile& p, const std::vector<std::pair<std::string, std::string>>& provenance);
/// Gnuplot script plotting column `column` of `csv_name` against the row.
std::string gnuplot_script(const std::string& csv_name, const std::string& title, int column,
                           const std::string& ylabel);

}  // namespace klab
