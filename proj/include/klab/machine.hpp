#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "klab/bitstring.hpp"

namespace klab {

enum class MachineKind {
  kLiteralUnary,         // 1^k 0 x  ↦ x   (|x| = k)
  kCopyCondition,        // "0"      ↦ condition
  kRequestTable,         // codeword ↦ output, from a compiled request stream
  kExternalInterpreter,  // named interpreter; "blc" is built in
  kCompositePrefix,      // prefix τ ↦ inner(τ)
  kPlainIdentity,        // τ ↦ τ; plain machines only (not prefix-free)
};

const char* kind_name(MachineKind kind);
MachineKind kind_from_name(const std::string& name);

/// One row of a request-table machine. An entry with a condition only fires
/// when the run is given exactly that condition.
struct TableEntry {
  Bitstring codeword;
  Bitstring output;
  std::optional<Bitstring> condition;
  std::uint64_t steps = 0;  // 0 means "use max(1, |codeword|)"

  std::uint64_t cost() const {
    return steps != 0 ? steps : std::max<std::uint64_t>(1, codeword.size());
  }
  friend bool operator==(const TableEntry&, const TableEntry&) = default;
};

/// Declarative description of a component machine. Immutable once built;
/// copies share the request-table index and the composite inner spec.
class MachineSpec {
 public:
  static MachineSpec literal_unary();
  static MachineSpec copy_condition();
  static MachineSpec plain_identity();
  /// Validates that the codewords are prefix-free per condition.
  static MachineSpec request_table(std::vector<TableEntry> entries);
  static MachineSpec interpreter(std::string name);
  static MachineSpec composite(Bitstring prefix, MachineSpec inner);

  MachineKind kind() const { return kind_; }
  const std::vector<TableEntry>& entries() const;
  const std::string& interpreter_name() const { return interpreter_; }
  const Bitstring& prefix() const { return prefix_; }
  const MachineSpec& inner() const { return *inner_; }

  bool prefix_free() const;
  /// False when the output never depends on the condition channel.
  bool reads_condition() const;

  /// Entries whose codeword equals `codeword` (any condition).
  std::vector<const TableEntry*> lookup(const Bitstring& codeword) const;

 private:
  struct Table {
    std::vector<TableEntry> entries;
    std::unordered_map<Bitstring, std::vector<std::size_t>> by_codeword;
    bool conditional = false;
  };

  MachineKind kind_ = MachineKind::kLiteralUnary;
  std::shared_ptr<const Table> table_;
  std::string interpreter_;
  Bitstring prefix_;
  std::shared_ptr<const MachineSpec> inner_;
};

/// A machine that halted: output and the number of steps it took.
struct Halt {
  Bitstring output;
  std::uint64_t steps = 0;
};

/// Bounded execution resources. "Diverge" means no halt within max_steps, or a
/// program longer than max_length.
struct RunBudget {
  std::size_t max_length = 0;
  std::uint64_t max_steps = 0;
};

/// Runs `spec` on `program`. Deterministic. nullopt is Diverge.
std::optional<Halt> run_machine(const MachineSpec& spec, const Bitstring& program,
                                const std::optional<Bitstring>& condition, const RunBudget& budget);

/// A halting program produced by a domain generator.
struct DomainPoint {
  Bitstring program;
  Bitstring output;
  std::uint64_t steps = 0;
};

/// Appends every program of exactly `length` bits on which `spec` halts
/// within `max_steps`. Generates the domain directly rather than by trying
/// every word; run_machine is the reference semantics it must agree with.
void generate_domain(const MachineSpec& spec, std::size_t length, std::uint64_t max_steps,
                     const std::optional<Bitstring>& condition, std::vector<DomainPoint>& out);

}  // namespace klab
