#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "klab/bitstring.hpp"
#include "klab/machine.hpp"

namespace klab {

/// Stage schedule: a pointwise-monotone map stage ↦ (length bound, step
/// bound) that reaches the full budget (L, S) and stays there.
///
/// kLinear interpolates from (0, 0) at stage 0 to (L, S) at `full_stage`
/// using floor(L·s / full_stage). kExplicit is a step function through the
/// listed breakpoints; stages before the first breakpoint have (0, 0).
/// kSteps admits every length from stage 1 on and interpolates only the step
/// bound, floor(S·s / full_stage); with S = full_stage a program's step count
/// is its discovery stage.
class Schedule {
 public:
  struct Point {
    std::uint64_t stage = 0;
    std::size_t length = 0;
    std::uint64_t steps = 0;
    friend bool operator==(const Point&, const Point&) = default;
  };

  static Schedule linear(std::uint64_t full_stage);
  static Schedule explicit_points(std::vector<Point> points);
  static Schedule steps(std::uint64_t full_stage);

  bool is_linear() const { return linear_; }
  bool steps_only() const { return steps_only_; }
  std::uint64_t full_stage() const { return full_stage_; }
  const std::vector<Point>& points() const { return points_; }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  bool linear_ = true;
  bool steps_only_ = false;
  std::uint64_t full_stage_ = 0;
  std::vector<Point> points_;
};

class ExecutionBudget {
 public:
  ExecutionBudget() = default;
  /// Throws MalformedSpec if an explicit schedule is not monotone or does
  /// not end at (max_length, max_steps).
  ExecutionBudget(std::size_t max_length, std::uint64_t max_steps, Schedule schedule);

  std::size_t max_length() const { return max_length_; }
  std::uint64_t max_steps() const { return max_steps_; }
  const Schedule& schedule() const { return schedule_; }
  RunBudget full() const { return {max_length_, max_steps_}; }

  /// (length bound, step bound) in force at stage s.
  RunBudget at_stage(std::uint64_t s) const;
  /// First stage at which the budget admits the given length and step count;
  /// nullopt when the full budget does not.
  std::optional<std::uint64_t> discovery_stage(std::size_t length, std::uint64_t steps) const;
  /// First stage at which the full budget is in force.
  std::uint64_t saturation_stage() const;

  friend bool operator==(const ExecutionBudget&, const ExecutionBudget&) = default;

 private:
  std::size_t max_length_ = 0;
  std::uint64_t max_steps_ = 0;
  Schedule schedule_ = Schedule::linear(0);
};

/// A component machine mounted under a framing prefix.
struct Slot {
  std::string name;
  Bitstring prefix;
  MachineSpec spec;
};

/// Slot table defining the universal prefix-free machine U (`slots`) and the
/// plain machine V (`plain_slots`). Program p = prefix ⌢ τ dispatches the
/// slot owning that prefix on τ.
struct Registry {
  int version = 1;
  ExecutionBudget budget;
  std::vector<Slot> slots;
  std::vector<Slot> plain_slots;

  /// Adds `spec` under the default framing 1^e 0 for e = current slot count.
  Slot& add_slot(std::string name, MachineSpec spec);
  Slot& add_plain_slot(std::string name, MachineSpec spec);

  /// Throws MalformedSpec unless slot prefixes form an antichain and every
  /// U slot is prefix-free.
  void validate() const;

  /// Canonical JSON form (payload files inlined).
  nlohmann::json to_json() const;
  /// FNV-1a 64 over to_json().dump(), as 16 lowercase hex digits.
  std::string hash() const;
};

/// Runs the framed machine over `slots`.
std::optional<Halt> run_framed(const std::vector<Slot>& slots, const Bitstring& program,
                               const std::optional<Bitstring>& condition, const RunBudget& budget);

nlohmann::json spec_to_json(const MachineSpec& spec);
/// `base_dir` resolves request-table "file" references.
MachineSpec spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

Registry registry_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
Registry load_registry(const std::filesystem::path& path);
/// A registry given in a config document either inline (object) or as a
/// path relative to `base_dir` (string).
Registry resolve_registry(const nlohmann::json& value, const std::filesystem::path& base_dir);

/// Request-table payload files: one entry per line,
///   <codeword> <output> [cond=<bits>] [steps=<n>]
/// with "-" for the empty word and '#' starting a comment.
std::vector<TableEntry> read_table_payload(const std::filesystem::path& path);
std::vector<TableEntry> parse_table_payload(std::istream& in, const std::string& origin);
void write_table_payload(std::ostream& out, const std::vector<TableEntry>& entries);

std::string fnv1a64_hex(const std::string& data);

}  // namespace klab
