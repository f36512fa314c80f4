#pragma once

// Append-only event logs for the construction simulators. One record per
// line, tab separated: stage, actor, action, operands, ledger. Header lines
// start with '#' and carry the run's provenance.
//
// Simulators finish a trace with "audit" records (actor "audit", action =
// invariant name, operands "pass" or "fail", ledger = the measured values),
// so the invariant report is a function of the trace alone and replaying a
// trace file reproduces it exactly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace klab {

struct TraceRecord {
  std::uint64_t stage = 0;
  std::string actor;
  std::string action;
  std::string operands;
  std::string ledger;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class Trace {
 public:
  void header(std::string key, std::string value);
  void add(std::uint64_t stage, std::string actor, std::string action, std::string operands = {},
           std::string ledger = {});
  void audit(const std::string& invariant, bool passed, std::string ledger);

  const std::vector<std::pair<std::string, std::string>>& headers() const { return headers_; }
  const std::vector<TraceRecord>& records() const { return records_; }

  void write(std::ostream& out) const;
  std::string str() const;
  /// Throws MalformedSpec on a malformed line.
  static Trace read(std::istream& in, const std::string& origin);
  static Trace load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> headers_;
  std::vector<TraceRecord> records_;
};

struct InvariantCheck {
  std::string name;
  bool passed = false;
  std::string ledger;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;

  bool all_passed() const;
  /// Name of the first failing check, or empty.
  std::string first_failure() const;
  /// "PASS <name> <ledger>" / "FAIL <name> <ledger>" lines.
  std::string render() const;
};

/// Collects the audit records of a trace, in order.
InvariantReport report_from_trace(const Trace& trace);

}  // namespace klab
