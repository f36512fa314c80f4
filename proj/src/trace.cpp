#include "klab/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "klab/errors.hpp"

namespace klab {

namespace {

void check_field(const std::string& field) {
  if (field.find_first_of("\t\n") != std::string::npos) {
    throw std::invalid_argument("trace field contains a tab or newline: " + field);
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

void Trace::header(std::string key, std::string value) {
  check_field(key);
  check_field(value);
  headers_.emplace_back(std::move(key), std::move(value));
}

void Trace::add(std::uint64_t stage, std::string actor, std::string action, std::string operands,
                std::string ledger) {
  check_field(actor);
  check_field(action);
  check_field(operands);
  check_field(ledger);
  records_.push_back({stage, std::move(actor), std::move(action), std::move(operands), std::move(ledger)});
}

void Trace::audit(const std::string& invariant, bool passed, std::string ledger) {
  const std::uint64_t stage = records_.empty() ? 0 : records_.back().stage;
  add(stage, "audit", invariant, passed ? "pass" : "fail", std::move(ledger));
}

void Trace::write(std::ostream& out) const {
  for (const auto& [k, v] : headers_) out << "# " << k << '\t' << v << '\n';
  for (const auto& r : records_) {
    out << r.stage << '\t' << r.actor << '\t' << r.action << '\t' << r.operands << '\t' << r.ledger << '\n';
  }
}

std::string Trace::str() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

Trace Trace::read(std::istream& in, const std::string& origin) {
  Trace t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.rfind("# ", 0) == 0) {
      auto fields = split_tabs(line.substr(2));
      if (fields.size() != 2) throw MalformedSpec(where + "bad header line");
      t.headers_.emplace_back(fields[0], fields[1]);
      continue;
    }
    auto f = split_tabs(line);
    if (f.size() != 5) throw MalformedSpec(where + "expected 5 fields, got " + std::to_string(f.size()));
    TraceRecord r;
    try {
      std::size_t used = 0;
      r.stage = std::stoull(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument(f[0]);
    } catch (const std::exception&) {
      throw MalformedSpec(where + "bad stage '" + f[0] + "'");
    }
    r.actor = f[1];
    r.action = f[2];
    r.operands = f[3];
    r.ledger = f[4];
    t.records_.push_back(std::move(r));
  }
  return t;
}

Trace Trace::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read(in, path.string());
}

void Trace::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write(out);
}

bool InvariantReport::all_passed() const { return first_failure().empty(); }

std::string InvariantReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return c.name;
  }
  return {};
}

std::string InvariantReport::render() const {
  std::ostringstream os;
  for (const auto& c : checks) os << (c.passed ? "PASS " : "FAIL ") << c.name << ' ' << c.ledger << '\n';
  return os.str();
}

InvariantReport report_from_trace(const Trace& trace) {
  InvariantReport rep;
  for (const auto& r : trace.records()) {
    if (r.actor == "audit") rep.checks.push_back({r.action, r.operands == "pass", r.ledger});
  }
  return rep;
}

}  // namespace klab
