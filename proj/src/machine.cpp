#include "klab/machine.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "klab/blc.hpp"
#include "klab/errors.hpp"

namespace klab {

namespace {

const std::vector<TableEntry> kNoEntries;

struct KindName {
  MachineKind kind;
  const char* name;
};
constexpr KindName kKindNames[] = {
    {MachineKind::kLiteralUnary, "literal-unary"},
    {MachineKind::kCopyCondition, "copy-condition"},
    {MachineKind::kRequestTable, "request-table"},
    {MachineKind::kExternalInterpreter, "external-interpreter"},
    {MachineKind::kCompositePrefix, "composite-prefix"},
    {MachineKind::kPlainIdentity, "plain-identity"},
};

void check_antichain(const std::vector<const Bitstring*>& words, const std::string& what) {
  std::vector<const Bitstring*> sorted = words;
  std::sort(sorted.begin(), sorted.end(),
            [](const Bitstring* a, const Bitstring* b) { return a->str() < b->str(); });
  // In plain lexicographic order a prefix sorts immediately before some
  // extension of it, so checking neighbours suffices.
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1]->is_prefix_of(*sorted[i])) {
      throw MalformedSpec(what + ": codeword " + sorted[i - 1]->token() +
                          " is a prefix of " + sorted[i]->token());
    }
  }
}

}  // namespace

const char* kind_name(MachineKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "?";
}

MachineKind kind_from_name(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw MalformedSpec("unknown machine kind '" + name + "'");
}

MachineSpec MachineSpec::literal_unary() {
  MachineSpec s;
  s.kind_ = MachineKind::kLiteralUnary;
  return s;
}

MachineSpec MachineSpec::copy_condition() {
  MachineSpec s;
  s.kind_ = MachineKind::kCopyCondition;
  return s;
}

MachineSpec MachineSpec::plain_identity() {
  MachineSpec s;
  s.kind_ = MachineKind::kPlainIdentity;
  return s;
}

MachineSpec MachineSpec::request_table(std::vector<TableEntry> entries) {
  auto table = std::make_shared<Table>();
  table->entries = std::move(entries);

  std::vector<const Bitstring*> unconditional;
  std::map<Bitstring, std::vector<const Bitstring*>> per_condition;
  for (std::size_t i = 0; i < table->entries.size(); ++i) {
    const TableEntry& e = table->entries[i];
    table->by_codeword[e.codeword].push_back(i);
    if (e.condition) {
      table->conditional = true;
      per_condition[*e.condition].push_back(&e.codeword);
    } else {
      unconditional.push_back(&e.codeword);
    }
  }
  check_antichain(unconditional, "request-table");
  for (auto& [cond, words] : per_condition) {
    std::vector<const Bitstring*> all = unconditional;
    all.insert(all.end(), words.begin(), words.end());
    check_antichain(all, "request-table under condition " + cond.token());
  }

  MachineSpec s;
  s.kind_ = MachineKind::kRequestTable;
  s.table_ = std::move(table);
  return s;
}

MachineSpec MachineSpec::interpreter(std::string name) {
  if (name != "blc") throw MalformedSpec("unknown interpreter '" + name + "'");
  MachineSpec s;
  s.kind_ = MachineKind::kExternalInterpreter;
  s.interpreter_ = std::move(name);
  return s;
}

MachineSpec MachineSpec::composite(Bitstring prefix, MachineSpec inner) {
  MachineSpec s;
  s.kind_ = MachineKind::kCompositePrefix;
  s.prefix_ = std::move(prefix);
  s.inner_ = std::make_shared<const MachineSpec>(std::move(inner));
  return s;
}

const std::vector<TableEntry>& MachineSpec::entries() const {
  return table_ ? table_->entries : kNoEntries;
}

bool MachineSpec::prefix_free() const {
  switch (kind_) {
    case MachineKind::kPlainIdentity:
      return false;
    case MachineKind::kCompositePrefix:
      return inner_->prefix_free();
    default:
      return true;
  }
}

bool MachineSpec::reads_condition() const {
  switch (kind_) {
    case MachineKind::kCopyCondition:
    case MachineKind::kExternalInterpreter:
      return true;
    case MachineKind::kRequestTable:
      return table_ && table_->conditional;
    case MachineKind::kCompositePrefix:
      return inner_->reads_condition();
    default:
      return false;
  }
}

std::vector<const TableEntry*> MachineSpec::lookup(const Bitstring& codeword) const {
  std::vector<const TableEntry*> out;
  if (!table_) return out;
  auto it = table_->by_codeword.find(codeword);
  if (it == table_->by_codeword.end()) return out;
  for (std::size_t i : it->second) out.push_back(&table_->entries[i]);
  return out;
}

std::optional<Halt> run_machine(const MachineSpec& spec, const Bitstring& program,
                                const std::optional<Bitstring>& condition, const RunBudget& budget) {
  if (program.size() > budget.max_length) return std::nullopt;
  std::optional<Halt> result;
  switch (spec.kind()) {
    case MachineKind::kLiteralUnary: {
      std::size_t pos = 0;
      auto x = read_self_delimited(program, pos);
      if (x && pos == program.size()) result = Halt{*x, program.size()};
      break;
    }
    case MachineKind::kCopyCondition:
      if (condition && program == Bitstring("0")) result = Halt{*condition, 1};
      break;
    case MachineKind::kPlainIdentity:
      result = Halt{program, std::max<std::uint64_t>(1, program.size())};
      break;
    case MachineKind::kRequestTable:
      for (const TableEntry* e : spec.lookup(program)) {
        if (e->condition && e->condition != condition) continue;
        result = Halt{e->output, e->cost()};
        break;
      }
      break;
    case MachineKind::kExternalInterpreter: {
      auto term = blc::parse_closed(program);
      if (!term) break;
      auto outcome = blc::run(*term, condition, blc::Limits{budget.max_steps});
      if (outcome) result = Halt{outcome->output, outcome->steps};
      break;
    }
    case MachineKind::kCompositePrefix: {
      if (!spec.prefix().is_prefix_of(program)) break;
      RunBudget inner_budget = budget;
      inner_budget.max_length = budget.max_length - spec.prefix().size();
      result = run_machine(spec.inner(), program.substr(spec.prefix().size()), condition,
                           inner_budget);
      break;
    }
  }
  if (result && result->steps > budget.max_steps) return std::nullopt;
  return result;
}

void generate_domain(const MachineSpec& spec, std::size_t length, std::uint64_t max_steps,
                     const std::optional<Bitstring>& condition, std::vector<DomainPoint>& out) {
  switch (spec.kind()) {
    case MachineKind::kLiteralUnary: {
      if (length % 2 == 0 || length > 125) return;
      const std::size_t k = (length - 1) / 2;
      if (length > max_steps) return;
      const Bitstring header = self_delimit(Bitstring());  // "0"
      const Bitstring ones = Bitstring::repeat('1', k);
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << k); ++v) {
        Bitstring x;
        for (std::size_t i = k; i-- > 0;) x.push_back(((v >> i) & 1u) != 0);
        out.push_back({ones + header + x, x, length});
      }
      break;
    }
    case MachineKind::kCopyCondition:
      if (length == 1 && condition && max_steps >= 1) out.push_back({Bitstring("0"), *condition, 1});
      break;
    case MachineKind::kPlainIdentity: {
      if (length > 62) throw MalformedSpec("plain-identity: length too large to enumerate");
      const std::uint64_t cost = std::max<std::uint64_t>(1, length);
      if (cost > max_steps) return;
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << length); ++v) {
        Bitstring x;
        for (std::size_t i = length; i-- > 0;) x.push_back(((v >> i) & 1u) != 0);
        out.push_back({x, x, cost});
      }
      break;
    }
    case MachineKind::kRequestTable: {
      // Conditional entries shadow nothing: per condition the table is an
      // antichain, so at most one entry fires for a codeword.
      std::set<Bitstring> seen;
      for (const TableEntry& e : spec.entries()) {
        if (e.codeword.size() != length) continue;
        if (e.condition && e.condition != condition) continue;
        if (e.cost() > max_steps) continue;
        if (!seen.insert(e.codeword).second) continue;
        out.push_back({e.codeword, e.output, e.cost()});
      }
      break;
    }
    case MachineKind::kExternalInterpreter: {
      for (const auto& [bits, term] : blc::closed_terms_of_length(length)) {
        auto outcome = blc::run(term, condition, blc::Limits{max_steps});
        if (outcome) out.push_back({bits, outcome->output, outcome->steps});
      }
      break;
    }
    case MachineKind::kCompositePrefix: {
      const std::size_t p = spec.prefix().size();
      if (length < p) return;
      std::vector<DomainPoint> inner;
      generate_domain(spec.inner(), length - p, max_steps, condition, inner);
      for (auto& pt : inner) out.push_back({spec.prefix() + pt.program, std::move(pt.output), pt.steps});
      break;
    }
  }
}

}  // namespace klab
