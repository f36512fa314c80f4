#include "klab/registry.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "klab/errors.hpp"

namespace klab {

using nlohmann::json;

Schedule Schedule::linear(std::uint64_t full_stage) {
  Schedule s;
  s.linear_ = true;
  s.full_stage_ = full_stage;
  return s;
}

Schedule Schedule::explicit_points(std::vector<Point> points) {
  Schedule s;
  s.linear_ = false;
  s.points_ = std::move(points);
  s.full_stage_ = s.points_.empty() ? 0 : s.points_.back().stage;
  return s;
}

Schedule Schedule::steps(std::uint64_t full_stage) {
  Schedule s = linear(full_stage);
  s.steps_only_ = true;
  return s;
}

ExecutionBudget::ExecutionBudget(std::size_t max_length, std::uint64_t max_steps, Schedule schedule)
    : max_length_(max_length), max_steps_(max_steps), schedule_(std::move(schedule)) {
  if (!schedule_.is_linear()) {
    const auto& pts = schedule_.points();
    if (pts.empty()) throw MalformedSpec("explicit schedule has no points");
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].stage <= pts[i - 1].stage || pts[i].length < pts[i - 1].length ||
          pts[i].steps < pts[i - 1].steps) {
        throw MalformedSpec("explicit schedule is not monotone");
      }
    }
    if (pts.back().length != max_length_ || pts.back().steps != max_steps_) {
      throw MalformedSpec("explicit schedule does not end at the full budget");
    }
  }
}

RunBudget ExecutionBudget::at_stage(std::uint64_t s) const {
  if (schedule_.is_linear()) {
    const std::uint64_t end = schedule_.full_stage();
    if (s >= end) return full();
    const auto len = schedule_.steps_only()
                         ? (s == 0 ? 0 : max_length_)
                         : static_cast<std::size_t>((static_cast<unsigned __int128>(max_length_) * s) / end);
    const auto steps = static_cast<std::uint64_t>((static_cast<unsigned __int128>(max_steps_) * s) / end);
    return {len, steps};
  }
  RunBudget b{0, 0};
  for (const auto& p : schedule_.points()) {
    if (p.stage > s) break;
    b = {p.length, p.steps};
  }
  return b;
}

std::optional<std::uint64_t> ExecutionBudget::discovery_stage(std::size_t length,
                                                              std::uint64_t steps) const {
  if (length > max_length_ || steps > max_steps_) return std::nullopt;
  if (schedule_.is_linear()) {
    const std::uint64_t full = schedule_.full_stage();
    // least s with floor(bound·s/full) ≥ need, i.e. s ≥ ceil(need·full/bound)
    auto first = [full](std::uint64_t need, std::uint64_t bound) -> std::uint64_t {
      if (need == 0) return 0;
      const unsigned __int128 num = static_cast<unsigned __int128>(need) * full;
      return static_cast<std::uint64_t>((num + bound - 1) / bound);
    };
    const std::uint64_t by_length =
        schedule_.steps_only() ? (length == 0 && steps == 0 ? 0 : 1) : first(length, max_length_);
    return std::min(full, std::max(by_length, first(steps, max_steps_)));
  }
  if (length == 0 && steps == 0) return 0;
  for (const auto& p : schedule_.points()) {
    if (p.length >= length && p.steps >= steps) return p.stage;
  }
  return std::nullopt;
}

std::uint64_t ExecutionBudget::saturation_stage() const { return schedule_.full_stage(); }

Slot& Registry::add_slot(std::string name, MachineSpec spec) {
  slots.push_back({std::move(name), encode_slot(slots.size()), std::move(spec)});
  return slots.back();
}

Slot& Registry::add_plain_slot(std::string name, MachineSpec spec) {
  plain_slots.push_back({std::move(name), encode_slot(plain_slots.size()), std::move(spec)});
  return plain_slots.back();
}

namespace {

void check_slot_prefixes(const std::vector<Slot>& slots, const std::string& what) {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (std::size_t j = i + 1; j < slots.size(); ++j) {
      if (!slots[i].prefix.incomparable_with(slots[j].prefix)) {
        throw MalformedSpec(what + ": slot prefixes " + slots[i].prefix.token() + " and " +
                            slots[j].prefix.token() + " are comparable");
      }
    }
  }
}

Bitstring bits_from_json(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw MalformedSpec(std::string("missing string field '") + key + "'");
  }
  try {
    return Bitstring(j.at(key).get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw MalformedSpec(e.what());
  }
}

json slot_to_json(const Slot& slot) {
  json j = spec_to_json(slot.spec);
  j["name"] = slot.name;
  j["frame"] = slot.prefix.str();
  return j;
}

std::vector<Slot> slots_from_json(const json& arr, const std::filesystem::path& base_dir) {
  std::vector<Slot> out;
  if (!arr.is_array()) throw MalformedSpec("slot list must be an array");
  for (const auto& js : arr) {
    Slot slot;
    slot.name = js.value("name", std::string("slot") + std::to_string(out.size()));
    slot.prefix = js.contains("frame") ? bits_from_json(js, "frame") : encode_slot(out.size());
    slot.spec = spec_from_json(js, base_dir);
    out.push_back(std::move(slot));
  }
  return out;
}

}  // namespace

void Registry::validate() const {
  check_slot_prefixes(slots, "universal machine");
  check_slot_prefixes(plain_slots, "plain machine");
  for (const auto& slot : slots) {
    if (!slot.spec.prefix_free()) {
      throw MalformedSpec("slot '" + slot.name + "' is not prefix-free and cannot be mounted in U");
    }
  }
}

json Registry::to_json() const {
  json j;
  j["version"] = version;
  j["budget"] = {{"max_length", budget.max_length()}, {"max_steps", budget.max_steps()}};
  const Schedule& sch = budget.schedule();
  if (sch.is_linear()) {
    j["schedule"] = {{"kind", sch.steps_only() ? "steps" : "linear"}, {"full_stage", sch.full_stage()}};
  } else {
    json pts = json::array();
    for (const auto& p : sch.points()) pts.push_back({p.stage, p.length, p.steps});
    j["schedule"] = {{"kind", "explicit"}, {"points", pts}};
  }
  j["slots"] = json::array();
  for (const auto& s : slots) j["slots"].push_back(slot_to_json(s));
  j["plain_slots"] = json::array();
  for (const auto& s : plain_slots) j["plain_slots"].push_back(slot_to_json(s));
  return j;
}

std::string Registry::hash() const { return fnv1a64_hex(to_json().dump()); }

std::optional<Halt> run_framed(const std::vector<Slot>& slots, const Bitstring& program,
                               const std::optional<Bitstring>& condition, const RunBudget& budget) {
  if (program.size() > budget.max_length) return std::nullopt;
  for (const auto& slot : slots) {
    if (!slot.prefix.is_prefix_of(program)) continue;
    RunBudget inner = budget;
    inner.max_length = budget.max_length - slot.prefix.size();
    return run_machine(slot.spec, program.substr(slot.prefix.size()), condition, inner);
  }
  return std::nullopt;
}

json spec_to_json(const MachineSpec& spec) {
  json j;
  j["kind"] = kind_name(spec.kind());
  switch (spec.kind()) {
    case MachineKind::kRequestTable: {
      json entries = json::array();
      for (const auto& e : spec.entries()) {
        json je = {{"codeword", e.codeword.str()}, {"output", e.output.str()}};
        if (e.condition) je["condition"] = e.condition->str();
        if (e.steps != 0) je["steps"] = e.steps;
        entries.push_back(std::move(je));
      }
      j["entries"] = std::move(entries);
      break;
    }
    case MachineKind::kExternalInterpreter:
      j["interpreter"] = spec.interpreter_name();
      break;
    case MachineKind::kCompositePrefix:
      j["prefix"] = spec.prefix().str();
      j["inner"] = spec_to_json(spec.inner());
      break;
    default:
      break;
  }
  return j;
}

MachineSpec spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("kind")) throw MalformedSpec("machine spec needs a 'kind'");
  const MachineKind kind = kind_from_name(j.at("kind").get<std::string>());
  switch (kind) {
    case MachineKind::kLiteralUnary:
      return MachineSpec::literal_unary();
    case MachineKind::kCopyCondition:
      return MachineSpec::copy_condition();
    case MachineKind::kPlainIdentity:
      return MachineSpec::plain_identity();
    case MachineKind::kExternalInterpreter:
      return MachineSpec::interpreter(j.value("interpreter", std::string()));
    case MachineKind::kCompositePrefix:
      if (!j.contains("inner")) throw MalformedSpec("composite-prefix needs 'inner'");
      return MachineSpec::composite(bits_from_json(j, "prefix"), spec_from_json(j.at("inner"), base_dir));
    case MachineKind::kRequestTable: {
      std::vector<TableEntry> entries;
      if (j.contains("file")) {
        entries = read_table_payload(base_dir / j.at("file").get<std::string>());
      }
      if (j.contains("entries")) {
        for (const auto& je : j.at("entries")) {
          TableEntry e;
          e.codeword = bits_from_json(je, "codeword");
          e.output = bits_from_json(je, "output");
          if (je.contains("condition")) e.condition = bits_from_json(je, "condition");
          e.steps = je.value("steps", std::uint64_t{0});
          entries.push_back(std::move(e));
        }
      }
      return MachineSpec::request_table(std::move(entries));
    }
  }
  throw MalformedSpec("unhandled machine kind");
}

Registry registry_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    Registry r;
    r.version = j.value("version", 1);
    if (r.version != 1) throw MalformedSpec("unsupported registry version " + std::to_string(r.version));
    const json& jb = j.at("budget");
    const auto max_length = jb.at("max_length").get<std::size_t>();
    const auto max_steps = jb.at("max_steps").get<std::uint64_t>();
    Schedule schedule = Schedule::linear(0);
    if (j.contains("schedule")) {
      const json& js = j.at("schedule");
      const std::string kind = js.value("kind", std::string("linear"));
      if (kind == "linear") {
        schedule = Schedule::linear(js.value("full_stage", std::uint64_t{0}));
      } else if (kind == "steps") {
        schedule = Schedule::steps(js.value("full_stage", std::uint64_t{0}));
      } else if (kind == "explicit") {
        std::vector<Schedule::Point> pts;
        for (const auto& p : js.at("points")) {
          pts.push_back({p.at(0).get<std::uint64_t>(), p.at(1).get<std::size_t>(), p.at(2).get<std::uint64_t>()});
        }
        schedule = Schedule::explicit_points(std::move(pts));
      } else {
        throw MalformedSpec("unknown schedule kind '" + kind + "'");
      }
    }
    r.budget = ExecutionBudget(max_length, max_steps, std::move(schedule));
    r.slots = slots_from_json(j.value("slots", json::array()), base_dir);
    r.plain_slots = slots_from_json(j.value("plain_slots", json::array()), base_dir);
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw MalformedSpec(std::string("registry: ") + e.what());
  }
}

Registry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedSpec("cannot open registry " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedSpec("registry " + path.string() + ": " + e.what());
  }
  return registry_from_json(j, path.parent_path());
}

Registry resolve_registry(const json& value, const std::filesystem::path& base_dir) {
  if (value.is_string()) return load_registry(base_dir / value.get<std::string>());
  if (value.is_object()) return registry_from_json(value, base_dir);
  throw MalformedSpec("registry must be a path or an inline object");
}

std::vector<TableEntry> parse_table_payload(std::istream& in, const std::string& origin) {
  std::vector<TableEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string codeword, output;
    if (!(ls >> codeword)) continue;
    if (!(ls >> output)) throw MalformedSpec(origin + ":" + std::to_string(lineno) + ": missing output");
    TableEntry e;
    try {
      e.codeword = Bitstring::from_token(codeword);
      e.output = Bitstring::from_token(output);
      std::string field;
      while (ls >> field) {
        if (field.rfind("cond=", 0) == 0) {
          e.condition = Bitstring::from_token(field.substr(5));
        } else if (field.rfind("steps=", 0) == 0) {
          e.steps = std::stoull(field.substr(6));
        } else {
          throw MalformedSpec("unknown field '" + field + "'");
        }
      }
    } catch (const std::invalid_argument& ex) {
      throw MalformedSpec(origin + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<TableEntry> read_table_payload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedSpec("cannot open payload file " + path.string());
  return parse_table_payload(in, path.string());
}

void write_table_payload(std::ostream& out, const std::vector<TableEntry>& entries) {
  for (const auto& e : entries) {
    out << e.codeword.token() << ' ' << e.output.token();
    if (e.condition) out << " cond=" << e.condition->token();
    if (e.steps != 0) out << " steps=" << e.steps;
    out << '\n';
  }
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace klab
