#include "klab/snapshot.hpp"

#include <fstream>
#include <ostream>

#include "klab/errors.hpp"

namespace klab {

using nlohmann::json;

namespace {

json events_to_json(const std::vector<HaltEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back({e.program.str(), e.output.str(), e.stage, e.steps});
  return arr;
}

std::vector<HaltEvent> events_from_json(const json& arr, const std::optional<Bitstring>& condition) {
  std::vector<HaltEvent> out;
  out.reserve(arr.size());
  for (const auto& row : arr) {
    out.push_back({Bitstring(row.at(0).get<std::string>()), condition, Bitstring(row.at(1).get<std::string>()),
                   row.at(2).get<std::uint64_t>(), row.at(3).get<std::uint64_t>()});
  }
  return out;
}

std::vector<HaltEvent> through(const std::vector<HaltEvent>& events, std::uint64_t stage) {
  std::vector<HaltEvent> out;
  for (const auto& e : events) {
    if (e.stage > stage) break;
    out.push_back(e);
  }
  return out;
}

}  // namespace

Snapshot take_snapshot(const ComplexityEngine& engine, std::uint64_t stage,
                       const std::vector<Bitstring>& conditions) {
  Snapshot snap;
  snap.registry = engine.registry();
  snap.registry_hash = engine.registry_hash();
  snap.stage = stage;
  snap.u = through(engine.u().events(), stage);
  snap.v = through(engine.v().events(), stage);
  for (const auto& c : conditions) snap.conditional[c] = through(engine.conditional(c)->events(), stage);
  return snap;
}

json snapshot_to_json(const Snapshot& snap) {
  json j;
  j["format"] = "klab-snapshot";
  j["format_version"] = Snapshot::kFormatVersion;
  j["registry_hash"] = snap.registry_hash;
  j["stage"] = snap.stage;
  j["registry"] = snap.registry.to_json();
  j["u"] = events_to_json(snap.u);
  j["v"] = events_to_json(snap.v);
  json cond = json::array();
  for (const auto& [c, events] : snap.conditional) {
    cond.push_back({{"condition", c.str()}, {"events", events_to_json(events)}});
  }
  j["conditional"] = cond;
  return j;
}

Snapshot snapshot_from_json(const json& j) {
  Snapshot snap;
  try {
    if (j.at("format").get<std::string>() != "klab-snapshot") throw MalformedSpec("not a snapshot document");
    if (j.at("format_version").get<int>() != Snapshot::kFormatVersion) {
      throw MalformedSpec("unsupported snapshot version");
    }
    snap.registry = registry_from_json(j.at("registry"), ".");
    snap.registry_hash = j.at("registry_hash").get<std::string>();
    snap.stage = j.at("stage").get<std::uint64_t>();
    snap.u = events_from_json(j.at("u"), std::nullopt);
    snap.v = events_from_json(j.at("v"), std::nullopt);
    for (const auto& c : j.at("conditional")) {
      Bitstring cond(c.at("condition").get<std::string>());
      snap.conditional[cond] = events_from_json(c.at("events"), cond);
    }
  } catch (const json::exception& e) {
    throw MalformedSpec(std::string("snapshot: ") + e.what());
  }
  if (snap.registry.hash() != snap.registry_hash) {
    throw InvariantFailure("snapshot registry hash " + snap.registry_hash + " does not match its registry (" +
                           snap.registry.hash() + ")");
  }
  return snap;
}

void save_snapshot(const Snapshot& snap, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << snapshot_to_json(snap).dump(1) << '\n';
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MalformedSpec(path.string() + ": " + e.what());
  }
  return snapshot_from_json(j);
}

ComplexityEngine engine_from_snapshot(const Snapshot& snap, unsigned threads) {
  return ComplexityEngine(snap.registry, snap.u, snap.v, snap.conditional, threads);
}

void require_stage(const Snapshot& snap, std::uint64_t s) {
  if (s > snap.stage) {
    throw NoSuchStage("stage " + std::to_string(s) + " is beyond the snapshot stage " +
                      std::to_string(snap.stage));
  }
}

void write_table_csv(std::ostream& out, const ComplexityTable& table) {
  out << "machine,condition,output,value,witness\n";
  const std::string cond = table.condition ? table.condition->token() : "";
  for (const auto& [output, c] : table.entries) {
    out << table.machine << ',' << cond << ',' << output.token() << ',' << render_value(c.value) << ','
        << (c.finite() ? c.witness.token() : "") << '\n';
  }
}

}  // namespace klab
