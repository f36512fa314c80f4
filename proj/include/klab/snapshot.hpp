#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "klab/engine.hpp"
#include "klab/enumerate.hpp"
#include "klab/registry.hpp"

namespace klab {

/// Halt events of U, V and selected conditional domains up to `stage`,
/// together with the registry that produced them.
struct Snapshot {
  static constexpr int kFormatVersion = 1;

  Registry registry;
  std::string registry_hash;
  std::uint64_t stage = 0;
  std::vector<HaltEvent> u;
  std::vector<HaltEvent> v;
  std::map<Bitstring, std::vector<HaltEvent>> conditional;
};

/// Events of `engine` discovered by `stage`, plus the conditional domains for
/// `conditions`.
Snapshot take_snapshot(const ComplexityEngine& engine, std::uint64_t stage,
                       const std::vector<Bitstring>& conditions = {});

/// Canonical JSON: fixed key order, events as [program, output, stage, steps].
nlohmann::json snapshot_to_json(const Snapshot& snap);
/// Throws MalformedSpec on a bad document and InvariantFailure when the
/// embedded hash disagrees with the embedded registry.
Snapshot snapshot_from_json(const nlohmann::json& j);

void save_snapshot(const Snapshot& snap, const std::filesystem::path& path);
Snapshot load_snapshot(const std::filesystem::path& path);

/// Engine answering from the recorded events. Queries past snap.stage are
/// the caller's concern (see require_stage).
ComplexityEngine engine_from_snapshot(const Snapshot& snap, unsigned threads = 1);

/// NoSuchStage when s lies beyond what the snapshot recorded.
void require_stage(const Snapshot& snap, std::uint64_t s);

/// Rows "machine,condition,output,value,witness" for a complexity table.
void write_table_csv(std::ostream& out, const ComplexityTable& table);

}  // namespace klab
