#pragma once

// Batch front-end. Every command reads one JSON config document (flag
// overrides via --set key=value) and writes artifacts that embed the config
// and registry hash, so `verify` can recompute them.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "klab/errors.hpp"
#include "klab/trace.hpp"

namespace klab {

enum ExitCode { kExitOk = 0, kExitOther = 1, kExitUsage = 2, kExitValidation = 3, kExitScale = 4, kExitInvariant = 5 };

int exit_code_for(ErrorClass cls);

/// Output directory (KLAB_OUT, default ".") and worker threads (KLAB_THREADS,
/// default 1).
struct CliEnv {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

CliEnv env_from_environment();

/// Reads a config document and applies "key=value" overrides; values parse as
/// JSON and fall back to plain strings.
nlohmann::json load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);
void apply_overrides(nlohmann::json& cfg, const std::vector<std::string>& overrides);

/// Snapshot file contents for an enumerate config (registry, optional stage,
/// optional conditions, optional budget override).
std::string enumerate_snapshot_text(const nlohmann::json& cfg, const std::filesystem::path& base_dir,
                                    unsigned threads);

struct ExperimentOutput {
  std::string csv;
  std::string plot;
  bool ok = true;
  std::string failure;
};

const std::vector<std::string>& experiment_names();
ExperimentOutput run_experiment(const std::string& which, const nlohmann::json& cfg,
                                const std::filesystem::path& base_dir, unsigned threads);

const std::vector<std::string>& simulation_names();
/// Runs a simulator and its audit; the returned trace ends in audit records.
Trace run_simulation(const std::string& which, const nlohmann::json& cfg, const std::filesystem::path& base_dir,
                     unsigned threads);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace klab
