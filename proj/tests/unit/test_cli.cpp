#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "klab/cli.hpp"
#include "klab/errors.hpp"

using namespace klab;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = KLAB_CONFIG_DIR;

struct CliResult {
  int code = 0;
  std::string out, err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("klab_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "klab");
  args.insert(args.begin() + 1, {"--out", scratch().string()});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("exit codes by failure class") {
  CHECK(exit_code_for(ErrorClass::kUsage) == 2);
  CHECK(exit_code_for(ErrorClass::kValidation) == 3);
  CHECK(exit_code_for(ErrorClass::kScale) == 4);
  CHECK(exit_code_for(ErrorClass::kInvariant) == 5);
  CHECK(cli({}).code == 2);
  CHECK(cli({"no-such-command"}).code == 2);
  CHECK(cli({"enumerate", (scratch() / "missing.json").string()}).code == 3);
}

TEST_CASE("overrides parse as JSON and fall back to strings") {
  nlohmann::json cfg = {{"n", 1}};
  apply_overrides(cfg, {"n=7", "subject=0101", "index={\"kind\":\"M\"}"});
  CHECK(cfg["n"] == 7);
  CHECK(cfg["subject"] == "0101");
  CHECK(cfg["index"]["kind"] == "M");
  CHECK_THROWS(apply_overrides(cfg, {"no-equals-sign"}));
}

TEST_CASE("enumerate then query the snapshot") {
  REQUIRE(cli({"enumerate", (kConfigs / "enumerate.json").string()}).code == 0);
  const std::string snap = (scratch() / "snapshot.json").string();
  REQUIRE(fs::exists(snap));

  auto k = cli({"query", snap, "k", "-"});
  CHECK(k.code == 0);
  CHECK(k.out.find("\n-,20,2,00\n") != std::string::npos);

  auto omega = cli({"query", snap, "omega", "--stage", "0"});
  CHECK(omega.code == 0);
  CHECK(omega.out.find("\n0,0,") != std::string::npos);

  auto mn = cli({"query", snap, "mn", "--stage", "20"});
  CHECK(mn.code == 0);
  CHECK_FALSE(mn.out.empty());

  auto condk = cli({"query", snap, "condk", "0", "0"});
  CHECK(condk.code == 0);

  CHECK(cli({"query", snap, "bogus"}).code == 3);
  CHECK(cli({"query", snap, "k", "-", "--stage", "999"}).code == 4);
  CHECK(cli({"verify", snap}).code == 0);
}

TEST_CASE("enumerate output is independent of the thread count") {
  const auto cfg = load_config(kConfigs / "enumerate.json", {});
  CHECK(enumerate_snapshot_text(cfg, kConfigs, 1) == enumerate_snapshot_text(cfg, kConfigs, 3));
}

TEST_CASE("experiments write CSV with provenance and verify") {
  auto r = cli({"experiment", "truestage", (kConfigs / "truestage.json").string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(scratch() / "truestage.csv");
  CHECK(csv.rfind("# experiment: truestage\n", 0) == 0);
  CHECK(csv.find("# E: {3,4}\n") != std::string::npos);
  CHECK(csv.find("# config: ") != std::string::npos);
  CHECK(fs::exists(scratch() / "truestage.gp"));
  CHECK(cli({"verify", (scratch() / "truestage.csv").string()}).code == 0);

  std::ofstream(scratch() / "truestage.csv", std::ios::app) << "tampered\n";
  CHECK(cli({"verify", (scratch() / "truestage.csv").string()}).code == 5);

  CHECK(cli({"experiment", "nonesuch", (kConfigs / "truestage.json").string()}).code == 3);
  CHECK(cli({"experiment", "double", (kConfigs / "double.json").string(), "--set", "n=300", "--set", "m=300"}).code ==
        4);
}

TEST_CASE("simulate priority with empty W sets") {
  const fs::path cfg = write_config("empty_w.json", R"({
    "churn": {"seed": 4, "outputs": 50, "stages": 400, "min_length": 6, "max_length": 12},
    "w": [], "requirements": 4, "stages": 600, "window": 50, "answer_up_to": 2
  })");
  auto r = cli({"simulate", "priority", cfg.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS semilow-answers") != std::string::npos);
  const fs::path trace = scratch() / "priority.trace";
  REQUIRE(fs::exists(trace));
  CHECK(slurp(trace).find("# answer_up_to\t2") != std::string::npos);
  CHECK(cli({"verify", trace.string()}).code == 0);
}

TEST_CASE("simulations replay byte-identically") {
  for (const std::string which : {"colouring", "transfer", "overshoot"}) {
    const fs::path out = scratch() / (which + ".trace");
    REQUIRE(cli({"simulate", which, (kConfigs / (which + ".json")).string()}).code == 0);
    const std::string first = slurp(out);
    REQUIRE(cli({"--threads", "3", "simulate", which, (kConfigs / (which + ".json")).string()}).code == 0);
    CHECK(slurp(out) == first);
    CHECK(cli({"verify", out.string()}).code == 0);
  }
}

TEST_CASE("kc-compile lists grants and overflows") {
  const fs::path reqs = write_config("reqs.txt", "0 1\n1 1\n- 1\n");
  auto r = cli({"kc-compile", reqs.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("0,1,,0\n") != std::string::npos);
  CHECK(r.out.find("1,1,,1\n") != std::string::npos);
  CHECK(r.out.find("-,1,,overflow\n") != std::string::npos);
  CHECK(fs::exists(scratch() / "reqs.table"));
  CHECK(cli({"kc-compile", reqs.string(), "--capacity", "3/2"}).code == 3);
}

TEST_CASE("fuzz-kc reports success") {
  auto r = cli({"fuzz-kc", "--streams", "50", "--max-requests", "100"});
  CHECK(r.code == 0);
}

TEST_CASE("snapshots of the literal-unary registry") {
  const nlohmann::json base = {{"budget", {{"max_length", 4}, {"max_steps", 4}}},
                               {"schedule", {{"kind", "linear"}, {"full_stage", 4}}},
                               {"slots", {{{"name", "literal"}, {"kind", "literal-unary"}}}}};
  const std::string text = enumerate_snapshot_text({{"registry", base}}, scratch(), 1);
  CHECK(text == enumerate_snapshot_text({{"registry", base}}, scratch(), 1));
  const auto snap = nlohmann::json::parse(text);
  std::set<std::string> programs;
  for (const auto& ev : snap.at("u")) programs.insert(ev.at(0).get<std::string>());
  CHECK(programs == std::set<std::string>{"00", "0100", "0101"});

  nlohmann::json zero = base;
  zero["budget"]["max_length"] = 0;
  const auto empty = nlohmann::json::parse(enumerate_snapshot_text({{"registry", zero}}, scratch(), 1));
  CHECK(empty.at("u").empty());
}

TEST_CASE("profile rows match the index set and soi spread matches its rows") {
  REQUIRE(cli({"experiment", "profile", (kConfigs / "profile.json").string(), "--set", "index={\"kind\":\"all\",\"n\":12}"})
              .code == 0);
  std::istringstream profile(slurp(scratch() / "profile.csv"));
  std::string line;
  std::size_t rows = 0;
  bool data = false;
  while (std::getline(profile, line)) {
    if (data) ++rows;
    if (line.rfind("row,", 0) == 0) data = true;
  }
  CHECK(rows == 12);

  REQUIRE(cli({"experiment", "soi", (kConfigs / "soi.json").string()}).code == 0);
  std::istringstream soi(slurp(scratch() / "soi.csv"));
  std::optional<std::int64_t> lo, hi;
  std::int64_t spread = -1;
  data = false;
  while (std::getline(soi, line)) {
    if (line.rfind("# soi_spread: ", 0) == 0) spread = std::stoll(line.substr(14));
    if (data) {
      const std::string dev = line.substr(line.rfind(',') + 1);
      if (dev != "inf") {
        const std::int64_t d = std::stoll(dev);
        lo = lo ? std::min(*lo, d) : d;
        hi = hi ? std::max(*hi, d) : d;
      }
    }
    if (line.rfind("sigma,", 0) == 0) data = true;
  }
  REQUIRE(lo);
  CHECK(spread == *hi - *lo);
}
