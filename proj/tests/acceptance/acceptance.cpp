// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "klab/cli.hpp"
#include "klab/colouring.hpp"
#include "klab/engine.hpp"
#include "klab/experiments.hpp"
#include "klab/kc.hpp"
#include "klab/priority.hpp"
#include "klab/transfer.hpp"
#include "oracle/brute_force.hpp"
#include "support/fixtures.hpp"

using namespace klab;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kFuzzSeconds = 10.0;
constexpr double kOracleSeconds = 60.0;
constexpr std::uint64_t kFuzzStreams = 10000;
constexpr std::size_t kFuzzMaxLength = 24;
constexpr std::size_t kFuzzMaxRequests = 1000;
constexpr std::uint64_t kFuzzSeed = 20261016;
constexpr std::size_t kOracleMaxLength = 12;
constexpr std::uint64_t kAuditStages = 10000;
constexpr unsigned kPriorityRequirements = 10;
constexpr std::uint64_t kPriorityStages = 10000;
constexpr unsigned kPriorityAnswerUpTo = 4;
constexpr std::size_t kTransferLength = 10;
constexpr unsigned kManyThreads = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
  std::ostringstream o;
  o.precision(2);
  o << std::fixed << s << "s";
  return o.str();
}

Outcome kc_fuzz() {
  const auto t0 = std::chrono::steady_clock::now();
  KcFuzzOptions opt;
  opt.seed = kFuzzSeed;
  opt.streams = kFuzzStreams;
  opt.max_length = kFuzzMaxLength;
  opt.max_requests = kFuzzMaxRequests;
  const KcFuzzReport r = fuzz_kc(opt);
  const double t = seconds_since(t0);
  std::ostringstream d;
  d << "streams=" << r.streams << " exact=" << r.exact_streams << " requests=" << r.requests
    << " granted=" << r.granted << " rejected=" << r.rejected << " failures=" << r.failures << " time="
    << fmt_seconds(t) << " limit=" << fmt_seconds(kFuzzSeconds);
  if (!r.first_failure.empty()) d << " first=" << r.first_failure;
  return {r.failures == 0 && r.streams == kFuzzStreams && t < kFuzzSeconds, d.str()};
}

std::size_t compare_ledger(const StageLedger& ledger, const oracle::Domain& dom, std::uint64_t last, bool full) {
  std::size_t mismatches = 0;
  for (std::uint64_t s = 0; s <= last; ++s) {
    const auto expect = dom.table(s);
    const ComplexityTable got = ledger.table(s);
    if (got.entries.size() != expect.size()) ++mismatches;
    for (const auto& [out, v] : expect) {
      auto it = got.entries.find(out);
      if (it == got.entries.end() || it->second.value != v.length || it->second.witness != v.witness) ++mismatches;
    }
    if (!full) continue;
    const MinimalCodes mc = ledger.minimal_codes(s);
    if (mc.M != dom.m_set(s)) ++mismatches;
    if (mc.N != dom.n_map(s)) ++mismatches;
    const Dyadic omega = Dyadic::from_ratio(dom.omega_numerator(s), static_cast<int>(dom.max_length()));
    if (ledger.omega(s) != omega) ++mismatches;
  }
  return mismatches;
}

Outcome engine_vs_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t mismatches = 0, tables = 0, events = 0;
  const std::vector<Bitstring> conditions{Bitstring(), Bitstring("0"), Bitstring("1"), Bitstring("01"),
                                          Bitstring("110")};
  for (std::size_t L = 0; L <= kOracleMaxLength; L += 4) {
    const Registry r = fixtures::lab(L);
    const ComplexityEngine engine(r);
    const std::uint64_t last = r.budget.saturation_stage();
    const oracle::Domain u(r.slots, r.budget, std::nullopt);
    events += u.events().size();
    mismatches += compare_ledger(engine.u(), u, last, true);
    mismatches += compare_ledger(engine.v(), oracle::Domain(r.plain_slots, r.budget, std::nullopt), last, false);
    tables += 2 * (last + 1);
    for (const auto& c : conditions) {
      mismatches += compare_ledger(*engine.conditional(c), oracle::Domain(r.slots, r.budget, c), last, false);
      tables += last + 1;
    }
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < kOracleSeconds,
          "L<=" + std::to_string(kOracleMaxLength) + " stage-tables=" + std::to_string(tables) + " U-events=" + std::to_string(events) +
              " mismatches=" + std::to_string(mismatches) + " time=" + fmt_seconds(t) +
              " limit=" + fmt_seconds(kOracleSeconds)};
}

Outcome stage_invariants() {
  Registry r = fixtures::lab(12);
  r.budget = ExecutionBudget(12, 64, Schedule::linear(kAuditStages));
  const ComplexityEngine engine(r);
  const StageAuditReport a = engine.audit_stages(kAuditStages - 1);
  std::ostringstream d;
  d << "stages=" << a.stages_checked << " replacements=" << a.replacements_seen
    << " violations(K,C,omega-monotone,omega<=1,N⊆M,replacement,kraft)=" << a.k_monotone_violations << ","
    << a.c_monotone_violations << "," << a.omega_monotone_violations << "," << a.omega_bound_violations << ","
    << a.n_subset_m_violations << "," << a.replacement_violations << "," << a.kraft_violations;
  return {a.clean() && a.stages_checked == kAuditStages, d.str()};
}

ColouringConfig crafted_colouring() {
  ColouringConfig cfg;
  cfg.base = make_fresh_code_registry(4096, 14, 512);
  cfg.target = {3, std::nullopt, 60, 200, std::nullopt, 311, std::nullopt, 450};
  cfg.epsilon = Dyadic::pow2_neg(2);
  return cfg;
}

std::string audit_summary(const InvariantReport& rep) {
  std::string s;
  for (const auto& c : rep.checks) s += (s.empty() ? "" : "; ") + std::string(c.passed ? "" : "FAILED ") + c.name + " " + c.ledger;
  return s;
}

Outcome colouring() {
  ColouringRun run = colouring_simulate(crafted_colouring());
  colouring_audit(run);
  const InvariantReport rep = report_from_trace(run.trace);
  std::size_t recovered = 0;
  for (unsigned n = 0; n < run.colourings.size(); ++n) {
    const bool truth = run.config.target[n].has_value();
    try {
      recovered += colouring_recover(run, n).bit == truth;
    } catch (const NoSuchStage&) {
    }
  }
  const bool k17 = minimal_colour_count(Dyadic::pow2_neg(2), 0) == 17 && run.colourings[0].k == 17;
  return {rep.all_passed() && recovered == 8 && run.wt_a <= Dyadic::pow2_neg(2) && k17,
          "recovered=" + std::to_string(recovered) + "/8 k(n=0)=" + std::to_string(run.colourings[0].k) +
              " wtA=" + run.wt_a.str() + " | " + audit_summary(rep)};
}

PriorityConfig priority_config() {
  PriorityConfig cfg;
  cfg.v = make_churn_registry(11, 400, kPriorityStages, 6, 16);
  cfg.requirements = kPriorityRequirements;
  cfg.stages = kPriorityStages;
  cfg.window = 1000;
  WSet w0;
  w0.kind = WSet::Kind::kResidue;
  w0.modulus = 3;
  w0.residue = 1;
  WSet w1;
  w1.kind = WSet::Kind::kAll;
  w1.from_stage = 3000;
  WSet w2;
  WSet w3;
  w3.kind = WSet::Kind::kResidue;
  w3.modulus = 7;
  w3.residue = 2;
  w3.from_stage = 500;
  WSet w4;
  w4.kind = WSet::Kind::kExplicit;
  w4.members[Bitstring("0000000000000")] = 10;
  cfg.w = {w0, w1, w2, w3, w4};
  return cfg;
}

Outcome priority() {
  PriorityRun run = priority_construct(priority_config());
  priority_audit(run, kPriorityAnswerUpTo);
  const InvariantReport rep = report_from_trace(run.trace);
  return {rep.all_passed() && run.counters.stages == kPriorityStages, audit_summary(rep)};
}

Outcome transfer() {
  TransferConfig cfg;
  cfg.registry = fixtures::lab(kTransferLength);
  cfg.universe = 16;
  const ComplexityEngine engine(cfg.registry);
  TransferRun run = semilow_transfer(cfg, engine);
  transfer_audit(run);
  const InvariantReport rep = report_from_trace(run.trace);
  return {rep.all_passed() && run.wt_b <= Dyadic::one() + Dyadic::one(),
          "L=" + std::to_string(kTransferLength) + " |B|=" + std::to_string(run.b.size()) + " | " + audit_summary(rep)};
}

Outcome e_compressing() {
  const ComplexityEngine engine(fixtures::lab(12));
  std::size_t failures = 0, checked = 0;
  std::string d;
  for (unsigned e = 0; e <= 2; ++e) {
    const ECompressResult r = e_compressing_search(engine, e);
    failures += r.failures + r.k_changed;
    for (const auto& row : r.rows) checked += !row.in_d;
    d += " e=" + std::to_string(e) + ":|D|=" + std::to_string(r.d.size()) + ",c=" + std::to_string(r.c) +
         ",failures=" + std::to_string(r.failures);
  }
  return {failures == 0 && checked > 0, "checked=" + std::to_string(checked) + d};
}

Outcome constants(const std::filesystem::path& baseline) {
  const Registry r = fixtures::lab(12);
  const std::vector<Bitstring> subjects{Bitstring(), Bitstring("0"), Bitstring("1"), Bitstring("01")};
  const std::uint64_t n = 8;
  std::vector<std::pair<Bitstring, std::uint64_t>> sample;
  for (const auto& s : subjects) {
    for (std::uint64_t i = 0; i < n; ++i) sample.emplace_back(s, i);
  }
  json runs = json::array();
  for (int i = 0; i < 2; ++i) {
    const ComplexityEngine engine(r, i == 0 ? 1 : kManyThreads);
    const SoiReport soi = engine.soi_audit(sample);
    const CodingTheoremReport ct = engine.coding_theorem_gap();
    if (!soi.min || !soi.max) return {false, "SOI deviations undefined on the sample"};
    runs.push_back({{"soi_min", *soi.min}, {"soi_max", *soi.max}, {"coding_gap_max", ct.max_gap},
                    {"coding_gap_min", ct.min_gap}});
  }
  const oracle::Constants o = oracle::constants(r, subjects, n);
  const json expected = {{"soi_min", o.soi_min}, {"soi_max", o.soi_max}, {"coding_gap_max", o.coding_gap_max},
                         {"coding_gap_min", o.coding_gap_min}};
  std::string source = "recorded";
  json recorded = expected;
  if (std::filesystem::exists(baseline)) {
    std::ifstream in(baseline);
    recorded = json::parse(in);
    source = "baseline";
  } else {
    std::ofstream(baseline) << expected.dump(1) << "\n";
  }
  const bool ok = runs[0] == runs[1] && runs[0] == expected && recorded == expected;
  return {ok, "spread=" + std::to_string(o.soi_max - o.soi_min) + " soi=[" + std::to_string(o.soi_min) + "," +
                  std::to_string(o.soi_max) + "] coding_gap_max=" + std::to_string(o.coding_gap_max) +
                  " engine=" + runs[0].dump() + " oracle=" + expected.dump() + " " + source + "=" + recorded.dump()};
}

Outcome determinism() {
  std::vector<std::string> diffs;
  std::size_t compared = 0;
  auto check = [&](const std::string& what, const std::function<std::string(unsigned)>& produce) {
    const std::string a = produce(1), b = produce(1), c = produce(kManyThreads);
    ++compared;
    if (a != b) diffs.push_back(what + "(rerun)");
    if (a != c) diffs.push_back(what + "(threads)");
  };
  const json enumerate_cfg = {{"registry", fixtures::lab(12).to_json()}, {"conditions", {"0", "01"}}};
  check("enumerate", [&](unsigned t) { return enumerate_snapshot_text(enumerate_cfg, ".", t); });
  check("colouring", [](unsigned t) {
    ColouringRun run = colouring_simulate(crafted_colouring(), t);
    colouring_audit(run);
    return run.trace.str();
  });
  check("priority", [](unsigned t) {
    PriorityRun run = priority_construct(priority_config(), t);
    priority_audit(run, kPriorityAnswerUpTo);
    return run.trace.str();
  });
  const json transfer_cfg = {{"registry", fixtures::lab(kTransferLength).to_json()}, {"universe", 16}};
  check("transfer", [&](unsigned t) { return run_simulation("transfer", transfer_cfg, ".", t).str(); });
  const json overshoot_cfg = {{"registry", fixtures::lab(12).to_json()}, {"d", 0}, {"k", 6}};
  check("overshoot", [&](unsigned t) { return run_simulation("overshoot", overshoot_cfg, ".", t).str(); });
  std::string d = "artifacts=" + std::to_string(compared) + " runs=3 each (1,1," + std::to_string(kManyThreads) +
                  " threads)";
  for (const auto& x : diffs) d += " differs:" + x;
  return {diffs.empty(), d};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"klab acceptance criteria"};
  std::string baseline = "oracle_baseline.json";
  app.add_option("--baseline", baseline, "regression baseline recorded by the brute-force oracle");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kc-fuzz", kc_fuzz},
      {"engine-vs-oracle", engine_vs_oracle},
      {"stage-invariants", stage_invariants},
      {"colouring", colouring},
      {"priority", priority},
      {"transfer", transfer},
      {"e-compressing", e_compressing},
      {"constants", [&] { return constants(baseline); }},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << " [" << fmt_seconds(seconds_since(t0))
              << "] " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
