#include "klab/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "klab/colouring.hpp"
#include "klab/engine.hpp"
#include "klab/experiments.hpp"
#include "klab/kc.hpp"
#include "klab/overshoot.hpp"
#include "klab/priority.hpp"
#include "klab/registry.hpp"
#include "klab/snapshot.hpp"
#include "klab/transfer.hpp"

namespace klab {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::kUsage:
      return kExitUsage;
    case ErrorClass::kValidation:
      return kExitValidation;
    case ErrorClass::kScale:
      return kExitScale;
    case ErrorClass::kInvariant:
      return kExitInvariant;
  }
  return kExitOther;
}

CliEnv env_from_environment() {
  CliEnv env;
  if (const char* out = std::getenv("KLAB_OUT"); out && *out) env.out_dir = out;
  if (const char* t = std::getenv("KLAB_THREADS"); t && *t) {
    try {
      env.threads = static_cast<unsigned>(std::stoul(t));
    } catch (const std::exception&) {
      throw ConfigError(std::string("KLAB_THREADS is not a number: ") + t);
    }
    if (env.threads == 0) env.threads = 1;
  }
  return env;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

fs::path base_of(const fs::path& config_path) {
  return config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
}

/// Registry from "registry" (inline or path), with an optional "budget"
/// object replacing the registry's budget and schedule.
Registry config_registry(const json& cfg, const std::string& key, const fs::path& base_dir) {
  if (!cfg.contains(key)) throw ConfigError("config has no '" + key + "'");
  Registry r = resolve_registry(cfg.at(key), base_dir);
  if (cfg.contains("budget") && key == "registry") {
    json rj = r.to_json();
    const json& b = cfg.at("budget");
    rj["budget"] = {{"max_length", b.at("max_length")}, {"max_steps", b.at("max_steps")}};
    if (b.contains("schedule")) {
      rj["schedule"] = b.at("schedule");
    } else {
      rj.erase("schedule");
    }
    r = registry_from_json(rj, base_dir);
  }
  return r;
}

/// Replaces registry references by their inline canonical form so the
/// document reproduces the run without its surrounding files.
json canonical_config(json cfg, const fs::path& base_dir) {
  for (const char* key : {"registry", "registry_b"}) {
    if (cfg.contains(key)) cfg[key] = config_registry(cfg, key, base_dir).to_json();
  }
  cfg.erase("budget");
  if (cfg.contains("snapshot") && cfg.at("snapshot").is_string()) {
    cfg["snapshot"] = fs::absolute(base_dir / cfg.at("snapshot").get<std::string>()).lexically_normal().string();
  }
  return cfg;
}

struct EngineSource {
  std::unique_ptr<ComplexityEngine> engine;
  std::uint64_t stage = 0;
};

EngineSource engine_for(const json& cfg, const fs::path& base_dir, unsigned threads) {
  EngineSource src;
  if (cfg.contains("snapshot")) {
    const Snapshot snap = load_snapshot(base_dir / cfg.at("snapshot").get<std::string>());
    src.stage = snap.stage;
    src.engine = std::make_unique<ComplexityEngine>(snap.registry, snap.u, snap.v, snap.conditional, threads);
  } else {
    src.engine = std::make_unique<ComplexityEngine>(config_registry(cfg, "registry", base_dir), threads);
    src.stage = src.engine->full_stage();
  }
  return src;
}

Bitstring subject_of(const json& cfg) {
  return Bitstring::from_token(cfg.value("subject", std::string("-")));
}

IndexSet index_from_json(const json& j) {
  IndexSet ix;
  const std::string kind = j.value("kind", std::string("all"));
  if (kind == "all") {
    ix.kind = IndexSet::Kind::kAll;
    ix.n = j.at("n").get<std::uint64_t>();
  } else if (kind == "M" || kind == "N") {
    ix.kind = kind == "M" ? IndexSet::Kind::kM : IndexSet::Kind::kN;
    if (j.contains("stage")) ix.stage = j.at("stage").get<std::uint64_t>();
  } else if (kind == "E") {
    ix.kind = IndexSet::Kind::kE;
    ix.script = j.at("script").get<std::vector<std::uint64_t>>();
  } else if (kind == "explicit") {
    ix.kind = IndexSet::Kind::kExplicit;
    for (const auto& t : j.at("list")) ix.list.push_back(Bitstring::from_token(t.get<std::string>()));
  } else {
    throw ConfigError("unknown index set kind '" + kind + "'");
  }
  return ix;
}

StageAssignment assignment_from_json(const json& j) {
  StageAssignment h;
  const std::string kind = j.is_string() ? j.get<std::string>() : j.value("kind", std::string("full"));
  if (kind == "full") {
    h.kind = StageAssignment::Kind::kFull;
  } else if (kind == "zero") {
    h.kind = StageAssignment::Kind::kZero;
  } else if (kind == "identity") {
    h.kind = StageAssignment::Kind::kIdentity;
  } else if (kind == "linear") {
    h.kind = StageAssignment::Kind::kLinear;
    h.slope = j.value("slope", std::uint64_t{1});
    h.offset = j.value("offset", std::uint64_t{0});
  } else {
    throw ConfigError("unknown stage assignment '" + kind + "'");
  }
  return h;
}

std::string join_set(const std::vector<std::uint64_t>& xs) {
  std::string s = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s + "}";
}

std::string provenance(const std::string& which, const json& canonical, const std::string& hash,
                       std::uint64_t stage) {
  std::ostringstream out;
  out << "# experiment: " << which << "\n"
      << "# registry_hash: " << hash << "\n"
      << "# stage: " << stage << "\n"
      << "# config: " << canonical.dump() << "\n";
  return out.str();
}

void profile_stats(std::ostream& out, const std::string& name, const Profile& p) {
  out << "# " << name << ": index_set=" << p.index_set << " window=" << p.window << " tail_max="
      << render_profile_value(p.tail_max) << " full_max=" << render_profile_value(p.full_max) << " argmax=";
  for (std::size_t i = 0; i < p.argmax.size(); ++i) out << (i ? "," : "") << p.argmax[i];
  out << "\n";
}

}  // namespace

void apply_overrides(json& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq), value = o.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    cfg[key] = v.is_discarded() ? json(value) : v;
  }
}

json load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  json cfg = parse_json(read_file(path), path.string());
  if (!cfg.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
  apply_overrides(cfg, overrides);
  return cfg;
}

std::string enumerate_snapshot_text(const json& cfg, const fs::path& base_dir, unsigned threads) {
  const Registry r = config_registry(cfg, "registry", base_dir);
  const ComplexityEngine engine(r, threads);
  const std::uint64_t stage = cfg.value("stage", engine.full_stage());
  std::vector<Bitstring> conditions;
  for (const auto& c : cfg.value("conditions", json::array())) conditions.push_back(Bitstring::from_token(c.get<std::string>()));
  return snapshot_to_json(take_snapshot(engine, stage, conditions)).dump(1) + "\n";
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"profile", "jump", "double", "truestage",
                                              "ecompress", "solovay", "soi", "xmachine"};
  return names;
}

ExperimentOutput run_experiment(const std::string& which, const json& cfg, const fs::path& base_dir,
                                unsigned threads) {
  if (std::find(experiment_names().begin(), experiment_names().end(), which) == experiment_names().end()) {
    throw UnknownKey("experiment '" + which + "'");
  }
  ExperimentOutput res;
  try {
    const json canonical = canonical_config(cfg, base_dir);
    EngineSource src = engine_for(cfg, base_dir, threads);
    const ComplexityEngine& engine = *src.engine;
    const std::size_t window = cfg.value("window", std::size_t{0});
    const std::string head = provenance(which, canonical, engine.registry_hash(), src.stage);
    const std::string csv_name = which + ".csv";
    std::ostringstream out;
    out << head;

    if (which == "profile") {
      const Profile p = limsup_profile(engine, subject_of(cfg), index_from_json(cfg.at("index")),
                                       cfg.value("at_stage", src.stage), window);
      res.csv = profile_csv(p, {{"experiment", which}, {"registry_hash", engine.registry_hash()},
                                {"stage", std::to_string(src.stage)}, {"config", canonical.dump()}});
      res.plot = gnuplot_script(csv_name, "K(" + p.subject.token() + " | index)", 4, "K");
      return res;
    }
    if (which == "jump") {
      const JumpReport rep = jump_profile(engine, subject_of(cfg), cfg.at("n").get<std::uint64_t>(), window);
      profile_stats(out, "jump", rep.jump);
      profile_stats(out, "by_nstar", rep.by_nstar);
      out << "# spread: " << render_profile_value(rep.spread) << "\n"
          << "row,n,jump,k_given_nstar\n";
      for (std::size_t i = 0; i < rep.jump.rows.size(); ++i) {
        out << i << "," << rep.jump.rows[i].index << "," << render_profile_value(rep.jump.rows[i].value) << ","
            << render_profile_value(rep.by_nstar.rows[i].value) << "\n";
      }
      res.plot = gnuplot_script(csv_name, "K(<sigma,n>) - K(n)", 3, "difference");
    } else if (which == "double") {
      const DoubleJumpReport rep = double_jump_profile(engine, subject_of(cfg), cfg.at("n").get<std::uint64_t>(),
                                                       cfg.at("m").get<std::uint64_t>(), window);
      out << "# label: finite-scale proxy, not the limit object\n";
      profile_stats(out, "outer", rep.outer);
      out << "n,m,value,inner_tail_max\n";
      for (std::size_t n = 0; n < rep.inner.size(); ++n) {
        for (const auto& r : rep.inner[n].rows) {
          out << n << "," << r.index << "," << render_profile_value(r.value) << ","
              << render_profile_value(rep.inner[n].tail_max) << "\n";
        }
      }
      res.plot = gnuplot_script(csv_name, "K(<<sigma,n>,m>) - K(m)", 3, "difference");
    } else if (which == "truestage") {
      const auto script = cfg.at("script").get<std::vector<std::uint64_t>>();
      const TrueStageReport rep = true_stage_profile(engine, subject_of(cfg), script, window);
      out << "# E: " << join_set(rep.e) << "\n";
      profile_stats(out, "over_E", rep.over_e);
      profile_stats(out, "over_all", rep.over_all);
      out << "row,m,a_m,in_E,value\n";
      std::set<std::uint64_t> e(rep.e.begin(), rep.e.end());
      for (std::size_t m = 0; m < rep.over_all.rows.size(); ++m) {
        out << m << "," << m << "," << script[m] << "," << (e.count(m) ? 1 : 0) << ","
            << render_profile_value(rep.over_all.rows[m].value) << "\n";
      }
      res.plot = gnuplot_script(csv_name, "K(sigma | m) over m and E", 5, "K");
    } else if (which == "ecompress") {
      const ECompressResult r = e_compressing_search(engine, cfg.at("e").get<unsigned>(), threads);
      out << "# e: " << r.e << "\n# c: " << r.c << "\n# k: " << r.k << "\n# rho: " << r.rho.token()
          << "\n# D:";
      for (const auto& s : r.d) out << " " << s.token();
      out << "\n# total_mass: " << r.total_mass.str() << "\n# residual: " << r.residual.str()
          << "\n# threshold: " << r.threshold.str() << "\n# failures: " << r.failures
          << "\n# k_changed: " << r.k_changed << "\nsigma,K,K_given_rho,in_D,ok\n";
      for (const auto& row : r.rows) {
        out << row.sigma.token() << "," << render_value(row.k) << "," << render_value(row.k_given_rho) << ","
            << row.in_d << "," << row.ok << "\n";
      }
      if (r.failures || r.k_changed) {
        res.ok = false;
        res.failure = "e-compressing verification: " + std::to_string(r.failures) + " failures, " +
                      std::to_string(r.k_changed) + " outputs changed K";
      }
      res.plot = gnuplot_script(csv_name, "K(sigma | rho) against K(sigma)", 3, "K");
    } else if (which == "solovay") {
      const SolovayReport r = solovay_hitting(engine, assignment_from_json(cfg.value("h", json("full"))),
                                              cfg.at("n").get<std::uint64_t>());
      out << "# h: " << r.h << "\n# hits: " << r.hits << "\n# density: " << r.hits << "/" << r.rows.size()
          << "\n# violations: " << r.violations << "\nn,stage,F,K,hit\n";
      for (const auto& row : r.rows) {
        out << row.n << "," << row.stage << "," << render_value(row.f) << "," << render_value(row.k) << ","
            << row.hit << "\n";
      }
      if (r.violations) {
        res.ok = false;
        res.failure = "F(n) < K(n) at " + std::to_string(r.violations) + " indices";
      }
      res.plot = gnuplot_script(csv_name, "F(n) = K_h(n)(n)", 3, "F");
    } else if (which == "soi") {
      std::vector<Bitstring> subjects;
      if (cfg.contains("subjects")) {
        for (const auto& s : cfg.at("subjects")) subjects.push_back(Bitstring::from_token(s.get<std::string>()));
      } else {
        const std::size_t limit = cfg.value("subject_limit", std::size_t{8});
        for (const auto& s : engine.u().outputs()) {
          if (subjects.size() == limit) break;
          subjects.push_back(s);
        }
      }
      std::vector<std::pair<Bitstring, std::uint64_t>> sample;
      const auto n = cfg.at("n").get<std::uint64_t>();
      for (const auto& s : subjects) {
        for (std::uint64_t i = 0; i < n; ++i) sample.emplace_back(s, i);
      }
      const SoiReport rep = engine.soi_audit(sample);
      const CodingTheoremReport ct = engine.coding_theorem_gap();
      out << "# soi_min: " << (rep.min ? std::to_string(*rep.min) : "none") << "\n# soi_max: "
          << (rep.max ? std::to_string(*rep.max) : "none") << "\n# soi_spread: " << rep.spread()
          << "\n# coding_gap_max: " << ct.max_gap << "\n# coding_gap_min: " << ct.min_gap
          << "\n# coding_gap_argmax: " << ct.argmax.token() << "\n# outputs: " << ct.outputs
          << "\nsigma,n,K_pair,K_n,K_sigma_given_nstar,deviation\n";
      for (const auto& row : rep.rows) {
        out << row.sigma.token() << "," << row.n << "," << render_value(row.k_pair) << "," << render_value(row.k_n)
            << "," << render_value(row.k_sigma_given_nstar) << ","
            << (row.deviation ? std::to_string(*row.deviation) : "inf") << "\n";
      }
      res.plot = gnuplot_script(csv_name, "K(<sigma,n>) - K(n) - K(sigma | n*)", 6, "deviation");
    } else if (which == "xmachine") {
      const ComplexityEngine b(config_registry(cfg, "registry_b", base_dir), threads);
      const CrossMachineReport r = cross_machine_audit(engine, b, subject_of(cfg), window);
      out << "# registry_b_hash: " << b.registry_hash() << "\n# c: " << r.c << "\n# only_a: " << r.only_a
          << "\n# only_b: " << r.only_b << "\n";
      profile_stats(out, "over_M_A", r.over_m_a);
      profile_stats(out, "over_N_B", r.over_n_b);
      out << "output,K_A,K_B,difference\n";
      for (const auto& row : r.rows) {
        out << row.output.token() << "," << row.k_a << "," << row.k_b << ","
            << static_cast<std::int64_t>(row.k_a) - static_cast<std::int64_t>(row.k_b) << "\n";
      }
      res.plot = gnuplot_script(csv_name, "K_A - K_B", 4, "difference");
    }
    res.csv = out.str();
  } catch (const json::exception& e) {
    throw ConfigError(which + " config: " + e.what());
  }
  return res;
}

const std::vector<std::string>& simulation_names() {
  static const std::vector<std::string> names{"colouring", "priority", "transfer", "overshoot"};
  return names;
}

Trace run_simulation(const std::string& which, const json& cfg, const fs::path& base_dir, unsigned threads) {
  if (which == "colouring") {
    ColouringRun run = colouring_simulate(colouring_config_from_json(cfg, base_dir), threads);
    colouring_audit(run);
    return std::move(run.trace);
  }
  if (which == "priority") {
    const unsigned answer_up_to = cfg.value("answer_up_to", 4u);
    PriorityRun run = priority_construct(priority_config_from_json(cfg, base_dir), threads);
    run.trace.header("answer_up_to", std::to_string(answer_up_to));
    priority_audit(run, answer_up_to);
    return std::move(run.trace);
  }
  if (which == "transfer") {
    const TransferConfig tc = transfer_config_from_json(cfg, base_dir);
    const ComplexityEngine engine(tc.registry, threads);
    TransferRun run = semilow_transfer(tc, engine);
    transfer_audit(run);
    return std::move(run.trace);
  }
  if (which == "overshoot") {
    OvershootRun run = overshoot_penalize(overshoot_config_from_json(cfg, base_dir), threads);
    overshoot_audit(run);
    return std::move(run.trace);
  }
  throw UnknownKey("simulation '" + which + "'");
}

namespace {

std::string header_value(const Trace& t, const std::string& key) {
  for (const auto& [k, v] : t.headers()) {
    if (k == key) return v;
  }
  throw MalformedSpec("trace has no '" + key + "' header");
}

int write_experiment(const std::string& which, const ExperimentOutput& r, const fs::path& dir, std::ostream& out,
                     std::ostream& err) {
  write_file(dir / (which + ".csv"), r.csv);
  write_file(dir / (which + ".gp"), r.plot);
  out << "wrote " << (dir / (which + ".csv")).string() << " and " << (dir / (which + ".gp")).string() << "\n";
  if (!r.ok) {
    err << "InvariantFailure: " << r.failure << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}

int cmd_verify(const fs::path& path, unsigned threads, std::ostream& out, std::ostream& err) {
  const std::string text = read_file(path);
  std::string recomputed;
  std::string kind;
  if (text.rfind("# simulation\t", 0) == 0) {
    kind = "trace";
    std::istringstream in(text);
    const Trace t = Trace::read(in, path.string());
    const std::string which = header_value(t, "simulation");
    json cfg = parse_json(header_value(t, "config"), path.string() + " config header");
    if (which == "priority") cfg["answer_up_to"] = std::stoul(header_value(t, "answer_up_to"));
    const Trace again = run_simulation(which, cfg, ".", threads);
    recomputed = again.str();
    out << report_from_trace(t).render();
  } else if (text.rfind("# experiment: ", 0) == 0) {
    kind = "experiment";
    const auto eol = text.find('\n');
    const std::string which = text.substr(14, eol - 14);
    const auto at = text.find("\n# config: ");
    if (at == std::string::npos) throw MalformedSpec(path.string() + ": no config line");
    const auto end = text.find('\n', at + 1);
    const json cfg = parse_json(text.substr(at + 11, end - at - 11), path.string() + " config line");
    recomputed = run_experiment(which, cfg, ".", threads).csv;
  } else {
    kind = "snapshot";
    const Snapshot snap = snapshot_from_json(parse_json(text, path.string()));
    const ComplexityEngine engine(snap.registry, threads);
    std::vector<Bitstring> conditions;
    for (const auto& [c, ev] : snap.conditional) conditions.push_back(c);
    recomputed = snapshot_to_json(take_snapshot(engine, snap.stage, conditions)).dump(1) + "\n";
  }
  if (recomputed != text) {
    err << "InvariantFailure: " << kind << " " << path.string() << " differs from its recomputation\n";
    return kExitInvariant;
  }
  out << "verified " << kind << " " << path.string() << "\n";
  return kExitOk;
}

int cmd_query(const fs::path& snapshot_path, const std::string& query, const std::vector<std::string>& args,
              std::optional<std::uint64_t> stage_opt, unsigned threads, std::ostream& out) {
  const Snapshot snap = load_snapshot(snapshot_path);
  const std::uint64_t stage = stage_opt.value_or(snap.stage);
  require_stage(snap, stage);
  const ComplexityEngine engine = engine_from_snapshot(snap, threads);
  auto words = [&args](std::size_t from) {
    std::vector<Bitstring> w;
    for (std::size_t i = from; i < args.size(); ++i) w.push_back(Bitstring::from_token(args[i]));
    return w;
  };
  if (query == "k" || query == "c") {
    const StageLedger& ledger = query == "k" ? engine.u() : engine.v();
    std::vector<Bitstring> subjects = words(0);
    if (subjects.empty()) subjects = ledger.outputs();
    out << "sigma,stage," << (query == "k" ? "K" : "C") << ",witness\n";
    for (const auto& s : subjects) {
      const Complexity c = ledger.value(s, stage);
      out << s.token() << "," << stage << "," << render_value(c.value) << "," << (c.finite() ? c.witness.token() : "")
          << "\n";
    }
  } else if (query == "condk") {
    if (args.size() < 2) throw ConfigError("condk needs <condition> <sigma>...");
    const Bitstring tau = Bitstring::from_token(args[0]);
    std::vector<Bitstring> subjects = words(1);
    out << "sigma,condition,stage,K,witness\n";
    for (const auto& s : subjects) {
      const Complexity c = engine.cond_k_at_stage(s, tau, stage);
      out << s.token() << "," << tau.token() << "," << stage << "," << render_value(c.value) << ","
          << (c.finite() ? c.witness.token() : "") << "\n";
    }
  } else if (query == "mn") {
    const MinimalCodes mc = engine.minimal_codes(stage);
    out << "set,program,output\n";
    std::map<Bitstring, Bitstring> output_of;
    for (const auto& e : engine.u().events()) output_of.emplace(e.program, e.output);
    for (const auto& p : mc.M) out << "M," << p.token() << "," << output_of.at(p).token() << "\n";
    std::set<Bitstring> n_set;
    for (const auto& [o, p] : mc.N) n_set.insert(p);
    for (const auto& p : n_set) out << "N," << p.token() << "," << output_of.at(p).token() << "\n";
  } else if (query == "omega") {
    const Dyadic omega = engine.u().omega(stage);
    out << "stage,omega,approx\n" << stage << "," << omega.str() << "," << omega.to_double() << "\n";
  } else {
    throw UnknownKey("query '" + query + "' (expected k, c, condk, mn or omega)");
  }
  return kExitOk;
}

int cmd_kc_compile(const fs::path& requests, const std::string& capacity, const fs::path& payload, std::ostream& out) {
  std::ifstream in(requests);
  if (!in) throw ConfigError("cannot read " + requests.string());
  const std::vector<Request> stream = parse_request_stream(in, requests.string());
  const Dyadic cap = parse_capacity(capacity);
  KcBuilder plain(cap);
  ConditionalKcBuilder conditional(cap);
  out << "output,length,condition,codeword\n";
  std::size_t overflow = 0;
  for (const auto& r : stream) {
    auto code = r.condition ? conditional.conditional_request(r) : plain.request(r);
    overflow += !code;
    out << r.output.token() << "," << r.length << "," << (r.condition ? r.condition->token() : "") << ","
        << (code ? code->token() : "overflow") << "\n";
  }
  std::vector<Grant> grants = plain.grants();
  grants.insert(grants.end(), conditional.grants().begin(), conditional.grants().end());
  std::ostringstream table;
  table << "# compiled from " << requests.filename().string() << " capacity " << cap.str() << "\n";
  write_table_payload(table, compile(grants).entries());
  write_file(payload, table.str());
  out << "# granted " << grants.size() << " overflow " << overflow << " payload " << payload.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"klab: bounded prefix-free Kolmogorov complexity laboratory"};
  app.require_subcommand(1);
  std::vector<std::string> overrides;
  unsigned threads_flag = 0;
  std::string out_flag;
  app.add_option("--threads", threads_flag, "worker threads (overrides KLAB_THREADS)");
  app.add_option("--out", out_flag, "output directory (overrides KLAB_OUT)");

  std::string config_path, output_path;
  std::optional<std::uint64_t> stage;

  auto* enumerate = app.add_subcommand("enumerate", "enumerate a registry into a snapshot file");
  enumerate->add_option("config", config_path, "config document")->required();
  enumerate->add_option("-o,--output", output_path, "snapshot path (default <out>/snapshot.json)");
  enumerate->add_option("--set", overrides, "key=value override")->allow_extra_args(false);

  std::string snapshot_path, query;
  std::vector<std::string> query_args;
  auto* q = app.add_subcommand("query", "table lookups on a snapshot, CSV to stdout");
  q->add_option("snapshot", snapshot_path, "snapshot file")->required();
  q->add_option("query", query, "k | c | condk | mn | omega")->required();
  q->add_option("args", query_args, "words (condk: condition first)");
  q->add_option("--stage", stage, "stage (default: the snapshot stage)");

  std::string which;
  auto* exp = app.add_subcommand("experiment", "run a profiling experiment");
  exp->add_option("which", which, "profile | jump | double | truestage | ecompress | solovay | soi | xmachine")
      ->required();
  exp->add_option("config", config_path, "config document")->required();
  exp->add_option("--set", overrides, "key=value override")->allow_extra_args(false);

  auto* sim = app.add_subcommand("simulate", "run a construction simulator");
  sim->add_option("which", which, "colouring | priority | transfer | overshoot")->required();
  sim->add_option("config", config_path, "config document")->required();
  sim->add_option("-o,--output", output_path, "trace path (default <out>/<which>.trace)");
  sim->add_option("--set", overrides, "key=value override")->allow_extra_args(false);

  std::string capacity = "1";
  auto* kcc = app.add_subcommand("kc-compile", "compile a request stream into a machine payload");
  kcc->add_option("requests", config_path, "request stream file")->required();
  kcc->add_option("--capacity", capacity, "dyadic capacity");
  kcc->add_option("-o,--output", output_path, "payload path (default <out>/<stem>.table)");

  KcFuzzOptions fuzz;
  auto* fz = app.add_subcommand("fuzz-kc", "fuzz the Kraft-Chaitin builder");
  fz->add_option("--seed", fuzz.seed);
  fz->add_option("--streams", fuzz.streams);
  fz->add_option("--max-length", fuzz.max_length);
  fz->add_option("--max-requests", fuzz.max_requests);

  std::string verify_path;
  auto* ver = app.add_subcommand("verify", "recompute an artifact and compare bytes");
  ver->add_option("artifact", verify_path, "snapshot, trace or experiment CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CliEnv env = env_from_environment();
    if (threads_flag) env.threads = threads_flag;
    if (!out_flag.empty()) env.out_dir = out_flag;

    if (*enumerate) {
      const json cfg = load_config(config_path, overrides);
      const fs::path dest = output_path.empty() ? env.out_dir / "snapshot.json" : fs::path(output_path);
      write_file(dest, enumerate_snapshot_text(cfg, base_of(config_path), env.threads));
      out << "wrote " << dest.string() << "\n";
      return kExitOk;
    }
    if (*q) return cmd_query(snapshot_path, query, query_args, stage, env.threads, out);
    if (*exp) {
      const json cfg = load_config(config_path, overrides);
      return write_experiment(which, run_experiment(which, cfg, base_of(config_path), env.threads), env.out_dir, out,
                              err);
    }
    if (*sim) {
      const json cfg = load_config(config_path, overrides);
      const Trace t = run_simulation(which, cfg, base_of(config_path), env.threads);
      const fs::path dest = output_path.empty() ? env.out_dir / (which + ".trace") : fs::path(output_path);
      write_file(dest, t.str());
      const InvariantReport rep = report_from_trace(t);
      out << rep.render() << "wrote " << dest.string() << "\n";
      if (!rep.all_passed()) {
        err << "InvariantFailure: " << rep.first_failure() << "\n";
        return kExitInvariant;
      }
      return kExitOk;
    }
    if (*kcc) {
      const fs::path src(config_path);
      const fs::path dest = output_path.empty() ? env.out_dir / (src.stem().string() + ".table") : fs::path(output_path);
      return cmd_kc_compile(src, capacity, dest, out);
    }
    if (*fz) {
      fuzz.threads = env.threads;
      const KcFuzzReport r = fuzz_kc(fuzz);
      out << "seed " << fuzz.seed << " streams " << r.streams << " exact " << r.exact_streams << " requests "
          << r.requests << " granted " << r.granted << " rejected " << r.rejected << " failures " << r.failures
          << "\n";
      if (r.failures) {
        err << "InvariantFailure: " << r.first_failure << "\n";
        return kExitInvariant;
      }
      return kExitOk;
    }
    if (*ver) return cmd_verify(verify_path, env.threads, out, err);
  } catch (const KlabError& e) {
    err << e.what() << "\n";
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitUsage;
}

}  // namespace klab
