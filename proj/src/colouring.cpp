#include "klab/colouring.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "klab/enumerate.hpp"
#include "klab/errors.hpp"

namespace klab {

using nlohmann::json;

nlohmann::json colouring_config_to_json(const ColouringConfig& cfg) {
  json target = json::array();
  for (const auto& t : cfg.target) target.push_back(t ? json(*t) : json(nullptr));
  return {{"kind", "colouring"},
          {"registry", cfg.base.to_json()},
          {"target", target},
          {"epsilon", cfg.epsilon.str()},
          {"stages", cfg.stages}};
}

ColouringConfig colouring_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ColouringConfig cfg;
  try {
    if (j.contains("registry")) {
      cfg.base = resolve_registry(j.at("registry"), base_dir);
    } else {
      const json& f = j.at("fresh_codes");
      cfg.base = make_fresh_code_registry(f.at("codes").get<std::size_t>(), f.at("length").get<std::size_t>(),
                                          f.at("stages").get<std::uint64_t>());
    }
    for (const auto& t : j.at("target")) {
      if (t.is_null()) {
        cfg.target.push_back(std::nullopt);
      } else {
        const auto stage = t.get<std::uint64_t>();
        if (stage == 0) throw ConfigError("target entry stages start at 1");
        cfg.target.push_back(stage);
      }
    }
    if (j.contains("epsilon")) cfg.epsilon = parse_capacity(j.at("epsilon").get<std::string>());
    cfg.stages = j.value("stages", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("colouring config: ") + e.what());
  }
  return cfg;
}

Registry make_fresh_code_registry(std::size_t codes, std::size_t program_length, std::uint64_t stages) {
  if (program_length == 0 || program_length - 1 > 62 || codes > (std::uint64_t{1} << (program_length - 1))) {
    throw ConfigError("cannot fit " + std::to_string(codes) + " codes of length " +
                      std::to_string(program_length));
  }
  if (stages == 0) throw ConfigError("fresh-code registry needs at least one stage");
  std::vector<TableEntry> entries;
  entries.reserve(codes);
  const std::size_t inner = program_length - 1;
  for (std::size_t i = 0; i < codes; ++i) {
    Bitstring codeword;
    for (std::size_t b = inner; b-- > 0;) codeword.push_back((i >> b) & 1);
    const std::uint64_t steps = 1 + (static_cast<unsigned __int128>(i) * stages) / codes;
    entries.push_back({codeword, from_rank(i + 1), std::nullopt, steps});
  }
  Registry r;
  r.budget = ExecutionBudget(program_length, stages, Schedule::steps(stages));
  r.add_slot("fresh", MachineSpec::request_table(std::move(entries)));
  return r;
}

std::uint64_t minimal_colour_count(const Dyadic& epsilon, unsigned n) {
  const Dyadic x = epsilon.shifted_down(static_cast<int>(n) + 2);
  if (x.is_zero()) throw InvalidCapacity("epsilon too small");
  // 1/k < x is monotone in k; find the least such k.
  std::uint64_t lo = 1, hi = 1;
  while (x.at_most_reciprocal(hi)) hi *= 2;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (x.at_most_reciprocal(mid)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

namespace {

constexpr std::uint32_t kNoMember = std::numeric_limits<std::uint32_t>::max();

// Per-colouring working state beyond what is published in ColouringState.
struct Working {
  std::vector<std::multiset<std::uint32_t>> x_lengths;  // lengths of colour-i members in X
  std::set<std::pair<std::uint32_t, std::int64_t>> small;  // (r_i, -i) over small colours
  std::vector<std::vector<std::size_t>> members;            // entries per colour

  std::uint32_t r(std::size_t c) const { return x_lengths[c].empty() ? kNoMember : *x_lengths[c].begin(); }
};

std::string list_colours(const std::vector<ColouringState>& cs, std::size_t idx) {
  std::string out;
  for (const auto& c : cs) {
    if (!out.empty()) out += ',';
    out += std::to_string(c.colour[idx]);
  }
  return out;
}

}  // namespace

ColouringRun colouring_simulate(const ColouringConfig& cfg, unsigned threads) {
  ColouringRun run;
  run.config = cfg;
  Registry reg = cfg.base;
  reg.validate();
  run.slot_prefix = encode_slot(reg.slots.size());
  for (const auto& s : reg.slots) {
    if (!s.prefix.incomparable_with(run.slot_prefix)) {
      throw ConfigError("slot prefix " + run.slot_prefix.token() + " collides with slot " + s.name);
    }
  }
  if (cfg.epsilon > Dyadic::pow2_neg(static_cast<int>(run.slot_prefix.size()))) {
    throw ConfigError("epsilon " + cfg.epsilon.str() + " exceeds 2^-" + std::to_string(run.slot_prefix.size()));
  }
  run.last_stage = cfg.stages ? cfg.stages : reg.budget.saturation_stage();

  const std::vector<HaltEvent> base = enumerate_domain(reg, run.last_stage, threads);
  KcBuilder slot;  // capacity 1 inside the slot = ε·2^|ρ| outside it
  Trace& tr = run.trace;
  tr.header("simulation", "colouring");
  tr.header("registry_hash", reg.hash());
  tr.header("config", colouring_config_to_json(cfg).dump());

  const std::size_t targets = cfg.target.size();
  std::vector<Working> work(targets);
  run.colourings.resize(targets);
  for (unsigned n = 0; n < targets; ++n) {
    ColouringState& cs = run.colourings[n];
    cs.n = n;
    cs.k = minimal_colour_count(cfg.epsilon, n);
    if (cs.k > (std::uint64_t{1} << 24)) throw ScaleExceeded("colour count " + std::to_string(cs.k));
    cs.weight.assign(cs.k, Dyadic());
    cs.large_since.assign(cs.k, std::nullopt);
    cs.min_small_count = cs.k;
    work[n].x_lengths.resize(cs.k);
    work[n].members.resize(cs.k);
    for (std::size_t c = 0; c < cs.k; ++c) work[n].small.insert({kNoMember, -static_cast<std::int64_t>(c)});
    tr.add(0, "colouring[" + std::to_string(n) + "]", "init", "k=" + std::to_string(cs.k));
  }

  auto leave_x = [&](std::size_t idx) {
    for (unsigned n = 0; n < targets; ++n) {
      const std::int32_t c = run.colourings[n].colour[idx];
      if (c < 0) continue;
      Working& w = work[n];
      const bool small = !run.colourings[n].large_since[c];
      if (small) w.small.erase({w.r(c), -c});
      w.x_lengths[c].erase(w.x_lengths[c].find(static_cast<std::uint32_t>(run.domain.entry(idx).program.size())));
      if (small) w.small.insert({w.r(c), -c});
    }
  };

  std::size_t next_base = 0;
  for (std::uint64_t t = 0; t <= run.last_stage; ++t) {
    std::vector<std::pair<Bitstring, Bitstring>> arriving;  // (program, output)
    std::vector<std::pair<unsigned, std::vector<std::size_t>>> invalidated;

    for (unsigned n = 0; n < targets; ++n) {
      if (cfg.target[n] != t) continue;
      ColouringState& cs = run.colourings[n];
      std::int64_t j = -1;
      for (std::size_t c = 0; c < cs.k; ++c) {
        if (cs.large_since[c]) continue;
        if (j < 0 || cs.weight[c] > cs.weight[j]) j = static_cast<std::int64_t>(c);
      }
      if (j < 0) throw InvariantFailure("colouring " + std::to_string(n) + " has no small colour");
      cs.invalidated_colour = static_cast<std::uint32_t>(j);
      const Dyadic trigger_weight = cs.weight[j] + cs.weight[j];
      run.wt_a += trigger_weight;
      if (run.wt_a > cfg.epsilon) {
        throw BudgetViolation("invalidation weight " + run.wt_a.str() + " exceeds epsilon " + cfg.epsilon.str());
      }
      for (std::size_t idx : work[n].members[j]) {
        const auto& e = run.domain.entry(idx);
        const std::size_t len = e.program.size() - 1;
        if (len < run.slot_prefix.size()) throw BudgetViolation("request length below the slot prefix");
        Request req{e.output, len, std::nullopt};
        auto code = slot.request({e.output, len - run.slot_prefix.size(), std::nullopt});
        if (!code) throw BudgetViolation("invalidation slot overflow");
        Bitstring program = run.slot_prefix + *code;
        run.log.push_back({n, t, static_cast<std::uint32_t>(j), req, e.program, program});
        arriving.emplace_back(std::move(program), e.output);
      }
      invalidated.emplace_back(n, work[n].members[j]);
      tr.add(t, "colouring[" + std::to_string(n) + "]", "invalidate",
             "colour=" + std::to_string(j) + " members=" + std::to_string(work[n].members[j].size()),
             "weight=" + trigger_weight.str() + " wtA=" + run.wt_a.str());
    }

    while (next_base < base.size() && base[next_base].stage == t) {
      arriving.emplace_back(base[next_base].program, base[next_base].output);
      ++next_base;
    }
    std::sort(arriving.begin(), arriving.end());

    for (auto& [program, output] : arriving) {
      const std::uint32_t len = static_cast<std::uint32_t>(program.size());
      for (std::size_t gone : run.domain.add(program, output, t)) leave_x(gone);
      const std::size_t idx = run.domain.size() - 1;
      const bool in_x = run.domain.in_m(idx);
      for (unsigned n = 0; n < targets; ++n) {
        ColouringState& cs = run.colourings[n];
        Working& w = work[n];
        if (w.small.empty()) throw InvariantFailure("colouring " + std::to_string(n) + " has no small colour");
        const auto pick = *w.small.rbegin();
        const auto c = static_cast<std::size_t>(-pick.second);
        cs.colour.push_back(static_cast<std::int32_t>(c));
        w.members[c].push_back(idx);
        w.small.erase(pick);
        cs.weight[c] += Dyadic::pow2_neg(static_cast<int>(len));
        if (in_x) w.x_lengths[c].insert(len);
        if (cs.weight[c].at_most_reciprocal(cs.k)) {
          w.small.insert({w.r(c), -static_cast<std::int64_t>(c)});
        } else {
          cs.large_since[c] = t;
          tr.add(t, "colouring[" + std::to_string(n) + "]", "large", "colour=" + std::to_string(c),
                 "weight=" + cs.weight[c].str());
        }
      }
      tr.add(t, "U", "enter", program.token() + " " + output.token(), "colours=" + list_colours(run.colourings, idx));
    }

    for (const auto& [n, members] : invalidated) {
      for (std::size_t idx : members) {
        if (run.domain.in_m(idx)) {
          throw InvariantFailure("invalidated program " + run.domain.entry(idx).program.token() +
                                 " is still a minimal code");
        }
      }
    }
    for (auto& cs : run.colourings) {
      cs.min_small_count = std::min<std::uint64_t>(cs.min_small_count, work[cs.n].small.size());
    }
  }
  return run;
}

Recovery colouring_recover(const ColouringRun& run, unsigned n) {
  if (n >= run.colourings.size()) throw IndexOutOfScale("no colouring for n = " + std::to_string(n));
  const ColouringState& cs = run.colourings[n];
  constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> first_x(cs.k, kNever);
  for (std::size_t idx = 0; idx < run.domain.size(); ++idx) {
    if (!run.domain.in_m(idx)) continue;
    const auto c = static_cast<std::size_t>(cs.colour[idx]);
    first_x[c] = std::min(first_x[c], run.domain.entry(idx).stage);
  }
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < cs.k; ++c) {
    t = std::max(t, std::min(cs.large_since[c].value_or(kNever), first_x[c]));
  }
  if (t > run.last_stage) {
    throw NoSuchStage("colouring " + std::to_string(n) + ": the final minimal codes miss a small colour");
  }
  const auto& entry = run.config.target[n];
  return {entry.has_value() && *entry <= t, t};
}

void colouring_audit(ColouringRun& run) {
  Trace& tr = run.trace;
  const std::uint64_t end = run.last_stage;
  std::size_t correct = 0, recovered = 0;
  for (unsigned n = 0; n < run.colourings.size(); ++n) {
    const bool truth = run.config.target[n].has_value() && *run.config.target[n] <= end;
    try {
      const Recovery r = colouring_recover(run, n);
      ++recovered;
      if (r.bit == truth) ++correct;
      tr.add(end, "recover[" + std::to_string(n) + "]", "guess", "bit=" + std::to_string(r.bit),
             "stage=" + std::to_string(r.stage) + " truth=" + std::to_string(truth));
    } catch (const NoSuchStage& e) {
      tr.add(end, "recover[" + std::to_string(n) + "]", "no-stage", "", e.what());
    }
  }
  const std::size_t total = run.colourings.size();
  tr.audit("recovery", correct == total,
           "correct=" + std::to_string(correct) + "/" + std::to_string(total) +
               " decided=" + std::to_string(recovered));
  tr.audit("wtA<=epsilon", run.wt_a <= run.config.epsilon,
           "wtA=" + run.wt_a.str() + " epsilon=" + run.config.epsilon.str());

  bool trigger_ok = true;
  std::map<unsigned, Dyadic> per_trigger;
  for (const auto& inv : run.log) per_trigger[inv.n] += Dyadic::pow2_neg(static_cast<int>(inv.request.length));
  std::ostringstream trig;
  for (const auto& [n, w] : per_trigger) {
    const std::uint64_t k = run.colourings[n].k;
    // 2/k bound: w ≤ 2/k ⇔ w/2 ≤ 1/k
    if (!w.shifted_down(1).at_most_reciprocal(k)) trigger_ok = false;
    trig << "n" << n << "=" << w.str() << " ";
  }
  tr.audit("trigger-weight<=2/k", trigger_ok, trig.str().empty() ? "none" : trig.str());

  bool small_ok = true, k_ok = true;
  std::uint64_t min_small = std::numeric_limits<std::uint64_t>::max();
  for (const auto& cs : run.colourings) {
    min_small = std::min(min_small, cs.min_small_count);
    if (cs.min_small_count == 0) small_ok = false;
    const Dyadic x = run.config.epsilon.shifted_down(static_cast<int>(cs.n) + 2);
    if (x.at_most_reciprocal(cs.k) || (cs.k > 1 && !x.at_most_reciprocal(cs.k - 1))) k_ok = false;
  }
  tr.audit("small-colour-exists", small_ok,
           "stages=" + std::to_string(end + 1) +
               " min_small=" + (run.colourings.empty() ? std::string("-") : std::to_string(min_small)));
  tr.audit("k-minimal", k_ok, "colourings=" + std::to_string(run.colourings.size()));
}

}  // namespace klab
