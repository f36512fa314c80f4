#include "klab/priority.hpp"

#include <algorithm>
#include <random>

#include "klab/enumerate.hpp"
#include "klab/errors.hpp"

namespace klab {

using nlohmann::json;

namespace {

const Bitstring kVFrame("000");
const Bitstring kQFrame("1");

const char* directive_name(Directive d) { return d == Directive::kMeet ? "meet" : "avoid"; }

}  // namespace

bool WSet::contains(const Bitstring& s, std::uint64_t stage) const {
  switch (kind) {
    case Kind::kEmpty:
      return false;
    case Kind::kAll:
      return stage >= from_stage;
    case Kind::kResidue:
      return stage >= from_stage && s.size() < 63 && rank_of(s) % modulus == residue;
    case Kind::kExplicit: {
      auto it = members.find(s);
      return it != members.end() && it->second <= stage;
    }
  }
  return false;
}

json WSet::to_json() const {
  switch (kind) {
    case Kind::kEmpty:
      return {{"kind", "empty"}};
    case Kind::kAll:
      return {{"kind", "all"}, {"from", from_stage}};
    case Kind::kResidue:
      return {{"kind", "residue"}, {"modulus", modulus}, {"residue", residue}, {"from", from_stage}};
    case Kind::kExplicit: {
      json m = json::array();
      for (const auto& [s, t] : members) m.push_back({s.token(), t});
      return {{"kind", "explicit"}, {"members", m}};
    }
  }
  return {};
}

WSet WSet::from_json(const json& j) {
  WSet w;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "empty") {
    w.kind = Kind::kEmpty;
  } else if (kind == "all") {
    w.kind = Kind::kAll;
    w.from_stage = j.value("from", std::uint64_t{0});
  } else if (kind == "residue") {
    w.kind = Kind::kResidue;
    w.modulus = j.at("modulus").get<std::uint64_t>();
    w.residue = j.at("residue").get<std::uint64_t>();
    w.from_stage = j.value("from", std::uint64_t{0});
    if (w.modulus == 0 || w.residue >= w.modulus) throw ConfigError("residue W-set needs 0 <= residue < modulus");
  } else if (kind == "explicit") {
    w.kind = Kind::kExplicit;
    for (const auto& m : j.at("members")) {
      w.members[Bitstring::from_token(m.at(0).get<std::string>())] = m.at(1).get<std::uint64_t>();
    }
  } else {
    throw ConfigError("unknown W-set kind '" + kind + "'");
  }
  return w;
}

json priority_config_to_json(const PriorityConfig& cfg) {
  json w = json::array();
  for (const auto& s : cfg.w) w.push_back(s.to_json());
  return {{"kind", "priority"},         {"registry", cfg.v.to_json()}, {"w", w},
          {"requirements", cfg.requirements}, {"stages", cfg.stages},      {"window", cfg.window}};
}

PriorityConfig priority_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  PriorityConfig cfg;
  try {
    if (j.contains("registry")) {
      cfg.v = resolve_registry(j.at("registry"), base_dir);
    } else {
      const json& c = j.at("churn");
      cfg.v = make_churn_registry(c.at("seed").get<std::uint64_t>(), c.at("outputs").get<std::size_t>(),
                                  c.at("stages").get<std::uint64_t>(), c.at("min_length").get<std::size_t>(),
                                  c.at("max_length").get<std::size_t>());
    }
    for (const auto& w : j.value("w", json::array())) cfg.w.push_back(WSet::from_json(w));
    cfg.requirements = j.value("requirements", cfg.requirements);
    cfg.stages = j.value("stages", cfg.stages);
    cfg.window = j.value("window", cfg.window);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("priority config: ") + e.what());
  }
  return cfg;
}

Registry make_churn_registry(std::uint64_t seed, std::size_t outputs, std::uint64_t stages,
                             std::size_t min_length, std::size_t max_length) {
  if (min_length == 0 || min_length > max_length || max_length > 40) {
    throw ConfigError("churn lengths must satisfy 1 <= min <= max <= 40");
  }
  if (stages < 2) throw ConfigError("churn registry needs at least two stages");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
  };
  struct Pending {
    std::uint64_t stage;
    std::size_t length;
    Bitstring output;
  };
  std::vector<Pending> pending;
  const std::uint64_t first_end = std::max<std::uint64_t>(1, stages * 9 / 10);
  for (std::size_t i = 0; i < outputs; ++i) {
    const Bitstring out = from_rank(i + 1);
    const std::uint64_t s1 = uniform(1, first_end);
    const auto len = static_cast<std::size_t>(uniform(min_length, max_length));
    pending.push_back({s1, len, out});
    if (len > min_length && uniform(0, 2) == 0) {
      const auto shorter = static_cast<std::size_t>(uniform(std::max(min_length, len - 3), len - 1));
      pending.push_back({uniform(s1 + 1, std::max(s1 + 1, stages * 19 / 20)), shorter, out});
    }
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const Pending& a, const Pending& b) { return a.stage < b.stage; });
  KcBuilder kc;
  std::vector<TableEntry> entries;
  for (const auto& p : pending) {
    auto code = kc.request({p.output, p.length, std::nullopt});
    if (code) entries.push_back({*code, p.output, std::nullopt, std::min(p.stage, stages)});
  }
  Registry r;
  r.budget = ExecutionBudget(max_length, stages, Schedule::steps(stages));
  r.slots.push_back({"churn", Bitstring(), MachineSpec::request_table(std::move(entries))});
  return r;
}

PriorityRun priority_construct(const PriorityConfig& cfg, unsigned threads) {
  PriorityRun run;
  run.config = cfg;
  cfg.v.validate();
  Trace& tr = run.trace;
  tr.header("simulation", "priority");
  tr.header("registry_hash", cfg.v.hash());
  tr.header("config", priority_config_to_json(cfg).dump());

  for (unsigned q = 0; q < cfg.requirements; ++q) {
    StrategyState st;
    st.is_r = q % 2 == 0;
    st.index = q / 2;
    run.strategies.push_back(st);
  }
  run.counters.max_w.assign((cfg.requirements + 1) / 2, Dyadic());
  const std::uint64_t last = cfg.stages == 0 ? 0 : cfg.stages - 1;
  run.last_stage = last;

  const std::vector<HaltEvent> v_events = enumerate_domain(cfg.v, last, threads);
  static const WSet kEmptyW;
  auto w_of = [&](unsigned e) -> const WSet& { return e < cfg.w.size() ? cfg.w[e] : kEmptyW; };

  KcBuilder q_builder;
  std::uint64_t largest_seen = 0;
  std::vector<std::pair<Bitstring, Bitstring>> pending_q;
  std::size_t next_v = 0;
  const Dyadic half = Dyadic::pow2_neg(1);

  auto add_program = [&](Bitstring program, Bitstring output, std::uint64_t s) {
    if (output.size() < 63) largest_seen = std::max(largest_seen, rank_of(output));
    const auto before = run.domain.nstar(output);
    run.domain.add(std::move(program), output, s);
    const auto after = run.domain.nstar(output);
    if (before != after) {
      if (before) run.n_set.erase(run.domain.entry(*before).program);
      run.n_set.insert(run.domain.entry(*after).program);
    }
  };

  auto claim = [&](std::size_t q, const Bitstring& sigma, std::uint64_t s) {
    StrategyState& st = run.strategies[q];
    if (auto it = run.owner.find(sigma); it != run.owner.end()) {
      StrategyState& loser = run.strategies[it->second];
      loser.claims.erase(sigma);
      if (!loser.is_r) loser.last_change = s;
      tr.add(s, loser.name(), "stolen", sigma.token(), "by=" + st.name());
    }
    run.owner[sigma] = q;
    st.claims.insert(sigma);
    if (!st.is_r) st.last_change = s;
    auto [hc, first_claim] = run.highest_claimer.try_emplace(sigma, q);
    if (!first_claim) hc->second = std::min(hc->second, q);
    std::string ledger;
    if (first_claim) {
      run.ever_claimed += Dyadic::pow2_neg(static_cast<int>(sigma.size()));
      if (run.ever_claimed > half) {
        throw BudgetViolation("ever-claimed weight " + run.ever_claimed.str() + " exceeds 1/2");
      }
      const std::uint64_t k = largest_seen + 1;
      largest_seen = k;
      const Request req{from_rank(k), sigma.size() - 1, std::nullopt};
      auto code = q_builder.request(req);
      if (!code) throw BudgetViolation("Q request overflow");
      run.q_grants.push_back({req, *code});
      pending_q.emplace_back(kQFrame + *code, req.output);
      ledger = "k=" + std::to_string(k) + " q=" + code->token() + " ever=" + run.ever_claimed.str();
    }
    tr.add(s, st.name(), "claim", sigma.token(), ledger);
  };

  // Least string of N_s with length ≥ floor not claimed by a strategy of
  // priority < q, optionally inside W_e at stage s.
  auto find_claimable = [&](std::size_t q, std::size_t floor, const WSet* w, std::uint64_t s) -> const Bitstring* {
    for (auto it = run.n_set.lower_bound(Bitstring::repeat('0', floor)); it != run.n_set.end(); ++it) {
      auto o = run.owner.find(*it);
      if (o != run.owner.end() && o->second <= q) continue;
      if (w && !w->contains(*it, s)) continue;
      return &*it;
    }
    return nullptr;
  };

  for (std::uint64_t s = 0; cfg.stages > 0 && s <= last; ++s) {
    std::vector<std::pair<Bitstring, Bitstring>> arriving = std::move(pending_q);
    pending_q.clear();
    while (next_v < v_events.size() && v_events[next_v].stage == s) {
      arriving.emplace_back(kVFrame + v_events[next_v].program, v_events[next_v].output);
      ++next_v;
    }
    std::sort(arriving.begin(), arriving.end());
    for (auto& [p, o] : arriving) add_program(p, o, s);

    for (auto it = run.owner.begin(); it != run.owner.end();) {
      if (run.n_set.count(it->first)) {
        ++it;
        continue;
      }
      StrategyState& st = run.strategies[it->second];
      st.claims.erase(it->first);
      if (!st.is_r) st.last_change = s;
      tr.add(s, st.name(), "release", it->first.token(), "left-N");
      it = run.owner.erase(it);
    }

    const std::size_t considered = std::min<std::uint64_t>(s, cfg.requirements);
    for (std::size_t q = 0; q < considered; ++q) {
      StrategyState& st = run.strategies[q];
      if (!st.is_r) {
        if (st.claims.empty()) {
          if (const Bitstring* sigma = find_claimable(q, st.floor(), nullptr, s)) claim(q, Bitstring(*sigma), s);
        }
        continue;
      }
      const unsigned e = st.index;
      Dyadic w;
      for (const auto& c : st.claims) w += Dyadic::pow2_neg(static_cast<int>(c.size()));
      const Dyadic threshold = Dyadic::pow2_neg(static_cast<int>(2 * e + 4));
      Directive d = st.directive;
      if (w.is_zero()) {
        d = Directive::kAvoid;
      } else if (w > threshold) {
        d = Directive::kMeet;
      } else if (!st.considered) {
        throw InvariantFailure(st.name() + " holds claims at its first consideration");
      }
      if (st.directive == Directive::kMeet && d == Directive::kAvoid && !w.is_zero()) {
        ++run.counters.flip_violations;
      }
      if (d != st.directive || st.directive_log.empty()) {
        if (d != st.directive) {
          st.last_change = s;
          tr.add(s, st.name(), "directive", directive_name(d), "w=" + w.str());
        }
        st.directive = d;
        st.directive_log.emplace_back(s, d);
      }
      run.counters.max_w[e] = std::max(run.counters.max_w[e], w);
      if (d == Directive::kAvoid) {
        if (const Bitstring* sigma = find_claimable(q, st.floor(), &w_of(e), s)) claim(q, Bitstring(*sigma), s);
      }
    }
    for (std::size_t q = 0; q < run.strategies.size(); ++q) run.strategies[q].considered = q < considered;

    // Per-stage invariants.
    ++run.counters.stages;
    std::size_t held = 0;
    for (std::size_t q = 0; q < run.strategies.size(); ++q) {
      const StrategyState& st = run.strategies[q];
      held += st.claims.size();
      Dyadic w;
      for (const auto& c : st.claims) {
        auto o = run.owner.find(c);
        if (o == run.owner.end() || o->second != q) ++run.counters.single_claimer_violations;
        if (c.size() < st.floor()) ++run.counters.floor_violations;
        if (st.is_r && !w_of(st.index).contains(c, s)) ++run.counters.floor_violations;
        w += Dyadic::pow2_neg(static_cast<int>(c.size()));
      }
      if (st.is_r) {
        run.counters.max_w[st.index] = std::max(run.counters.max_w[st.index], w);
        if (w > Dyadic::pow2_neg(static_cast<int>(2 * st.index + 3))) ++run.counters.w_bound_violations;
      }
      if (!st.is_r && st.claims.size() > 1) ++run.counters.single_claimer_violations;
    }
    if (held != run.owner.size()) ++run.counters.single_claimer_violations;
    run.counters.max_ever_claimed = std::max(run.counters.max_ever_claimed, run.ever_claimed);
  }

  for (const auto& sigma : run.n_set) {
    auto hc = run.highest_claimer.find(sigma);
    if (hc == run.highest_claimer.end()) continue;
    const StrategyState& st = run.strategies[hc->second];
    if (!st.is_r || st.directive == Directive::kMeet) run.x.insert(sigma);
  }
  return run;
}

SemilowAnswer semilow_answer(const PriorityRun& run, unsigned e) {
  SemilowAnswer ans;
  const WSet* w = e < run.config.w.size() ? &run.config.w[e] : nullptr;
  std::vector<const StrategyState*> examined;
  for (const auto& st : run.strategies) {
    const bool relevant = st.is_r ? st.index <= e : st.index < e;
    if (!relevant) continue;
    ans.settled_at = std::max(ans.settled_at, st.last_change);
    if (!st.is_r || st.directive == Directive::kMeet) examined.push_back(&st);
  }
  if (ans.settled_at + run.config.window > run.last_stage) {
    throw Unsettled("strategies up to R" + std::to_string(e) + " changed at stage " +
                    std::to_string(ans.settled_at) + ", within the last " + std::to_string(run.config.window) +
                    " stages");
  }
  for (const auto* st : examined) {
    for (const auto& sigma : st->claims) {
      if (w && w->contains(sigma, run.last_stage)) ans.intersects = true;
    }
  }
  return ans;
}

bool x_meets_w(const PriorityRun& run, unsigned e) {
  if (e >= run.config.w.size()) return false;
  const WSet& w = run.config.w[e];
  return std::any_of(run.x.begin(), run.x.end(), [&](const Bitstring& s) { return w.contains(s, run.last_stage); });
}

void priority_audit(PriorityRun& run, unsigned answer_up_to) {
  Trace& tr = run.trace;
  const PriorityCounters& c = run.counters;
  const std::string stages = "stages=" + std::to_string(c.stages);
  tr.audit("w(e,s)<=2^-(2e+3)", c.w_bound_violations == 0, stages + " violations=" + std::to_string(c.w_bound_violations));
  std::string ws;
  for (std::size_t e = 0; e < c.max_w.size(); ++e) ws += " R" + std::to_string(e) + "=" + c.max_w[e].str();
  tr.add(run.last_stage, "ledger", "max-w", ws.empty() ? "-" : ws.substr(1));
  tr.audit("ever-claimed<=1/2", c.max_ever_claimed <= Dyadic::pow2_neg(1), "max=" + c.max_ever_claimed.str());
  tr.audit("single-claimer", c.single_claimer_violations == 0,
           stages + " violations=" + std::to_string(c.single_claimer_violations));
  tr.audit("length-floors", c.floor_violations == 0, stages + " violations=" + std::to_string(c.floor_violations));
  tr.audit("flip-after-total-loss", c.flip_violations == 0, "violations=" + std::to_string(c.flip_violations));

  std::string flips;
  for (const auto& st : run.strategies) {
    if (!st.is_r) continue;
    std::size_t changes = 0;
    for (std::size_t i = 1; i < st.directive_log.size(); ++i) changes += st.directive_log[i].second != st.directive_log[i - 1].second;
    flips += " " + st.name() + "=" + std::to_string(changes) + ":" + directive_name(st.directive);
    tr.add(run.last_stage, st.name(), "ultimate", directive_name(st.directive),
           "changes=" + std::to_string(changes) + " claims=" + std::to_string(st.claims.size()));
  }
  for (const auto& st : run.strategies) {
    if (st.is_r) continue;
    tr.add(run.last_stage, st.name(), "ultimate", st.claims.empty() ? "-" : st.claims.begin()->token(),
           "last_change=" + std::to_string(st.last_change));
  }
  std::size_t agree = 0, decided = 0;
  for (unsigned e = 0; e <= answer_up_to; ++e) {
    const bool truth = x_meets_w(run, e);
    try {
      const SemilowAnswer a = semilow_answer(run, e);
      ++decided;
      if (a.intersects == truth) ++agree;
      tr.add(run.last_stage, "answer", "R" + std::to_string(e), a.intersects ? "intersects" : "disjoint",
             "settled=" + std::to_string(a.settled_at) + " truth=" + (truth ? "intersects" : "disjoint"));
    } catch (const Unsettled& u) {
      tr.add(run.last_stage, "answer", "R" + std::to_string(e), "unsettled", u.what());
    }
  }
  tr.audit("semilow-answers", agree == answer_up_to + 1,
           "agree=" + std::to_string(agree) + "/" + std::to_string(answer_up_to + 1) +
               " decided=" + std::to_string(decided) + " |X|=" + std::to_string(run.x.size()) +
               " directives:" + flips);
}

}  // namespace klab
