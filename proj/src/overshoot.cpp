#include "klab/overshoot.hpp"

#include <algorithm>
#include <set>

#include "klab/enumerate.hpp"
#include "klab/errors.hpp"
#include "klab/kc.hpp"

namespace klab {

using nlohmann::json;

json overshoot_config_to_json(const OvershootConfig& cfg) {
  json j = {{"kind", "overshoot"}, {"registry", cfg.base.to_json()}, {"d", cfg.d}, {"k", cfg.k}};
  if (cfg.x) {
    json xs = json::array();
    for (const auto& s : *cfg.x) xs.push_back(s.token());
    j["x"] = xs;
  }
  return j;
}

OvershootConfig overshoot_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  OvershootConfig cfg;
  try {
    cfg.base = resolve_registry(j.at("registry"), base_dir);
    cfg.d = j.value("d", 0u);
    cfg.k = j.at("k").get<unsigned>();
    if (j.contains("x")) {
      cfg.x.emplace();
      for (const auto& s : j.at("x")) cfg.x->push_back(Bitstring::from_token(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("overshoot config: ") + e.what());
  }
  return cfg;
}

namespace {

constexpr unsigned kMaxRounds = 32;

std::vector<OvershootRequest> collect(const StageLedger& ledger, unsigned k, unsigned d) {
  std::vector<OvershootRequest> out;
  for (const auto& n : ledger.outputs()) {
    const auto& imps = ledger.improvements(n);
    const std::size_t final_len = ledger.events()[imps.back().event_index].program.size();
    for (const auto& imp : imps) {
      const Bitstring& p = ledger.events()[imp.event_index].program;
      if (p.size() > final_len + k + d) out.push_back({n, p, imp.stage, p.size() - d, {}});
    }
  }
  std::sort(out.begin(), out.end(), [](const OvershootRequest& a, const OvershootRequest& b) {
    if (a.stage != b.stage) return a.stage < b.stage;
    if (a.nstar_s != b.nstar_s) return a.nstar_s < b.nstar_s;
    return a.n < b.n;
  });
  return out;
}

}  // namespace

OvershootRun overshoot_penalize(const OvershootConfig& cfg, unsigned threads) {
  OvershootRun run;
  run.config = cfg;
  cfg.base.validate();
  run.slot_prefix = encode_slot(cfg.base.slots.size());
  for (const auto& s : cfg.base.slots) {
    if (!s.prefix.incomparable_with(run.slot_prefix)) {
      throw ConfigError("slot prefix " + run.slot_prefix.token() + " collides with slot " + s.name);
    }
  }
  run.epsilon = Dyadic::pow2_neg(static_cast<int>(run.slot_prefix.size()));
  if (!(Dyadic::pow2_neg(static_cast<int>(cfg.k)) < run.epsilon)) {
    throw ConfigError("need 2^-k < epsilon = " + run.epsilon.str());
  }
  Trace& tr = run.trace;
  tr.header("simulation", "overshoot");
  tr.header("registry_hash", cfg.base.hash());
  tr.header("config", overshoot_config_to_json(cfg).dump());

  const std::vector<HaltEvent> base = enumerate_domain(cfg.base, kAllStages, threads);
  std::vector<OvershootRequest> requests;
  for (unsigned round = 1;; ++round) {
    if (round > kMaxRounds) throw InvariantFailure("overshoot requests did not settle");
    KcBuilder slot;
    std::vector<HaltEvent> events = base;
    Dyadic weight;
    for (auto& r : requests) {
      auto code = slot.request({r.nstar_s, r.length - run.slot_prefix.size(), std::nullopt});
      if (!code) throw BudgetViolation("overshoot slot overflow at weight " + weight.str());
      r.code = run.slot_prefix + *code;
      weight += Dyadic::pow2_neg(static_cast<int>(r.length));
      events.push_back({r.code, std::nullopt, r.nstar_s, r.stage, 0});
    }
    std::sort(events.begin(), events.end(), canonical_before);
    auto ledger = std::make_shared<const StageLedger>(std::move(events));
    std::vector<OvershootRequest> next = collect(*ledger, cfg.k, cfg.d);
    tr.add(0, "penalizer", "round", "round=" + std::to_string(round),
           "requests=" + std::to_string(requests.size()) + " next=" + std::to_string(next.size()));
    if (next == requests) {
      run.iterations = round;
      run.requests = std::move(requests);
      run.weight = weight;
      run.ledger = std::move(ledger);
      break;
    }
    requests = std::move(next);
  }

  for (const auto& r : run.requests) {
    run.weight_per_n[r.n] += Dyadic::pow2_neg(static_cast<int>(r.length));
    tr.add(r.stage, "penalizer", "request", "n=" + r.n.token() + " nstar_s=" + r.nstar_s.token(),
           "length=" + std::to_string(r.length) + " code=" + r.code.token());
  }

  const StageLedger& ledger = *run.ledger;
  std::map<Bitstring, Bitstring> was_nstar_of;  // program -> output
  for (const auto& n : ledger.outputs()) {
    for (const auto& imp : ledger.improvements(n)) was_nstar_of.emplace(ledger.events()[imp.event_index].program, n);
  }
  auto k_final = [&](const Bitstring& s) { return ledger.value(s, kAllStages); };
  std::vector<Bitstring> x;
  if (cfg.x) {
    x = *cfg.x;
  } else {
    for (const auto& [p, n] : was_nstar_of) {
      const Complexity kp = k_final(p);
      if (!kp.finite() || kp.value + cfg.d > p.size()) x.push_back(p);
    }
  }
  for (const auto& sigma : x) {
    auto it = was_nstar_of.find(sigma);
    if (it == was_nstar_of.end()) continue;
    const Complexity kn = k_final(it->second);
    run.inferences.push_back({sigma, it->second,
                              static_cast<std::int64_t>(sigma.size()) - cfg.k - cfg.d, kn.value,
                              kn.witness == sigma});
  }
  return run;
}

void overshoot_audit(OvershootRun& run) {
  Trace& tr = run.trace;
  const StageLedger& ledger = *run.ledger;
  const unsigned k = run.config.k, d = run.config.d;

  bool per_n_ok = true;
  Dyadic bound_sum;
  for (const auto& [n, w] : run.weight_per_n) {
    const Complexity kn = ledger.value(n, kAllStages);
    const Dyadic bound = Dyadic::pow2_neg(static_cast<int>(kn.value + k));
    if (w > bound) per_n_ok = false;
  }
  for (const auto& n : ledger.outputs()) {
    bound_sum += Dyadic::pow2_neg(static_cast<int>(ledger.value(n, kAllStages).value + k));
  }
  tr.audit("per-n-weight<=2^-(|n*|+k)", per_n_ok, "outputs=" + std::to_string(run.weight_per_n.size()));
  tr.audit("total-weight<2^-k", run.weight < Dyadic::pow2_neg(static_cast<int>(k)) && run.weight <= bound_sum,
           "weight=" + run.weight.str() + " bound=" + bound_sum.str());
  tr.audit("weight<=epsilon", run.weight <= run.epsilon, "epsilon=" + run.epsilon.str());

  std::size_t short_ok = 0;
  for (const auto& r : run.requests) {
    if (ledger.value(r.nstar_s, kAllStages).value <= r.length) ++short_ok;
  }
  tr.audit("K(n*_s)<=|n*_s|-d", short_ok == run.requests.size(),
           std::to_string(short_ok) + "/" + std::to_string(run.requests.size()));

  std::size_t held = 0, in_n = 0;
  for (const auto& inf : run.inferences) {
    if (static_cast<std::int64_t>(inf.actual) >= inf.inferred_min) ++held;
    if (inf.in_final_n) ++in_n;
    tr.add(0, "infer", "bound", "sigma=" + inf.sigma.token() + " n=" + inf.n.token(),
           "inferred>=" + std::to_string(inf.inferred_min) + " actual=" + std::to_string(inf.actual) +
               " in_N=" + std::to_string(inf.in_final_n));
  }
  tr.audit("inferred-bounds-hold", held == run.inferences.size(),
           std::to_string(held) + "/" + std::to_string(run.inferences.size()) + " in_N=" + std::to_string(in_n) +
               " d=" + std::to_string(d));
}

}  // namespace klab
