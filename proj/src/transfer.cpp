#include "klab/transfer.hpp"

#include <algorithm>
#include <set>

#include "klab/errors.hpp"

namespace klab {

using nlohmann::json;

json transfer_config_to_json(const TransferConfig& cfg) {
  json j = {{"kind", "transfer"},
            {"registry", cfg.registry.to_json()},
            {"universe", cfg.universe},
            {"rounds", cfg.rounds},
            {"smax", cfg.smax}};
  if (cfg.x) j["x"] = *cfg.x;
  return j;
}

TransferConfig transfer_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  TransferConfig cfg;
  try {
    cfg.registry = resolve_registry(j.at("registry"), base_dir);
    cfg.universe = j.value("universe", cfg.universe);
    cfg.rounds = j.value("rounds", cfg.rounds);
    cfg.smax = j.value("smax", cfg.smax);
    if (j.contains("x")) cfg.x = j.at("x").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("transfer config: ") + e.what());
  }
  if (cfg.universe < 2 || cfg.universe > (1u << 16)) throw ConfigError("transfer universe must lie in [2, 65536]");
  if (cfg.rounds == 0) throw ConfigError("transfer needs at least one round");
  return cfg;
}

TransferRun semilow_transfer(const TransferConfig& cfg, const ComplexityEngine& engine,
                             const TransferOracle& oracle) {
  TransferRun run;
  run.config = cfg;
  const std::uint64_t N = cfg.universe;
  const std::uint64_t H = N / 2;
  run.tail_start = H;
  if (cfg.x) {
    std::set<std::uint64_t> xs(cfg.x->begin(), cfg.x->end());
    for (auto n : xs) {
      if (n >= N) throw IndexOutOfScale("X member " + std::to_string(n) + " outside the universe");
    }
    run.x.assign(xs.begin(), xs.end());
  } else {
    for (std::uint64_t n = 0; n < N; ++n) run.x.push_back(n);
  }
  std::vector<bool> in_x(N, false);
  for (auto n : run.x) in_x[n] = true;
  if (std::none_of(run.x.begin(), run.x.end(), [H](std::uint64_t n) { return n >= H; })) {
    throw ConfigError("X has no members in the tail window");
  }

  Trace& tr = run.trace;
  tr.header("simulation", "transfer");
  tr.header("registry_hash", engine.registry_hash());
  tr.header("config", transfer_config_to_json(cfg).dump());

  run.outputs = engine.u().outputs();
  const std::size_t M = run.outputs.size();
  // kc[n][i] = K(outputs[i] | n)
  std::vector<std::vector<std::uint32_t>> kc(N, std::vector<std::uint32_t>(M));
  for (std::uint64_t n = 0; n < N; ++n) {
    auto ledger = engine.conditional(from_rank(n));
    for (std::size_t i = 0; i < M; ++i) kc[n][i] = ledger->value(run.outputs[i], kAllStages).value;
  }

  std::uint32_t largest_tail = 0;
  for (std::size_t i = 0; i < M; ++i) {
    std::optional<std::uint32_t> tm = 0;
    for (std::uint64_t n = H; n < N; ++n) {
      if (!in_x[n]) continue;
      if (kc[n][i] == kInfinity) {
        tm.reset();
        break;
      }
      tm = std::max(*tm, kc[n][i]);
    }
    run.tail_max[run.outputs[i]] = tm;
    if (tm) largest_tail = std::max(largest_tail, *tm);
  }
  run.smax = cfg.smax ? cfg.smax : largest_tail;
  if (run.smax > static_cast<std::uint32_t>(Dyadic::kMaxExponent)) {
    throw ScaleExceeded("smax " + std::to_string(run.smax) + " exceeds the dyadic range");
  }

  auto in_a = [&](std::uint64_t n, std::size_t i, std::uint32_t s) { return kc[n][i] <= s; };
  std::vector<Dyadic> cur(N);  // wt(B ∪ A_n)
  run.wt_a.assign(N, Dyadic());
  for (std::uint64_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::uint32_t s = kc[n][i]; kc[n][i] != kInfinity && s <= run.smax; ++s) {
        run.wt_a[n] += Dyadic::pow2_neg(static_cast<int>(s));
      }
    }
    cur[n] = run.wt_a[n];
  }

  const Dyadic two = Dyadic::one() + Dyadic::one();
  std::set<std::pair<std::size_t, std::uint32_t>> in_b;
  std::uint64_t m = 0;
  for (unsigned r = 0; r < cfg.rounds; ++r) {
    const std::uint64_t theta = cfg.rounds == 1 ? H : std::min<std::uint64_t>(H, (r * H) / (cfg.rounds - 1));
    std::uint64_t added = 0;
    for (std::size_t i = 0; i < M; ++i) {
      for (std::uint32_t s = 0; s <= run.smax; ++s, ++m) {
        const TransferPair pair{run.outputs[i], s};
        const Dyadic unit = Dyadic::pow2_neg(static_cast<int>(s));
        const bool fresh = !in_b.count({i, s});
        bool intersects = false;
        if (fresh) {
          for (std::uint64_t n = theta; n < N && !intersects; ++n) {
            if (in_x[n] && cur[n] + (in_a(n, i, s) ? Dyadic() : unit) > two) intersects = true;
          }
        }
        if (oracle && oracle(pair, theta) != intersects) {
          throw OracleInconsistent("oracle disagrees on (" + pair.sigma.token() + ", " + std::to_string(s) +
                                   ") at window start " + std::to_string(theta));
        }
        if (!fresh || intersects) continue;
        in_b.insert({i, s});
        run.b.push_back(pair);
        run.wt_b += unit;
        ++added;
        for (std::uint64_t n = 0; n < N; ++n) {
          if (!in_a(n, i, s)) cur[n] += unit;
        }
        for (std::uint64_t n = theta; n < N; ++n) {
          if (in_x[n]) run.max_window_weight = std::max(run.max_window_weight, cur[n]);
        }
        tr.add(m, "B", "add", pair.sigma.token() + " " + std::to_string(s), "wtB=" + run.wt_b.str());
      }
    }
    tr.add(m, "listing", "round", "round=" + std::to_string(r) + " window=" + std::to_string(theta),
           "added=" + std::to_string(added) + " wtB=" + run.wt_b.str());
  }
  run.listing_length = m;
  return run;
}

void transfer_audit(TransferRun& run) {
  Trace& tr = run.trace;
  const Dyadic two = Dyadic::one() + Dyadic::one();
  tr.audit("wt(B)<=2", run.wt_b <= two, "wtB=" + run.wt_b.str());
  tr.audit("wt(B∪A_n)<=2", run.max_window_weight <= two, "max=" + run.max_window_weight.str());
  Dyadic max_a;
  for (const auto& w : run.wt_a) max_a = std::max(max_a, w);
  tr.audit("wt(A_n)<2", max_a < two, "max=" + max_a.str());

  std::set<TransferPair> b(run.b.begin(), run.b.end());
  std::size_t required = 0, missing = 0, unbounded = 0;
  for (const auto& [sigma, tm] : run.tail_max) {
    if (!tm) {
      ++unbounded;
      continue;
    }
    ++required;
    if (!b.count({sigma, *tm})) {
      ++missing;
      tr.add(run.listing_length, "B", "miss", sigma.token() + " " + std::to_string(*tm));
    }
  }
  tr.audit("tail-max-in-B", missing == 0,
           "required=" + std::to_string(required) + " missing=" + std::to_string(missing) +
               " unbounded=" + std::to_string(unbounded) + " smax=" + std::to_string(run.smax) +
               " tail=[" + std::to_string(run.tail_start) + "," + std::to_string(run.config.universe) + ")");
}

}  // namespace klab
