#include "klab/engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "klab/errors.hpp"

namespace klab {

std::string render_value(std::uint32_t value) {
  return value == kInfinity ? std::string("inf") : std::to_string(value);
}

StageLedger::StageLedger(std::vector<HaltEvent> events) : events_(std::move(events)) {
  omega_prefix_.reserve(events_.size() + 1);
  omega_prefix_.emplace_back();
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const HaltEvent& e = events_[i];
    if (i > 0 && !canonical_before(events_[i - 1], e)) {
      throw std::invalid_argument("halt events are not in canonical order at " + e.program.token());
    }
    omega_prefix_.push_back(omega_prefix_.back() + Dyadic::pow2_neg(static_cast<int>(e.program.size())));
    auto& imps = improvements_[e.output];
    if (imps.empty() || e.program.size() < events_[imps.back().event_index].program.size()) {
      imps.push_back({e.stage, i});
    }
  }
}

std::size_t StageLedger::count_through(std::uint64_t s) const {
  auto it = std::upper_bound(events_.begin(), events_.end(), s,
                             [](std::uint64_t stage, const HaltEvent& e) { return stage < e.stage; });
  return static_cast<std::size_t>(it - events_.begin());
}

Complexity StageLedger::value(const Bitstring& output, std::uint64_t s) const {
  auto it = improvements_.find(output);
  if (it == improvements_.end()) return {};
  const Improvement* best = nullptr;
  for (const auto& imp : it->second) {
    if (imp.stage > s) break;
    best = &imp;
  }
  if (!best) return {};
  const Bitstring& p = events_[best->event_index].program;
  return {static_cast<std::uint32_t>(p.size()), p};
}

ComplexityTable StageLedger::table(std::uint64_t s) const {
  ComplexityTable t;
  t.stage = s;
  for (const auto& [output, imps] : improvements_) {
    Complexity c = value(output, s);
    if (c.finite()) t.entries.emplace(output, std::move(c));
  }
  return t;
}

MinimalCodes StageLedger::minimal_codes(std::uint64_t s) const {
  MinimalCodes m;
  m.stage = s;
  const std::size_t n = count_through(s);
  std::unordered_map<Bitstring, std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    const HaltEvent& e = events_[i];
    auto [it, fresh] = best.try_emplace(e.output, e.program.size());
    if (!fresh) it->second = std::min(it->second, e.program.size());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const HaltEvent& e = events_[i];
    if (e.program.size() == best.at(e.output)) m.M.insert(e.program);
  }
  for (const auto& [output, imps] : improvements_) {
    std::vector<Bitstring> hist;
    for (const auto& imp : imps) {
      if (imp.stage > s) break;
      hist.push_back(events_[imp.event_index].program);
    }
    if (hist.empty()) continue;
    m.N.emplace(output, hist.back());
    m.history.emplace(output, std::move(hist));
  }
  return m;
}

SemimeasureTable StageLedger::semimeasure(std::uint64_t s) const {
  SemimeasureTable t;
  t.stage = s;
  const std::size_t n = count_through(s);
  for (std::size_t i = 0; i < n; ++i) {
    t.Q[events_[i].output] += Dyadic::pow2_neg(static_cast<int>(events_[i].program.size()));
  }
  t.omega = omega_prefix_[n];
  return t;
}

Dyadic StageLedger::omega(std::uint64_t s) const { return omega_prefix_[count_through(s)]; }

const std::vector<StageLedger::Improvement>& StageLedger::improvements(const Bitstring& output) const {
  static const std::vector<Improvement> kNone;
  auto it = improvements_.find(output);
  return it == improvements_.end() ? kNone : it->second;
}

std::vector<Bitstring> StageLedger::outputs() const {
  std::vector<Bitstring> out;
  out.reserve(improvements_.size());
  for (const auto& [output, imps] : improvements_) out.push_back(output);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<Slot> independent_slots(const std::vector<Slot>& slots) {
  std::vector<Slot> out;
  for (const auto& s : slots) {
    if (!s.spec.reads_condition()) out.push_back(s);
  }
  return out;
}

std::vector<HaltEvent> merge_events(std::vector<HaltEvent> a, const std::vector<HaltEvent>& b) {
  std::vector<HaltEvent> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), canonical_before);
  return out;
}

}  // namespace

ComplexityEngine::ComplexityEngine(Registry registry, unsigned threads)
    : registry_(std::move(registry)), threads_(std::max(1u, threads)) {
  registry_.validate();
  hash_ = registry_.hash();
  u_ = StageLedger(enumerate_domain(registry_, kAllStages, threads_));
  v_ = StageLedger(enumerate_plain(registry_, kAllStages, threads_));
  EnumerateOptions opts;
  opts.threads = threads_;
  independent_events_ = enumerate_slots(independent_slots(registry_.slots), registry_.budget, kAllStages, opts);
  has_condition_readers_ =
      std::any_of(registry_.slots.begin(), registry_.slots.end(),
                  [](const Slot& s) { return s.spec.reads_condition(); });
}

ComplexityEngine::ComplexityEngine(Registry registry, std::vector<HaltEvent> u_events,
                                   std::vector<HaltEvent> v_events,
                                   std::map<Bitstring, std::vector<HaltEvent>> conditional_events,
                                   unsigned threads)
    : registry_(std::move(registry)), threads_(std::max(1u, threads)) {
  registry_.validate();
  hash_ = registry_.hash();
  u_ = StageLedger(std::move(u_events));
  v_ = StageLedger(std::move(v_events));
  // Condition-independent events are exactly those of non-reading slots.
  for (const auto& e : u_.events()) {
    for (const auto& slot : registry_.slots) {
      if (slot.prefix.is_prefix_of(e.program)) {
        if (!slot.spec.reads_condition()) independent_events_.push_back(e);
        break;
      }
    }
  }
  has_condition_readers_ =
      std::any_of(registry_.slots.begin(), registry_.slots.end(),
                  [](const Slot& s) { return s.spec.reads_condition(); });
  for (auto& [cond, events] : conditional_events) {
    cache_.emplace(cond, std::make_shared<const StageLedger>(std::move(events)));
  }
}

std::shared_ptr<const StageLedger> ComplexityEngine::build_conditional(const Bitstring& condition) const {
  std::vector<HaltEvent> readers;
  if (has_condition_readers_) {
    EnumerateOptions opts;
    opts.condition = condition;
    opts.threads = threads_;
    opts.condition_readers_only = true;
    readers = enumerate_slots(registry_.slots, registry_.budget, kAllStages, opts);
  }
  return std::make_shared<const StageLedger>(merge_events(independent_events_, readers));
}

std::shared_ptr<const StageLedger> ComplexityEngine::conditional(const Bitstring& condition) const {
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = cache_.find(condition); it != cache_.end()) return it->second;
  }
  // Built outside the lock; a concurrent duplicate build is identical and
  // the first insertion wins.
  auto ledger = build_conditional(condition);
  std::lock_guard lock(cache_mu_);
  return cache_.emplace(condition, std::move(ledger)).first->second;
}

std::vector<Bitstring> ComplexityEngine::cached_conditions() const {
  std::lock_guard lock(cache_mu_);
  std::vector<Bitstring> out;
  for (const auto& [cond, ledger] : cache_) out.push_back(cond);
  return out;
}

Complexity ComplexityEngine::cond_k_at_stage(const Bitstring& sigma, const Bitstring& tau,
                                             std::uint64_t s) const {
  return conditional(tau)->value(sigma, s);
}

SoiReport ComplexityEngine::soi_audit(const std::vector<std::pair<Bitstring, std::uint64_t>>& sample) const {
  SoiReport report;
  for (const auto& [sigma, n] : sample) {
    SoiRow row;
    row.sigma = sigma;
    row.n = n;
    row.k_pair = k(pair_with_number(sigma, n)).value;
    const Complexity kn = k_number(n);
    row.k_n = kn.value;
    if (kn.finite()) row.k_sigma_given_nstar = cond_k(sigma, kn.witness).value;
    if (row.k_pair != kInfinity && row.k_n != kInfinity && row.k_sigma_given_nstar != kInfinity) {
      const std::int64_t d = static_cast<std::int64_t>(row.k_pair) - row.k_n - row.k_sigma_given_nstar;
      row.deviation = d;
      report.min = report.min ? std::min(*report.min, d) : d;
      report.max = report.max ? std::max(*report.max, d) : d;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

CodingTheoremReport ComplexityEngine::coding_theorem_gap() const {
  CodingTheoremReport r;
  const SemimeasureTable q = u_.semimeasure(full_stage());
  bool first = true;
  for (const auto& [sigma, weight] : q.Q) {
    const std::int64_t gap = static_cast<std::int64_t>(k(sigma).value) - weight.ceil_neg_log2();
    if (first || gap > r.max_gap) {
      r.max_gap = gap;
      r.argmax = sigma;
    }
    r.min_gap = first ? gap : std::min(r.min_gap, gap);
    first = false;
    ++r.outputs;
  }
  return r;
}

std::int64_t ComplexityEngine::weak_randomness_constant() const {
  std::int64_t c = 0;
  for (const auto& rho : u_.minimal_codes(full_stage()).M) {
    const Complexity kr = k(rho);
    if (!kr.finite()) continue;
    c = std::max(c, static_cast<std::int64_t>(rho.size()) - kr.value);
  }
  return c;
}

namespace {

void require_plain_scale(const Registry& r, unsigned n) {
  if (n + 1 > 62) throw ScaleExceeded("n = " + std::to_string(n) + " exceeds the 61-bit word range");
  if (n > 0 && r.budget.max_length() < n - 1) {
    throw ScaleExceeded("plain budget L = " + std::to_string(r.budget.max_length()) +
                        " cannot certify C(m) >= " + std::to_string(n));
  }
}

}  // namespace

std::uint64_t ComplexityEngine::incompressible_witness(unsigned n) const {
  require_plain_scale(registry_, n);
  const std::uint64_t lo = std::uint64_t{1} << n, hi = std::uint64_t{1} << (n + 1);
  for (std::uint64_t m = lo; m < hi; ++m) {
    const Complexity cm = c(from_rank(m));
    if (!cm.finite() || cm.value >= n) return m;
  }
  throw InvariantFailure("every m in [2^" + std::to_string(n) + ", 2^" + std::to_string(n + 1) +
                         ") has C(m) < " + std::to_string(n));
}

std::uint64_t ComplexityEngine::count_compressible(unsigned n) const {
  require_plain_scale(registry_, n);
  const std::uint64_t lo = std::uint64_t{1} << n, hi = std::uint64_t{1} << (n + 1);
  std::uint64_t count = 0;
  for (std::uint64_t m = lo; m < hi; ++m) {
    const Complexity cm = c(from_rank(m));
    if (cm.finite() && cm.value < n) ++count;
  }
  return count;
}

StageAuditReport ComplexityEngine::audit_stages(std::uint64_t last) const {
  StageAuditReport r;
  const std::vector<Bitstring> u_outputs = u_.outputs();
  const std::vector<Bitstring> v_outputs = v_.outputs();
  std::vector<std::uint32_t> k_prev(u_outputs.size(), kInfinity), c_prev(v_outputs.size(), kInfinity);
  std::map<Bitstring, Bitstring> n_prev;
  Dyadic omega_prev;
  for (std::uint64_t s = 0; s <= last; ++s) {
    ++r.stages_checked;
    for (std::size_t i = 0; i < u_outputs.size(); ++i) {
      const std::uint32_t v = u_.value(u_outputs[i], s).value;
      if (v > k_prev[i]) ++r.k_monotone_violations;
      k_prev[i] = v;
    }
    for (std::size_t i = 0; i < v_outputs.size(); ++i) {
      const std::uint32_t v = v_.value(v_outputs[i], s).value;
      if (v > c_prev[i]) ++r.c_monotone_violations;
      c_prev[i] = v;
    }
    const Dyadic om = u_.omega(s);
    if (om < omega_prev) ++r.omega_monotone_violations;
    if (om > Dyadic::one()) ++r.omega_bound_violations;
    omega_prev = om;

    const MinimalCodes mc = u_.minimal_codes(s);
    Dyadic kraft;
    for (const auto& [output, nstar] : mc.N) {
      if (!mc.M.count(nstar)) ++r.n_subset_m_violations;
      kraft += Dyadic::pow2_neg(static_cast<int>(nstar.size()));
      if (auto it = n_prev.find(output); it != n_prev.end() && it->second != nstar) {
        ++r.replacements_seen;
        if (nstar.size() >= it->second.size()) ++r.replacement_violations;
      }
    }
    if (kraft > Dyadic::one()) ++r.kraft_violations;
    n_prev = mc.N;
  }
  return r;
}

}  // namespace klab
