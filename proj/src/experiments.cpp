#include "klab/experiments.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "klab/enumerate.hpp"
#include "klab/errors.hpp"
#include "klab/kc.hpp"

namespace klab {

namespace {

bool value_less(const ProfileValue& a, const ProfileValue& b) {
  if (!a) return false;
  if (!b) return true;
  return *a < *b;
}

ProfileValue value_max(const ProfileValue& a, const ProfileValue& b) { return value_less(a, b) ? b : a; }

ProfileValue difference(std::uint32_t a, std::uint32_t b) {
  if (a == kInfinity || b == kInfinity) return std::nullopt;
  return static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b);
}

Profile make_profile(const Bitstring& sigma, std::string index_set, std::uint64_t stage) {
  Profile p;
  p.subject = sigma;
  p.index_set = std::move(index_set);
  p.stage = stage;
  return p;
}

}  // namespace

std::string render_profile_value(const ProfileValue& v) { return v ? std::to_string(*v) : "inf"; }

ProfileValue from_complexity(const Complexity& c) {
  if (!c.finite()) return std::nullopt;
  return static_cast<std::int64_t>(c.value);
}

std::string IndexSet::describe() const {
  auto at = [this] { return stage ? "@" + std::to_string(*stage) : std::string("@full"); };
  switch (kind) {
    case Kind::kAll:
      return "all-n<" + std::to_string(n);
    case Kind::kM:
      return "M" + at();
    case Kind::kN:
      return "N" + at();
    case Kind::kE:
      return "E-of-script(" + std::to_string(script.size()) + ")";
    case Kind::kExplicit:
      return "explicit(" + std::to_string(list.size()) + ")";
  }
  return {};
}

void compute_statistics(Profile& p, std::size_t window) {
  const std::size_t size = p.rows.size();
  p.window = window == 0 ? (size + 1) / 2 : std::min(window, size);
  p.tail_start = size - p.window;
  p.tail_max.reset();
  p.full_max.reset();
  p.argmax.clear();
  if (size == 0) {
    p.tail_max = p.full_max = std::int64_t{0};
    return;
  }
  ProfileValue full = p.rows.front().value;
  for (const auto& r : p.rows) full = value_max(full, r.value);
  ProfileValue tail = p.rows[p.tail_start].value;
  for (std::size_t i = p.tail_start; i < size; ++i) tail = value_max(tail, p.rows[i].value);
  p.full_max = full;
  p.tail_max = tail;
  for (const auto& r : p.rows) {
    if (r.value == full) p.argmax.push_back(r.index);
  }
}

std::vector<std::uint64_t> nondeficient_indices(const std::vector<std::uint64_t>& script) {
  std::vector<std::uint64_t> sorted = script;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("enumeration script is not injective");
  }
  std::vector<std::uint64_t> e;
  std::optional<std::uint64_t> later_min;
  for (std::size_t m = script.size(); m-- > 0;) {
    if (!later_min || script[m] < *later_min) e.push_back(m);
    later_min = later_min ? std::min(*later_min, script[m]) : script[m];
  }
  std::reverse(e.begin(), e.end());
  return e;
}

std::vector<ProfileRow> index_conditions(const ComplexityEngine& engine, const IndexSet& index) {
  constexpr std::uint64_t kMaxRows = std::uint64_t{1} << 16;
  if ((index.kind == IndexSet::Kind::kAll && index.n > kMaxRows) ||
      (index.kind == IndexSet::Kind::kExplicit && index.list.size() > kMaxRows) ||
      (index.kind == IndexSet::Kind::kE && index.script.size() > kMaxRows)) {
    throw IndexOutOfScale(index.describe() + " has more than 2^16 conditions");
  }
  std::vector<ProfileRow> rows;
  auto numeric = [&rows](std::uint64_t n) {
    if (n >= (std::uint64_t{1} << 62)) throw IndexOutOfScale("index " + std::to_string(n) + " beyond 61-bit words");
    rows.push_back({std::to_string(n), from_rank(n), std::nullopt});
  };
  const std::uint64_t s = index.stage.value_or(engine.full_stage());
  switch (index.kind) {
    case IndexSet::Kind::kAll:
      for (std::uint64_t n = 0; n < index.n; ++n) numeric(n);
      break;
    case IndexSet::Kind::kM:
      for (const auto& tau : engine.minimal_codes(s).M) rows.push_back({tau.token(), tau, std::nullopt});
      break;
    case IndexSet::Kind::kN: {
      std::set<Bitstring> n_set;
      for (const auto& [out, tau] : engine.minimal_codes(s).N) n_set.insert(tau);
      for (const auto& tau : n_set) rows.push_back({tau.token(), tau, std::nullopt});
      break;
    }
    case IndexSet::Kind::kE:
      for (auto m : nondeficient_indices(index.script)) numeric(m);
      break;
    case IndexSet::Kind::kExplicit:
      for (const auto& tau : index.list) rows.push_back({tau.token(), tau, std::nullopt});
      break;
  }
  return rows;
}

Profile limsup_profile(const ComplexityEngine& engine, const Bitstring& sigma, const IndexSet& index,
                       std::uint64_t stage, std::size_t window) {
  Profile p = make_profile(sigma, index.describe(), stage);
  p.rows = index_conditions(engine, index);
  for (auto& r : p.rows) r.value = from_complexity(engine.cond_k_at_stage(sigma, r.condition, stage));
  compute_statistics(p, window);
  return p;
}

JumpReport jump_profile(const ComplexityEngine& engine, const Bitstring& sigma, std::uint64_t N,
                        std::size_t window) {
  JumpReport rep;
  const std::uint64_t s = engine.full_stage();
  rep.jump = make_profile(sigma, "all-n<" + std::to_string(N), s);
  rep.by_nstar = make_profile(sigma, "nstar-of-n<" + std::to_string(N), s);
  for (std::uint64_t n = 0; n < N; ++n) {
    const Complexity kn = engine.k_number(n);
    const std::uint32_t kp = engine.k(pair_with_number(sigma, n)).value;
    rep.jump.rows.push_back({std::to_string(n), from_rank(n), difference(kp, kn.value)});
    ProfileValue given;
    if (kn.finite()) given = from_complexity(engine.cond_k(sigma, kn.witness));
    rep.by_nstar.rows.push_back({std::to_string(n), kn.witness, given});
    if (rep.jump.rows.back().value && given) {
      const std::int64_t gap = std::abs(*rep.jump.rows.back().value - *given);
      rep.spread = rep.spread ? std::max(*rep.spread, gap) : gap;
    }
  }
  compute_statistics(rep.jump, window);
  compute_statistics(rep.by_nstar, window);
  return rep;
}

DoubleJumpReport double_jump_profile(const ComplexityEngine& engine, const Bitstring& sigma, std::uint64_t N,
                                     std::uint64_t M, std::size_t window) {
  if (M != 0 && N > (std::uint64_t{1} << 16) / M) {
    throw ScaleExceeded("double jump over " + std::to_string(N) + " x " + std::to_string(M) +
                        " indices exceeds 2^16");
  }
  DoubleJumpReport rep;
  const std::uint64_t s = engine.full_stage();
  rep.outer = make_profile(sigma, "n<" + std::to_string(N) + " of inner tail-max", s);
  for (std::uint64_t n = 0; n < N; ++n) {
    Profile inner = make_profile(sigma, "n=" + std::to_string(n) + " m<" + std::to_string(M), s);
    for (std::uint64_t m = 0; m < M; ++m) {
      const std::uint32_t kt = engine.k(triple_with_numbers(sigma, n, m)).value;
      inner.rows.push_back({std::to_string(m), from_rank(m), difference(kt, engine.k_number(m).value)});
    }
    compute_statistics(inner, window);
    rep.outer.rows.push_back({std::to_string(n), from_rank(n), inner.tail_max});
    rep.inner.push_back(std::move(inner));
  }
  compute_statistics(rep.outer, window);
  return rep;
}

TrueStageReport true_stage_profile(const ComplexityEngine& engine, const Bitstring& sigma,
                                   const std::vector<std::uint64_t>& script, std::size_t window) {
  TrueStageReport rep;
  rep.e = nondeficient_indices(script);
  IndexSet e_set;
  e_set.kind = IndexSet::Kind::kE;
  e_set.script = script;
  IndexSet all;
  all.n = script.size();
  rep.over_e = limsup_profile(engine, sigma, e_set, engine.full_stage(), window);
  rep.over_all = limsup_profile(engine, sigma, all, engine.full_stage(), window);
  return rep;
}

Bitstring encode_dk(const std::vector<Bitstring>& d, std::uint64_t k) {
  std::vector<Bitstring> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Bitstring rho = self_delimit(from_rank(k));
  for (const auto& s : sorted) rho += Bitstring("1") + self_delimit(s);
  rho.push_back(false);
  return rho;
}

std::optional<std::pair<std::vector<Bitstring>, std::uint64_t>> decode_dk(const Bitstring& rho) {
  std::size_t pos = 0;
  auto k = read_self_delimited(rho, pos);
  if (!k || k->size() > 62) return std::nullopt;
  std::vector<Bitstring> d;
  while (pos < rho.size() && rho[pos]) {
    ++pos;
    auto s = read_self_delimited(rho, pos);
    if (!s || (!d.empty() && !(d.back() < *s))) return std::nullopt;
    d.push_back(*s);
  }
  if (pos + 1 != rho.size() || rho[pos]) return std::nullopt;
  return std::make_pair(std::move(d), rank_of(*k));
}

ECompressResult e_compressing_search(const ComplexityEngine& engine, unsigned e, unsigned threads) {
  ECompressResult res;
  res.e = e;
  const Registry& base = engine.registry();
  res.slot_prefix = encode_slot(base.slots.size());
  res.c = static_cast<unsigned>(res.slot_prefix.size());
  res.k = e + res.c;
  res.threshold = Dyadic::pow2_neg(static_cast<int>(res.k + 1));

  struct Mass {
    Bitstring sigma;
    std::uint32_t k;
  };
  std::vector<Mass> masses;
  for (const auto& sigma : engine.u().outputs()) {
    const Complexity ks = engine.k(sigma);
    if (!ks.finite()) continue;
    masses.push_back({sigma, ks.value});
    res.total_mass += Dyadic::pow2_neg(static_cast<int>(ks.value));
  }
  std::stable_sort(masses.begin(), masses.end(), [](const Mass& a, const Mass& b) {
    return a.k != b.k ? a.k < b.k : a.sigma < b.sigma;
  });
  res.residual = res.total_mass;
  std::size_t taken = 0;
  while (!(res.residual < res.threshold)) {
    if (taken == masses.size()) break;
    res.d.push_back(masses[taken].sigma);
    res.residual -= Dyadic::pow2_neg(static_cast<int>(masses[taken].k));
    ++taken;
  }
  if (taken == masses.size()) {
    throw ScaleExceeded("no proper D leaves residual mass below 2^-" + std::to_string(res.k + 1) +
                        " (total mass " + res.total_mass.str() + " over " + std::to_string(masses.size()) +
                        " outputs)");
  }
  std::sort(res.d.begin(), res.d.end());
  res.rho = encode_dk(res.d, res.k);

  ConditionalKcBuilder kc;
  std::vector<TableEntry> entries;
  for (std::size_t i = taken; i < masses.size(); ++i) {
    const Request r{masses[i].sigma, masses[i].k - res.k, res.rho};
    auto code = kc.conditional_request(r);
    if (!code) throw BudgetViolation("conditional request for " + r.output.token() + " overflowed");
    entries.push_back({*code, r.output, r.condition, 1});
  }
  res.registry = base;
  res.registry.slots.push_back({"compress", res.slot_prefix, MachineSpec::request_table(std::move(entries))});
  res.registry.validate();

  const ComplexityEngine mounted(res.registry, threads);
  const auto given = mounted.conditional(res.rho);
  const std::uint64_t full = mounted.full_stage();
  for (const auto& [sigma, k] : masses) {
    ECompressRow row;
    row.sigma = sigma;
    row.k = k;
    row.in_d = std::binary_search(res.d.begin(), res.d.end(), sigma);
    row.k_given_rho = given->value(sigma, full).value;
    if (mounted.k(sigma).value != k) ++res.k_changed;
    if (!row.in_d) row.ok = row.k_given_rho != kInfinity && row.k_given_rho + e <= k;
    if (!row.ok) ++res.failures;
    res.rows.push_back(std::move(row));
  }
  std::sort(res.rows.begin(), res.rows.end(),
            [](const ECompressRow& a, const ECompressRow& b) { return a.sigma < b.sigma; });
  return res;
}

std::uint64_t StageAssignment::at(std::uint64_t n, std::uint64_t full_stage) const {
  switch (kind) {
    case Kind::kFull:
      return full_stage;
    case Kind::kZero:
      return 0;
    case Kind::kIdentity:
      return n;
    case Kind::kLinear:
      return slope * n + offset;
  }
  return 0;
}

std::string StageAssignment::describe() const {
  switch (kind) {
    case Kind::kFull:
      return "full";
    case Kind::kZero:
      return "zero";
    case Kind::kIdentity:
      return "identity";
    case Kind::kLinear:
      return "linear(" + std::to_string(slope) + "n+" + std::to_string(offset) + ")";
  }
  return {};
}

SolovayReport solovay_hitting(const ComplexityEngine& engine, const StageAssignment& h, std::uint64_t N) {
  SolovayReport rep;
  rep.h = h.describe();
  const std::uint64_t full = engine.full_stage();
  for (std::uint64_t n = 0; n < N; ++n) {
    SolovayRow row;
    row.n = n;
    row.stage = h.at(n, full);
    const Bitstring word = from_rank(n);
    row.f = engine.k_at_stage(word, row.stage).value;
    row.k = engine.k(word).value;
    row.hit = row.f == row.k && row.k != kInfinity;
    rep.hits += row.hit;
    rep.violations += row.f < row.k;
    rep.rows.push_back(row);
  }
  return rep;
}

CrossMachineReport cross_machine_audit(const ComplexityEngine& a, const ComplexityEngine& b,
                                       const Bitstring& sigma, std::size_t window) {
  CrossMachineReport rep;
  std::set<Bitstring> outs_b;
  for (const auto& o : b.u().outputs()) outs_b.insert(o);
  for (const auto& o : a.u().outputs()) {
    const std::uint32_t ka = a.k(o).value, kb = b.k(o).value;
    if (ka == kInfinity && kb == kInfinity) continue;
    if (kb == kInfinity) {
      ++rep.only_a;
      continue;
    }
    if (ka == kInfinity) continue;
    rep.rows.push_back({o, ka, kb});
    rep.c = std::max(rep.c, ka > kb ? ka - kb : kb - ka);
  }
  for (const auto& o : outs_b) {
    if (b.k(o).finite() && !a.k(o).finite()) ++rep.only_b;
  }
  IndexSet m;
  m.kind = IndexSet::Kind::kM;
  IndexSet n;
  n.kind = IndexSet::Kind::kN;
  rep.over_m_a = limsup_profile(a, sigma, m, a.full_stage(), window);
  rep.over_n_b = limsup_profile(b, sigma, n, b.full_stage(), window);
  return rep;
}

std::string profile_csv(const Profile& p, const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::ostringstream out;
  for (const auto& [k, v] : provenance) out << "# " << k << ": " << v << "\n";
  out << "# subject: " << p.subject.token() << "\n"
      << "# index_set: " << p.index_set << "\n"
      << "# stage: " << p.stage << "\n"
      << "# window: " << p.window << " (rows " << p.tail_start << ".." << p.rows.size() << ")\n"
      << "# tail_max: " << render_profile_value(p.tail_max) << "\n"
      << "# full_max: " << render_profile_value(p.full_max) << "\n"
      << "# argmax:";
  for (const auto& a : p.argmax) out << " " << a;
  out << "\nrow,index,condition,value\n";
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& r = p.rows[i];
    out << i << "," << r.index << "," << r.condition.token() << "," << render_profile_value(r.value) << "\n";
  }
  return out.str();
}

std::string gnuplot_script(const std::string& csv_name, const std::string& title, int column,
                           const std::string& ylabel) {
  std::ostringstream out;
  out << "set datafile separator ','\n"
      << "set datafile missing 'inf'\n"
      << "set title '" << title << "'\n"
      << "set xlabel 'row'\n"
      << "set ylabel '" << ylabel << "'\n"
      << "set key off\n"
      << "plot '" << csv_name << "' every ::1 using 1:" << column << " with linespoints\n";
  return out.str();
}

}  // namespace klab
