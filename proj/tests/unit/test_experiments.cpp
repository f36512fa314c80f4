#include "doctest.h"

#include "klab/errors.hpp"
#include "klab/experiments.hpp"
#include "support/fixtures.hpp"

using namespace klab;

namespace {

const ComplexityEngine& lab10() {
  static const ComplexityEngine e(fixtures::lab(10), 2);
  return e;
}

std::vector<std::uint64_t> nondeficient_by_definition(const std::vector<std::uint64_t>& a) {
  std::vector<std::uint64_t> out;
  for (std::size_t m = 0; m < a.size(); ++m) {
    bool ok = true;
    for (std::size_t n = m + 1; n < a.size(); ++n) ok = ok && a[m] < a[n];
    if (ok) out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("nondeficiency indices") {
  CHECK(nondeficient_indices({5, 3, 8, 2, 9}) == std::vector<std::uint64_t>{3, 4});
  CHECK(nondeficient_indices({1, 2, 3, 4}) == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(nondeficient_indices({4, 3, 2, 1}) == std::vector<std::uint64_t>{3});
  CHECK(nondeficient_indices({}).empty());
  CHECK_THROWS_AS(nondeficient_indices({1, 2, 1}), ConfigError);
  std::vector<std::uint64_t> perm{0, 1, 2, 3, 4, 5, 6};
  do {
    CHECK(nondeficient_indices(perm) == nondeficient_by_definition(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("tail statistics") {
  Profile p;
  for (std::int64_t v : {3, 9, 1, 4, 4}) p.rows.push_back({std::to_string(p.rows.size()), Bitstring(), v});
  p.rows.push_back({"5", Bitstring(), std::nullopt});
  compute_statistics(p, 0);
  CHECK(p.window == 3);
  CHECK(p.tail_start == 3);
  CHECK_FALSE(p.tail_max.has_value());
  CHECK_FALSE(p.full_max.has_value());
  compute_statistics(p, 100);
  CHECK(p.tail_start == 0);
  p.rows.pop_back();
  compute_statistics(p, 2);
  CHECK(p.tail_max == std::optional<std::int64_t>(4));
  CHECK(p.full_max == std::optional<std::int64_t>(9));
  CHECK(p.argmax == std::vector<std::string>{"1"});
  CHECK(render_profile_value(std::nullopt) == "inf");
}

TEST_CASE("profiles over a subset never exceed the superset maximum") {
  const auto& e = lab10();
  IndexSet all;
  all.n = 16;
  IndexSet some;
  some.kind = IndexSet::Kind::kExplicit;
  for (std::uint64_t i = 0; i < 16; i += 3) some.list.push_back(from_rank(i));
  for (const auto& sigma : {Bitstring(), Bitstring("0"), Bitstring("1111")}) {
    const Profile big = limsup_profile(e, sigma, all, e.full_stage());
    const Profile small = limsup_profile(e, sigma, some, e.full_stage());
    CHECK(big.rows.size() == 16);
    CHECK(small.rows.size() == some.list.size());
    CHECK(small.full_max <= big.full_max);
    CHECK(big.tail_max <= big.full_max);
    for (const auto& row : small.rows) CHECK(row.value == from_complexity(e.cond_k(sigma, row.condition)));
  }
  IndexSet m;
  m.kind = IndexSet::Kind::kM;
  const Profile over_m = limsup_profile(e, Bitstring(), m, e.full_stage());
  CHECK(over_m.rows.size() == e.minimal_codes(e.full_stage()).M.size());
  IndexSet n_set;
  n_set.kind = IndexSet::Kind::kN;
  const Profile over_n = limsup_profile(e, Bitstring(), n_set, e.full_stage());
  CHECK(over_n.full_max <= over_m.full_max);
  IndexSet explicit_sigma;
  explicit_sigma.kind = IndexSet::Kind::kExplicit;
  explicit_sigma.list = {Bitstring("0110")};
  CHECK(limsup_profile(e, Bitstring("0110"), explicit_sigma, e.full_stage()).rows[0].value <=
        std::optional<std::int64_t>(4));
  IndexSet huge;
  huge.n = std::uint64_t{1} << 20;
  CHECK_THROWS_AS(index_conditions(e, huge), IndexOutOfScale);
}

TEST_CASE("empty index ranges give empty profiles") {
  const auto& e = lab10();
  CHECK(jump_profile(e, Bitstring(), 0).jump.empty());
  const auto dj = double_jump_profile(e, Bitstring(), 3, 0);
  CHECK(dj.inner.size() == 3);
  for (const auto& p : dj.inner) CHECK(p.empty());
  CHECK(double_jump_profile(e, Bitstring(), 0, 5).outer.empty());
  CHECK_THROWS_AS(double_jump_profile(e, Bitstring(), 300, 300), ScaleExceeded);
}

TEST_CASE("jump profile rows are differences of table values") {
  const auto& e = lab10();
  const auto rep = jump_profile(e, Bitstring("1"), 6);
  REQUIRE(rep.jump.rows.size() == 6);
  for (std::uint64_t n = 0; n < 6; ++n) {
    const auto kp = e.k(pair_with_number(Bitstring("1"), n));
    const auto kn = e.k_number(n);
    const ProfileValue expect = (kp.finite() && kn.finite())
                                    ? ProfileValue(static_cast<std::int64_t>(kp.value) - kn.value)
                                    : std::nullopt;
    CHECK(rep.jump.rows[n].value == expect);
  }
}

TEST_CASE("true-stage profile restricts to the nondeficiency indices") {
  const auto rep = true_stage_profile(lab10(), Bitstring(), {5, 3, 8, 2, 9});
  CHECK(rep.e == std::vector<std::uint64_t>{3, 4});
  CHECK(rep.over_e.rows.size() == 2);
  CHECK(rep.over_all.rows.size() == 5);
}

TEST_CASE("(D, k) encodings invert") {
  const std::vector<std::vector<Bitstring>> ds{{}, {Bitstring()}, {Bitstring("0"), Bitstring("11")},
                                               {Bitstring(), Bitstring("1"), Bitstring("0101")}};
  std::set<Bitstring> seen;
  for (const auto& d : ds) {
    for (std::uint64_t k = 0; k < 6; ++k) {
      const Bitstring rho = encode_dk(d, k);
      CHECK(seen.insert(rho).second);
      const auto back = decode_dk(rho);
      REQUIRE(back);
      CHECK(back->first == d);
      CHECK(back->second == k);
    }
  }
  CHECK_FALSE(decode_dk(Bitstring("1")));
}

TEST_CASE("e-compressing search: greedy D and re-verification") {
  const auto& e = lab10();
  for (unsigned ec : {0u, 1u}) {
    const auto r = e_compressing_search(e, ec);
    CHECK(r.failures == 0);
    CHECK(r.threshold == Dyadic::pow2_neg(static_cast<int>(ec + r.c + 1)));
    CHECK(r.residual < r.threshold);
    Dyadic in_d;
    for (const auto& s : r.d) in_d += Dyadic::pow2_neg(static_cast<int>(e.k(s).value));
    CHECK(in_d + r.residual == r.total_mass);
    REQUIRE_FALSE(r.d.empty());
    // Dropping the last greedy pick would leave the residual at or above the threshold.
    const Dyadic last = Dyadic::pow2_neg(static_cast<int>(e.k(r.d.back()).value));
    CHECK(r.residual + last >= r.threshold);
    CHECK(decode_dk(r.rho) == std::make_optional(std::make_pair(r.d, r.k)));
    const ComplexityEngine mounted(r.registry);
    for (const auto& row : r.rows) {
      if (row.in_d) continue;
      const auto kr = mounted.cond_k(row.sigma, r.rho);
      CHECK(kr.value + ec <= row.k);
    }
  }
}

TEST_CASE("Solovay hitting for fixed stage assignments") {
  const auto& e = lab10();
  const auto full = solovay_hitting(e, {StageAssignment::Kind::kFull}, 20);
  CHECK(full.violations == 0);
  for (const auto& row : full.rows) CHECK(row.hit == (row.f == row.k && row.k != kInfinity));
  const auto zero = solovay_hitting(e, {StageAssignment::Kind::kZero}, 20);
  CHECK(zero.hits == 0);
  CHECK(zero.violations == 0);
  const auto id = solovay_hitting(e, {StageAssignment::Kind::kIdentity}, 20);
  CHECK(id.violations == 0);
  for (const auto& row : id.rows) CHECK(row.stage == row.n);
  CHECK(StageAssignment{StageAssignment::Kind::kLinear, 2, 1}.at(3, 100) == 7);
  CHECK(StageAssignment{StageAssignment::Kind::kLinear, 2, 1}.at(80, 100) == 161);
}

TEST_CASE("cross-machine audit") {
  const auto& a = lab10();
  const auto same = cross_machine_audit(a, a, Bitstring("1"));
  CHECK(same.c == 0);
  CHECK(same.only_a == 0);
  CHECK(same.only_b == 0);
  Registry shifted;
  shifted.budget = a.registry().budget;
  shifted.add_slot("pad", MachineSpec::request_table({}));
  for (const auto& s : a.registry().slots) shifted.add_slot(s.name, s.spec);
  shifted.plain_slots = a.registry().plain_slots;
  const ComplexityEngine b(shifted);
  const auto rep = cross_machine_audit(a, b, Bitstring("1"));
  CHECK(rep.c == 1);
  for (const auto& row : rep.rows) CHECK(row.k_b == row.k_a + 1);
  CHECK(rep.only_b == 0);
  CHECK(rep.only_a > 0);
}

TEST_CASE("profile CSV carries provenance") {
  Profile p;
  p.subject = Bitstring("1");
  p.rows.push_back({"0", Bitstring(), 2});
  compute_statistics(p, 0);
  const std::string csv = profile_csv(p, {{"registry_hash", "abc"}});
  CHECK(csv.rfind("# registry_hash: abc\n", 0) == 0);
  CHECK(csv.find("row,index,condition,value\n") != std::string::npos);
  CHECK(csv.find("0,0,-,2\n") != std::string::npos);
}

TEST_CASE("literal slot bounds the profile of the empty word") {
  const auto& e = lab10();
  IndexSet all;
  all.n = 40;
  const Profile p = limsup_profile(e, Bitstring(), all, e.full_stage());
  for (const auto& row : p.rows) CHECK(row.value <= std::optional<std::int64_t>(2));
  CHECK(p.tail_max == p.full_max);
}

TEST_CASE("double jump inner maxima dominate their rows") {
  const auto rep = double_jump_profile(lab10(), Bitstring(), 3, 6);
  for (const auto& inner : rep.inner) {
    for (const auto& row : inner.rows) CHECK(row.value <= inner.full_max);
    CHECK(inner.tail_max <= inner.full_max);
  }
  CHECK(rep.outer.rows.size() == 3);
}

TEST_CASE("e-compressing: negligible mass needs no D") {
  Registry r;
  r.budget = ExecutionBudget(16, 16, Schedule::linear(4));
  r.add_slot("sparse", MachineSpec::request_table({{Bitstring("000000000000"), Bitstring("1"), std::nullopt, 1}}));
  const ComplexityEngine e(r);
  const auto res = e_compressing_search(e, 0);
  CHECK(res.total_mass == Dyadic::pow2_neg(13));
  CHECK(res.d.empty());
  CHECK(res.failures == 0);
}

TEST_CASE("Solovay identity assignment matches a direct table comparison") {
  const auto& e = lab10();
  const auto rep = solovay_hitting(e, {StageAssignment::Kind::kIdentity}, 30);
  std::size_t hits = 0;
  for (std::uint64_t n = 0; n < 30; ++n) {
    const auto f = e.k_at_stage(from_rank(n), n);
    const auto k = e.k(from_rank(n));
    const bool hit = f.finite() && f.value == k.value;
    CHECK(rep.rows[n].hit == hit);
    hits += hit;
  }
  CHECK(rep.hits == hits);
}
