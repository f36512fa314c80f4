#include "doctest.h"

#include <sstream>

#include "klab/engine.hpp"
#include "klab/errors.hpp"
#include "klab/snapshot.hpp"
#include "klab/trace.hpp"
#include "oracle/brute_force.hpp"
#include "support/fixtures.hpp"

using namespace klab;

namespace {

// Output "1" gets a 5-bit code at stage 1 and a 3-bit code at stage 30.
Registry shrinking() {
  Registry r;
  r.budget = ExecutionBudget(5, 64, Schedule::steps(64));
  r.add_slot("table", MachineSpec::request_table({{Bitstring("0000"), Bitstring("1"), std::nullopt, 1},
                                                  {Bitstring("01"), Bitstring("1"), std::nullopt, 30}}));
  return r;
}

}  // namespace

TEST_CASE("literal-unary values") {
  const ComplexityEngine e(fixtures::literal_unary(4));
  CHECK(e.k(Bitstring()).value == 2);
  CHECK(e.k(Bitstring()).witness == Bitstring("00"));
  CHECK(e.k(Bitstring("0")).value == 4);
  CHECK(e.k(Bitstring("0")).witness == Bitstring("0100"));
  CHECK_FALSE(e.k_at_stage(Bitstring(), 0).finite());
  CHECK_FALSE(e.k(Bitstring("00")).finite());
  CHECK(render_value(kInfinity) == "inf");
  CHECK(e.u().omega(e.full_stage()) == Dyadic::parse("3/8"));
  CHECK(e.u().omega(0) == Dyadic());
}

TEST_CASE("copy-condition mounted at slot 2") {
  Registry r;
  r.budget = ExecutionBudget(8, 16, Schedule::linear(8));
  r.add_slot("literal", MachineSpec::literal_unary());
  r.add_slot("empty", MachineSpec::request_table({}));
  r.add_slot("copy", MachineSpec::copy_condition());
  const ComplexityEngine e(r);
  for (const char* tau : {"", "1", "0101", "11111111"}) {
    const auto k = e.cond_k(Bitstring(tau), Bitstring(tau));
    CHECK(k.value <= 4);
  }
  CHECK(e.cond_k(Bitstring("11111111"), Bitstring("11111111")).witness == Bitstring("1100"));
}

TEST_CASE("copy-condition and plain identity") {
  const ComplexityEngine e(fixtures::lab(8));
  CHECK(e.cond_k(Bitstring("0110"), Bitstring("0110")).value <= 4);
  CHECK(e.cond_k(Bitstring("0110"), Bitstring("0110")).witness == Bitstring("100"));
  CHECK(e.c(Bitstring()).value == 1);
  CHECK(e.c(Bitstring("0101")).value == 5);
}

TEST_CASE("n* history shortens strictly and omega sums the domain") {
  const ComplexityEngine e(shrinking());
  const auto& hist = e.u().improvements(Bitstring("1"));
  REQUIRE(hist.size() == 2);
  std::vector<std::size_t> lengths;
  for (const auto& imp : hist) lengths.push_back(e.u().events()[imp.event_index].program.size());
  CHECK(lengths == std::vector<std::size_t>{5, 3});
  CHECK(hist[0].stage < hist[1].stage);
  const auto codes = e.minimal_codes(e.full_stage());
  CHECK(codes.history.at(Bitstring("1")) == std::vector<Bitstring>{Bitstring("00000"), Bitstring("001")});
  CHECK(codes.N.at(Bitstring("1")) == Bitstring("001"));
  CHECK(codes.M == std::set<Bitstring>{Bitstring("001")});
  CHECK(e.u().omega(e.full_stage()) == Dyadic::parse("5/32"));
  CHECK(e.u().omega(hist[0].stage) == Dyadic::pow2_neg(5));
}

TEST_CASE("plain complexity counting") {
  const ComplexityEngine e(fixtures::lab(10));
  CHECK(e.incompressible_witness(0) == 1);
  for (unsigned n = 0; n < 6; ++n) {
    CHECK(e.count_compressible(n) < (std::uint64_t{1} << n));
    const auto m = e.incompressible_witness(n);
    CHECK(m >= (std::uint64_t{1} << n));
    CHECK(e.c(from_rank(m)).value >= n);
  }
}

TEST_CASE("engine tables agree with the brute-force oracle") {
  for (std::size_t L : {0u, 3u, 6u, 9u}) {
    const Registry r = fixtures::lab(L);
    const ComplexityEngine e(r, 2);
    const oracle::Domain u(r.slots, r.budget, std::nullopt);
    const oracle::Domain v(r.plain_slots, r.budget, std::nullopt);
    const oracle::Domain c1(r.slots, r.budget, Bitstring("1"));
    for (std::uint64_t s = 0; s <= e.full_stage(); ++s) {
      const auto t = e.u().table(s);
      const auto ot = u.table(s);
      REQUIRE(t.entries.size() == ot.size());
      for (const auto& [out, val] : ot) {
        CHECK(t.entries.at(out).value == val.length);
        CHECK(t.entries.at(out).witness == val.witness);
      }
      CHECK(e.u().omega(s) == Dyadic::from_ratio(u.omega_numerator(s), static_cast<int>(L)));
      CHECK(e.minimal_codes(s).M == u.m_set(s));
      CHECK(e.minimal_codes(s).N == u.n_map(s));
      const auto vt = v.table(s);
      for (const auto& [out, val] : vt) CHECK(e.c_at_stage(out, s).value == val.length);
      for (const auto& [out, val] : c1.table(s)) CHECK(e.cond_k_at_stage(out, Bitstring("1"), s).value == val.length);
    }
  }
}

TEST_CASE("stage audit is clean and sees a replacement") {
  const ComplexityEngine e(fixtures::lab(12));
  const auto rep = e.audit_stages(200);
  CHECK(rep.clean());
  CHECK(rep.replacements_seen >= 1);
  CHECK(rep.stages_checked == 201);
}

TEST_CASE("symmetry-of-information and coding-theorem audits are finite") {
  const ComplexityEngine e(fixtures::lab(10));
  const auto soi = e.soi_audit({{Bitstring(), 0}, {Bitstring("0"), 1}, {Bitstring("1"), 2}});
  CHECK(soi.rows.size() == 3);
  const auto gap = e.coding_theorem_gap();
  CHECK(gap.outputs > 0);
  CHECK(gap.min_gap <= gap.max_gap);
  CHECK(gap.min_gap >= 0);
}

TEST_CASE("snapshots round trip and reject a tampered hash") {
  const ComplexityEngine e(fixtures::lab(8));
  const Snapshot snap = take_snapshot(e, 6, {Bitstring("0")});
  const auto j = snapshot_to_json(snap);
  const Snapshot back = snapshot_from_json(j);
  CHECK(snapshot_to_json(back) == j);
  const ComplexityEngine replay = engine_from_snapshot(back);
  CHECK(replay.u().table(6).entries == e.u().table(6).entries);
  CHECK(replay.cond_k_at_stage(Bitstring("0"), Bitstring("0"), 6) == e.cond_k_at_stage(Bitstring("0"), Bitstring("0"), 6));
  CHECK_THROWS_AS(require_stage(snap, 7), NoSuchStage);
  auto bad = j;
  bad["registry_hash"] = "0000000000000000";
  CHECK_THROWS_AS(snapshot_from_json(bad), InvariantFailure);
}

TEST_CASE("traces round trip and report only audits") {
  Trace t;
  t.header("construction", "demo");
  t.add(1, "P0", "claim", "0101", "w=1/16");
  t.add(2, "R1", "release");
  t.audit("single-claimer", true, "0 violations");
  t.audit("floors", false, "1 violation");
  std::istringstream in(t.str());
  const Trace back = Trace::read(in, "mem");
  CHECK(back == t);
  const auto rep = report_from_trace(back);
  CHECK(rep.checks.size() == 2);
  CHECK_FALSE(rep.all_passed());
  CHECK(rep.first_failure() == "floors");
  std::istringstream bad("1\tonly-two-fields\n");
  CHECK_THROWS_AS(Trace::read(bad, "mem"), MalformedSpec);
}

TEST_CASE("conditional and plain complexity bounds") {
  const ComplexityEngine e(fixtures::lab(10));
  const std::uint64_t last = e.full_stage();
  for (const auto& sigma : e.u().outputs()) {
    for (const char* tau : {"", "0", "1", "0110"}) {
      const auto ck = e.cond_k(sigma, Bitstring(tau));
      CHECK(ck.value <= e.k(sigma).value);
    }
  }
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Bitstring x = from_rank(r);
    if (x.size() + 1 <= e.registry().budget.max_length()) CHECK(e.c(x).value <= x.size() + 1);
    std::uint32_t prev = kInfinity;
    for (std::uint64_t s = 0; s <= last; ++s) {
      const std::uint32_t now = e.c_at_stage(x, s).value;
      CHECK(now <= prev);
      prev = now;
    }
  }
  for (std::uint64_t s = 0; s <= last; ++s) {
    const auto mc = e.minimal_codes(s);
    for (const auto& [out, nstar] : mc.N) CHECK(mc.M.count(nstar) == 1);
  }
}

TEST_CASE("unique codes are all minimal") {
  Registry r;
  r.budget = ExecutionBudget(6, 16, Schedule::linear(6));
  r.add_slot("table", MachineSpec::request_table({{Bitstring("00"), Bitstring("1"), std::nullopt, 1},
                                                  {Bitstring("01"), Bitstring("0"), std::nullopt, 1},
                                                  {Bitstring("1"), Bitstring("11"), std::nullopt, 1}}));
  const ComplexityEngine e(r);
  const auto mc = e.minimal_codes(e.full_stage());
  std::set<Bitstring> domain;
  for (const auto& ev : e.u().events()) domain.insert(ev.program);
  CHECK(mc.M == domain);
  std::set<Bitstring> n_set;
  for (const auto& [out, p] : mc.N) n_set.insert(p);
  CHECK(n_set == domain);
}
