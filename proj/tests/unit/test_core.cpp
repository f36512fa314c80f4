#include "doctest.h"

#include <sstream>

#include "klab/blc.hpp"
#include "klab/dyadic.hpp"
#include "klab/enumerate.hpp"
#include "klab/errors.hpp"
#include "klab/machine.hpp"
#include "klab/registry.hpp"
#include "support/fixtures.hpp"

using namespace klab;

namespace {

Bitstring word(std::size_t length, std::uint64_t v) {
  Bitstring b;
  for (std::size_t i = length; i-- > 0;) b.push_back(((v >> i) & 1u) != 0);
  return b;
}

}  // namespace

TEST_CASE("slot framing is 1^e 0 and forms an antichain") {
  CHECK(encode_slot(0) == Bitstring("0"));
  CHECK(encode_slot(2) == Bitstring("110"));
  for (std::size_t a = 0; a < 12; ++a) {
    for (std::size_t b = a + 1; b < 12; ++b) CHECK(encode_slot(a).incomparable_with(encode_slot(b)));
  }
}

TEST_CASE("length-lexicographic order and rank") {
  CHECK(Bitstring() < Bitstring("1"));
  CHECK(Bitstring("1") < Bitstring("00"));
  CHECK(Bitstring("01") < Bitstring("10"));
  CHECK(from_rank(0) == Bitstring());
  CHECK(from_rank(1) == Bitstring("0"));
  CHECK(from_rank(3) == Bitstring("00"));
  for (std::uint64_t n = 0; n < 2000; ++n) {
    CHECK(rank_of(from_rank(n)) == n);
    CHECK(from_rank(n) < from_rank(n + 1));
  }
  CHECK(Bitstring::from_token("-") == Bitstring());
  CHECK(Bitstring().token() == "-");
  CHECK_THROWS_AS(Bitstring("012"), std::invalid_argument);
}

TEST_CASE("self-delimiting codes and pairing invert") {
  CHECK(self_delimit(Bitstring("01")) == Bitstring("11001"));
  for (std::uint64_t r = 0; r < 64; ++r) {
    const Bitstring s = from_rank(r);
    for (std::uint64_t n = 0; n < 20; ++n) {
      auto back = unpair(pair_with_number(s, n));
      REQUIRE(back);
      CHECK(back->first == s);
      CHECK(back->second == n);
    }
  }
  CHECK_FALSE(unpair(Bitstring("1")));
  CHECK(triple_with_numbers(Bitstring("1"), 2, 3) == pair_with_number(pair_with_number(Bitstring("1"), 2), 3));
}

TEST_CASE("dyadic arithmetic is exact") {
  const Dyadic three_quarters = Dyadic::parse("3/4");
  CHECK(three_quarters == Dyadic::pow2_neg(1) + Dyadic::pow2_neg(2));
  CHECK(three_quarters.str() == "3/4");
  CHECK((Dyadic::one() - three_quarters) == Dyadic::pow2_neg(2));
  CHECK(Dyadic::pow2_neg(4).ceil_neg_log2() == 4);
  CHECK(three_quarters.ceil_neg_log2() == 1);
  CHECK(Dyadic::pow2_neg(4).at_most_reciprocal(16));
  CHECK_FALSE(Dyadic::pow2_neg(4).below_reciprocal(16));
  CHECK(Dyadic::pow2_neg(5).below_reciprocal(17));
  Dyadic sum;
  for (int i = 0; i < 1024; ++i) sum += Dyadic::pow2_neg(10);
  CHECK(sum == Dyadic::one());
}

TEST_CASE("component machines") {
  const RunBudget big{64, 1000};
  SUBCASE("literal-unary decodes 1^k 0 x") {
    auto h = run_machine(MachineSpec::literal_unary(), Bitstring("100"), std::nullopt, big);
    REQUIRE(h);
    CHECK(h->output == Bitstring("0"));
    h = run_machine(MachineSpec::literal_unary(), Bitstring("0"), std::nullopt, big);
    REQUIRE(h);
    CHECK(h->output == Bitstring());
    CHECK_FALSE(run_machine(MachineSpec::literal_unary(), Bitstring("10"), std::nullopt, big));
  }
  SUBCASE("copy-condition outputs the condition on program 0") {
    auto h = run_machine(MachineSpec::copy_condition(), Bitstring("0"), Bitstring("1011"), big);
    REQUIRE(h);
    CHECK(h->output == Bitstring("1011"));
    CHECK_FALSE(run_machine(MachineSpec::copy_condition(), Bitstring("0"), std::nullopt, big));
    CHECK_FALSE(run_machine(MachineSpec::copy_condition(), Bitstring("1"), Bitstring("1"), big));
  }
  SUBCASE("composite strips its prefix") {
    const MachineSpec c = MachineSpec::composite(Bitstring("11"), MachineSpec::literal_unary());
    auto h = run_machine(c, Bitstring("11100"), std::nullopt, big);
    REQUIRE(h);
    CHECK(h->output == Bitstring("0"));
  }
  SUBCASE("step budget makes delayed table entries diverge") {
    const MachineSpec t = MachineSpec::request_table({{Bitstring("0"), Bitstring("11"), std::nullopt, 9}});
    CHECK_FALSE(run_machine(t, Bitstring("0"), std::nullopt, {4, 8}));
    CHECK(run_machine(t, Bitstring("0"), std::nullopt, {4, 9}));
  }
  SUBCASE("request tables must be prefix-free per condition") {
    CHECK_THROWS_AS(MachineSpec::request_table({{Bitstring("0"), Bitstring("1"), std::nullopt, 1},
                                                {Bitstring("01"), Bitstring("1"), std::nullopt, 1}}),
                    MalformedSpec);
  }
}

TEST_CASE("lambda terms: generator agrees with brute-force parsing") {
  for (std::size_t len = 0; len <= 12; ++len) {
    std::size_t parsed = 0;
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) parsed += blc::parse_closed(word(len, v)).has_value();
    const auto terms = blc::closed_terms_of_length(len);
    CHECK(terms.size() == parsed);
    for (const auto& [bits, term] : terms) CHECK(blc::encode(term) == bits);
  }
  CHECK(blc::encode(blc::lam(blc::var(0))) == Bitstring("0010"));
  for (std::uint64_t r = 0; r < 40; ++r) CHECK(blc::decode_bits(blc::encode_bits(from_rank(r))) == from_rank(r));
}

TEST_CASE("enumeration of the literal-unary domain at L = 4") {
  const Registry r = fixtures::literal_unary(4);
  const auto events = enumerate_domain(r, kAllStages);
  std::vector<Bitstring> programs;
  for (const auto& e : events) programs.push_back(e.program);
  std::sort(programs.begin(), programs.end());
  CHECK(programs == std::vector<Bitstring>{Bitstring("00"), Bitstring("0100"), Bitstring("0101")});
  CHECK(enumerate_domain(r, 0).empty());
}

TEST_CASE("enumeration is monotone, canonical, prefix-free and thread-independent") {
  const Registry r = fixtures::lab(10);
  const auto all = enumerate_domain(r, kAllStages, 1);
  CHECK(all == enumerate_domain(r, kAllStages, 4));
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(canonical_before(all[i - 1], all[i]));
  for (std::uint64_t s = 0; s <= r.budget.saturation_stage(); ++s) {
    const auto part = enumerate_domain(r, s);
    REQUIRE(part.size() <= all.size());
    CHECK(std::equal(part.begin(), part.end(), all.begin()));
    Dyadic kraft;
    for (const auto& e : part) kraft += Dyadic::pow2_neg(static_cast<int>(e.program.size()));
    CHECK(kraft <= Dyadic::one());
  }
  std::vector<Bitstring> programs;
  for (const auto& e : all) programs.push_back(e.program);
  std::sort(programs.begin(), programs.end(), [](const Bitstring& a, const Bitstring& b) { return a.str() < b.str(); });
  for (std::size_t i = 1; i < programs.size(); ++i) CHECK_FALSE(programs[i - 1].is_prefix_of(programs[i]));
}

TEST_CASE("budget schedules") {
  const ExecutionBudget b(8, 16, Schedule::linear(4));
  CHECK(b.at_stage(0).max_length == 0);
  CHECK(b.at_stage(2).max_length == 4);
  CHECK(b.at_stage(2).max_steps == 8);
  CHECK(b.at_stage(9).max_length == 8);
  CHECK(b.saturation_stage() == 4);
  CHECK(b.discovery_stage(3, 3) == std::optional<std::uint64_t>(2));
  CHECK_FALSE(b.discovery_stage(9, 1));
  const ExecutionBudget s(8, 100, Schedule::steps(100));
  CHECK(s.at_stage(1).max_length == 8);
  CHECK(s.discovery_stage(8, 37) == std::optional<std::uint64_t>(37));
  CHECK_THROWS_AS(ExecutionBudget(8, 16, Schedule::explicit_points({{1, 9, 16}})), MalformedSpec);
}

TEST_CASE("registry validation, JSON round trip and hash") {
  Registry r = fixtures::lab(8);
  r.validate();
  const Registry back = registry_from_json(r.to_json(), ".");
  CHECK(back.to_json() == r.to_json());
  CHECK(back.hash() == r.hash());
  CHECK(r.hash().size() == 16);
  Registry bad = r;
  bad.slots.push_back({"clash", Bitstring("01"), MachineSpec::literal_unary()});
  CHECK_THROWS_AS(bad.validate(), MalformedSpec);
  Registry other = fixtures::lab(9);
  CHECK(other.hash() != r.hash());
}

TEST_CASE("table payload files round trip") {
  const std::vector<TableEntry> entries{{Bitstring("0"), Bitstring(), std::nullopt, 0},
                                        {Bitstring("10"), Bitstring("1"), Bitstring("01"), 7}};
  std::ostringstream out;
  write_table_payload(out, entries);
  std::istringstream in("# comment\n" + out.str());
  CHECK(parse_table_payload(in, "mem") == entries);
  std::istringstream bad("0 1 cond=2\n");
  CHECK_THROWS(parse_table_payload(bad, "mem"));
}
