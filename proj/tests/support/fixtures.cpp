#include "support/fixtures.hpp"

namespace klab::fixtures {

namespace {

MachineSpec sample_table() {
  return MachineSpec::request_table({
      {Bitstring("00"), Bitstring("1111"), std::nullopt, 3},
      {Bitstring("01"), Bitstring("000"), std::nullopt, 20},
      {Bitstring("10"), Bitstring("1"), Bitstring("0"), 2},
      {Bitstring("110"), Bitstring("0110"), std::nullopt, 60},
      {Bitstring("111"), Bitstring("01"), Bitstring("1"), 5},
  });
}

}  // namespace

Registry literal_unary(std::size_t L, std::uint64_t stages) {
  Registry r;
  r.budget = ExecutionBudget(L, L, Schedule::linear(stages ? stages : L));
  r.add_slot("literal", MachineSpec::literal_unary());
  return r;
}

Registry lab(std::size_t L) {
  Registry r;
  r.budget = ExecutionBudget(L, 64, Schedule::linear(2 * L));
  r.add_slot("literal", MachineSpec::literal_unary());
  r.add_slot("copy", MachineSpec::copy_condition());
  r.add_slot("blc", MachineSpec::interpreter("blc"));
  r.add_slot("table", sample_table());
  r.add_plain_slot("identity", MachineSpec::plain_identity());
  return r;
}

Registry lab_without_interpreter(std::size_t L) {
  Registry r;
  r.budget = ExecutionBudget(L, 64, Schedule::linear(2 * L));
  r.add_slot("literal", MachineSpec::literal_unary());
  r.add_slot("copy", MachineSpec::copy_condition());
  r.add_slot("table", sample_table());
  r.add_plain_slot("identity", MachineSpec::plain_identity());
  return r;
}

}  // namespace klab::fixtures
