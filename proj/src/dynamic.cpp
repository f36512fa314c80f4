#include "klab/dynamic.hpp"

namespace klab {

std::vector<std::size_t> DynamicDomain::add(Bitstring program, Bitstring output, std::uint64_t stage) {
  const std::size_t i = entries_.size();
  const std::size_t len = program.size();
  weight_ += Dyadic::pow2_neg(static_cast<int>(len));
  std::vector<std::size_t> left;
  auto [it, fresh] = outputs_.try_emplace(output);
  OutputState& st = it->second;
  bool minimal = true;
  if (fresh || len < st.best) {
    if (!fresh) {
      left = std::move(st.minimal);
      for (std::size_t j : left) in_m_[j] = false;
    }
    st.best = len;
    st.nstar = i;
    st.minimal = {i};
  } else if (len == st.best) {
    st.minimal.push_back(i);
  } else {
    minimal = false;
  }
  entries_.push_back({std::move(program), std::move(output), stage});
  in_m_.push_back(minimal);
  return left;
}

std::optional<std::size_t> DynamicDomain::nstar(const Bitstring& output) const {
  auto it = outputs_.find(output);
  if (it == outputs_.end()) return std::nullopt;
  return it->second.nstar;
}

bool DynamicDomain::in_n(std::size_t i) const {
  auto n = nstar(entries_[i].output);
  return n && *n == i;
}

std::optional<std::size_t> DynamicDomain::best_length(const Bitstring& output) const {
  auto it = outputs_.find(output);
  if (it == outputs_.end()) return std::nullopt;
  return it->second.best;
}

}  // namespace klab
