#include "klab/kc.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <random>
#include <stdexcept>
#include <thread>

#include "klab/errors.hpp"

namespace klab {

KcBuilder::KcBuilder(Dyadic capacity) : capacity_(capacity) {
  if (capacity_.is_zero() || capacity_ > Dyadic::one()) {
    throw InvalidCapacity("capacity must lie in (0, 1], got " + capacity_.str());
  }
  if (capacity_ == Dyadic::one()) {
    free_[0] = Bitstring();
    return;
  }
  // Left-packed binary-carry layout: the 2^-i term of the expansion becomes
  // the node 1^{i-1} 0.
  Dyadic rest = capacity_;
  for (std::size_t i = 1; i <= kMaxLength && !rest.is_zero(); ++i) {
    const Dyadic unit = Dyadic::pow2_neg(static_cast<int>(i));
    if (rest >= unit) {
      rest -= unit;
      free_[i] = Bitstring::repeat('1', i - 1) + Bitstring("0");
    }
  }
}

std::optional<Bitstring> KcBuilder::request(const Request& r) {
  if (r.length > kMaxLength) {
    throw std::invalid_argument("request length " + std::to_string(r.length) + " exceeds " +
                                std::to_string(kMaxLength));
  }
  std::size_t j = r.length + 1;
  while (j-- > 0) {
    if (free_[j]) break;
  }
  if (j > r.length) return std::nullopt;

  Bitstring node = std::move(*free_[j]);
  free_[j].reset();
  for (std::size_t i = 0; i < r.length - j; ++i) {
    free_[j + i + 1] = node + Bitstring::repeat('0', i) + Bitstring("1");
  }
  Bitstring codeword = node + Bitstring::repeat('0', r.length - j);
  allocated_ += Dyadic::pow2_neg(static_cast<int>(r.length));
  grants_.push_back({r, codeword});
  return codeword;
}

std::vector<Bitstring> KcBuilder::free_nodes() const {
  std::vector<Bitstring> out;
  for (const auto& f : free_) {
    if (f) out.push_back(*f);
  }
  return out;
}

bool KcBuilder::check_pool(std::string* why) const {
  auto fail = [why](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  Dyadic free_weight;
  std::vector<const Bitstring*> nodes;
  for (std::size_t len = 0; len < free_.size(); ++len) {
    if (!free_[len]) continue;
    if (free_[len]->size() != len) return fail("free node stored under the wrong length");
    free_weight += Dyadic::pow2_neg(static_cast<int>(len));
    nodes.push_back(&*free_[len]);
  }
  if (free_weight + allocated_ != capacity_) {
    return fail("free weight " + free_weight.str() + " + allocated " + allocated_.str() +
                " != capacity " + capacity_.str());
  }
  std::sort(nodes.begin(), nodes.end(), [](const Bitstring* a, const Bitstring* b) { return a->str() < b->str(); });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i - 1]->is_prefix_of(*nodes[i])) return fail("free nodes are comparable");
  }
  return true;
}

bool KcBuilder::check_invariants(std::string* why) const {
  if (!check_pool(why)) return false;
  std::vector<const Bitstring*> words;
  for (const auto& g : grants_) {
    if (g.codeword.size() != g.request.length) {
      if (why) *why = "codeword length mismatch for " + g.codeword.token();
      return false;
    }
    words.push_back(&g.codeword);
  }
  for (const auto& f : free_) {
    if (f) words.push_back(&*f);
  }
  // In plain lexicographic order a word sorts directly before an extension of
  // it (if it has one), so adjacent pairs decide the antichain property.
  std::sort(words.begin(), words.end(),
            [](const Bitstring* a, const Bitstring* b) { return a->str() < b->str(); });
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (words[i - 1]->is_prefix_of(*words[i])) {
      if (why) *why = words[i - 1]->token() + " is a prefix of " + words[i]->token();
      return false;
    }
  }
  return true;
}

Dyadic parse_capacity(const std::string& text) {
  Dyadic c;
  try {
    c = Dyadic::parse(text);
  } catch (const std::exception& e) {
    throw InvalidCapacity(e.what());
  }
  if (c.is_zero() || c > Dyadic::one()) throw InvalidCapacity("capacity must lie in (0, 1], got " + text);
  return c;
}

ConditionalKcBuilder::ConditionalKcBuilder(Dyadic per_condition_capacity)
    : capacity_(per_condition_capacity) {
  KcBuilder probe(capacity_);  // validates the capacity
}

std::optional<Bitstring> ConditionalKcBuilder::conditional_request(const Request& r) {
  if (!r.condition) throw std::invalid_argument("conditional_request needs a condition");
  auto it = pools_.find(*r.condition);
  if (it == pools_.end()) it = pools_.emplace(*r.condition, KcBuilder(capacity_)).first;
  auto codeword = it->second.request(r);
  if (codeword) grants_.push_back({r, *codeword});
  return codeword;
}

MachineSpec compile(const std::vector<Grant>& grants) {
  std::vector<TableEntry> entries;
  entries.reserve(grants.size());
  for (std::size_t i = 0; i < grants.size(); ++i) {
    const Grant& g = grants[i];
    entries.push_back({g.codeword, g.request.output, g.request.condition, i + 1});
  }
  return MachineSpec::request_table(std::move(entries));
}

std::vector<Request> parse_request_stream(std::istream& in, const std::string& origin) {
  std::vector<Request> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string output, length, condition, extra;
    if (!(ls >> output)) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (!(ls >> length)) throw MalformedSpec(where + "missing length");
    Request r;
    try {
      r.output = Bitstring::from_token(output);
      std::size_t used = 0;
      r.length = std::stoul(length, &used);
      if (used != length.size()) throw std::invalid_argument("bad length '" + length + "'");
      if (ls >> condition) r.condition = Bitstring::from_token(condition);
    } catch (const std::exception& e) {
      throw MalformedSpec(where + e.what());
    }
    if (ls >> extra) throw MalformedSpec(where + "trailing field '" + extra + "'");
    out.push_back(std::move(r));
  }
  return out;
}

void write_request_stream(std::ostream& out, const std::vector<Request>& requests) {
  for (const auto& r : requests) {
    out << r.output.token() << ' ' << r.length;
    if (r.condition) out << ' ' << r.condition->token();
    out << '\n';
  }
}

}  // namespace klab

namespace klab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> exact_partition(std::mt19937_64& rng, std::size_t max_length, std::size_t target) {
  std::vector<std::size_t> leaves{0};
  if (max_length == 0) return leaves;
  // Capped by 2^max_length leaves, so a leaf below max_length always exists.
  const std::size_t cap = max_length >= 20 ? target : std::min<std::size_t>(target, std::size_t{1} << max_length);
  while (leaves.size() < cap) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng);
    if (leaves[i] >= max_length) continue;
    ++leaves[i];
    leaves.push_back(leaves[i]);
  }
  std::shuffle(leaves.begin(), leaves.end(), rng);
  return leaves;
}

std::string fuzz_stream(std::uint64_t seed, std::uint64_t index, const KcFuzzOptions& opt, KcFuzzReport& rep) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(index)));
  const std::size_t count = std::uniform_int_distribution<std::size_t>(1, opt.max_requests)(rng);
  std::vector<std::size_t> lengths;
  const bool exact = index % 2 == 1;
  if (exact) {
    lengths = exact_partition(rng, opt.max_length, count);
    ++rep.exact_streams;
  } else {
    std::uniform_int_distribution<std::size_t> len(0, opt.max_length);
    for (std::size_t i = 0; i < count; ++i) lengths.push_back(std::max(len(rng), len(rng)));
  }
  KcBuilder kc;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const Dyadic unit = Dyadic::pow2_neg(static_cast<int>(lengths[i]));
    const bool fits = unit <= kc.remaining();
    auto code = kc.request({from_rank(i), lengths[i], std::nullopt});
    ++rep.requests;
    if (code) {
      ++rep.granted;
    } else {
      ++rep.rejected;
    }
    if (code.has_value() != fits) return "request " + std::to_string(i) + " of length " + std::to_string(lengths[i]) +
                                          (fits ? " rejected with room left" : " granted past capacity");
    if (code && code->size() != lengths[i]) return "codeword " + code->token() + " has the wrong length";
    std::string why;
    if (code && !kc.check_pool(&why)) return "after request " + std::to_string(i) + ": " + why;
  }
  if (exact && !kc.remaining().is_zero()) return "exact partition left " + kc.remaining().str() + " unallocated";
  if (std::string why; !kc.check_invariants(&why)) return why;
  return {};
}

}  // namespace

KcFuzzReport fuzz_kc(const KcFuzzOptions& opt) {
  if (opt.max_length > KcBuilder::kMaxLength || opt.max_requests == 0) {
    throw std::invalid_argument("fuzz lengths must be <= " + std::to_string(KcBuilder::kMaxLength) +
                                " and streams non-empty");
  }
  const unsigned workers = std::max(1u, opt.threads);
  std::vector<KcFuzzReport> parts(workers);
  std::vector<std::map<std::uint64_t, std::string>> fails(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint64_t i = w; i < opt.streams; i += workers) {
        ++parts[w].streams;
        std::string why = fuzz_stream(opt.seed, i, opt, parts[w]);
        if (!why.empty()) fails[w].emplace(i, std::move(why));
      }
    });
  }
  for (auto& t : pool) t.join();
  KcFuzzReport rep;
  std::map<std::uint64_t, std::string> all;
  for (unsigned w = 0; w < workers; ++w) {
    rep.streams += parts[w].streams;
    rep.requests += parts[w].requests;
    rep.granted += parts[w].granted;
    rep.rejected += parts[w].rejected;
    rep.exact_streams += parts[w].exact_streams;
    all.insert(fails[w].begin(), fails[w].end());
  }
  rep.failures = all.size();
  if (!all.empty()) rep.first_failure = "stream " + std::to_string(all.begin()->first) + ": " + all.begin()->second;
  return rep;
}

}  // namespace klab
