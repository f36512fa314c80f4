#include "klab/enumerate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace klab {

bool canonical_before(const HaltEvent& a, const HaltEvent& b) {
  if (a.stage != b.stage) return a.stage < b.stage;
  return a.program < b.program;
}

std::vector<HaltEvent> enumerate_slots(const std::vector<Slot>& slots, const ExecutionBudget& budget,
                                       std::uint64_t up_to, const EnumerateOptions& options) {
  struct Unit {
    const Slot* slot;
    std::size_t inner_length;
  };
  std::vector<Unit> units;
  for (const auto& slot : slots) {
    if (options.condition_readers_only && !slot.spec.reads_condition()) continue;
    if (slot.prefix.size() > budget.max_length()) continue;
    for (std::size_t len = 0; len + slot.prefix.size() <= budget.max_length(); ++len) {
      units.push_back({&slot, len});
    }
  }

  std::vector<std::vector<HaltEvent>> results(units.size());
  auto work = [&](std::size_t i) {
    const Unit& u = units[i];
    std::vector<DomainPoint> points;
    generate_domain(u.slot->spec, u.inner_length, budget.max_steps(), options.condition, points);
    auto& out = results[i];
    for (auto& pt : points) {
      Bitstring program = u.slot->prefix + pt.program;
      auto stage = budget.discovery_stage(program.size(), pt.steps);
      if (!stage || *stage > up_to) continue;
      out.push_back({std::move(program), options.condition, std::move(pt.output), *stage, pt.steps});
    }
  };

  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || units.size() < 2) {
    for (std::size_t i = 0; i < units.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < units.size(); i = next++) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<HaltEvent> events;
  for (auto& r : results) {
    std::move(r.begin(), r.end(), std::back_inserter(events));
  }
  std::sort(events.begin(), events.end(), canonical_before);
  return events;
}

std::vector<HaltEvent> enumerate_domain(const Registry& registry, std::uint64_t up_to, unsigned threads) {
  EnumerateOptions opts;
  opts.threads = threads;
  return enumerate_slots(registry.slots, registry.budget, up_to, opts);
}

std::vector<HaltEvent> enumerate_plain(const Registry& registry, std::uint64_t up_to, unsigned threads) {
  EnumerateOptions opts;
  opts.threads = threads;
  return enumerate_slots(registry.plain_slots, registry.budget, up_to, opts);
}

}  // namespace klab
