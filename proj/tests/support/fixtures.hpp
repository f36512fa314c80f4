#pragma once

// Registries shared by the unit tests and the acceptance binary.

#include <cstddef>
#include <cstdint>

#include "klab/registry.hpp"

namespace klab::fixtures {

/// Slot 0 literal-unary, budget (L, L) reached linearly at stage `stages`
/// (L when 0).
Registry literal_unary(std::size_t L, std::uint64_t stages = 0);

/// Literal-unary, copy-condition, BLC and a request table with delayed and
/// conditional entries, plus a plain identity machine. Budget (L, 64) over
/// 2L stages.
Registry lab(std::size_t L);

/// The lab registry without the interpreter slot (cheaper at larger L).
Registry lab_without_interpreter(std::size_t L);

}  // namespace klab::fixtures
