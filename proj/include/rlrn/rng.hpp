#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rlrn {

using Rng = std::mt19937_64;

// Stable 64-bit FNV-1a hash; used to fold stage names into seeds.
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

// Per-stage / per-item seed derivation from one global seed. Both overloads
// are pure, so any stage can be re-run in isolation.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace rlrn
