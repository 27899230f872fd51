#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace newscnn {

using Rng = std::mt19937_64;

// Independent, reproducible generator for a named purpose ("init",
// "shuffle", "dropout", ...). Streams with different names never share state,
// so toggling one consumer does not perturb the draws of another.
Rng make_stream(std::uint64_t seed, std::string_view stream);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace newscnn
