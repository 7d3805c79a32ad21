#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace specfi {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= kFnvPrime;
    }
    return h;
}

// Seed derivation for reproducible multi-run experiments: each run and each
// hypothetical gets a seed that is a pure function of (base_seed, labels).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return fnv1a64(label, fnv1a64_u64(base));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return fnv1a64_u64(index, fnv1a64_u64(base));
}

std::string hex64(std::uint64_t v);

}  // namespace specfi
