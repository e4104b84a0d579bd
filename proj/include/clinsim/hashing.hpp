#pragma once

#include <cstdint>
#include <string_view>

namespace clinsim {

/// FNV-1a, 64-bit. Stable across platforms and runs; used for the hash
/// embedder and the deterministic scripted backends.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::string_view data) {
    return fnv1a64(data, h);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace clinsim
