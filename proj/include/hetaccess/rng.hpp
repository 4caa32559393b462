#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hetaccess {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for replication `index` of an experiment. Deployments use the
/// untagged form so that every scheme of a replication sees the same users.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(mix64(base) ^ mix64(index + 0x51ed270b27ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index,
                                    std::string_view tag) noexcept {
    return mix64(derive_seed(base, index) ^ hash_tag(tag));
}

}  // namespace hetaccess
