#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cdrgnn {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Fans a single root seed out into independent named streams, so that
/// e.g. the negative sampler can be re-seeded without touching initialization.
class SeedSplitter {
public:
    explicit SeedSplitter(std::uint64_t root) : root_(root) {}

    std::uint64_t root() const { return root_; }

    std::uint64_t seed_for(std::string_view stream) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : stream) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return splitmix64(splitmix64(root_) ^ h);
    }

    Rng stream(std::string_view name) const { return Rng(seed_for(name)); }

    SeedSplitter child(std::string_view name) const { return SeedSplitter(seed_for(name)); }

private:
    std::uint64_t root_;
};

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace cdrgnn
