#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace synscale {

// 64-bit FNV-1a over a label string; used to fold stream names into seeds.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

// SplitMix64 finalizer; decorrelates the combined seed words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives the seed for an owned sub-stream, e.g. one synapse group's
// generator from the network's global seed and the group name.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    return splitmix64(splitmix64(parent) ^ fnv1a64(label));
}

// One deterministic random stream per (globalSeed, entitySeed, label).
// The label names the owner and the purpose of the draws ("neurons/params",
// "gen/targets", ...) so that adding a stream, or drawing more from one,
// never shifts the values produced by another. All value mappings are
// spelled out here instead of going through std::*_distribution, whose
// algorithms vary between standard libraries.
class RandomStream {
public:
    RandomStream(std::uint64_t globalSeed, std::uint64_t entitySeed, std::string_view label)
        : eng_(splitmix64(splitmix64(globalSeed) ^ splitmix64(~entitySeed) ^ fnv1a64(label))) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform integer in [0, n); Lemire's multiply-shift. Bias is < 2^-32
    // for the population sizes used here, which is far below anything a
    // simulation could resolve, so no rejection loop.
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; the second value of each pair is
    // cached so consecutive draws consume the engine at a fixed rate.
    double gaussian() {
        if (hasSpare_) {
            hasSpare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double twoPi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(twoPi * u2);
        hasSpare_ = true;
        return r * std::cos(twoPi * u2);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

}  // namespace synscale
