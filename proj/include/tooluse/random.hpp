#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "tooluse/tensor.hpp"

namespace tooluse {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed fan-out: every consumer derives its own stream from the root seed and a
// stable label, so adding a consumer never shifts another one's stream.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    return splitmix64(root ^ fnv1a64(label));
}

// mt19937_64 with a portable uniform mapping (no implementation-defined
// distributions, so streams are identical across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

private:
    std::mt19937_64 gen_;
};

// Uniform in [-r, r] with r = 1/sqrt(fan_in).
inline void init_uniform_scaled(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    for (double& v : t.data) v = rng.uniform(-r, r);
}

}  // namespace tooluse
