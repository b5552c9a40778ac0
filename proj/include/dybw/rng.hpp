#ifndef DYBW_RNG_HPP
#define DYBW_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace dybw::rng {

// splitmix64 finalizer; the whole simulator derives randomness from it so
// results are bit-reproducible across platforms and independent of any
// stdlib distribution implementation.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream ids: every consumer of randomness gets its own keyed stream so that
// e.g. delay draws for (seed, k, j) are identical no matter which strategy
// consumes them or in which order.
enum StreamTag : std::uint64_t {
    kTagGraph = 1,
    kTagSynth = 2,
    kTagPartition = 3,
    kTagWorker = 4,
    kTagDelay = 5,
    kTagProject = 7,
};

// Counter-based stream: state is (key, counter); each draw hashes the pair
// and bumps the counter. Copyable value type; a copy replays the sequence.
struct Stream {
    std::uint64_t key = 0;
    std::uint64_t counter = 0;

    static Stream make(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        std::uint64_t k = mix64(seed ^ 0x5bf0f4c6a1e3d9e7ULL);
        for (std::uint64_t id : ids) {
            k = mix64(k ^ mix64(id ^ 0xd6e8feb86659fd93ULL));
        }
        return Stream{k, 0};
    }

    std::uint64_t next_u64() { return mix64(key ^ mix64(counter++)); }

    // Uniform on the open interval (0,1); never returns 0 or 1, so logs of
    // it are always finite.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double next_gaussian() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, n) via 128-bit multiply-shift.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }
};

}  // namespace dybw::rng

#endif  // DYBW_RNG_HPP
