// Small deterministic RNG used everywhere in the simulator.
//
// std::mt19937 would be reproducible too, but the standard distributions are
// implementation-defined; hand-rolling the few draws we need keeps traces and
// reports byte-identical across toolchains.
#pragma once

#include <cstdint>

namespace crosslayer {

// splitmix64, used for seeding and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Derive an independent stream for a subcomponent (client id, module tag).
    Rng fork(std::uint64_t stream_id) const;

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double next_double();

    // Uniform integer in [lo, hi] inclusive.
    int next_int(int lo, int hi);

    // Uniform real in [lo, hi).
    double next_real(double lo, double hi);

    // Standard normal via Box-Muller.
    double next_normal();

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::uint64_t seed_origin_;
};

} // namespace crosslayer
