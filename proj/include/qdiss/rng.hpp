#pragma once

#include <cmath>
#include <cstdint>

namespace qdiss {

// Deterministic random number generation for the disorder ensembles.
//
// Output must be bit-identical for a given (seed, trajectory index) no matter
// how trajectories are scheduled over worker threads, and no matter which
// standard library we are built against. std::mt19937 would give a portable
// bit stream, but std::normal_distribution is implementation defined, so the
// whole chain is kept explicit: splitmix64 for the raw stream, Box-Muller on
// 53-bit uniforms for the Gaussians.

inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Uniform in (0, 1], 53-bit resolution. The open lower end keeps log()
    // finite in Box-Muller.
    double uniform01() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Independent stream for one trajectory. The trajectory index is folded into
// the seed through the splitmix increment so neighbouring indices start far
// apart in the underlying sequence.
inline SplitMix64 trajectory_stream(std::uint64_t seed, std::uint64_t trajectory) {
    return SplitMix64(mix64(seed + 0x9e3779b97f4a7c15ULL * (trajectory + 1)));
}

class GaussianSampler {
public:
    explicit GaussianSampler(SplitMix64 gen) : gen_(gen) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = gen_.uniform01();
        const double u2 = gen_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    SplitMix64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace qdiss
