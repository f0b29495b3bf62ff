#pragma once

#include <cstdint>
#include <random>

#include "kic/numkernel.hpp"

namespace kic {

/// Portable random stream: std::mt19937_64 (fully specified by the standard)
/// with hand-written transforms; a seed yields the same doubles on every
/// platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Seeded probe signal added to recorded inputs: uniform on [-amplitude, amplitude].
struct Dither {
    double amplitude = 1e-3;
    std::uint64_t seed = 0;
};

/// rows x cols samples of the dither, drawn column by column (sample k, then
/// input row within k), so column k is the same whatever the column count.
Matrix dither_signal(const Dither& dither, Eigen::Index rows, Eigen::Index cols);

}  // namespace kic
