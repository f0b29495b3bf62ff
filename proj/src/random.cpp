#include "kic/random.hpp"

#include <cmath>
#include <numbers>

#include "kic/errors.hpp"

namespace kic {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double radius = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

Matrix dither_signal(const Dither& dither, Eigen::Index rows, Eigen::Index cols) {
    if (!(dither.amplitude > 0.0)) throw ParameterError("dither amplitude must be positive");
    Rng rng(dither.seed);
    Matrix out(rows, cols);
    for (Eigen::Index k = 0; k < cols; ++k)
        for (Eigen::Index r = 0; r < rows; ++r) out(r, k) = rng.uniform(-dither.amplitude, dither.amplitude);
    return out;
}

}  // namespace kic
