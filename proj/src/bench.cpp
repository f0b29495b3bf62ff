#include "kic/bench.hpp"

#include <cmath>

#include "kic/errors.hpp"

namespace kic::bench {

namespace {

// Produces u_0, u_1, ... in order; feedback policies read the current state.
class InputSource {
public:
    InputSource(const InputPolicy& policy, Eigen::Index steps, double dt) : policy_(policy), dt_(dt) {
        std::visit(
            [&](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, GaussianNoise>) {
                    if (!(p.variance >= 0.0)) throw ParameterError("noise variance must be nonnegative");
                    rng_.emplace(p.seed);
                } else if constexpr (std::is_same_v<P, UniformNoise>) {
                    if (!(p.lo <= p.hi)) throw ParameterError("uniform noise needs lo <= hi");
                    rng_.emplace(p.seed);
                } else if constexpr (std::is_same_v<P, Sequence>) {
                    if (static_cast<Eigen::Index>(p.values.size()) < steps)
                        throw ParameterError("input sequence has " + std::to_string(p.values.size()) +
                                             " values, " + std::to_string(steps) + " needed");
                } else if constexpr (std::is_same_v<P, ExpDecay>) {
                    decay_value_ = p.u0;
                } else if constexpr (std::is_same_v<P, StateFeedback>) {
                    if (p.probe) probe_ = dither_signal(*p.probe, 1, steps);
                }
            },
            policy_);
    }

    /// Recorded input at sample k.
    double next(const Vector& x) {
        const Eigen::Index k = k_++;
        return std::visit(
            [&](const auto& p) -> double {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, GaussianNoise>) {
                    return std::sqrt(p.variance) * rng_->normal();
                } else if constexpr (std::is_same_v<P, UniformNoise>) {
                    return rng_->uniform(p.lo, p.hi);
                } else if constexpr (std::is_same_v<P, StateFeedback>) {
                    if (p.state_index < 0 || p.state_index >= x.size())
                        throw ParameterError("feedback state index out of range");
                    return -p.gain * x[p.state_index];
                } else if constexpr (std::is_same_v<P, ExpDecay>) {
                    const double value = decay_value_;
                    decay_value_ *= 1.0 - p.rate * dt_;
                    return value;
                } else if constexpr (std::is_same_v<P, Sequence>) {
                    return k < static_cast<Eigen::Index>(p.values.size()) ? p.values[static_cast<std::size_t>(k)]
                                                                          : 0.0;
                } else {
                    return 0.0;
                }
            },
            policy_);
    }

    /// Input the plant actually receives at step k, given the recorded value.
    double applied(Eigen::Index k, double recorded) const {
        return probe_.size() > 0 && k < probe_.cols() ? recorded + probe_(0, k) : recorded;
    }

private:
    const InputPolicy& policy_;
    double dt_;
    Eigen::Index k_ = 0;
    std::optional<Rng> rng_;
    double decay_value_ = 0.0;
    Matrix probe_;
};

void check_run(const Vector& x0, Eigen::Index dim, Eigen::Index steps, double dt) {
    if (x0.size() != dim) throw DimensionError("initial state must have " + std::to_string(dim) + " entries");
    if (steps < 1) throw ParameterError("steps must be at least 1");
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
}

}  // namespace

Trajectory simulate_linear(const LinearExampleParams& params, const InputPolicy& policy, const Vector& x0,
                           Eigen::Index steps) {
    constexpr double dt = 1.0;
    check_run(x0, 2, steps, dt);
    InputSource source(policy, steps, dt);

    Matrix x(2, steps + 1);
    Matrix u(1, steps + 1);
    x.col(0) = x0;
    for (Eigen::Index k = 0; k <= steps; ++k) {
        u(0, k) = source.next(x.col(k));
        if (k == steps) break;
        const double applied = source.applied(k, u(0, k));
        x(0, k + 1) = params.mu * x(0, k);
        x(1, k + 1) = params.lambda * x(1, k) + params.delta * applied;
    }
    return Trajectory(std::move(x), std::move(u), dt, "linear1");
}

SlowManifoldRun simulate_slow_manifold(const SlowManifoldParams& params, const InputPolicy& policy,
                                       const Vector& x0, Eigen::Index steps, double dt) {
    check_run(x0, 2, steps, dt);
    InputSource source(policy, steps, dt);

    Matrix x(2, steps + 1);
    Matrix u(1, steps + 1);
    Matrix dx(2, steps + 1);
    x.col(0) = x0;
    for (Eigen::Index k = 0; k <= steps; ++k) {
        u(0, k) = source.next(x.col(k));
        const double applied = source.applied(k, u(0, k));
        const double x1 = x(0, k), x2 = x(1, k);
        dx(0, k) = params.mu * x1;
        dx(1, k) = params.lambda * (x2 - x1 * x1) + params.delta * applied;
        if (k < steps) x.col(k + 1) = x.col(k) + dt * dx.col(k);
    }

    Matrix lifted(3, steps + 1);
    lifted.row(0) = dx.row(0);
    lifted.row(1) = dx.row(1);
    lifted.row(2) = 2.0 * x.row(0).cwiseProduct(dx.row(0));
    return {Trajectory(std::move(x), std::move(u), dt, "slowmanifold"), std::move(dx), std::move(lifted)};
}

Trajectory simulate_sir(const SirParams& params, const InputPolicy& vacc_policy, const Vector& s0i0r0,
                        Eigen::Index steps, double dt) {
    check_run(s0i0r0, 3, steps, dt);
    if (std::abs(s0i0r0.sum() - 1.0) > 1e-9) throw ParameterError("initial compartments must sum to 1");
    if (params.beta < 0 || params.nu < 0 || params.mu < 0 || params.gamma < 0)
        throw ParameterError("SIR rates must be nonnegative");
    InputSource source(vacc_policy, steps, dt);

    Matrix x(3, steps + 1);
    Matrix vacc(1, steps + 1);
    x.col(0) = s0i0r0;
    for (Eigen::Index k = 0; k <= steps; ++k) {
        vacc(0, k) = std::max(0.0, source.next(x.col(k)));
        if (k == steps) break;
        const double v = std::max(0.0, source.applied(k, vacc(0, k)));
        const double s = x(0, k), i = x(1, k), r = x(2, k);
        const double si = s * i;
        x(0, k + 1) = s + dt * (-params.beta * si + params.nu * (s + i + r) - params.mu * s - v);
        x(1, k + 1) = i + dt * (params.beta * si - params.gamma * i - params.mu * i);
        x(2, k + 1) = r + dt * (params.gamma * i - params.mu * r + v);
    }
    return Trajectory(std::move(x), std::move(vacc), dt, "sir");
}

Matrix policy_inputs(const InputPolicy& policy, Eigen::Index samples, double dt) {
    if (std::holds_alternative<StateFeedback>(policy))
        throw ParameterError("state feedback needs a simulator; it cannot generate inputs alone");
    if (samples < 0) throw ParameterError("sample count must be nonnegative");
    InputSource source(policy, samples, dt);
    const Vector none;
    Matrix u(1, samples);
    for (Eigen::Index k = 0; k < samples; ++k) u(0, k) = source.next(none);
    return u;
}

Matrix slow_manifold_operator(const SlowManifoldParams& p) {
    Matrix k = Matrix::Zero(3, 4);
    k(0, 0) = p.mu;
    k(1, 1) = p.lambda;
    k(1, 2) = -p.lambda;
    k(1, 3) = p.delta;
    k(2, 2) = 2.0 * p.mu;
    return k;
}

Matrix sir_euler_operator(const SirParams& p, double dt) {
    Matrix k(3, 5);
    // clang-format off
    k << 1.0 + dt * (p.nu - p.mu), dt * p.nu,                      dt * p.nu,        -dt * p.beta, -dt,
         0.0,                      1.0 - dt * (p.gamma + p.mu),    0.0,              dt * p.beta,  0.0,
         0.0,                      dt * p.gamma,                   1.0 - dt * p.mu,  0.0,          dt;
    // clang-format on
    return k;
}

Trajectory sir_reference_run(std::uint64_t seed) {
    Vector s0(3);
    s0 << 0.99, 0.01, 0.0;
    return simulate_sir(SirParams{}, UniformNoise{0.0, 0.005, seed}, s0, 400, 0.01);
}

}  // namespace kic::bench
