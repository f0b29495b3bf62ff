#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "kic/data.hpp"
#include "kic/random.hpp"

namespace kic::bench {

/// x_{k+1} = [mu x1; lambda x2 + delta u]
struct LinearExampleParams {
    double mu = 0.1;
    double lambda = 1.5;
    double delta = 1.0;
};

/// dx/dt = [mu x1; lambda (x2 - x1^2) + delta u]
struct SlowManifoldParams {
    double mu = 2.0;
    double lambda = 0.5;
    double delta = 2.0;
};

/// SIR with births nu (S+I+R), deaths mu, recovery gamma and a vaccination
/// input moving S to R.
struct SirParams {
    double beta = 10.0;
    double nu = 1.0;
    double mu = 1.0;
    double gamma = 1.0;
};

struct GaussianNoise {
    double variance = 0.01;
    std::uint64_t seed = 0;
};

struct UniformNoise {
    double lo = 0.0;
    double hi = 0.005;
    std::uint64_t seed = 0;
};

/// u_k = -gain * x_k[state_index]. With a probe, the plant receives
/// u_k + d_k (d from dither_signal) while the recorded input stays u_k; a fit
/// given the same Dither reproduces the applied input in Omega.
struct StateFeedback {
    double gain = 1.0;
    int state_index = 1;
    std::optional<Dither> probe;
};

/// du/dt = -rate u, stepped as u_{k+1} = (1 - rate dt) u_k.
struct ExpDecay {
    double rate = 0.01;
    double u0 = 1.0;
};

/// Replays values[k]; needs at least `steps` values, and the sample after the
/// last supplied value records 0.
struct Sequence {
    std::vector<double> values;
};

struct ZeroInput {};

using InputPolicy = std::variant<GaussianNoise, UniformNoise, StateFeedback, ExpDecay, Sequence, ZeroInput>;

Trajectory simulate_linear(const LinearExampleParams& params, const InputPolicy& policy, const Vector& x0,
                           Eigen::Index steps);

struct SlowManifoldRun {
    Trajectory trajectory;
    /// dx/dt at every sample (2 x samples).
    Matrix state_derivatives;
    /// d/dt of (x1, x2, x1^2) at every sample (3 x samples).
    Matrix lifted_derivatives;
};

/// Forward Euler at dt; derivatives are the exact vector field on the samples.
SlowManifoldRun simulate_slow_manifold(const SlowManifoldParams& params, const InputPolicy& policy,
                                       const Vector& x0, Eigen::Index steps, double dt);

/// Forward Euler at dt. Vaccination values are clipped at 0. The initial
/// compartments must sum to 1 within 1e-9.
Trajectory simulate_sir(const SirParams& params, const InputPolicy& vacc_policy, const Vector& s0i0r0,
                        Eigen::Index steps, double dt);

/// Input samples for a state-independent policy (feedback is rejected).
Matrix policy_inputs(const InputPolicy& policy, Eigen::Index samples, double dt);

/// The continuous operator of the slow-manifold system on (x1, x2, x1^2, u).
Matrix slow_manifold_operator(const SlowManifoldParams& params);

/// The one-step Euler map of the SIR system on (S, I, R, S*I, Vacc).
Matrix sir_euler_operator(const SirParams& params, double dt);

/// Default SIR run: 1% infected, uniform [0, 0.005] vaccination, dt 0.01,
/// 400 steps.
Trajectory sir_reference_run(std::uint64_t seed);

}  // namespace kic::bench
