#include <doctest.h>

#include <cmath>

#include "kic/bench.hpp"
#include "kic/errors.hpp"
#include "kic/observables.hpp"

using namespace kic;

namespace {

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST_CASE("printed Example 1 snapshots are replayed by a sequence") {
    // Inputs and states as printed to three decimals.
    const bench::Sequence printed{{-0.001, -0.001, 0.002, 0.009, 0.004, 0.006}};
    const Trajectory t = bench::simulate_linear({}, printed, vec2(5, 2), 6);
    const SnapshotSet ss = build_trio(t, true);

    Matrix omega(3, 5), delta(3, 5);
    omega << 5, 0.5, 0.05, 0.005, 0.0005, 2, 2.999, 4.497, 6.749, 10.132, -0.001, -0.001, 0.002, 0.009, 0.004;
    delta << 0.5, 0.05, 0.005, 0.0005, 0.00005, 2.999, 4.497, 6.749, 10.132, 15.203, -0.001, 0.002, 0.009, 0.004,
        0.006;
    // The printed inputs are rounded, so the replayed states drift by a few
    // units in the last printed place.
    auto close = [](const Matrix& got, const Matrix& want) {
        return ((got - want).cwiseAbs().array() <= 1e-3 + 2e-4 * want.cwiseAbs().array()).all();
    };
    CHECK(close(ss.omega().leftCols(5), omega));
    CHECK(close(ss.delta().leftCols(5), delta));
}

TEST_CASE("zero input gives decoupled powers") {
    const Trajectory t = bench::simulate_linear({}, bench::ZeroInput{}, vec2(1, 1), 5);
    for (int k = 0; k <= 5; ++k) {
        CHECK(t.states()(0, k) == doctest::Approx(std::pow(0.1, k)));
        CHECK(t.states()(1, k) == doctest::Approx(std::pow(1.5, k)));
    }
    CHECK(t.dt() == 1.0);
}

TEST_CASE("state feedback closes the loop") {
    const Trajectory t = bench::simulate_linear({}, bench::StateFeedback{1.0, 1, std::nullopt}, vec2(5, 2), 6);
    for (int k = 0; k <= 6; ++k) {
        CHECK(t.states()(1, k) == doctest::Approx(std::pow(0.5, k) * 2.0));
        CHECK((*t.inputs())(0, k) == -t.states()(1, k));
    }
}

TEST_CASE("feedback probe perturbs the plant, not the record") {
    const Dither probe{1e-3, 5};
    const Trajectory t = bench::simulate_linear({}, bench::StateFeedback{1.0, 1, probe}, vec2(5, 2), 4);
    const Matrix d = dither_signal(probe, 1, 4);
    for (int k = 0; k < 4; ++k) {
        CHECK((*t.inputs())(0, k) == -t.states()(1, k));
        CHECK(t.states()(1, k + 1) == doctest::Approx(1.5 * t.states()(1, k) + (*t.inputs())(0, k) + d(0, k)));
    }
}

TEST_CASE("exponential decay input") {
    const Trajectory t = bench::simulate_linear({}, bench::ExpDecay{0.01, 1.0}, vec2(5, 2), 6);
    for (int k = 0; k <= 6; ++k) CHECK((*t.inputs())(0, k) == doctest::Approx(std::pow(0.99, k)));
}

TEST_CASE("policy checks") {
    CHECK_THROWS_AS(bench::simulate_linear({}, bench::Sequence{{1.0, 2.0}}, vec2(1, 1), 3), ParameterError);
    CHECK_THROWS_AS(bench::simulate_linear({}, bench::GaussianNoise{-1.0, 0}, vec2(1, 1), 3), ParameterError);
    CHECK_THROWS_AS(bench::simulate_linear({}, bench::ZeroInput{}, Vector::Ones(3), 3), DimensionError);
    CHECK_THROWS_AS(bench::simulate_linear({}, bench::ZeroInput{}, vec2(1, 1), 0), ParameterError);
    CHECK_THROWS_AS(bench::policy_inputs(bench::StateFeedback{}, 3, 1.0), ParameterError);
    const Matrix u = bench::policy_inputs(bench::Sequence{{1.0, 2.0}}, 2, 1.0);
    CHECK(u(0, 1) == 2.0);
}

TEST_CASE("simulators are deterministic") {
    const auto a = bench::simulate_linear({}, bench::GaussianNoise{0.01, 9}, vec2(5, 2), 6);
    const auto b = bench::simulate_linear({}, bench::GaussianNoise{0.01, 9}, vec2(5, 2), 6);
    const auto c = bench::simulate_linear({}, bench::GaussianNoise{0.01, 10}, vec2(5, 2), 6);
    CHECK(a.states() == b.states());
    CHECK(a.states() != c.states());
}

TEST_CASE("slow manifold derivatives") {
    const auto run = bench::simulate_slow_manifold({}, bench::ZeroInput{}, vec2(5, 2), 14, 0.01);
    CHECK(run.lifted_derivatives(2, 0) == doctest::Approx(100.0));
    CHECK(run.trajectory.samples() == 15);

    // On the manifold x2 = x1^2: d/dt(y2 - y3) = lambda (y2 - y3) - 2 mu y3 + delta u.
    const bench::SlowManifoldParams p;
    const auto on = bench::simulate_slow_manifold(p, bench::GaussianNoise{0.01, 2}, vec2(1.5, 2.25), 10, 0.01);
    for (Eigen::Index k = 0; k < on.trajectory.samples(); ++k) {
        const double y1 = on.trajectory.states()(0, k), y2 = on.trajectory.states()(1, k), y3 = y1 * y1;
        const double u = (*on.trajectory.inputs())(0, k);
        const double lhs = on.lifted_derivatives(1, k) - on.lifted_derivatives(2, k);
        CHECK(std::abs(lhs - (p.lambda * (y2 - y3) - 2 * p.mu * y3 + p.delta * u)) < 1e-12 * (1 + std::abs(lhs)));
    }
    CHECK((bench::slow_manifold_operator(p) * lift(ObservableSpec::parse("x1,x2,x1^2,u1", 2, 1),
                                                   on.trajectory.states(), on.trajectory.inputs()) -
           on.lifted_derivatives)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("SIR without infection pressure decays linearly") {
    bench::SirParams p;
    p.beta = 0.0;
    Vector s0(3);
    s0 << 0.9, 0.1, 0.0;
    const Trajectory t = bench::simulate_sir(p, bench::ZeroInput{}, s0, 50, 0.01);
    double expected = 0.1;
    for (int k = 0; k <= 50; ++k) {
        CHECK(t.states()(1, k) == doctest::Approx(expected).epsilon(1e-12));
        expected *= 1.0 - (p.gamma + p.mu) * 0.01;
    }
}

TEST_CASE("SIR conserves population when births balance deaths") {
    const Trajectory t = bench::sir_reference_run(3);
    REQUIRE(t.samples() == 401);
    for (Eigen::Index k = 0; k < t.samples(); ++k) CHECK(std::abs(t.states().col(k).sum() - 1.0) < 1e-12);
    CHECK(t.states().row(1).maxCoeff() > 0.01);
    CHECK(t.states().minCoeff() >= 0.0);
    CHECK(t.inputs()->minCoeff() >= 0.0);
    CHECK(t.inputs()->maxCoeff() <= 0.005);
}

TEST_CASE("SIR Euler operator reproduces one step") {
    const Trajectory t = bench::sir_reference_run(4);
    const ObservableSpec in({ObservableTerm::state(0, "S"), ObservableTerm::state(1, "I"),
                             ObservableTerm::state(2, "R"), ObservableTerm::monomial({1, 1, 0}, {0}, "SI"),
                             ObservableTerm::input(0, "Vacc")},
                            3, 1);
    const Matrix z = lift(in, t.states().leftCols(400), Matrix(t.inputs()->leftCols(400)));
    CHECK((bench::sir_euler_operator({}, 0.01) * z - t.states().rightCols(400)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("SIR initial state must sum to one") {
    Vector s0(3);
    s0 << 0.5, 0.1, 0.0;
    CHECK_THROWS_AS(bench::simulate_sir({}, bench::ZeroInput{}, s0, 5, 0.01), ParameterError);
}
