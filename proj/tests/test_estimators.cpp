#include <doctest.h>

#include "kic/bench.hpp"
#include "kic/errors.hpp"
#include "kic/estimators.hpp"

using namespace kic;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
    return m;
}

Vector x0_linear() { return (Vector(2) << 5.0, 2.0).finished(); }

}  // namespace

TEST_CASE("dmd on identity snapshots") {
    const Matrix i = Matrix::Identity(3, 3);
    CHECK(fit_dmd(SnapshotSet(i, i)).op().isApprox(i));
}

TEST_CASE("dmd recovers a diagonal map") {
    Matrix x(2, 11);
    x.col(0) << 1.3, -0.7;
    for (int k = 0; k < 10; ++k) {
        x(0, k + 1) = 0.9 * x(0, k);
        x(1, k + 1) = 0.5 * x(1, k) + 0.2 * x(0, k);
    }
    const KoopmanModel m = fit_dmd(build_pair(Trajectory(x, std::nullopt, 1.0)));
    Matrix a(2, 2);
    a << 0.9, 0.0, 0.2, 0.5;
    CHECK((m.op() - a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(m.spectral().values[0].real() == doctest::Approx(0.9));
}

TEST_CASE("dmd rejects input blocks and dither") {
    const Matrix y = Matrix::Ones(1, 2);
    CHECK_THROWS_AS(fit_dmd(SnapshotSet(y, y, y)), EstimatorError);
    FitOptions opts;
    opts.dither = Dither{};
    CHECK_THROWS_AS(fit_dmd(SnapshotSet(y, y), opts), EstimatorError);
}

TEST_CASE("dmdc on Example 1 with gaussian inputs") {
    const Trajectory t = bench::simulate_linear({}, bench::GaussianNoise{0.01, 1}, x0_linear(), 6);
    const KoopmanModel m = fit_dmdc(build_trio(t, false));
    REQUIRE(m.p() == 2);
    REQUIRE(m.q() == 3);
    CHECK(m.shape_kind() == ShapeKind::Rectangular);
    Matrix a(2, 2), b(2, 1);
    a << 0.1, 0, 0, 1.5;
    b << 0, 1;
    CHECK((m.A() - a).cwiseAbs().maxCoeff() < 1e-2);
    CHECK((m.B() - b).cwiseAbs().maxCoeff() < 1e-2);
    // Rectangular spectral data: K v = sigma q.
    const auto& s = m.spectral();
    for (Eigen::Index j = 0; j < s.values.size(); ++j)
        CHECK((m.op().cast<Complex>() * s.right_modes.col(j) - s.values[j] * s.left_modes.col(j)).norm() < 1e-8);
}

TEST_CASE("dmdc with zero inputs is rank deficient unless dithered") {
    const Trajectory t = bench::simulate_linear({}, bench::ZeroInput{}, x0_linear(), 8);
    const KoopmanModel plain = fit_dmdc(build_trio(t, false));
    CHECK(plain.diagnostics().rank_deficient);
    CHECK(plain.B().cwiseAbs().maxCoeff() == 0.0);

    FitOptions opts;
    opts.dither = Dither{1e-3, 4};
    const KoopmanModel dithered = fit_dmdc(build_trio(t, false), opts);
    CHECK_FALSE(dithered.diagnostics().rank_deficient);
    CHECK(dithered.B().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("dmdc from a single pair is the minimum-norm solution") {
    Matrix y(1, 1), z(1, 1), u(1, 1);
    y << 3;
    z << 5;
    u << 4;
    const KoopmanModel m = fit_dmdc(SnapshotSet(y, z, u));
    CHECK(m.op()(0, 0) == doctest::Approx(15.0 / 25.0));
    CHECK(m.op()(0, 1) == doctest::Approx(20.0 / 25.0));
    CHECK_THROWS_AS(fit_dmdc(SnapshotSet(y, z)), MissingInputError);
}

TEST_CASE("kic square operator blocks on Example 1") {
    SUBCASE("gaussian disturbance") {
        const Trajectory t = bench::simulate_linear({}, bench::GaussianNoise{0.01, 1}, x0_linear(), 6);
        const KicBlocks g = kic_blocks(fit_kic(build_trio(t, true), KicMode::WithInputDynamics));
        CHECK(g.G11(0, 0) == doctest::Approx(0.1).epsilon(1e-2));
        CHECK(g.G11(1, 1) == doctest::Approx(1.5).epsilon(1e-2));
        CHECK(std::abs(g.G12(0, 0)) < 1e-2);
        CHECK(std::abs(g.G12(1, 0) - 1.0) < 1e-2);
    }
    SUBCASE("state feedback with a probe") {
        const Dither probe{1e-3, 7};
        const Trajectory t =
            bench::simulate_linear({}, bench::StateFeedback{1.0, 1, probe}, x0_linear(), 6);
        FitOptions opts;
        opts.dither = probe;
        const KicBlocks g = kic_blocks(fit_kic(build_trio(t, true), KicMode::WithInputDynamics, opts));
        CHECK(std::abs(g.G21(0, 0)) < 5e-2);
        CHECK(std::abs(g.G21(0, 1) + 1.5) < 5e-2);
        CHECK(std::abs(g.G22(0, 0) + 1.0) < 5e-2);
    }
    SUBCASE("exogenous decay") {
        const Trajectory t = bench::simulate_linear({}, bench::ExpDecay{0.01, 1.0}, x0_linear(), 6);
        const KicBlocks g = kic_blocks(fit_kic(build_trio(t, true), KicMode::WithInputDynamics));
        CHECK(g.G21.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(std::abs(g.G22(0, 0) - 0.99) < 1e-6);
    }
}

TEST_CASE("kic with-input-dynamics top rows equal dmdc") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const SnapshotSet ss(random_matrix(rng, 3, 9), random_matrix(rng, 3, 9), random_matrix(rng, 2, 9),
                             random_matrix(rng, 2, 9));
        const Matrix g = fit_kic(ss, KicMode::WithInputDynamics).op();
        CHECK((g.topRows(3) - fit_dmdc(ss).op()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("kic without input dynamics equals dmdc") {
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const SnapshotSet ss(random_matrix(rng, 4, 6), random_matrix(rng, 4, 6), random_matrix(rng, 3, 6));
        CHECK((fit_kic(ss, KicMode::NoInputDynamics).op() - fit_dmdc(ss).op()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("kic with zero-width inputs is dmd") {
    Rng rng(23);
    const Matrix y = random_matrix(rng, 3, 7), z = random_matrix(rng, 3, 7);
    const SnapshotSet empty(y, z, Matrix(0, 7), Matrix(0, 7));
    CHECK(fit_kic(empty, KicMode::WithInputDynamics).op() == fit_dmd(SnapshotSet(y, z)).op());
}

TEST_CASE("kic needs Xi in with-input-dynamics mode") {
    const Matrix y = Matrix::Ones(1, 2);
    CHECK_THROWS_AS(fit_kic(SnapshotSet(y, y, y), KicMode::WithInputDynamics), MissingInputError);
    CHECK_NOTHROW(fit_kic(SnapshotSet(y, y, y), KicMode::NoInputDynamics));
}

TEST_CASE("linear consistency on clean data") {
    Rng rng(24);
    const Matrix g = random_matrix(rng, 4, 4);
    const Matrix omega = random_matrix(rng, 4, 12);
    const Matrix delta = g * omega;
    const SnapshotSet ss(omega.topRows(3), delta.topRows(3), Matrix(omega.bottomRows(1)),
                         Matrix(delta.bottomRows(1)));
    const KoopmanModel m = fit_kic(ss, KicMode::WithInputDynamics);
    CHECK((delta - m.op() * omega).norm() <= 1e-8 * delta.norm());
    CHECK((m.op() - g).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("slow manifold continuous fit") {
    Vector x0(2);
    x0 << 5, 2;
    const auto run = bench::simulate_slow_manifold({}, bench::GaussianNoise{0.01, 3}, x0, 14, 0.01);
    REQUIRE(run.trajectory.samples() == 15);
    FitOptions opts;
    opts.time_mode = TimeMode::ContinuousDerivative;
    const KoopmanModel m = fit_kic_lifted(run.trajectory, ObservableSpec::parse("x1,x2,x1^2,u1", 2, 1),
                                          ObservableSpec::parse("x1,x2,x1^2", 2, 1), KicMode::NoInputDynamics,
                                          opts, run.state_derivatives);
    Matrix k(3, 4);
    k << 2, 0, 0, 0, 0, 0.5, -0.5, 2, 0, 0, 4, 0;
    CHECK((m.op() - k).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(m.time_mode() == TimeMode::ContinuousDerivative);
    CHECK(m.dt() == 0.01);

    // Same targets through the snapshot-set route.
    const SnapshotSet ss = build_derivative_pair(
        Trajectory(lift(ObservableSpec::parse("x1,x2,x1^2", 2, 1), run.trajectory.states(), std::nullopt),
                   run.trajectory.inputs(), 0.01),
        run.lifted_derivatives);
    CHECK((fit_dmdc(ss).op() - k).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("continuous fit requirements") {
    const Trajectory t(Matrix::Ones(1, 3), Matrix::Ones(1, 3), 1.0);
    FitOptions opts;
    opts.time_mode = TimeMode::ContinuousDerivative;
    const ObservableSpec in = ObservableSpec::parse("x1,u1", 1, 1);
    CHECK_THROWS_AS(fit_kic_lifted(t, in, ObservableSpec::parse("x1", 1, 1), KicMode::NoInputDynamics, opts),
                    MissingInputError);
    CHECK_THROWS_AS(fit_kic_lifted(t, in, in, KicMode::NoInputDynamics, opts, Matrix::Zero(1, 3)), SpecError);

    // Constant trajectory, zero derivatives: zero operator.
    const KoopmanModel zero = fit_kic_lifted(t, in, ObservableSpec::parse("x1", 1, 1), KicMode::NoInputDynamics,
                                             opts, Matrix::Zero(1, 3));
    CHECK(zero.op().isZero(0.0));
    CHECK(zero.diagnostics().row_residuals[0] == 0.0);
}

TEST_CASE("lifted fit checks the output dictionary") {
    const Trajectory t(Matrix::Ones(2, 4), Matrix::Ones(1, 4), 1.0);
    CHECK_THROWS_AS(fit_kic_lifted(t, ObservableSpec::parse("x1,x2", 2, 1), ObservableSpec::parse("x1^2", 2, 1),
                                   KicMode::NoInputDynamics),
                    SpecError);
    CHECK_THROWS_AS(fit_kic_lifted(t, ObservableSpec::parse("x1", 1, 0), ObservableSpec::parse("x1", 1, 0),
                                   KicMode::NoInputDynamics),
                    DimensionError);
}

TEST_CASE("SIR lifted fit matches the Euler map") {
    const Trajectory full = bench::sir_reference_run(11);
    const Trajectory train(full.states().leftCols(201), Matrix(full.inputs()->leftCols(201)), full.dt());
    const ObservableSpec in({ObservableTerm::state(0, "S"), ObservableTerm::state(1, "I"),
                             ObservableTerm::state(2, "R"), ObservableTerm::monomial({1, 1, 0}, {0}, "SI"),
                             ObservableTerm::input(0, "Vacc")},
                            3, 1);
    const ObservableSpec out({ObservableTerm::state(0, "S"), ObservableTerm::state(1, "I"),
                              ObservableTerm::state(2, "R")},
                             3, 1);
    const KoopmanModel m = fit_kic_lifted(train, in, out, KicMode::NoInputDynamics);
    CHECK((m.op() - bench::sir_euler_operator({}, 0.01)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(m.diagnostics().max_residual() < 1e-10);
}
