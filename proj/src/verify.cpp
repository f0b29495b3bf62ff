#include "kic/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "kic/bench.hpp"
#include "kic/estimators.hpp"
#include "kic/model.hpp"
#include "kic/random.hpp"

namespace kic {

bool CheckResult::passed() const {
    return std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed(); });
}

const Measurement& CheckResult::binding() const {
    // Larger ratio = closer to (or past) the threshold.
    auto ratio = [](const Measurement& m) {
        if (m.lower_bound) return m.measured > 0.0 ? m.threshold / m.measured : HUGE_VAL;
        return m.threshold > 0.0 ? m.measured / m.threshold : (m.measured > 0.0 ? HUGE_VAL : 0.0);
    };
    return *std::max_element(measurements.begin(), measurements.end(),
                             [&](const Measurement& a, const Measurement& b) { return ratio(a) < ratio(b); });
}

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return HUGE_VAL;
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
    return m;
}

Eigen::Index random_dim(Rng& rng, int lo, int hi) {
    return lo + static_cast<Eigen::Index>(rng.uniform() * (hi - lo + 1));
}

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

class Suite {
public:
    explicit Suite(double scale) : scale_(scale) {}

    void upper(CheckResult& r, std::string name, double measured, double tol) const {
        r.measurements.push_back({std::move(name), measured, tol * scale_, false});
    }
    void lower(CheckResult& r, std::string name, double measured, double threshold) const {
        r.measurements.push_back({std::move(name), measured, threshold / scale_, true});
    }

private:
    double scale_;
};

// --- Example 1 -------------------------------------------------------------

const Vector kLinearX0 = vec({5.0, 2.0});

KicBlocks linear_fit(const bench::InputPolicy& policy, const FitOptions& opts = {}) {
    const Trajectory traj = bench::simulate_linear({}, policy, kLinearX0, 6);
    return kic_blocks(fit_kic(build_trio(traj, true), KicMode::WithInputDynamics, opts));
}

double linear_state_block_error(const KicBlocks& g) {
    Matrix a(2, 2);
    a << 0.1, 0.0, 0.0, 1.5;
    Matrix b(2, 1);
    b << 0.0, 1.0;
    return std::max(max_abs_diff(g.G11, a), max_abs_diff(g.G12, b));
}

CheckResult criterion_random_disturbance(const Suite& s) {
    CheckResult r{"1", "Example 1, random disturbance: G11 and G12 recovered", {}};
    const KicBlocks noisy = linear_fit(bench::GaussianNoise{0.01, 1});
    s.upper(r, "gaussian inputs, max |G11,G12 error|", linear_state_block_error(noisy), 1e-2);
    const KicBlocks clean = linear_fit(bench::Sequence{{0.31, -0.72, 0.18, 0.55, -0.27, 0.93}});
    s.upper(r, "sequence inputs, max |G11,G12 error|", linear_state_block_error(clean), 1e-8);
    return r;
}

CheckResult criterion_state_feedback(const Suite& s) {
    CheckResult r{"2", "Example 1, state feedback u = -x2 with dither: G21 = [0 -1.5], G22 = -1", {}};
    const Dither probe{1e-3, 7};
    FitOptions opts;
    opts.dither = probe;
    const KicBlocks g = linear_fit(bench::StateFeedback{1.0, 1, probe}, opts);
    Matrix g21(1, 2);
    g21 << 0.0, -1.5;
    s.upper(r, "max |G21 error|", max_abs_diff(g.G21, g21), 5e-2);
    s.upper(r, "|G22 error|", std::abs(g.G22(0, 0) + 1.0), 5e-2);
    return r;
}

CheckResult criterion_exogenous_decay(const Suite& s) {
    CheckResult r{"3", "Example 1, exogenous decay u+ = 0.99 u: G21 = [0 0], G22 = 0.99", {}};
    const KicBlocks g = linear_fit(bench::ExpDecay{0.01, 1.0});
    s.upper(r, "max |G21|", g.G21.cwiseAbs().maxCoeff(), 1e-6);
    s.upper(r, "|G22 - 0.99|", std::abs(g.G22(0, 0) - 0.99), 1e-6);
    return r;
}

// --- Example 2 -------------------------------------------------------------

CheckResult criterion_slow_manifold(const Suite& s) {
    CheckResult r{"4", "Example 2, continuous operator on {x1,x2,x1^2,u}", {}};
    const auto run = bench::simulate_slow_manifold({}, bench::GaussianNoise{0.01, 3}, kLinearX0, 14, 0.01);
    FitOptions opts;
    opts.time_mode = TimeMode::ContinuousDerivative;
    const KoopmanModel model =
        fit_kic_lifted(run.trajectory, ObservableSpec::parse("x1,x2,x1^2,u1", 2, 1), ObservableSpec::parse("x1,x2,x1^2", 2, 1),
                       KicMode::NoInputDynamics, opts, run.state_derivatives);
    Matrix expected(3, 4);
    expected << 2, 0, 0, 0, 0, 0.5, -0.5, 2, 0, 0, 4, 0;
    s.upper(r, "max |K error|", max_abs_diff(model.op(), expected), 1e-6);
    return r;
}

// --- Example 3 -------------------------------------------------------------

ObservableSpec sir_spec(bool with_si_output, bool inputs_side) {
    std::vector<ObservableTerm> terms{ObservableTerm::state(0, "S"), ObservableTerm::state(1, "I"),
                                      ObservableTerm::state(2, "R")};
    if (inputs_side || with_si_output) terms.push_back(ObservableTerm::monomial({1, 1, 0}, {0}, "SI"));
    if (inputs_side) terms.push_back(ObservableTerm::input(0, "Vacc"));
    return ObservableSpec(std::move(terms), 3, 1);
}

struct SirOutcome {
    std::vector<double> residuals;
    double prediction_error;
};

SirOutcome sir_experiment(bool si_in_output) {
    constexpr Eigen::Index train = 200;
    constexpr Eigen::Index horizon = 200;
    const Trajectory full = bench::sir_reference_run(11);
    const Trajectory training(full.states().leftCols(train + 1), Matrix(full.inputs()->leftCols(train + 1)),
                              full.dt(), "sir-train");

    const ObservableSpec out_spec = sir_spec(si_in_output, false);
    const KoopmanModel model =
        fit_kic_lifted(training, sir_spec(false, true), out_spec, KicMode::NoInputDynamics, FitOptions{});

    const Matrix start_lifted = lift(out_spec, full.states().col(train), std::nullopt);
    const Matrix predicted =
        predict(model, start_lifted.col(0), Matrix(full.inputs()->middleCols(train, horizon)), horizon);
    const Matrix actual = full.states().middleCols(train + 1, horizon);
    const Matrix guess = predicted.topRows(3).rightCols(horizon);
    return {model.diagnostics().row_residuals, (guess - actual).norm() / actual.norm()};
}

CheckResult criterion_sir_success(const Suite& s) {
    CheckResult r{"5", "Example 3, output {S,I,R}: 200-step holdout prediction", {}};
    s.upper(r, "relative L2 prediction error", sir_experiment(false).prediction_error, 1e-4);
    return r;
}

CheckResult criterion_sir_failure(const Suite& s) {
    CheckResult r{"6", "Example 3, output {S,I,R,SI}: closure failure detected", {}};
    const SirOutcome good = sir_experiment(false);
    const SirOutcome bad = sir_experiment(true);
    const double linear_rows = std::max({bad.residuals[0], bad.residuals[1], bad.residuals[2]});
    s.lower(r, "SI residual / max S,I,R residual", bad.residuals[3] / std::max(linear_rows, 1e-300), 10.0);
    s.lower(r, "prediction error ratio vs {S,I,R} output",
            bad.prediction_error / std::max(good.prediction_error, 1e-300), 100.0);
    return r;
}

// --- Structural identities -------------------------------------------------

CheckResult criterion_dmdc_equivalence(const Suite& s) {
    CheckResult r{"7", "KIC without input dynamics equals DMDc (50 random sets)", {}};
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto n_y = random_dim(rng, 1, 8), n_g = random_dim(rng, 1, 8), m = random_dim(rng, 1, 8);
        const SnapshotSet ss(random_matrix(rng, n_y, m), random_matrix(rng, n_y, m), random_matrix(rng, n_g, m));
        worst = std::max(worst, max_abs_diff(fit_kic(ss, KicMode::NoInputDynamics).op(), fit_dmdc(ss).op()));
    }
    s.upper(r, "max elementwise difference", worst, 1e-12);
    return r;
}

CheckResult criterion_dmd_reduction(const Suite& s) {
    CheckResult r{"8", "KIC with zero-width inputs equals DMD (50 random sets)", {}};
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = random_dim(rng, 1, 8), m = random_dim(rng, 1, 8);
        const Matrix y = random_matrix(rng, n, m), z = random_matrix(rng, n, m);
        const Matrix dmd = fit_dmd(SnapshotSet(y, z)).op();
        const SnapshotSet empty_inputs(y, z, Matrix(0, m), Matrix(0, m));
        worst = std::max(worst, max_abs_diff(fit_kic(empty_inputs, KicMode::WithInputDynamics).op(), dmd));
        worst = std::max(worst, max_abs_diff(fit_kic(empty_inputs, KicMode::NoInputDynamics).op(), dmd));
    }
    s.upper(r, "max elementwise difference", worst, 0.0);
    return r;
}

CheckResult criterion_periodic_spectrum(const Suite& s) {
    CheckResult r{"9", "DMD on m-cycles yields m-th roots of unity", {}};
    Rng rng(5);
    for (int m : {3, 5, 8}) {
        // Cyclic shift: x_{k+1}[i] = x_k[(i + 1) mod m].
        Matrix x(m, 2 * m + 1);
        x.col(0) = random_matrix(rng, m, 1);
        for (Eigen::Index k = 0; k < 2 * m; ++k)
            for (int i = 0; i < m; ++i) x(i, k + 1) = x((i + 1) % m, k);
        const KoopmanModel model = fit_dmd(build_pair(Trajectory(x, std::nullopt, 1.0)));
        double worst = 0.0;
        for (int j = 0; j < m; ++j) {
            const Complex root = std::polar(1.0, 2.0 * std::numbers::pi * j / m);
            worst = std::max(worst, (model.spectral().values.array() - root).abs().minCoeff());
        }
        s.upper(r, "m=" + std::to_string(m) + " max root distance", worst, 1e-8);
    }
    return r;
}

// --- Property suites -------------------------------------------------------

double penrose_error(Rng& rng) {
    const auto rows = random_dim(rng, 1, 8), cols = random_dim(rng, 1, 8);
    const auto rank = random_dim(rng, 1, static_cast<int>(std::min(rows, cols)));
    const Matrix m = random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols);
    const Matrix p = pinv(m);
    const Matrix mp = m * p, pm = p * m;
    return std::max({(mp * m - m).norm() / m.norm(), (pm * p - p).norm() / p.norm(),
                     (mp - mp.transpose()).norm() / mp.norm(), (pm - pm.transpose()).norm() / pm.norm()});
}

double eigen_residual(Rng& rng) {
    const auto n = random_dim(rng, 1, 8);
    const Matrix a = random_matrix(rng, n, n);
    const EigenDecomposition e = eig(a);
    const ComplexMatrix ac = a.cast<Complex>();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const ComplexVector v = e.right_vectors.col(j), w = e.left_vectors.col(j);
        worst = std::max(worst, (ac * v - e.eigenvalues[j] * v).norm());
        worst = std::max(worst, (w.adjoint() * ac - e.eigenvalues[j] * w.adjoint()).norm());
    }
    return worst / a.norm();
}

double spectral_prediction_error(Rng& rng) {
    const auto n = random_dim(rng, 1, 8);
    Matrix g = random_matrix(rng, n, n);
    g *= 0.95 / std::max(spectral_radius(g), 1e-12);
    const KoopmanModel model(g, ObservableSpec::identity(static_cast<int>(n), 0),
                             ObservableSpec::identity(static_cast<int>(n), 0), TimeMode::DiscreteMap, 1.0);
    const Vector x0 = random_matrix(rng, n, 1);
    const Matrix direct = predict(model, x0, std::nullopt, 10);
    return (predict_spectral(model, x0, 10) - direct).norm() / direct.norm();
}

bool serialization_round_trip(Rng& rng) {
    const auto n_y = random_dim(rng, 1, 6), n_g = random_dim(rng, 1, 3), m = random_dim(rng, 1, 12);
    const SnapshotSet ss(random_matrix(rng, n_y, m), random_matrix(rng, n_y, m), random_matrix(rng, n_g, m),
                         random_matrix(rng, n_g, m));
    const bool square = rng.uniform() < 0.5;
    const KoopmanModel model = square ? fit_kic(ss, KicMode::WithInputDynamics) : fit_dmdc(ss);
    return model_from_json(model_to_json(model)) == model;
}

bool csv_round_trip(Rng& rng) {
    const auto n_x = random_dim(rng, 1, 4), n_u = random_dim(rng, 0, 2), samples = random_dim(rng, 1, 20);
    std::optional<Matrix> u;
    if (n_u > 0) u = random_matrix(rng, n_u, samples) * 1e3;
    const Trajectory traj(random_matrix(rng, n_x, samples) * 1e-3, u, 0.01 + rng.uniform(), "rt");
    std::stringstream buf;
    write_csv(traj, buf);
    const Trajectory back = read_csv(buf);
    const bool inputs_equal = traj.has_inputs() == back.has_inputs() &&
                              (!traj.has_inputs() || (traj.inputs()->array() == back.inputs()->array()).all());
    const bool dt_close = samples == 1 || std::abs(back.dt() - traj.dt()) <= 1e-12 * traj.dt();
    return back.states().rows() == n_x && back.samples() == samples &&
           (traj.states().array() == back.states().array()).all() && inputs_equal && dt_close;
}

CheckResult criterion_properties(const Suite& s) {
    CheckResult r{"10", "Property suites over 50 randomized instances each", {}};
    constexpr int kTrials = 50;
    Rng rng(99);
    double penrose = 0.0, residual = 0.0, modal = 0.0;
    int model_failures = 0, csv_failures = 0;
    for (int t = 0; t < kTrials; ++t) {
        penrose = std::max(penrose, penrose_error(rng));
        residual = std::max(residual, eigen_residual(rng));
        modal = std::max(modal, spectral_prediction_error(rng));
        if (!serialization_round_trip(rng)) ++model_failures;
        if (!csv_round_trip(rng)) ++csv_failures;
    }
    s.upper(r, "Penrose conditions (relative)", penrose, 1e-8);
    s.upper(r, "eigen residuals (relative to ||A||)", residual, 1e-8);
    s.upper(r, "modal vs stepped prediction (relative)", modal, 1e-8);
    s.upper(r, "model JSON round-trip mismatches", model_failures, 0.0);
    s.upper(r, "CSV round-trip mismatches", csv_failures, 0.0);
    return r;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

std::vector<CheckResult> run_verification(double tolerance_scale) {
    const Suite s(tolerance_scale);
    return {criterion_random_disturbance(s), criterion_state_feedback(s), criterion_exogenous_decay(s),
            criterion_slow_manifold(s),      criterion_sir_success(s),    criterion_sir_failure(s),
            criterion_dmdc_equivalence(s),   criterion_dmd_reduction(s),  criterion_periodic_spectrum(s),
            criterion_properties(s)};
}

std::string verification_report_json(const std::vector<CheckResult>& results) {
    nlohmann::json report = nlohmann::json::array();
    for (const auto& r : results) {
        const Measurement& b = r.binding();
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& m : r.measurements)
            checks.push_back({{"name", m.name},
                              {"measured", m.measured},
                              {"threshold", m.threshold},
                              {"bound", m.lower_bound ? "lower" : "upper"},
                              {"status", m.passed() ? "PASS" : "FAIL"}});
        report.push_back({{"item", r.item},
                          {"title", r.title},
                          {"status", r.passed() ? "PASS" : "FAIL"},
                          {"measured", b.measured},
                          {"tolerance", b.threshold},
                          {"checks", checks}});
    }
    return report.dump(2) + "\n";
}

std::string verification_report_text(const std::vector<CheckResult>& results) {
    std::ostringstream out;
    for (const auto& r : results) {
        const Measurement& b = r.binding();
        out << (r.passed() ? "PASS" : "FAIL") << "  [" << r.item << "] " << r.title << "  (" << b.name << ": "
            << format_number(b.measured) << (b.lower_bound ? " >= " : " <= ") << format_number(b.threshold) << ")\n";
    }
    return out.str();
}

}  // namespace kic
