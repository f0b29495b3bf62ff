#include "kic/estimators.hpp"

#include "kic/errors.hpp"

namespace kic {

std::string to_string(KicMode mode) {
    return mode == KicMode::WithInputDynamics ? "with-input-dynamics" : "no-input-dynamics";
}

namespace {

struct Regression {
    Matrix op;
    Diagnostics diagnostics;
};

// op = targets * pinv(regressors), with per-row residuals and rank bookkeeping.
Regression regress(const Matrix& targets, const Matrix& regressors, const TruncationRule& rule) {
    if (regressors.cols() == 0) throw InsufficientDataError("no snapshot columns to fit");
    Regression out;
    out.op = targets * pinv(regressors, rule);
    out.diagnostics.rank = svd(regressors, rule).rank();
    out.diagnostics.rank_deficient = out.diagnostics.rank < static_cast<std::size_t>(regressors.rows());
    out.diagnostics.row_residuals = row_residuals(out.op, targets, regressors);
    return out;
}

Matrix dithered_omega(const SnapshotSet& ss, const FitOptions& opts) {
    Matrix omega = ss.omega();
    if (opts.dither) {
        if (ss.n_gamma() == 0) throw EstimatorError("dither needs input rows in the snapshot set");
        omega.bottomRows(ss.n_gamma()) += dither_signal(*opts.dither, ss.n_gamma(), ss.m());
    }
    return omega;
}

ObservableSpec state_terms(Eigen::Index n_y, Eigen::Index n_gamma) {
    std::vector<ObservableTerm> terms;
    for (int i = 0; i < n_y; ++i) terms.push_back(ObservableTerm::state(i));
    return ObservableSpec(std::move(terms), static_cast<int>(n_y), static_cast<int>(n_gamma));
}

}  // namespace

KoopmanModel fit_dmd(const SnapshotSet& ss, const FitOptions& opts) {
    if (ss.n_gamma() > 0 || ss.Xi()) throw EstimatorError("DMD takes a snapshot pair; use DMDc or KIC for inputs");
    if (opts.dither) throw EstimatorError("dither needs input rows in the snapshot set");
    Regression fit = regress(ss.Z(), ss.Y(), opts.truncation);
    const auto n = static_cast<int>(ss.n_y());
    return KoopmanModel(std::move(fit.op), ObservableSpec::identity(n, 0), ObservableSpec::identity(n, 0),
                        opts.time_mode, opts.dt, std::move(fit.diagnostics));
}

KoopmanModel fit_dmdc(const SnapshotSet& ss, const FitOptions& opts) {
    if (!ss.Upsilon()) throw MissingInputError("DMDc needs input snapshots (Upsilon)");
    Regression fit = regress(ss.Z(), dithered_omega(ss, opts), opts.truncation);
    return KoopmanModel(std::move(fit.op),
                        ObservableSpec::identity(static_cast<int>(ss.n_y()), static_cast<int>(ss.n_gamma())),
                        state_terms(ss.n_y(), ss.n_gamma()), opts.time_mode, opts.dt, std::move(fit.diagnostics));
}

KoopmanModel fit_kic(const SnapshotSet& ss, KicMode mode, const FitOptions& opts) {
    if (!ss.Upsilon()) throw MissingInputError("KIC needs input snapshots (Upsilon)");
    const Matrix omega = dithered_omega(ss, opts);
    const auto n_y = ss.n_y();
    const auto n_gamma = ss.n_gamma();
    const ObservableSpec lifted = ObservableSpec::identity(static_cast<int>(n_y), static_cast<int>(n_gamma));

    if (mode == KicMode::WithInputDynamics) {
        if (!ss.Xi()) throw MissingInputError("KIC with input dynamics needs future inputs (Xi)");
        Regression fit = regress(ss.delta(), omega, opts.truncation);
        return KoopmanModel(std::move(fit.op), lifted, lifted, opts.time_mode, opts.dt, std::move(fit.diagnostics));
    }

    // Future input taken as zero: Delta = [Z; 0], keep the state rows.
    Matrix delta = Matrix::Zero(n_y + n_gamma, ss.m());
    delta.topRows(n_y) = ss.Z();
    const Matrix full = delta * pinv(omega, opts.truncation);
    Matrix op = full.topRows(n_y);

    Diagnostics diag;
    diag.rank = svd(omega, opts.truncation).rank();
    diag.rank_deficient = diag.rank < static_cast<std::size_t>(omega.rows());
    diag.row_residuals = row_residuals(op, ss.Z(), omega);
    return KoopmanModel(std::move(op), lifted, state_terms(n_y, n_gamma), opts.time_mode, opts.dt, std::move(diag));
}

KoopmanModel fit_kic_lifted(const Trajectory& traj, const ObservableSpec& input_spec,
                            const ObservableSpec& output_spec, KicMode mode, const FitOptions& opts,
                            const std::optional<Matrix>& state_derivs) {
    if (traj.state_dim() != input_spec.n_x())
        throw DimensionError("trajectory has " + std::to_string(traj.state_dim()) + " states, spec expects " +
                             std::to_string(input_spec.n_x()));
    if (traj.has_inputs() && traj.input_dim() != input_spec.n_u())
        throw DimensionError("trajectory has " + std::to_string(traj.input_dim()) + " inputs, spec expects " +
                             std::to_string(input_spec.n_u()));
    if (input_spec.uses_inputs() && !traj.has_inputs())
        throw MissingInputError("input dictionary uses inputs but the trajectory has none");
    if (opts.dither && !traj.has_inputs()) throw EstimatorError("dither needs trajectory inputs");
    restriction_indices(input_spec, output_spec);

    const Matrix& x = traj.states();
    const auto& u = traj.inputs();

    Matrix omega;
    Matrix targets;
    if (opts.time_mode == TimeMode::DiscreteMap) {
        if (traj.samples() < 2) throw InsufficientDataError("need at least 2 samples for a discrete fit");
        const Eigen::Index m = traj.samples() - 1;
        std::optional<Matrix> u_now, u_next;
        if (u) {
            u_now = u->leftCols(m);
            if (opts.dither) *u_now += dither_signal(*opts.dither, u->rows(), m);
            u_next = mode == KicMode::WithInputDynamics ? Matrix(u->rightCols(m)) : Matrix::Zero(u->rows(), m);
        }
        omega = lift(input_spec, x.leftCols(m), u_now);
        targets = lift(output_spec, x.rightCols(m), u_next);
    } else {
        if (!state_derivs) throw MissingInputError("continuous-time fit needs state derivatives");
        if (state_derivs->rows() != x.rows() || state_derivs->cols() != x.cols())
            throw DimensionError("state derivative matrix shape differs from the state matrix");
        if (output_spec.uses_inputs())
            throw SpecError("continuous-time outputs must be state observables");
        std::optional<Matrix> u_now = u;
        if (u && opts.dither) *u_now += dither_signal(*opts.dither, u->rows(), u->cols());
        omega = lift(input_spec, x, u_now);
        targets = lift_derivative(output_spec, x, *state_derivs);
    }

    Regression fit = regress(targets, omega, opts.truncation);
    return KoopmanModel(std::move(fit.op), input_spec, output_spec, opts.time_mode, traj.dt(),
                        std::move(fit.diagnostics));
}

KicBlocks kic_blocks(const KoopmanModel& model) {
    if (model.shape_kind() != ShapeKind::Square) throw EstimatorError("block views need a square KIC operator");
    const auto n_y = model.n_y();
    const auto n_g = model.n_gamma();
    const Matrix& g = model.op();
    return {g.topLeftCorner(n_y, n_y), g.topRightCorner(n_y, n_g), g.bottomLeftCorner(n_g, n_y),
            g.bottomRightCorner(n_g, n_g)};
}

}  // namespace kic
