#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kic/data.hpp"
#include "kic/numkernel.hpp"
#include "kic/observables.hpp"

namespace kic {

enum class TimeMode { DiscreteMap, ContinuousDerivative };
enum class ShapeKind { Square, Rectangular };

std::string to_string(TimeMode mode);
std::string to_string(ShapeKind kind);

struct Diagnostics {
    /// ||target_row - (K Omega)_row|| / max(||target_row||, 1e-300), one per output row.
    std::vector<double> row_residuals;
    /// Omega had fewer independent rows (after truncation) than regressors.
    bool rank_deficient = false;
    std::size_t rank = 0;

    double max_residual() const;
    friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

/// Modes of the fitted operator.
///
/// Square operators: values are eigenvalues, right_modes the eigenvectors v_j,
/// left_modes the left eigenvectors w_j (w_j^H K = lambda_j w_j^H).
///
/// Rectangular operators: values are singular values sigma_j (zero imaginary
/// part), left_modes the output-space vectors q_j and right_modes the
/// input-space vectors v_j, with K v_j = sigma_j q_j.
struct SpectralDecomposition {
    ShapeKind kind = ShapeKind::Square;
    ComplexVector values;
    ComplexMatrix right_modes;
    ComplexMatrix left_modes;
};

/// A fitted linear operator from lifted input observables (q of them) to
/// output observables (p of them). Immutable once built.
class KoopmanModel {
public:
    KoopmanModel(Matrix op, ObservableSpec input_spec, ObservableSpec output_spec, TimeMode time_mode,
                 double dt, Diagnostics diagnostics = {});

    const Matrix& op() const { return op_; }
    ShapeKind shape_kind() const { return op_.rows() == op_.cols() ? ShapeKind::Square : ShapeKind::Rectangular; }
    Eigen::Index p() const { return op_.rows(); }
    Eigen::Index q() const { return op_.cols(); }
    /// Lifted input terms that do not touch inputs, and those that do.
    Eigen::Index n_y() const { return q() - n_gamma_; }
    Eigen::Index n_gamma() const { return n_gamma_; }

    const ObservableSpec& input_spec() const { return input_spec_; }
    const ObservableSpec& output_spec() const { return output_spec_; }
    TimeMode time_mode() const { return time_mode_; }
    double dt() const { return dt_; }
    const Diagnostics& diagnostics() const { return diagnostics_; }
    const SpectralDecomposition& spectral() const { return spectral_; }

    /// Block views of the operator: A maps the first n_y inputs, B the rest.
    Matrix A() const { return op_.leftCols(n_y()); }
    Matrix B() const { return op_.rightCols(n_gamma_); }

    /// Spectral radius of the state-to-state part: the whole operator when
    /// square, otherwise the columns of the input terms matching each output.
    double spectral_radius() const;

    friend bool operator==(const KoopmanModel& a, const KoopmanModel& b);

private:
    Matrix op_;
    ObservableSpec input_spec_;
    ObservableSpec output_spec_;
    TimeMode time_mode_;
    double dt_;
    Diagnostics diagnostics_;
    Eigen::Index n_gamma_ = 0;
    SpectralDecomposition spectral_;
};

/// Row-wise relative residual of targets against op * regressors.
std::vector<double> row_residuals(const Matrix& op, const Matrix& targets, const Matrix& regressors);

/// phi_j(z) = <z, w_j> (square) or <z, v_j> (rectangular), with
/// <a, b> = sum a_i conj(b_i).
ComplexVector eigenfunction_eval(const KoopmanModel& model, const ComplexVector& z);
ComplexVector eigenfunction_eval(const KoopmanModel& model, const Vector& z);

/// Coefficients c_j with z = sum_j c_j v_j (square models): phi_j(z) divided
/// by <v_j, w_j>.
ComplexVector expansion_coefficients(const KoopmanModel& model, const Vector& z);

/// Roll the model forward from output-space state x0 (length p). Each step
/// rebuilds the lifted input from the current outputs and the supplied input
/// column (inputs is n_u x steps), then applies the operator: one sample for
/// discrete maps, a forward-Euler step of dt for continuous ones. Returns
/// p x (steps + 1) with x0 first.
Matrix predict(const KoopmanModel& model, const Vector& x0, const std::optional<Matrix>& inputs,
               Eigen::Index steps);

/// Same trajectory via the modal sum sum_j lambda_j^k c_j v_j. Square,
/// discrete, input-free models only.
Matrix predict_spectral(const KoopmanModel& model, const Vector& x0, Eigen::Index steps);

/// Row residuals of the model on a snapshot set: the targets are Z when the
/// model has n_y outputs, otherwise Delta.
std::vector<double> reconstruct_residual(const KoopmanModel& model, const SnapshotSet& ss);

std::string model_to_json(const KoopmanModel& model);
KoopmanModel model_from_json(const std::string& text);
void save_model(const KoopmanModel& model, const std::filesystem::path& path);
KoopmanModel load_model(const std::filesystem::path& path);

}  // namespace kic
