#pragma once

#include <complex>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

namespace kic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// How many singular values survive an SVD. Zero singular values are always
/// dropped, whatever the rule.
struct TruncationRule {
    enum class Kind { Exact, RankCap, RelativeThreshold };

    Kind kind = Kind::RelativeThreshold;
    std::size_t rank = 0;   // RankCap only
    double tau = 1e-12;     // RelativeThreshold only

    static TruncationRule exact() { return {Kind::Exact, 0, 0.0}; }
    static TruncationRule rank_cap(std::size_t r);
    static TruncationRule relative(double tau);

    /// Text form used by the CLI and the model file: "exact", "rank:<r>", "rel:<tau>".
    std::string to_string() const;
    static TruncationRule parse(const std::string& text);

    friend bool operator==(const TruncationRule&, const TruncationRule&) = default;
};

struct SvdFactors {
    Matrix left_vectors;    // m x r
    Vector singular_values; // r, nonincreasing, all > 0
    Matrix right_vectors;   // n x r

    std::size_t rank() const { return static_cast<std::size_t>(singular_values.size()); }
    Matrix reconstruct() const;
};

/// Eigenvalues ordered by descending modulus, ties by ascending argument in
/// [0, 2pi). Each right and left vector has unit 2-norm and its largest
/// component is real-positive. Left vectors satisfy w^H A = lambda w^H.
struct EigenDecomposition {
    ComplexVector eigenvalues;
    ComplexMatrix right_vectors;
    ComplexMatrix left_vectors;
};

SvdFactors svd(const Matrix& m, const TruncationRule& rule = {});

Matrix pinv(const Matrix& m, const TruncationRule& rule = {});

EigenDecomposition eig(const Matrix& m);

/// Rescale a complex vector so its largest-modulus entry is real-positive and
/// its 2-norm is one. Zero vectors are returned unchanged.
ComplexVector normalize_phase(const ComplexVector& v);

/// Largest eigenvalue modulus; 0 for an empty matrix.
double spectral_radius(const Matrix& m);

}  // namespace kic
