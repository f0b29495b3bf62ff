#include "kic/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <vector>

#include "kic/errors.hpp"

namespace kic {

TruncationRule TruncationRule::rank_cap(std::size_t r) {
    if (r == 0) throw ParameterError("rank cap must be positive");
    return {Kind::RankCap, r, 0.0};
}

TruncationRule TruncationRule::relative(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("relative threshold must lie in (0, 1)");
    return {Kind::RelativeThreshold, 0, tau};
}

std::string TruncationRule::to_string() const {
    switch (kind) {
        case Kind::Exact:
            return "exact";
        case Kind::RankCap:
            return "rank:" + std::to_string(rank);
        case Kind::RelativeThreshold: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "rel:%.17g", tau);
            return buf;
        }
    }
    return {};
}

TruncationRule TruncationRule::parse(const std::string& text) {
    if (text == "exact") return exact();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("bad truncation rule '" + text + "'");
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    try {
        std::size_t used = 0;
        if (head == "rank") {
            const long long r = std::stoll(tail, &used);
            if (used != tail.size() || r <= 0) throw ParseError("bad rank in '" + text + "'");
            return rank_cap(static_cast<std::size_t>(r));
        }
        if (head == "rel") {
            const double tau = std::stod(tail, &used);
            if (used != tail.size() || !(tau > 0.0 && tau < 1.0))
                throw ParseError("threshold in '" + text + "' must be a number in (0, 1)");
            return relative(tau);
        }
    } catch (const std::logic_error&) {
        throw ParseError("bad truncation rule '" + text + "'");
    }
    throw ParseError("bad truncation rule '" + text + "'");
}

Matrix SvdFactors::reconstruct() const {
    return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
}

SvdFactors svd(const Matrix& m, const TruncationRule& rule) {
    if (m.size() == 0) throw DimensionError("svd of an empty matrix");

    const Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = solver.singularValues();

    Eigen::Index keep = 0;
    while (keep < s.size() && s[keep] > 0.0) ++keep;

    switch (rule.kind) {
        case TruncationRule::Kind::Exact:
            break;
        case TruncationRule::Kind::RankCap:
            keep = std::min<Eigen::Index>(keep, static_cast<Eigen::Index>(rule.rank));
            break;
        case TruncationRule::Kind::RelativeThreshold: {
            const double cutoff = keep > 0 ? rule.tau * s[0] : 0.0;
            Eigen::Index k = 0;
            while (k < keep && !(s[k] < cutoff)) ++k;
            keep = k;
            break;
        }
    }

    return {solver.matrixU().leftCols(keep), s.head(keep), solver.matrixV().leftCols(keep)};
}

Matrix pinv(const Matrix& m, const TruncationRule& rule) {
    const SvdFactors f = svd(m, rule);
    const Vector inv = f.singular_values.cwiseInverse();
    return f.right_vectors * inv.asDiagonal() * f.left_vectors.transpose();
}

ComplexVector normalize_phase(const ComplexVector& v) {
    if (v.size() == 0) return v;
    const double max_abs = v.cwiseAbs().maxCoeff();
    if (max_abs == 0.0) return v;

    Eigen::Index pivot = 0;
    while (std::abs(v[pivot]) < max_abs * (1.0 - 1e-12)) ++pivot;

    const Complex rotate = std::conj(v[pivot]) / std::abs(v[pivot]);
    ComplexVector out = v * rotate;
    out /= out.norm();
    out[pivot] = Complex(out[pivot].real(), 0.0);
    return out;
}

namespace {

double argument_0_2pi(Complex z) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::atan2(z.imag(), z.real());
    if (a < 0.0) a += two_pi;
    if (a >= two_pi - 1e-12) a = 0.0;
    return a;
}

// Modulus descending; eigenvalues whose moduli agree to 1e-10 relative form a
// tie group sorted by argument.
std::vector<Eigen::Index> spectral_order(const ComplexVector& values) {
    const auto n = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return std::abs(values[a]) > std::abs(values[b]);
    });

    std::size_t start = 0;
    while (start < order.size()) {
        const double lead = std::abs(values[order[start]]);
        std::size_t stop = start + 1;
        while (stop < order.size() &&
               lead - std::abs(values[order[stop]]) <= 1e-10 * lead)
            ++stop;
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop), [&](auto a, auto b) {
                             return argument_0_2pi(values[a]) < argument_0_2pi(values[b]);
                         });
        start = stop;
    }
    return order;
}

// Left vectors for a defective (or nearly defective) matrix: eigenvectors of
// A^T paired greedily with the nearest conjugate eigenvalue.
ComplexMatrix left_vectors_by_matching(const Matrix& m, const ComplexVector& values) {
    const Eigen::EigenSolver<Matrix> transposed(m.transpose(), true);
    const ComplexVector t_values = transposed.eigenvalues();
    const ComplexMatrix t_vectors = transposed.eigenvectors();

    const auto n = values.size();
    ComplexMatrix left(n, n);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index best = -1;
        double best_gap = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (used[static_cast<std::size_t>(k)]) continue;
            const double gap = std::abs(t_values[k] - std::conj(values[j]));
            if (best < 0 || gap < best_gap) {
                best = k;
                best_gap = gap;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        left.col(j) = t_vectors.col(best);
    }
    return left;
}

}  // namespace

EigenDecomposition eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("eig requires a square matrix");
    const auto n = m.rows();
    if (n == 0) return {};

    const Eigen::EigenSolver<Matrix> solver(m, true);
    if (solver.info() != Eigen::Success) throw Error("eigenvalue iteration did not converge");

    const ComplexVector raw_values = solver.eigenvalues();
    const ComplexMatrix raw_right = solver.eigenvectors();

    ComplexMatrix raw_left;
    const Eigen::FullPivLU<ComplexMatrix> lu(raw_right);
    if (lu.isInvertible() && lu.rcond() > 1e-12) {
        // Rows of V^{-1} are left eigenvectors: w_j^H = row j.
        raw_left = lu.inverse().adjoint();
    } else {
        raw_left = left_vectors_by_matching(m, raw_values);
    }

    const auto order = spectral_order(raw_values);
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.right_vectors.resize(n, n);
    out.left_vectors.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        out.eigenvalues[j] = raw_values[src];
        out.right_vectors.col(j) = normalize_phase(raw_right.col(src));
        out.left_vectors.col(j) = normalize_phase(raw_left.col(src));
    }
    return out;
}

double spectral_radius(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() != m.cols()) throw DimensionError("spectral radius requires a square matrix");
    return Eigen::EigenSolver<Matrix>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace kic
