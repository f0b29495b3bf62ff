#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "kic/numkernel.hpp"

namespace kic {

/// Time-ordered samples of one run: states x_0..x_m as columns, optional
/// inputs u_0..u_m with the same column count, uniform step dt.
class Trajectory {
public:
    Trajectory(Matrix states, std::optional<Matrix> inputs, double dt, std::string id = {},
               double t0 = 0.0);

    const Matrix& states() const { return states_; }
    const std::optional<Matrix>& inputs() const { return inputs_; }
    bool has_inputs() const { return inputs_.has_value(); }
    double dt() const { return dt_; }
    double t0() const { return t0_; }
    const std::string& id() const { return id_; }

    Eigen::Index state_dim() const { return states_.rows(); }
    Eigen::Index input_dim() const { return inputs_ ? inputs_->rows() : 0; }
    Eigen::Index samples() const { return states_.cols(); }

private:
    Matrix states_;
    std::optional<Matrix> inputs_;
    double dt_;
    std::string id_;
    double t0_;
};

/// Paired snapshot matrices. Omega = [Y; Upsilon] and Delta = [Z; Xi] are
/// assembled on request, never stored.
class SnapshotSet {
public:
    SnapshotSet(Matrix y, Matrix z, std::optional<Matrix> upsilon = std::nullopt,
                std::optional<Matrix> xi = std::nullopt);

    const Matrix& Y() const { return y_; }
    const Matrix& Z() const { return z_; }
    const std::optional<Matrix>& Upsilon() const { return upsilon_; }
    const std::optional<Matrix>& Xi() const { return xi_; }

    Eigen::Index n_y() const { return y_.rows(); }
    Eigen::Index n_gamma() const { return upsilon_ ? upsilon_->rows() : 0; }
    Eigen::Index m() const { return y_.cols(); }

    Matrix omega() const;
    Matrix delta() const;

private:
    Matrix y_;
    Matrix z_;
    std::optional<Matrix> upsilon_;
    std::optional<Matrix> xi_;
};

/// Y = states[:, 0..m-1], Z = states[:, 1..m]. Several trajectories are
/// concatenated pair-wise; no pair straddles two trajectories.
SnapshotSet build_pair(const Trajectory& traj);
SnapshotSet build_pair(std::span<const Trajectory> trajs);

/// As build_pair, plus Upsilon = inputs[:, 0..m-1]. With include_future_input
/// Xi = inputs[:, 1..m] (future input observed); otherwise Xi is absent.
SnapshotSet build_trio(const Trajectory& traj, bool include_future_input);
SnapshotSet build_trio(std::span<const Trajectory> trajs, bool include_future_input);

/// Y = all states, Z = derivs (no shift). Inputs, when present, become Upsilon.
SnapshotSet build_derivative_pair(const Trajectory& traj, const Matrix& derivs);

// CSV: header `t,x1..xN[,u1..uM]`, one row per sample. Sampling must be
// uniform to 1e-9 relative; the time column sets dt and t0.
Trajectory read_csv(std::istream& in, const std::string& id = {});
void write_csv(const Trajectory& traj, std::ostream& out);
Trajectory load_csv(const std::filesystem::path& path);
void save_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace kic
