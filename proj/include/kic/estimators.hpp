#pragma once

#include <optional>

#include "kic/data.hpp"
#include "kic/model.hpp"
#include "kic/observables.hpp"
#include "kic/random.hpp"

namespace kic {

struct FitOptions {
    TruncationRule truncation{};
    TimeMode time_mode = TimeMode::DiscreteMap;
    /// Probe added to the input samples entering Omega (never to the targets).
    std::optional<Dither> dither;
    /// Sample period recorded on models fitted from bare snapshot sets;
    /// trajectory-based fits take it from the trajectory.
    double dt = 1.0;
};

/// How the input enters the lifted future sample.
///   WithInputDynamics: the future input u_{k+1} is observed; the operator is
///                      square and also propagates the inputs.
///   NoInputDynamics:   the future input is taken as zero; only state
///                      observables are propagated.
enum class KicMode { WithInputDynamics, NoInputDynamics };

std::string to_string(KicMode mode);

/// A = Z Y^+. Snapshot sets must not carry input rows.
KoopmanModel fit_dmd(const SnapshotSet& ss, const FitOptions& opts = {});

/// G~ = Z Omega^+ = [A B]; Xi is ignored.
KoopmanModel fit_dmdc(const SnapshotSet& ss, const FitOptions& opts = {});

/// WithInputDynamics: G = Delta Omega^+ with blocks G11 G12 / G21 G22.
/// NoInputDynamics: fits [Z; 0] against Omega and keeps the state rows, which
/// is the DMDc operator.
KoopmanModel fit_kic(const SnapshotSet& ss, KicMode mode, const FitOptions& opts = {});

/// Lift a trajectory through input_spec to form Omega and regress the
/// output_spec terms of the next sample (discrete) or their time derivatives
/// (continuous; state_derivs required) onto it. Output terms must appear in
/// the input dictionary. Closure of the output dictionary is not checked:
/// consult the row residuals.
KoopmanModel fit_kic_lifted(const Trajectory& traj, const ObservableSpec& input_spec,
                            const ObservableSpec& output_spec, KicMode mode, const FitOptions& opts = {},
                            const std::optional<Matrix>& state_derivs = std::nullopt);

/// Block views of a square with-input-dynamics operator.
struct KicBlocks {
    Matrix G11, G12, G21, G22;
};
KicBlocks kic_blocks(const KoopmanModel& model);

}  // namespace kic
