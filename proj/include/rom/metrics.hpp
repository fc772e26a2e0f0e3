#pragma once

/// Error and gain metrics plus machine-readable report emission.

#include <map>
#include <optional>
#include <string>

#include "rom/nets.hpp"
#include "rom/pod.hpp"
#include "rom/solver.hpp"

namespace rom::metrics {

/// Mass-weighted relative error ||rom - fom|| / ||fom||.
/// Throws std::domain_error when the reference norm is zero.
double relative_error(const Eigen::VectorXd& rom_field, const Eigen::VectorXd& fom_field,
                      const InnerProduct& ip);

enum class GainKind { Unsteady, Steady };

/// Mean over samples of (E_base - E_dd) / E_base. For the unsteady kind each
/// sample's error series is time-averaged first. Samples with zero baseline
/// are skipped (counted in *skipped when given).
double gain(const std::vector<std::vector<double>>& errors_baseline,
            const std::vector<std::vector<double>>& errors_dd, GainKind kind,
            int* skipped = nullptr);

struct Stats {
    double median = 0.0, min = 0.0, max = 0.0;
};
Stats statistics_summary(std::vector<double> values);

/// Per-matched-time relative errors of a reduced trajectory against the FOM
/// frames of one parameter. Velocity/pressure from the trajectory
/// coefficients; eddy viscosity through the trained map when models are
/// given (empty otherwise). Frames are matched to trajectory nodes by time
/// within half a step.
struct SeriesErrors {
    std::vector<double> t, u, p, nut;
};

SeriesErrors trajectory_errors(const RomTrajectory& traj, const SnapshotSet& snaps,
                               int param, const PodBasis& ubasis, const PodBasis& pbasis,
                               const PodBasis& nutbasis, const net::ModelBundle* models,
                               std::optional<std::pair<double, double>> window = {});

/// Projection-error baseline at the given dims for one parameter.
SeriesErrors projection_errors(const SnapshotSet& snaps, int param,
                               const PodBasis& ubasis, const PodBasis& pbasis,
                               const PodBasis& nutbasis, const OpDims& dims,
                               std::optional<std::pair<double, double>> window = {});

struct GainEntry {
    std::string regime, field, split, method;
    double value = 0.0;
};

/// Deterministic CSV: header "regime,field,split,method,value", rows in the
/// given order, doubles at full round-trip precision.
std::string gains_csv(const std::vector<GainEntry>& entries);
std::vector<GainEntry> parse_gains_csv(const std::string& text);

std::string format_double(double v);

}  // namespace rom::metrics
