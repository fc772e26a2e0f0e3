#pragma once

/// Desk-scale finite-difference flow surrogate producing the snapshot triple
/// (velocity, pressure, eddy viscosity) on a lid-driven channel: prescribed
/// lid velocity on the top boundary, no-slip bottom, periodic in x. Pressure
/// comes from a Poisson equation assembled from the momentum divergence; the
/// eddy viscosity is an algebraic Smagorinsky-type closure.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <string>
#include <vector>

#include "rom/grid.hpp"
#include "rom/stencils.hpp"

namespace rom {

struct FieldFrame {
    std::vector<double> u;    // 2*cells: x-component block then y-component block
    std::vector<double> p;    // cells
    std::vector<double> nut;  // cells
    double t = 0.0;
    std::vector<double> mu;   // parameter vector of the run this frame belongs to
};

enum class SnapshotKind { Unsteady, Steady, SteadyWithIntermediates };

struct SnapshotSet {
    GridSpec grid;  // undeformed base grid; per-parameter grids rebuild from mu
    SnapshotKind kind = SnapshotKind::Unsteady;
    std::vector<std::vector<double>> params;
    std::vector<FieldFrame> frames;       // grouped by parameter, time-ordered
    std::vector<int> frame_param;         // parameter index per frame
    int stride = 1;
    unsigned long long seed = 0;

    int frames_per_param(int param) const;
};

struct FomParams {
    double nu = 1e-2;       // molecular kinematic viscosity
    double cs = 0.17;       // Smagorinsky constant
    double lid = 1.0;       // prescribed lid velocity U_BC (x direction)
    bool fully_periodic = false;  // test variant: periodic in y as well
    double cfl = 0.4;
    double divergence_cap = 1e6;
};

struct DivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CflError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LinearSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Smagorinsky-type eddy viscosity: nut = (cs*delta)^2 * |grad u + grad u^T|_F
/// with delta = sqrt(cell area). Wall ghosts use the prescribed lid/no-slip
/// values so near-wall shear generates eddy viscosity.
std::vector<double> compute_eddy_viscosity(const std::vector<double>& u,
                                           const GridSpec& grid,
                                           const FomParams& prm);

class FomSolver {
  public:
    FomSolver(const GridSpec& grid, const FomParams& prm, double dt);

    const GridSpec& grid() const { return grid_; }
    const FomParams& params() const { return prm_; }
    double dt() const { return dt_; }

    /// Largest stable time step for this state under the configured CFL rule.
    double cfl_limit(const FieldFrame& state) const;

    /// One semi-implicit step: explicit convection / eddy diffusion /
    /// previous-pressure gradient, implicit molecular diffusion; then the
    /// eddy viscosity and pressure are recomputed from the new velocity.
    FieldFrame step(const FieldFrame& state) const;

    /// Solves lap p = -div(div(u (x) u)) + div(div(nut*(grad u + grad u^T)))
    /// with the reference pressure pinned to zero at cell 0.
    std::vector<double> pressure_poisson(const std::vector<double>& u,
                                         const std::vector<double>& nut) const;

    /// Assembled (pinned) pressure matrix and the right-hand side used by
    /// pressure_poisson, for consistency checks.
    const Eigen::SparseMatrix<double>& pressure_matrix() const { return ppe_mat_; }
    std::vector<double> pressure_rhs(const std::vector<double>& u,
                                     const std::vector<double>& nut) const;

    /// Initial state: Couette background + smooth seeded perturbation, with
    /// consistent nut and p.
    FieldFrame initial_state(const std::vector<double>& mu,
                             double perturb_amplitude, int perturb_modes,
                             unsigned long long seed) const;

    FieldBc bc_ux() const;
    FieldBc bc_uy() const;
    FieldBc bc_scalar() const;

  private:
    GridSpec grid_;
    FomParams prm_;
    double dt_;
    Stencils st_;
    Eigen::SparseMatrix<double> mom_mat_, ppe_mat_;
    std::vector<double> mom_src_x_, mom_src_y_;
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> mom_lu_, ppe_lu_;

    std::vector<double> momentum_rhs(const FieldFrame& state, int comp) const;
};

struct CaseConfig {
    std::string kind;  // "unsteady-channel" | "steady-deformed"
    int nx = 16, ny = 16;
    double lx = 1.0, ly = 1.0;
    double nu = 1e-2;           // used directly for steady-deformed
    std::vector<double> nus;    // parameter list for unsteady-channel
    std::vector<std::vector<double>> geo_params;  // parameter list for steady-deformed
    double lid = 1.0;
    double cs = 0.17;
    double dt = 1e-3;
    int stride = 10;
    int frames = 20;            // unsteady: total frames per parameter (incl. initial)
    double steady_tol = 1e-8;
    int max_steps = 200000;
    int intermediate_stride = 50;
    double perturb_amplitude = 0.3;
    int perturb_modes = 2;
    unsigned long long seed = 0;
};

CaseConfig case_config_from_json(const std::string& text);

/// Runs the configured case family and collects the snapshot archive.
SnapshotSet run_case(const CaseConfig& cfg);

}  // namespace rom
