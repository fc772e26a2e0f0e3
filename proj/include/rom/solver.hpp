#pragma once

/// Online stage: reduced residual evaluation with optional learned closure,
/// Newton iteration with damping, and the steady / unsteady drivers.

#include <filesystem>

#include "rom/closure.hpp"
#include "rom/nets.hpp"
#include "rom/operators.hpp"

namespace rom {

enum class ClosureMode { None, DD, DDStar, Quadratic };
enum class TimeScheme { FirstOrder, SecondOrder };

std::string closure_mode_name(ClosureMode m);
ClosureMode closure_mode_from_name(const std::string& s);

struct RomState {
    Eigen::VectorXd a, b;
};

struct SolverConfig {
    double tol = 1e-9;      // Newton tolerance on the residual 2-norm
    int max_iter = 50;
    TimeScheme scheme = TimeScheme::SecondOrder;
    double dt = 1e-2;       // unsteady only
    double horizon = 1.0;   // unsteady only
    ClosureMode mode = ClosureMode::None;
};

struct SolveContext {
    const ReducedOperators* ops = nullptr;
    BoundarySpec bnd;
    double nu = 1e-2;
    const net::ModelBundle* models = nullptr;   // eddy-viscosity net; + correction net for DD modes
    const QuadraticAnsatz* ansatz = nullptr;    // for ClosureMode::Quadratic
    Eigen::VectorXd mu_phys;                    // physical parameters, no time entry
    bool unsteady = false;
};

/// Eddy-viscosity coefficients g(a, mu) through the trained map; zero when
/// no models are attached (closes the turbulence terms off).
Eigen::VectorXd eval_g(const SolveContext& ctx, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& mu_full);

/// Correction (tau_u, tau_p) per closure mode; zero for ClosureMode::None.
Eigen::VectorXd eval_closure(const SolveContext& ctx, ClosureMode mode,
                             const Eigen::VectorXd& a, const Eigen::VectorXd& g,
                             const Eigen::VectorXd& mu_full);

/// Discrete time derivative factored as adot = c_new * a_new + rest.
struct TimeDerivative {
    double c_new = 0.0;
    Eigen::VectorXd rest;

    Eigen::VectorXd eval(const Eigen::VectorXd& a_new) const { return c_new * a_new + rest; }
    static TimeDerivative steady(int n);
};

/// history holds the previous states, oldest first: one for first order,
/// two for second order (BDF2). Throws on insufficient history.
TimeDerivative time_derivative(const std::vector<Eigen::VectorXd>& history,
                               TimeScheme scheme, double dt);

/// Momentum block: -M adot + nu (B + B_T) a - a^T C a + g^T (T1+T2) a - H b
///                 + penalty + tau_u.
/// Pressure block:  D b + a^T G a - g^T (T3+T4) a - nu N a - L + tau_p.
Eigen::VectorXd residual(const RomState& state, const Eigen::VectorXd& adot,
                         const Eigen::VectorXd& g, const Eigen::VectorXd& tau_u,
                         const Eigen::VectorXd& tau_p, const ReducedOperators& ops,
                         const BoundarySpec& bnd, double nu);

struct NewtonResult {
    RomState state;
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;
};

struct SingularJacobianError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Damped Newton on the reduced system. The Jacobian is analytic for the
/// polynomial terms; the network-dependent terms enter by forward finite
/// differences with step 1e-6 * (1 + |a_m|).
NewtonResult newton_solve(const RomState& init, const SolveContext& ctx,
                          const SolverConfig& cfg, const TimeDerivative& td,
                          const Eigen::VectorXd& mu_full);

/// Steady solve from the projected initial guess. Non-convergence is
/// reported in the result, never silently accepted.
NewtonResult solve_steady(const RomState& init, const SolveContext& ctx,
                          const SolverConfig& cfg);

struct TrajectoryPoint {
    double t = 0.0;
    Eigen::VectorXd a, b;
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = true;
};

struct RomTrajectory {
    std::vector<TrajectoryPoint> points;
    Eigen::VectorXd mu_phys;
    SolverConfig cfg;
};

/// Time marching per the unsteady online algorithm: warm start from the
/// latest solution, parameter stamp [t_n, mu_phys], per-step Newton. A step
/// that hits the iteration cap continues with its best iterate, flagged.
RomTrajectory solve_unsteady(const RomState& init, const SolveContext& ctx,
                             const SolverConfig& cfg, double t0);

void save_trajectory(const RomTrajectory& traj, const std::filesystem::path& dir);
RomTrajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace rom
