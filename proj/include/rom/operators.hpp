#pragma once

/// Galerkin operators of the reduced momentum/pressure system, assembled by
/// discrete quadrature with the same stencils the flow surrogate uses.
/// Dirichlet data enters only weakly through the boundary-penalty operators;
/// mode derivatives use the natural (zero-gradient) wall extension.

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "rom/grid.hpp"
#include "rom/pod.hpp"
#include "rom/tensor.hpp"

namespace rom {

struct OpDims {
    int nu = 0, np = 0, nnut = 0;
};

struct BoundarySpec {
    struct Entry {
        int boundary = 0;   // 0 = top (lid), 1 = bottom
        double value = 1.0; // prescribed speed along x
    };
    double tau = 1e3;  // penalty weight, > 0
    std::vector<Entry> entries;
};

struct ReducedOperators {
    OpDims dims;
    std::vector<double> mu;  // parameter the set was assembled for (may be empty)

    Eigen::MatrixXd mass;      // (phi_i, phi_j)
    Eigen::MatrixXd lap;       // (phi_i, div grad phi_j)
    Eigen::MatrixXd lap_t;     // (phi_i, div (grad phi_j)^T)
    Tensor3 conv;              // (phi_i, div(phi_j x phi_k))
    Eigen::MatrixXd grad_p;    // (phi_i, grad chi_j)
    Eigen::MatrixXd p_lap;     // (grad chi_i, grad chi_j)
    Tensor3 p_conv;            // (grad chi_i, div(phi_j x phi_k))
    Eigen::MatrixXd p_bnd;     // (n x grad chi_i, curl phi_j) on the boundary
    Eigen::VectorXd p_flux;    // boundary flux vector, assembled as zero
    Tensor3 turb_mom_lap;      // (phi_i, eta_j div grad phi_k)
    Tensor3 turb_mom_div;      // (phi_i, div(eta_j (grad phi_k)^T))
    Tensor3 turb_p_lap;        // (grad chi_i, eta_j div grad phi_k)
    Tensor3 turb_p_div;        // (grad chi_i, div(eta_j (grad phi_k)^T))
    std::vector<Eigen::MatrixXd> bnd_mass;   // (phi_i, phi_j) on each lid boundary
    std::vector<Eigen::VectorXd> bnd_trace;  // (phi_i . xhat) on each lid boundary
    double tau = 1e3;
};

/// Assembles every operator on the given grid. Bases must be hierarchical
/// with rank >= the requested dims.
ReducedOperators assemble(const PodBasis& ubasis, const PodBasis& pbasis,
                          const PodBasis& nutbasis, const GridSpec& grid,
                          const BoundarySpec& bnd, const OpDims& dims);

/// Per-parameter assembly for geometric cases: rebuilds the grid at mu_g and
/// assembles on the deformed geometry with the shared mid-configuration
/// modes carried over by the reference-to-physical cell correspondence.
ReducedOperators assemble_for_parameter(const PodBasis& ubasis, const PodBasis& pbasis,
                                        const PodBasis& nutbasis,
                                        const GridSpec& base_grid,
                                        const std::vector<double>& mu_g,
                                        const BoundarySpec& bnd, const OpDims& dims);

/// tau * sum_k (U_k * bnd_trace_k - bnd_mass_k * a)
Eigen::VectorXd penalty_contribution(const Eigen::VectorXd& a,
                                     const ReducedOperators& ops,
                                     const BoundarySpec& bnd);

/// Squared boundary-trace mismatch integral |u_r - U xhat|^2 over the lid
/// boundaries, expanded through the penalty operators.
double boundary_trace_mismatch(const Eigen::VectorXd& a, const ReducedOperators& ops,
                               const BoundarySpec& bnd, const GridSpec& grid);

void save_operators(const ReducedOperators& ops, const std::filesystem::path& dir);
ReducedOperators load_operators(const std::filesystem::path& dir);

}  // namespace rom
