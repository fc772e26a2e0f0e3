#pragma once

/// POD by the method of snapshots under a mass-weighted inner product.
/// For geometrically parameterized archives the weights come from the
/// mid-configuration grid (mean of the training parameters).

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "rom/fom.hpp"

namespace rom {

enum class FieldKind { Velocity, Pressure, EddyViscosity };

std::string field_kind_name(FieldKind k);
FieldKind field_kind_from_name(const std::string& s);

struct InnerProduct {
    std::vector<double> weights;  // one per degree of freedom, all > 0

    std::uint64_t checksum() const;
    double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    double norm(const Eigen::VectorXd& a) const;
};

/// Mass weights for a field kind on a grid (velocity tiles the areas twice).
InnerProduct mass_inner_product(const GridSpec& grid, FieldKind kind);

/// Mean of the training parameters, the "mid configuration".
std::vector<double> mid_configuration(const std::vector<std::vector<double>>& params);

/// Inner product of the archive's reference layout: mid-configuration grid
/// for deformed archives, the base grid otherwise.
InnerProduct snapshot_inner_product(const SnapshotSet& set, FieldKind kind);

/// Snapshot matrix (dof x frames) for one field kind.
Eigen::MatrixXd snapshot_matrix(const SnapshotSet& set, FieldKind kind);

struct PodBasis {
    Eigen::MatrixXd modes;            // dof x rank, ip-orthonormal columns
    std::vector<double> eigenvalues;  // all retained, non-increasing
    FieldKind kind = FieldKind::Velocity;
    InnerProduct ip;

    int rank() const { return static_cast<int>(modes.cols()); }
};

struct EnergySpectrum {
    std::vector<double> cumulative;  // in [0,1], non-decreasing, last == 1
};

/// K_ij = s_i^T diag(w) s_j.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& snapshots,
                                   const InnerProduct& ip);

/// Method of snapshots: eigendecomposition of K, modes as weighted snapshot
/// combinations re-normalized in the ip norm. Eigenvalues below
/// 1e-13*lambda_max are truncated; requesting more than the numerical rank
/// throws with the achievable rank in the message. Sign convention: the
/// largest-magnitude entry of each mode is positive.
PodBasis compute_basis(const Eigen::MatrixXd& correlation,
                       const Eigen::MatrixXd& snapshots, const InnerProduct& ip,
                       int rank, FieldKind kind);

EnergySpectrum energy_spectrum(const std::vector<double>& eigenvalues);

/// Smallest n with cumulative[n-1] >= threshold.
int select_modes_by_energy(const EnergySpectrum& spectrum, double threshold);

/// a_i = (field, mode_i)_ip for i = 1..n.
Eigen::VectorXd project(const Eigen::VectorXd& field, const PodBasis& basis, int n);

Eigen::VectorXd reconstruct(const Eigen::VectorXd& coeffs, const PodBasis& basis);

void save_basis(const PodBasis& basis, const std::filesystem::path& dir);
PodBasis load_basis(const std::filesystem::path& dir);

}  // namespace rom
