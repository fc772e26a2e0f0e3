#pragma once

/// Exact closure-term extraction: evaluate the nonlinear reduced operator at
/// two resolutions, filter the large evaluation down, and subtract. The
/// difference is the training target for the correction network; it is
/// affine in the eddy-viscosity coefficients, and the per-sample affine
/// parts are kept so the coupled loss can re-evaluate it exactly.

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "rom/fom.hpp"
#include "rom/operators.hpp"
#include "rom/pod.hpp"

namespace rom {

/// [ -a^T C a (+ g^T (T1+T2) a) ; a^T G a (- g^T (T3+T4) a) ]
Eigen::VectorXd evaluate_operator(const Eigen::VectorXd& a, const Eigen::VectorXd& g,
                                  const ReducedOperators& ops, bool with_turbulence);

/// Throws if the big set's leading sub-blocks do not match the small set
/// (non-hierarchical bases) or if the eddy-viscosity dims differ.
void check_hierarchy(const ReducedOperators& small_ops, const ReducedOperators& big_ops,
                     double tol = 1e-12);

struct ExactCorrection {
    Eigen::VectorXd tau;  // length nu + np
    Eigen::VectorXd q;    // g-independent part: tau = q + lin * g
    Eigen::MatrixXd lin;  // (nu+np) x nnut
};

/// tau = filter(C_hat(a_hat, g)) - C(a, g) with the filter keeping the first
/// nu momentum and np pressure entries. a_hat/a are projections of the same
/// snapshot at the two resolutions; g is shared (same eddy-viscosity rank).
ExactCorrection exact_correction(const Eigen::VectorXd& a_hat, const Eigen::VectorXd& g,
                                 const ReducedOperators& small_ops,
                                 const ReducedOperators& big_ops,
                                 bool with_turbulence = true);

struct ClosureSample {
    Eigen::VectorXd a;    // projected velocity coefficients, length nu
    Eigen::VectorXd g;    // projected eddy-viscosity coefficients, length nnut
    Eigen::VectorXd mu;   // parameters (time prepended for unsteady archives)
    Eigen::VectorXd tau;  // exact correction, length nu + np
    // Affine closure oracle in g (see ExactCorrection).
    Eigen::VectorXd q;
    Eigen::MatrixXd lin;
};

/// Per-channel min-max affine normalization, computed from the training
/// split only. Degenerate channels map to zero.
struct NormStats {
    Eigen::VectorXd lo, hi;

    static NormStats fit(const std::vector<Eigen::VectorXd>& rows);
    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
    Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const;
    /// d(normalize)/dx and d(denormalize)/dz diagonals.
    Eigen::VectorXd norm_scale() const;
};

struct ClosureDataset {
    OpDims dims;
    int hat_factor = 2;  // k with nu_hat = k*nu
    bool unsteady = true;
    std::vector<ClosureSample> samples;
    std::vector<int> sample_param;  // parameter index per sample
    std::vector<int> test_params;   // parameter indices held out for testing
    NormStats norm_a, norm_g, norm_mu, norm_tau;

    bool is_test_sample(std::size_t i) const;
    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
};

struct SplitSpec {
    std::vector<int> test_params;
};

ClosureDataset build_dataset(const SnapshotSet& snapshots, const PodBasis& ubasis,
                             const PodBasis& pbasis, const PodBasis& nutbasis,
                             const ReducedOperators& small_ops,
                             const ReducedOperators& big_ops, const SplitSpec& split,
                             bool with_turbulence = true);

void save_dataset(const ClosureDataset& ds, const std::filesystem::path& dir);
ClosureDataset load_dataset(const std::filesystem::path& dir);

/// Quadratic closure baseline tau(a) = A z + z^T B z on the zero-padded
/// vector z = (a, 0) of length nu+np.
struct QuadraticAnsatz {
    Eigen::MatrixXd a_tilde;  // d x d
    Tensor3 b_tilde;          // d x d x d
};

/// Least squares over monomial features (z, z (x) z) with ridge 1e-10.
/// Requires a single-physical-parameter (time-only) dataset. Under-
/// determined systems are solved minimum-norm and reported via the
/// optional flag.
QuadraticAnsatz fit_quadratic_ansatz(const ClosureDataset& ds,
                                     bool* underdetermined = nullptr);

Eigen::VectorXd evaluate_quadratic_ansatz(const QuadraticAnsatz& qa,
                                          const Eigen::VectorXd& a);

void save_quadratic_ansatz(const QuadraticAnsatz& qa, const std::filesystem::path& dir);
QuadraticAnsatz load_quadratic_ansatz(const std::filesystem::path& dir);

}  // namespace rom
