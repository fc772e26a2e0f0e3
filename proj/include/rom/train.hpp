#pragma once

/// Losses for the operator networks and the full-batch Adam training loop,
/// in the standard and coupled variants. All losses are evaluated in the
/// dataset's normalized space.

#include "rom/nets.hpp"

namespace rom::net {

/// Normalized view of a closure dataset plus the raw-space affine closure
/// oracle used by the coupled loss.
struct NetDataset {
    std::vector<Eigen::VectorXd> a, g, mu, tau;   // normalized
    std::vector<Eigen::VectorXd> q;               // raw affine offset
    std::vector<Eigen::MatrixXd> lin;             // raw affine map in g
    NormStats norm_a, norm_g, norm_mu, norm_tau;
    std::vector<std::size_t> train_idx, test_idx;
};

NetDataset make_net_dataset(const ClosureDataset& ds);

enum class LossKind { G, M, MG, Star };

/// Parameter/gradient bundle for one or two operator networks.
struct GradBuffers {
    std::vector<std::vector<double>> per_net;

    static GradBuffers like(const std::vector<DenseNet*>& nets);
    void zero();
};

double loss_g(const DeepOnetG& g, const NetDataset& ds,
              const std::vector<std::size_t>& idx);
double loss_m(const MIONetM& m, const NetDataset& ds,
              const std::vector<std::size_t>& idx);
/// Eq-style coupled discrepancy: the correction network's output against the
/// exact correction re-evaluated with the eddy-viscosity network's output.
/// Gradients (when requested) flow into both networks, through both
/// appearances of the eddy-viscosity map.
double loss_mg(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
               const std::vector<std::size_t>& idx);
double loss_star(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
                 const std::vector<std::size_t>& idx);

/// Gradient-accumulating variants. g_grads spans the g-subnets in order,
/// m_grads the m-subnets; pass nullptr for networks not involved.
double loss_g_grad(const DeepOnetG& g, const NetDataset& ds,
                   const std::vector<std::size_t>& idx, GradBuffers* g_grads);
double loss_m_grad(const MIONetM& m, const NetDataset& ds,
                   const std::vector<std::size_t>& idx, GradBuffers* m_grads);
double loss_mg_grad(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
                    const std::vector<std::size_t>& idx, GradBuffers* m_grads,
                    GradBuffers* g_grads);
double loss_star_grad(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
                      const std::vector<std::size_t>& idx, GradBuffers* m_grads,
                      GradBuffers* g_grads);

struct TrainConfig {
    int epochs = 20000;
    double lr0 = 1e-3;
    double gamma = 0.2;
    int n_step = 3000;
    int coupled_epochs = 20000;
    unsigned long long seed = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// lr(e) = lr0 * gamma^floor(e / n_step), evaluated by repeated
/// multiplication so the tabulated decay points are hit exactly.
double lr_schedule(const TrainConfig& cfg, int epoch);

struct TrainReport {
    std::vector<double> loss_history;  // pre-step training loss per epoch
    double final_train = 0.0;
    double final_test = 0.0;
    int epochs = 0;
};

TrainReport train_deeponet_g(DeepOnetG& g, const NetDataset& ds, const TrainConfig& cfg);
TrainReport train_mionet_m(MIONetM& m, const NetDataset& ds, const TrainConfig& cfg);
/// Coupled phase: requires a pre-trained eddy-viscosity network; updates
/// both networks for cfg.coupled_epochs under the summed loss.
TrainReport train_coupled_star(MIONetM& m, DeepOnetG& g, const NetDataset& ds,
                               const TrainConfig& cfg);

/// Central-difference check of the analytic gradients over every weight of
/// the involved networks. Returns the max relative deviation.
double grad_check(DeepOnetG* g, MIONetM* m, LossKind kind, const NetDataset& ds,
                  double eps);

}  // namespace rom::net
