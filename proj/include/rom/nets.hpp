#pragma once

/// From-scratch dense networks and the two operator architectures: the
/// branch/trunk/reduction network for the eddy-viscosity map and the
/// three-input variant for the correction map. Hidden layers are Softplus,
/// sub-network outputs linear, and the concatenated sub-network outputs feed
/// the reduction network. All math runs through rom::kernels.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "rom/closure.hpp"

namespace rom::net {

struct DenseSpec {
    int input = 1;
    std::vector<int> hidden = {20, 20, 20};
    int output = 20;
};

class DenseNet {
  public:
    DenseNet() = default;
    explicit DenseNet(const DenseSpec& spec);

    int input_width() const { return widths_.front(); }
    int output_width() const { return widths_.back(); }
    int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
    const std::vector<int>& widths() const { return widths_; }

    std::size_t param_count() const { return theta_.size(); }
    double* params() { return theta_.data(); }
    const double* params() const { return theta_.data(); }

    /// Uniform fan-in-scaled weights, zero biases.
    void init_weights(std::mt19937_64& rng);

    struct Workspace {
        std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = layer output
        std::vector<std::vector<double>> pre;  // pre-activations per layer
        std::vector<double> delta, dprev;
    };
    Workspace make_workspace() const;

    void forward(const double* x, Workspace& ws, double* y) const;

    /// dy = dL/d(output). Accumulates parameter gradients into grad (same
    /// layout as params) and writes dL/d(input) into dx when non-null.
    /// Requires a forward pass on the same workspace.
    void backward(const double* dy, Workspace& ws, double* grad, double* dx) const;

  private:
    std::vector<int> widths_;
    std::vector<std::size_t> w_off_, b_off_;
    std::vector<double> theta_;
};

double softplus(double x);
double softplus_grad(double x);  // logistic sigmoid

/// Eddy-viscosity operator network: g = R([B(a), T(mu)]).
struct DeepOnetG {
    DenseNet branch, trunk, reduction;

    struct Workspace {
        DenseNet::Workspace b, t, r;
        std::vector<double> ob, ot, cat, out;
        std::vector<double> dcat, din;
    };
    Workspace make_workspace() const;

    int n_a() const { return branch.input_width(); }
    int n_mu() const { return trunk.input_width(); }
    int n_out() const { return reduction.output_width(); }

    void forward(const double* a, const double* mu, Workspace& ws, double* g) const;
    /// dg = dL/dg. Accumulates into the three gradient buffers; optionally
    /// returns dL/da.
    void backward(const double* dg, Workspace& ws, double* grad_branch,
                  double* grad_trunk, double* grad_reduction, double* da) const;

    std::vector<DenseNet*> subnets() { return {&branch, &trunk, &reduction}; }
    std::vector<const DenseNet*> subnets() const { return {&branch, &trunk, &reduction}; }
};

/// Correction operator network: tau = R([B1(a), B2(g), T(mu)]).
struct MIONetM {
    DenseNet branch_a, branch_g, trunk, reduction;

    struct Workspace {
        DenseNet::Workspace b1, b2, t, r;
        std::vector<double> o1, o2, ot, cat, out;
        std::vector<double> dcat, din;
    };
    Workspace make_workspace() const;

    int n_a() const { return branch_a.input_width(); }
    int n_g() const { return branch_g.input_width(); }
    int n_mu() const { return trunk.input_width(); }
    int n_out() const { return reduction.output_width(); }

    void forward(const double* a, const double* g, const double* mu, Workspace& ws,
                 double* tau) const;
    void backward(const double* dtau, Workspace& ws, double* grad_ba, double* grad_bg,
                  double* grad_trunk, double* grad_reduction, double* da,
                  double* dg) const;

    std::vector<DenseNet*> subnets() { return {&branch_a, &branch_g, &trunk, &reduction}; }
    std::vector<const DenseNet*> subnets() const {
        return {&branch_a, &branch_g, &trunk, &reduction};
    }
};

DeepOnetG make_deeponet_g(int n_a, int n_mu, int n_out, std::mt19937_64& rng,
                          const std::vector<int>& hidden = {20, 20, 20}, int latent = 20);
MIONetM make_mionet_m(int n_a, int n_g, int n_mu, int n_out, std::mt19937_64& rng,
                      const std::vector<int>& hidden = {20, 20, 20}, int latent = 20);

/// Trained model archive: the eddy-viscosity network, optionally the
/// correction network, and the normalization they were trained in.
struct ModelBundle {
    DeepOnetG g;
    std::optional<MIONetM> m;
    NormStats norm_a, norm_g, norm_mu, norm_tau;
    OpDims dims;
    unsigned long long seed = 0;
    std::string training = "standard";  // "standard" | "star"
};

void save_models(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_models(const std::filesystem::path& dir);

}  // namespace rom::net
