#include "rom/train.hpp"

#include <cmath>
#include <sstream>

#include "rom/kernels.hpp"

namespace rom::net {

using Eigen::MatrixXd;
using Eigen::VectorXd;

NetDataset make_net_dataset(const ClosureDataset& ds) {
    NetDataset nd;
    nd.norm_a = ds.norm_a;
    nd.norm_g = ds.norm_g;
    nd.norm_mu = ds.norm_mu;
    nd.norm_tau = ds.norm_tau;
    for (const auto& s : ds.samples) {
        nd.a.push_back(ds.norm_a.normalize(s.a));
        nd.g.push_back(ds.norm_g.normalize(s.g));
        nd.mu.push_back(ds.norm_mu.normalize(s.mu));
        nd.tau.push_back(ds.norm_tau.normalize(s.tau));
        nd.q.push_back(s.q);
        nd.lin.push_back(s.lin);
    }
    nd.train_idx = ds.train_indices();
    nd.test_idx = ds.test_indices();
    return nd;
}

GradBuffers GradBuffers::like(const std::vector<DenseNet*>& nets) {
    GradBuffers g;
    for (const DenseNet* n : nets) g.per_net.emplace_back(n->param_count(), 0.0);
    return g;
}

void GradBuffers::zero() {
    for (auto& v : per_net) std::fill(v.begin(), v.end(), 0.0);
}

namespace {

void check_not_empty(const std::vector<std::size_t>& idx, const char* what) {
    if (idx.empty()) throw std::invalid_argument(std::string(what) + ": empty sample set");
}

}  // namespace

double loss_g_grad(const DeepOnetG& g, const NetDataset& ds,
                   const std::vector<std::size_t>& idx, GradBuffers* g_grads) {
    check_not_empty(idx, "loss_g");
    DeepOnetG::Workspace ws = g.make_workspace();
    const int nout = g.n_out();
    std::vector<double> out(nout), dout(nout);
    const double invn = 1.0 / static_cast<double>(idx.size());
    double loss = 0.0;
    for (std::size_t s : idx) {
        g.forward(ds.a[s].data(), ds.mu[s].data(), ws, out.data());
        double e2 = 0.0;
        for (int k = 0; k < nout; ++k) {
            const double e = out[k] - ds.g[s][k];
            e2 += e * e;
            dout[k] = 2.0 * invn * e;
        }
        loss += e2;
        if (g_grads != nullptr) {
            g.backward(dout.data(), ws, g_grads->per_net[0].data(),
                       g_grads->per_net[1].data(), g_grads->per_net[2].data(), nullptr);
        }
    }
    return loss * invn;
}

double loss_m_grad(const MIONetM& m, const NetDataset& ds,
                   const std::vector<std::size_t>& idx, GradBuffers* m_grads) {
    check_not_empty(idx, "loss_m");
    MIONetM::Workspace ws = m.make_workspace();
    const int nout = m.n_out();
    std::vector<double> out(nout), dout(nout);
    const double invn = 1.0 / static_cast<double>(idx.size());
    double loss = 0.0;
    for (std::size_t s : idx) {
        m.forward(ds.a[s].data(), ds.g[s].data(), ds.mu[s].data(), ws, out.data());
        double e2 = 0.0;
        for (int k = 0; k < nout; ++k) {
            const double e = out[k] - ds.tau[s][k];
            e2 += e * e;
            dout[k] = 2.0 * invn * e;
        }
        loss += e2;
        if (m_grads != nullptr) {
            m.backward(dout.data(), ws, m_grads->per_net[0].data(),
                       m_grads->per_net[1].data(), m_grads->per_net[2].data(),
                       m_grads->per_net[3].data(), nullptr, nullptr);
        }
    }
    return loss * invn;
}

double loss_mg_grad(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
                    const std::vector<std::size_t>& idx, GradBuffers* m_grads,
                    GradBuffers* g_grads) {
    check_not_empty(idx, "loss_mg");
    DeepOnetG::Workspace gws = g.make_workspace();
    MIONetM::Workspace mws = m.make_workspace();
    const int ng = g.n_out();
    const int nout = m.n_out();
    const VectorXd span_g = ds.norm_g.hi - ds.norm_g.lo;
    const VectorXd scale_tau = ds.norm_tau.norm_scale();

    std::vector<double> gz(ng), dmout(nout);
    VectorXd dgz = VectorXd::Zero(ng);
    std::vector<double> dgz_m(ng);
    // Scratch for m's parameter gradients when only g's gradient is wanted:
    // the chain through m's g-input still requires a full backward pass.
    GradBuffers m_scratch;
    if (m_grads == nullptr && g_grads != nullptr)
        m_scratch = GradBuffers::like(const_cast<MIONetM&>(m).subnets());
    const double invn = 1.0 / static_cast<double>(idx.size());
    double loss = 0.0;
    for (std::size_t s : idx) {
        g.forward(ds.a[s].data(), ds.mu[s].data(), gws, gz.data());
        // Raw-space eddy-viscosity output and the exact-correction target
        // recomputed with it.
        VectorXd gzv = Eigen::Map<const VectorXd>(gz.data(), ng);
        VectorXd g_raw = ds.norm_g.denormalize(gzv);
        VectorXd tau_raw = ds.q[s] + ds.lin[s] * g_raw;
        VectorXd target = ds.norm_tau.normalize(tau_raw);

        m.forward(ds.a[s].data(), gz.data(), ds.mu[s].data(), mws, dmout.data());
        double e2 = 0.0;
        VectorXd err(nout);
        for (int k = 0; k < nout; ++k) {
            err[k] = target[k] - dmout[k];
            e2 += err[k] * err[k];
        }
        loss += e2;

        if (m_grads != nullptr || g_grads != nullptr) {
            // d/d(m output) = -2 e / N; the m-input g receives the chain as well.
            for (int k = 0; k < nout; ++k) dmout[k] = -2.0 * invn * err[k];
            std::fill(dgz_m.begin(), dgz_m.end(), 0.0);
            GradBuffers* msink = m_grads != nullptr ? m_grads : &m_scratch;
            m.backward(dmout.data(), mws, msink->per_net[0].data(),
                       msink->per_net[1].data(), msink->per_net[2].data(),
                       msink->per_net[3].data(), nullptr, dgz_m.data());
            if (g_grads != nullptr) {
                // Target path: d(target)/d(gz) = diag(scale_tau) * lin * diag(span_g).
                dgz = VectorXd::Zero(ng);
                VectorXd dtau_raw = 2.0 * invn * err.cwiseProduct(scale_tau);
                dgz += span_g.cwiseProduct(ds.lin[s].transpose() * dtau_raw);
                for (int k = 0; k < ng; ++k) dgz[k] += dgz_m[k];
                g.backward(dgz.data(), gws, g_grads->per_net[0].data(),
                           g_grads->per_net[1].data(), g_grads->per_net[2].data(),
                           nullptr);
            }
        }
    }
    return loss * invn;
}

double loss_star_grad(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
                      const std::vector<std::size_t>& idx, GradBuffers* m_grads,
                      GradBuffers* g_grads) {
    const double lm = loss_m_grad(m, ds, idx, m_grads);
    const double lg = loss_g_grad(g, ds, idx, g_grads);
    const double lmg = loss_mg_grad(m, g, ds, idx, m_grads, g_grads);
    return lm + lg + lmg;
}

double loss_g(const DeepOnetG& g, const NetDataset& ds,
              const std::vector<std::size_t>& idx) {
    return loss_g_grad(g, ds, idx, nullptr);
}
double loss_m(const MIONetM& m, const NetDataset& ds,
              const std::vector<std::size_t>& idx) {
    return loss_m_grad(m, ds, idx, nullptr);
}
double loss_mg(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
               const std::vector<std::size_t>& idx) {
    return loss_mg_grad(m, g, ds, idx, nullptr, nullptr);
}
double loss_star(const MIONetM& m, const DeepOnetG& g, const NetDataset& ds,
                 const std::vector<std::size_t>& idx) {
    return loss_star_grad(m, g, ds, idx, nullptr, nullptr);
}

double lr_schedule(const TrainConfig& cfg, int epoch) {
    const int k = epoch / cfg.n_step;
    double lr = cfg.lr0;
    for (int i = 0; i < k; ++i) lr *= cfg.gamma;
    return lr;
}

namespace {

struct AdamState {
    std::vector<std::vector<double>> m, v;
    long long t = 0;

    static AdamState like(const std::vector<DenseNet*>& nets) {
        AdamState s;
        for (const DenseNet* n : nets) {
            s.m.emplace_back(n->param_count(), 0.0);
            s.v.emplace_back(n->param_count(), 0.0);
        }
        return s;
    }
};

void adam_apply(std::vector<DenseNet*>& nets, const GradBuffers& grads, AdamState& st,
                const TrainConfig& cfg, double lr) {
    ++st.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    for (std::size_t k = 0; k < nets.size(); ++k) {
        kernels::adam_step(nets[k]->params(), grads.per_net[k].data(), st.m[k].data(),
                           st.v[k].data(), nets[k]->param_count(), lr, cfg.beta1,
                           cfg.beta2, cfg.eps, bc1, bc2);
    }
}

void check_finite(double loss, int epoch, const char* what) {
    if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << what << ": non-finite loss at epoch " << epoch;
        throw std::runtime_error(os.str());
    }
}

}  // namespace

TrainReport train_deeponet_g(DeepOnetG& g, const NetDataset& ds, const TrainConfig& cfg) {
    if (cfg.epochs <= 0) throw std::invalid_argument("train: epochs must be > 0");
    std::vector<DenseNet*> nets = g.subnets();
    GradBuffers grads = GradBuffers::like(nets);
    AdamState adam = AdamState::like(nets);
    TrainReport rep;
    rep.loss_history.reserve(cfg.epochs);
    for (int e = 0; e < cfg.epochs; ++e) {
        grads.zero();
        const double loss = loss_g_grad(g, ds, ds.train_idx, &grads);
        check_finite(loss, e, "train_deeponet_g");
        rep.loss_history.push_back(loss);
        adam_apply(nets, grads, adam, cfg, lr_schedule(cfg, e));
    }
    rep.epochs = cfg.epochs;
    rep.final_train = loss_g(g, ds, ds.train_idx);
    rep.final_test = ds.test_idx.empty() ? 0.0 : loss_g(g, ds, ds.test_idx);
    return rep;
}

TrainReport train_mionet_m(MIONetM& m, const NetDataset& ds, const TrainConfig& cfg) {
    if (cfg.epochs <= 0) throw std::invalid_argument("train: epochs must be > 0");
    std::vector<DenseNet*> nets = m.subnets();
    GradBuffers grads = GradBuffers::like(nets);
    AdamState adam = AdamState::like(nets);
    TrainReport rep;
    rep.loss_history.reserve(cfg.epochs);
    for (int e = 0; e < cfg.epochs; ++e) {
        grads.zero();
        const double loss = loss_m_grad(m, ds, ds.train_idx, &grads);
        check_finite(loss, e, "train_mionet_m");
        rep.loss_history.push_back(loss);
        adam_apply(nets, grads, adam, cfg, lr_schedule(cfg, e));
    }
    rep.epochs = cfg.epochs;
    rep.final_train = loss_m(m, ds, ds.train_idx);
    rep.final_test = ds.test_idx.empty() ? 0.0 : loss_m(m, ds, ds.test_idx);
    return rep;
}

TrainReport train_coupled_star(MIONetM& m, DeepOnetG& g, const NetDataset& ds,
                               const TrainConfig& cfg) {
    if (cfg.coupled_epochs <= 0)
        throw std::invalid_argument("train: coupled_epochs must be > 0");
    std::vector<DenseNet*> mnets = m.subnets();
    std::vector<DenseNet*> gnets = g.subnets();
    GradBuffers mgrads = GradBuffers::like(mnets);
    GradBuffers ggrads = GradBuffers::like(gnets);
    AdamState madam = AdamState::like(mnets);
    AdamState gadam = AdamState::like(gnets);
    TrainReport rep;
    rep.loss_history.reserve(cfg.coupled_epochs);
    for (int e = 0; e < cfg.coupled_epochs; ++e) {
        mgrads.zero();
        ggrads.zero();
        const double loss = loss_star_grad(m, g, ds, ds.train_idx, &mgrads, &ggrads);
        check_finite(loss, e, "train_coupled_star");
        rep.loss_history.push_back(loss);
        const double lr = lr_schedule(cfg, e);
        adam_apply(mnets, mgrads, madam, cfg, lr);
        adam_apply(gnets, ggrads, gadam, cfg, lr);
    }
    rep.epochs = cfg.coupled_epochs;
    rep.final_train = loss_star(m, g, ds, ds.train_idx);
    rep.final_test = ds.test_idx.empty() ? 0.0 : loss_star(m, g, ds, ds.test_idx);
    return rep;
}

double grad_check(DeepOnetG* g, MIONetM* m, LossKind kind, const NetDataset& ds,
                  double eps) {
    if (eps < 1e-7 || eps > 1e-4)
        throw std::invalid_argument("grad_check: eps outside [1e-7, 1e-4]");
    const std::vector<std::size_t>& idx = ds.train_idx;

    auto eval = [&]() {
        switch (kind) {
            case LossKind::G: return loss_g(*g, ds, idx);
            case LossKind::M: return loss_m(*m, ds, idx);
            case LossKind::MG: return loss_mg(*m, *g, ds, idx);
            case LossKind::Star: return loss_star(*m, *g, ds, idx);
        }
        return 0.0;
    };

    std::vector<DenseNet*> nets;
    std::vector<GradBuffers*> bufs;
    GradBuffers ggrads, mgrads;
    const bool need_g = kind != LossKind::M;
    const bool need_m = kind != LossKind::G;
    if (need_g) ggrads = GradBuffers::like(g->subnets());
    if (need_m) mgrads = GradBuffers::like(m->subnets());

    switch (kind) {
        case LossKind::G: loss_g_grad(*g, ds, idx, &ggrads); break;
        case LossKind::M: loss_m_grad(*m, ds, idx, &mgrads); break;
        case LossKind::MG: loss_mg_grad(*m, *g, ds, idx, &mgrads, &ggrads); break;
        case LossKind::Star: loss_star_grad(*m, *g, ds, idx, &mgrads, &ggrads); break;
    }

    double max_dev = 0.0;
    auto sweep = [&](std::vector<DenseNet*> subs, const GradBuffers& analytic) {
        for (std::size_t k = 0; k < subs.size(); ++k) {
            double* theta = subs[k]->params();
            for (std::size_t p = 0; p < subs[k]->param_count(); ++p) {
                const double keep = theta[p];
                theta[p] = keep + eps;
                const double lp = eval();
                theta[p] = keep - eps;
                const double lm = eval();
                theta[p] = keep;
                const double fd = (lp - lm) / (2.0 * eps);
                const double an = analytic.per_net[k][p];
                const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
                max_dev = std::max(max_dev, std::abs(fd - an) / denom);
            }
        }
    };
    if (need_g) sweep(g->subnets(), ggrads);
    if (need_m) sweep(m->subnets(), mgrads);
    return max_dev;
}

}  // namespace rom::net
