#include "rom/nets.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rom/io.hpp"
#include "rom/kernels.hpp"

namespace rom::net {

using nlohmann::json;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }

DenseNet::DenseNet(const DenseSpec& spec) {
    if (spec.input < 1 || spec.output < 1)
        throw std::invalid_argument("DenseNet: widths must be >= 1");
    widths_.push_back(spec.input);
    for (int h : spec.hidden) {
        if (h < 1) throw std::invalid_argument("DenseNet: widths must be >= 1");
        widths_.push_back(h);
    }
    widths_.push_back(spec.output);

    std::size_t total = 0;
    for (int l = 0; l < layer_count(); ++l) {
        w_off_.push_back(total);
        total += static_cast<std::size_t>(widths_[l + 1]) * widths_[l];
        b_off_.push_back(total);
        total += widths_[l + 1];
    }
    theta_.assign(total, 0.0);
}

void DenseNet::init_weights(std::mt19937_64& rng) {
    for (int l = 0; l < layer_count(); ++l) {
        const int rows = widths_[l + 1], cols = widths_[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> unif(-bound, bound);
        double* w = theta_.data() + w_off_[l];
        for (int k = 0; k < rows * cols; ++k) w[k] = unif(rng);
        double* b = theta_.data() + b_off_[l];
        for (int k = 0; k < rows; ++k) b[k] = 0.0;
    }
}

DenseNet::Workspace DenseNet::make_workspace() const {
    Workspace ws;
    ws.act.resize(widths_.size());
    ws.pre.resize(layer_count());
    for (std::size_t l = 0; l < widths_.size(); ++l) ws.act[l].resize(widths_[l]);
    for (int l = 0; l < layer_count(); ++l) ws.pre[l].resize(widths_[l + 1]);
    int wmax = 0;
    for (int wdt : widths_) wmax = std::max(wmax, wdt);
    ws.delta.resize(wmax);
    ws.dprev.resize(wmax);
    return ws;
}

void DenseNet::forward(const double* x, Workspace& ws, double* y) const {
    std::memcpy(ws.act[0].data(), x, sizeof(double) * widths_[0]);
    for (int l = 0; l < layer_count(); ++l) {
        const int rows = widths_[l + 1], cols = widths_[l];
        kernels::dense_forward(theta_.data() + w_off_[l], theta_.data() + b_off_[l],
                               ws.act[l].data(), ws.pre[l].data(), rows, cols);
        if (l + 1 < layer_count()) {
            for (int k = 0; k < rows; ++k) ws.act[l + 1][k] = softplus(ws.pre[l][k]);
        } else {
            std::memcpy(ws.act[l + 1].data(), ws.pre[l].data(), sizeof(double) * rows);
        }
    }
    std::memcpy(y, ws.act.back().data(), sizeof(double) * widths_.back());
}

void DenseNet::backward(const double* dy, Workspace& ws, double* grad, double* dx) const {
    const int last = layer_count() - 1;
    std::memcpy(ws.delta.data(), dy, sizeof(double) * widths_.back());
    for (int l = last; l >= 0; --l) {
        const int rows = widths_[l + 1], cols = widths_[l];
        kernels::dense_backward_params(ws.delta.data(), ws.act[l].data(),
                                       grad + w_off_[l], grad + b_off_[l], rows, cols);
        kernels::dense_backward_input(theta_.data() + w_off_[l], ws.delta.data(),
                                      ws.dprev.data(), rows, cols);
        if (l > 0) {
            for (int k = 0; k < cols; ++k)
                ws.delta[k] = ws.dprev[k] * softplus_grad(ws.pre[l - 1][k]);
        } else if (dx != nullptr) {
            std::memcpy(dx, ws.dprev.data(), sizeof(double) * cols);
        }
    }
}

DeepOnetG::Workspace DeepOnetG::make_workspace() const {
    Workspace ws;
    ws.b = branch.make_workspace();
    ws.t = trunk.make_workspace();
    ws.r = reduction.make_workspace();
    ws.ob.resize(branch.output_width());
    ws.ot.resize(trunk.output_width());
    ws.cat.resize(reduction.input_width());
    ws.out.resize(reduction.output_width());
    ws.dcat.resize(reduction.input_width());
    ws.din.resize(std::max(branch.input_width(), trunk.input_width()));
    return ws;
}

void DeepOnetG::forward(const double* a, const double* mu, Workspace& ws,
                        double* g) const {
    branch.forward(a, ws.b, ws.ob.data());
    trunk.forward(mu, ws.t, ws.ot.data());
    std::memcpy(ws.cat.data(), ws.ob.data(), sizeof(double) * ws.ob.size());
    std::memcpy(ws.cat.data() + ws.ob.size(), ws.ot.data(),
                sizeof(double) * ws.ot.size());
    reduction.forward(ws.cat.data(), ws.r, g);
}

void DeepOnetG::backward(const double* dg, Workspace& ws, double* grad_branch,
                         double* grad_trunk, double* grad_reduction, double* da) const {
    reduction.backward(dg, ws.r, grad_reduction, ws.dcat.data());
    branch.backward(ws.dcat.data(), ws.b, grad_branch, da);
    trunk.backward(ws.dcat.data() + ws.ob.size(), ws.t, grad_trunk, nullptr);
}

MIONetM::Workspace MIONetM::make_workspace() const {
    Workspace ws;
    ws.b1 = branch_a.make_workspace();
    ws.b2 = branch_g.make_workspace();
    ws.t = trunk.make_workspace();
    ws.r = reduction.make_workspace();
    ws.o1.resize(branch_a.output_width());
    ws.o2.resize(branch_g.output_width());
    ws.ot.resize(trunk.output_width());
    ws.cat.resize(reduction.input_width());
    ws.out.resize(reduction.output_width());
    ws.dcat.resize(reduction.input_width());
    ws.din.resize(std::max({branch_a.input_width(), branch_g.input_width(),
                            trunk.input_width()}));
    return ws;
}

void MIONetM::forward(const double* a, const double* g, const double* mu, Workspace& ws,
                      double* tau) const {
    branch_a.forward(a, ws.b1, ws.o1.data());
    branch_g.forward(g, ws.b2, ws.o2.data());
    trunk.forward(mu, ws.t, ws.ot.data());
    double* c = ws.cat.data();
    std::memcpy(c, ws.o1.data(), sizeof(double) * ws.o1.size());
    std::memcpy(c + ws.o1.size(), ws.o2.data(), sizeof(double) * ws.o2.size());
    std::memcpy(c + ws.o1.size() + ws.o2.size(), ws.ot.data(),
                sizeof(double) * ws.ot.size());
    reduction.forward(ws.cat.data(), ws.r, tau);
}

void MIONetM::backward(const double* dtau, Workspace& ws, double* grad_ba,
                       double* grad_bg, double* grad_trunk, double* grad_reduction,
                       double* da, double* dg) const {
    reduction.backward(dtau, ws.r, grad_reduction, ws.dcat.data());
    branch_a.backward(ws.dcat.data(), ws.b1, grad_ba, da);
    branch_g.backward(ws.dcat.data() + ws.o1.size(), ws.b2, grad_bg, dg);
    trunk.backward(ws.dcat.data() + ws.o1.size() + ws.o2.size(), ws.t, grad_trunk,
                   nullptr);
}

DeepOnetG make_deeponet_g(int n_a, int n_mu, int n_out, std::mt19937_64& rng,
                          const std::vector<int>& hidden, int latent) {
    DeepOnetG g;
    g.branch = DenseNet({n_a, hidden, latent});
    g.trunk = DenseNet({n_mu, hidden, latent});
    g.reduction = DenseNet({2 * latent, hidden, n_out});
    g.branch.init_weights(rng);
    g.trunk.init_weights(rng);
    g.reduction.init_weights(rng);
    return g;
}

MIONetM make_mionet_m(int n_a, int n_g, int n_mu, int n_out, std::mt19937_64& rng,
                      const std::vector<int>& hidden, int latent) {
    MIONetM m;
    m.branch_a = DenseNet({n_a, hidden, latent});
    m.branch_g = DenseNet({n_g, hidden, latent});
    m.trunk = DenseNet({n_mu, hidden, latent});
    m.reduction = DenseNet({3 * latent, hidden, n_out});
    m.branch_a.init_weights(rng);
    m.branch_g.init_weights(rng);
    m.trunk.init_weights(rng);
    m.reduction.init_weights(rng);
    return m;
}

namespace {

const char kWeightMagic[4] = {'R', 'O', 'M', 'W'};

void append_net(std::string& buf, const DenseNet& net) {
    const double count = static_cast<double>(net.widths().size());
    io::append_f64_le(buf, &count, 1);
    for (int w : net.widths()) {
        const double wv = w;
        io::append_f64_le(buf, &wv, 1);
    }
    io::append_f64_le(buf, net.params(), net.param_count());
}

DenseNet read_net(const std::string& buf, std::size_t& off) {
    const std::size_t count =
        static_cast<std::size_t>(io::read_f64_le(buf, off, 1)[0]);
    if (count < 2 || count > 64) throw std::runtime_error("weight archive: bad widths");
    std::vector<double> wv = io::read_f64_le(buf, off, count);
    DenseSpec spec;
    spec.input = static_cast<int>(wv.front());
    spec.output = static_cast<int>(wv.back());
    spec.hidden.clear();
    for (std::size_t i = 1; i + 1 < wv.size(); ++i)
        spec.hidden.push_back(static_cast<int>(wv[i]));
    DenseNet net(spec);
    std::vector<double> theta = io::read_f64_le(buf, off, net.param_count());
    std::memcpy(net.params(), theta.data(), sizeof(double) * theta.size());
    return net;
}

void write_net_file(const std::filesystem::path& p,
                    const std::vector<const DenseNet*>& nets) {
    std::string buf;
    buf.append(kWeightMagic, 4);
    const double version = 1.0;
    io::append_f64_le(buf, &version, 1);
    for (const DenseNet* n : nets) append_net(buf, *n);
    io::write_file(p, buf);
}

std::vector<DenseNet> read_net_file(const std::filesystem::path& p, std::size_t count) {
    const std::string buf = io::read_file(p);
    if (buf.size() < 4 || std::memcmp(buf.data(), kWeightMagic, 4) != 0)
        throw std::runtime_error("weight archive: bad magic bytes");
    std::size_t off = 4;
    if (io::read_f64_le(buf, off, 1)[0] != 1.0)
        throw std::runtime_error("weight archive: unsupported version");
    std::vector<DenseNet> nets;
    for (std::size_t i = 0; i < count; ++i) nets.push_back(read_net(buf, off));
    return nets;
}

json norm_json(const NormStats& s) {
    std::vector<double> lo(s.lo.data(), s.lo.data() + s.lo.size());
    std::vector<double> hi(s.hi.data(), s.hi.data() + s.hi.size());
    return json{{"lo", lo}, {"hi", hi}};
}

NormStats norm_from(const json& j) {
    NormStats s;
    auto lo = j.at("lo").get<std::vector<double>>();
    auto hi = j.at("hi").get<std::vector<double>>();
    s.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
    s.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
    return s;
}

json widths_json(const DenseNet& n) { return json(n.widths()); }

}  // namespace

void save_models(const ModelBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json m;
    m["format_version"] = "1";
    m["seed"] = bundle.seed;
    m["training"] = bundle.training;
    m["dims"] = {{"nu", bundle.dims.nu}, {"np", bundle.dims.np}, {"nnut", bundle.dims.nnut}};
    m["normalization"] = {{"a", norm_json(bundle.norm_a)},
                          {"g", norm_json(bundle.norm_g)},
                          {"mu", norm_json(bundle.norm_mu)},
                          {"tau", norm_json(bundle.norm_tau)}};
    m["g_net"] = {{"branch", widths_json(bundle.g.branch)},
                  {"trunk", widths_json(bundle.g.trunk)},
                  {"reduction", widths_json(bundle.g.reduction)}};
    m["has_m"] = bundle.m.has_value();
    if (bundle.m) {
        m["m_net"] = {{"branch_a", widths_json(bundle.m->branch_a)},
                      {"branch_g", widths_json(bundle.m->branch_g)},
                      {"trunk", widths_json(bundle.m->trunk)},
                      {"reduction", widths_json(bundle.m->reduction)}};
    }
    io::write_file(dir / "manifest.json", m.dump(2) + "\n");

    write_net_file(dir / "g_net.bin",
                   {&bundle.g.branch, &bundle.g.trunk, &bundle.g.reduction});
    if (bundle.m) {
        write_net_file(dir / "m_net.bin", {&bundle.m->branch_a, &bundle.m->branch_g,
                                           &bundle.m->trunk, &bundle.m->reduction});
    }
}

ModelBundle load_models(const std::filesystem::path& dir) {
    const json m = json::parse(io::read_file(dir / "manifest.json"));
    ModelBundle bundle;
    bundle.seed = m.at("seed").get<unsigned long long>();
    bundle.training = m.value("training", "standard");
    bundle.dims.nu = m.at("dims").at("nu").get<int>();
    bundle.dims.np = m.at("dims").at("np").get<int>();
    bundle.dims.nnut = m.at("dims").at("nnut").get<int>();
    bundle.norm_a = norm_from(m.at("normalization").at("a"));
    bundle.norm_g = norm_from(m.at("normalization").at("g"));
    bundle.norm_mu = norm_from(m.at("normalization").at("mu"));
    bundle.norm_tau = norm_from(m.at("normalization").at("tau"));

    std::vector<DenseNet> g = read_net_file(dir / "g_net.bin", 3);
    bundle.g.branch = std::move(g[0]);
    bundle.g.trunk = std::move(g[1]);
    bundle.g.reduction = std::move(g[2]);
    if (bundle.g.reduction.input_width() !=
        bundle.g.branch.output_width() + bundle.g.trunk.output_width())
        throw std::runtime_error("weight archive: inconsistent g-net widths");

    if (m.at("has_m").get<bool>()) {
        std::vector<DenseNet> mm = read_net_file(dir / "m_net.bin", 4);
        MIONetM net;
        net.branch_a = std::move(mm[0]);
        net.branch_g = std::move(mm[1]);
        net.trunk = std::move(mm[2]);
        net.reduction = std::move(mm[3]);
        if (net.reduction.input_width() != net.branch_a.output_width() +
                                               net.branch_g.output_width() +
                                               net.trunk.output_width())
            throw std::runtime_error("weight archive: inconsistent m-net widths");
        bundle.m = std::move(net);
    }
    return bundle;
}

}  // namespace rom::net
