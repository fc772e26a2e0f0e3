#include "rom/closure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rom/io.hpp"

namespace rom {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

Eigen::VectorXd evaluate_operator(const VectorXd& a, const VectorXd& g,
                                  const ReducedOperators& ops, bool with_turbulence) {
    if (a.size() != ops.dims.nu)
        throw std::invalid_argument("evaluate_operator: a length mismatch");
    VectorXd r(ops.dims.nu + ops.dims.np);
    r.head(ops.dims.nu) = -contract_jk(ops.conv, a, a);
    r.tail(ops.dims.np) = contract_jk(ops.p_conv, a, a);
    if (with_turbulence) {
        if (g.size() != ops.dims.nnut)
            throw std::invalid_argument("evaluate_operator: g length mismatch");
        r.head(ops.dims.nu) += contract_jk(ops.turb_mom_lap, g, a);
        r.head(ops.dims.nu) += contract_jk(ops.turb_mom_div, g, a);
        r.tail(ops.dims.np) -= contract_jk(ops.turb_p_lap, g, a);
        r.tail(ops.dims.np) -= contract_jk(ops.turb_p_div, g, a);
    }
    return r;
}

void check_hierarchy(const ReducedOperators& small_ops, const ReducedOperators& big_ops,
                     double tol) {
    if (big_ops.dims.nu < small_ops.dims.nu || big_ops.dims.np < small_ops.dims.np)
        throw std::invalid_argument("check_hierarchy: big dims smaller than small dims");
    if (big_ops.dims.nnut != small_ops.dims.nnut)
        throw std::invalid_argument(
            "check_hierarchy: eddy-viscosity dims must match between operator sets");
    double defect = 0.0;
    for (int i = 0; i < small_ops.dims.nu; ++i)
        for (int j = 0; j < small_ops.dims.nu; ++j)
            for (int k = 0; k < small_ops.dims.nu; ++k)
                defect = std::max(defect,
                                  std::abs(small_ops.conv(i, j, k) - big_ops.conv(i, j, k)));
    for (int i = 0; i < small_ops.dims.np; ++i)
        for (int j = 0; j < small_ops.dims.nu; ++j)
            for (int k = 0; k < small_ops.dims.nu; ++k)
                defect = std::max(
                    defect, std::abs(small_ops.p_conv(i, j, k) - big_ops.p_conv(i, j, k)));
    if (defect > tol) {
        std::ostringstream os;
        os << "check_hierarchy: sub-block defect " << defect
           << " exceeds tolerance (non-hierarchical bases?)";
        throw std::runtime_error(os.str());
    }
}

ExactCorrection exact_correction(const VectorXd& a_hat, const VectorXd& g,
                                 const ReducedOperators& small_ops,
                                 const ReducedOperators& big_ops, bool with_turbulence) {
    check_hierarchy(small_ops, big_ops);
    const int nu = small_ops.dims.nu, np = small_ops.dims.np;
    const int nnut = small_ops.dims.nnut;
    if (a_hat.size() != big_ops.dims.nu)
        throw std::invalid_argument("exact_correction: a_hat length mismatch");
    // Hierarchical bases make the small projection a prefix of the big one.
    const VectorXd a = a_hat.head(nu);

    ExactCorrection ec;
    ec.q.resize(nu + np);
    ec.q.head(nu) = -contract_jk(big_ops.conv, a_hat, a_hat).head(nu) +
                    contract_jk(small_ops.conv, a, a);
    ec.q.tail(np) = contract_jk(big_ops.p_conv, a_hat, a_hat).head(np) -
                    contract_jk(small_ops.p_conv, a, a);

    ec.lin = MatrixXd::Zero(nu + np, nnut);
    if (with_turbulence) {
        if (g.size() != nnut)
            throw std::invalid_argument("exact_correction: g length mismatch");
        // (g^T T a)_i = sum_j g_j (T . a)_{ij}: assemble the linear-in-g maps.
        const MatrixXd big_mom = (contract_k(big_ops.turb_mom_lap, a_hat) +
                                  contract_k(big_ops.turb_mom_div, a_hat))
                                     .topRows(nu);
        const MatrixXd small_mom = contract_k(small_ops.turb_mom_lap, a) +
                                   contract_k(small_ops.turb_mom_div, a);
        const MatrixXd big_p = (contract_k(big_ops.turb_p_lap, a_hat) +
                                contract_k(big_ops.turb_p_div, a_hat))
                                   .topRows(np);
        const MatrixXd small_p =
            contract_k(small_ops.turb_p_lap, a) + contract_k(small_ops.turb_p_div, a);
        ec.lin.topRows(nu) = big_mom - small_mom;
        ec.lin.bottomRows(np) = -(big_p - small_p);
    }
    ec.tau = ec.q + ec.lin * (with_turbulence ? g : VectorXd::Zero(nnut));
    return ec;
}

NormStats NormStats::fit(const std::vector<VectorXd>& rows) {
    if (rows.empty()) throw std::invalid_argument("NormStats::fit: empty sample set");
    NormStats s;
    s.lo = rows[0];
    s.hi = rows[0];
    for (const auto& r : rows) {
        if (r.size() != s.lo.size())
            throw std::invalid_argument("NormStats::fit: inconsistent widths");
        s.lo = s.lo.cwiseMin(r);
        s.hi = s.hi.cwiseMax(r);
    }
    return s;
}

Eigen::VectorXd NormStats::normalize(const VectorXd& x) const {
    VectorXd z(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double span = hi[i] - lo[i];
        z[i] = span > 0.0 ? (x[i] - lo[i]) / span : 0.0;
    }
    return z;
}

Eigen::VectorXd NormStats::denormalize(const VectorXd& z) const {
    VectorXd x(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double span = hi[i] - lo[i];
        x[i] = span > 0.0 ? lo[i] + z[i] * span : lo[i];
    }
    return x;
}

Eigen::VectorXd NormStats::norm_scale() const {
    VectorXd s(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        const double span = hi[i] - lo[i];
        s[i] = span > 0.0 ? 1.0 / span : 0.0;
    }
    return s;
}

bool ClosureDataset::is_test_sample(std::size_t i) const {
    return std::find(test_params.begin(), test_params.end(), sample_param[i]) !=
           test_params.end();
}

std::vector<std::size_t> ClosureDataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!is_test_sample(i)) out.push_back(i);
    return out;
}

std::vector<std::size_t> ClosureDataset::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (is_test_sample(i)) out.push_back(i);
    return out;
}

ClosureDataset build_dataset(const SnapshotSet& snapshots, const PodBasis& ubasis,
                             const PodBasis& pbasis, const PodBasis& nutbasis,
                             const ReducedOperators& small_ops,
                             const ReducedOperators& big_ops, const SplitSpec& split,
                             bool with_turbulence) {
    check_hierarchy(small_ops, big_ops);
    if (snapshots.frames.empty())
        throw std::invalid_argument("build_dataset: empty snapshot set");

    ClosureDataset ds;
    ds.dims = small_ops.dims;
    ds.hat_factor = small_ops.dims.nu > 0 ? big_ops.dims.nu / small_ops.dims.nu : 2;
    ds.unsteady = snapshots.kind == SnapshotKind::Unsteady;
    ds.test_params = split.test_params;

    const int n = snapshots.grid.cells();
    for (std::size_t f = 0; f < snapshots.frames.size(); ++f) {
        const FieldFrame& frame = snapshots.frames[f];
        VectorXd ufield(2 * n), pfield(n), nutfield(n);
        for (int c = 0; c < 2 * n; ++c) ufield[c] = frame.u[c];
        for (int c = 0; c < n; ++c) pfield[c] = frame.p[c];
        for (int c = 0; c < n; ++c) nutfield[c] = frame.nut[c];

        ClosureSample s;
        const VectorXd a_hat = project(ufield, ubasis, big_ops.dims.nu);
        s.a = a_hat.head(small_ops.dims.nu);
        s.g = project(nutfield, nutbasis, small_ops.dims.nnut);
        ExactCorrection ec =
            exact_correction(a_hat, s.g, small_ops, big_ops, with_turbulence);
        s.tau = ec.tau;
        s.q = ec.q;
        s.lin = ec.lin;

        const std::vector<double>& mu = frame.mu;
        if (ds.unsteady) {
            s.mu.resize(1 + mu.size());
            s.mu[0] = frame.t;
            for (std::size_t k = 0; k < mu.size(); ++k) s.mu[1 + k] = mu[k];
        } else {
            s.mu = Eigen::Map<const VectorXd>(mu.data(), mu.size());
        }
        ds.samples.push_back(std::move(s));
        ds.sample_param.push_back(snapshots.frame_param[f]);
    }

    const std::vector<std::size_t> train = ds.train_indices();
    if (train.empty()) throw std::invalid_argument("build_dataset: empty training split");
    std::vector<VectorXd> arows, grows, murows, taurows;
    for (std::size_t i : train) {
        arows.push_back(ds.samples[i].a);
        grows.push_back(ds.samples[i].g);
        murows.push_back(ds.samples[i].mu);
        taurows.push_back(ds.samples[i].tau);
    }
    ds.norm_a = NormStats::fit(arows);
    ds.norm_g = NormStats::fit(grows);
    ds.norm_mu = NormStats::fit(murows);
    ds.norm_tau = NormStats::fit(taurows);
    return ds;
}

namespace {

json norm_to_json(const NormStats& s) {
    std::vector<double> lo(s.lo.data(), s.lo.data() + s.lo.size());
    std::vector<double> hi(s.hi.data(), s.hi.data() + s.hi.size());
    return json{{"lo", lo}, {"hi", hi}};
}

NormStats norm_from_json(const json& j) {
    NormStats s;
    const auto lo = j.at("lo").get<std::vector<double>>();
    const auto hi = j.at("hi").get<std::vector<double>>();
    s.lo = Eigen::Map<const VectorXd>(lo.data(), lo.size());
    s.hi = Eigen::Map<const VectorXd>(hi.data(), hi.size());
    return s;
}

}  // namespace

void save_dataset(const ClosureDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json m;
    m["format_version"] = "1";
    m["dims"] = {{"nu", ds.dims.nu}, {"np", ds.dims.np}, {"nnut", ds.dims.nnut}};
    m["hat_factor"] = ds.hat_factor;
    m["unsteady"] = ds.unsteady;
    m["sample_count"] = ds.samples.size();
    m["mu_width"] = ds.samples.empty() ? 0 : ds.samples[0].mu.size();
    m["sample_param"] = ds.sample_param;
    m["split"] = {{"test_params", ds.test_params}};
    m["normalization"] = {{"a", norm_to_json(ds.norm_a)},
                          {"g", norm_to_json(ds.norm_g)},
                          {"mu", norm_to_json(ds.norm_mu)},
                          {"tau", norm_to_json(ds.norm_tau)}};
    io::write_file(dir / "manifest.json", m.dump(2) + "\n");

    // Spec record layout: a | g | mu | tau per sample.
    std::string buf;
    for (const auto& s : ds.samples) {
        io::append_f64_le(buf, s.a.data(), s.a.size());
        io::append_f64_le(buf, s.g.data(), s.g.size());
        io::append_f64_le(buf, s.mu.data(), s.mu.size());
        io::append_f64_le(buf, s.tau.data(), s.tau.size());
    }
    io::write_file(dir / "samples.bin", buf);

    // Affine closure oracle needed by the coupled loss: q | lin per sample.
    std::string aux;
    for (const auto& s : ds.samples) {
        io::append_f64_le(aux, s.q.data(), s.q.size());
        for (Eigen::Index i = 0; i < s.lin.rows(); ++i)
            for (Eigen::Index j = 0; j < s.lin.cols(); ++j) {
                const double v = s.lin(i, j);
                io::append_f64_le(aux, &v, 1);
            }
    }
    io::write_file(dir / "closure_aux.bin", aux);
}

ClosureDataset load_dataset(const std::filesystem::path& dir) {
    const json m = json::parse(io::read_file(dir / "manifest.json"));
    ClosureDataset ds;
    ds.dims.nu = m.at("dims").at("nu").get<int>();
    ds.dims.np = m.at("dims").at("np").get<int>();
    ds.dims.nnut = m.at("dims").at("nnut").get<int>();
    ds.hat_factor = m.at("hat_factor").get<int>();
    ds.unsteady = m.at("unsteady").get<bool>();
    ds.sample_param = m.at("sample_param").get<std::vector<int>>();
    ds.test_params = m.at("split").at("test_params").get<std::vector<int>>();
    ds.norm_a = norm_from_json(m.at("normalization").at("a"));
    ds.norm_g = norm_from_json(m.at("normalization").at("g"));
    ds.norm_mu = norm_from_json(m.at("normalization").at("mu"));
    ds.norm_tau = norm_from_json(m.at("normalization").at("tau"));

    const std::size_t count = m.at("sample_count").get<std::size_t>();
    const std::size_t muw = m.at("mu_width").get<std::size_t>();
    const int nu = ds.dims.nu, np = ds.dims.np, nnut = ds.dims.nnut;

    const std::string buf = io::read_file(dir / "samples.bin");
    const std::string aux = io::read_file(dir / "closure_aux.bin");
    std::size_t off = 0, aoff = 0;
    for (std::size_t i = 0; i < count; ++i) {
        ClosureSample s;
        auto grab = [&](std::size_t n) {
            std::vector<double> v = io::read_f64_le(buf, off, n);
            return VectorXd(Eigen::Map<const VectorXd>(v.data(), v.size()));
        };
        s.a = grab(nu);
        s.g = grab(nnut);
        s.mu = grab(muw);
        s.tau = grab(nu + np);
        std::vector<double> q = io::read_f64_le(aux, aoff, nu + np);
        s.q = Eigen::Map<const VectorXd>(q.data(), q.size());
        std::vector<double> lin =
            io::read_f64_le(aux, aoff, static_cast<std::size_t>(nu + np) * nnut);
        s.lin.resize(nu + np, nnut);
        std::size_t w = 0;
        for (int r = 0; r < nu + np; ++r)
            for (int c = 0; c < nnut; ++c) s.lin(r, c) = lin[w++];
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

namespace {
Eigen::VectorXd padded(const VectorXd& a, int d) {
    VectorXd z = VectorXd::Zero(d);
    z.head(a.size()) = a;
    return z;
}
}  // namespace

QuadraticAnsatz fit_quadratic_ansatz(const ClosureDataset& ds, bool* underdetermined) {
    // The fitted operators are parameter-constant, so the dataset must come
    // from a single physical parameter (time-only variation).
    std::vector<int> params(ds.sample_param.begin(), ds.sample_param.end());
    std::sort(params.begin(), params.end());
    params.erase(std::unique(params.begin(), params.end()), params.end());
    if (params.size() != 1)
        throw std::invalid_argument(
            "fit_quadratic_ansatz: dataset must come from a single physical parameter");

    const int d = ds.dims.nu + ds.dims.np;
    const int nfeat = d + d * d;
    const std::size_t m = ds.samples.size();
    if (underdetermined) *underdetermined = m < static_cast<std::size_t>(nfeat);

    MatrixXd f(m, nfeat);
    MatrixXd y(m, d);
    for (std::size_t s = 0; s < m; ++s) {
        const VectorXd z = padded(ds.samples[s].a, d);
        for (int i = 0; i < d; ++i) f(s, i) = z[i];
        int col = d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) f(s, col++) = z[i] * z[j];
        y.row(s) = ds.samples[s].tau.transpose();
    }

    const double ridge = 1e-10;
    MatrixXd gram = f.transpose() * f;
    gram.diagonal().array() += ridge;
    MatrixXd coef = gram.ldlt().solve(f.transpose() * y);  // nfeat x d

    QuadraticAnsatz qa;
    qa.a_tilde.resize(d, d);
    qa.b_tilde = Tensor3(d, d, d);
    for (int out = 0; out < d; ++out) {
        for (int i = 0; i < d; ++i) qa.a_tilde(out, i) = coef(i, out);
        int col = d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) qa.b_tilde(out, i, j) = coef(col++, out);
    }
    return qa;
}

Eigen::VectorXd evaluate_quadratic_ansatz(const QuadraticAnsatz& qa,
                                          const Eigen::VectorXd& a) {
    const int d = static_cast<int>(qa.a_tilde.rows());
    const VectorXd z = padded(a, d);
    return qa.a_tilde * z + contract_jk(qa.b_tilde, z, z);
}

void save_quadratic_ansatz(const QuadraticAnsatz& qa, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json m;
    m["format_version"] = "1";
    m["d"] = qa.a_tilde.rows();
    io::write_file(dir / "manifest.json", m.dump(2) + "\n");
    std::string buf;
    for (Eigen::Index i = 0; i < qa.a_tilde.rows(); ++i)
        for (Eigen::Index j = 0; j < qa.a_tilde.cols(); ++j) {
            const double v = qa.a_tilde(i, j);
            io::append_f64_le(buf, &v, 1);
        }
    io::append_f64_le(buf, qa.b_tilde.v.data(), qa.b_tilde.v.size());
    io::write_file(dir / "ansatz.bin", buf);
}

QuadraticAnsatz load_quadratic_ansatz(const std::filesystem::path& dir) {
    const json m = json::parse(io::read_file(dir / "manifest.json"));
    const int d = m.at("d").get<int>();
    QuadraticAnsatz qa;
    qa.a_tilde.resize(d, d);
    qa.b_tilde = Tensor3(d, d, d);
    const std::string buf = io::read_file(dir / "ansatz.bin");
    std::size_t off = 0;
    std::vector<double> av = io::read_f64_le(buf, off, static_cast<std::size_t>(d) * d);
    std::size_t w = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) qa.a_tilde(i, j) = av[w++];
    qa.b_tilde.v = io::read_f64_le(buf, off, qa.b_tilde.v.size());
    return qa;
}

}  // namespace rom
