#include "rom/solver.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rom/io.hpp"

namespace rom {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string closure_mode_name(ClosureMode m) {
    switch (m) {
        case ClosureMode::None: return "none";
        case ClosureMode::DD: return "dd";
        case ClosureMode::DDStar: return "dd-star";
        case ClosureMode::Quadratic: return "quadratic";
    }
    return "none";
}

ClosureMode closure_mode_from_name(const std::string& s) {
    if (s == "none") return ClosureMode::None;
    if (s == "dd") return ClosureMode::DD;
    if (s == "dd-star") return ClosureMode::DDStar;
    if (s == "quadratic") return ClosureMode::Quadratic;
    throw std::invalid_argument("unknown closure mode: " + s);
}

Eigen::VectorXd eval_g(const SolveContext& ctx, const VectorXd& a,
                       const VectorXd& mu_full) {
    const int nnut = ctx.ops->dims.nnut;
    if (ctx.models == nullptr) return VectorXd::Zero(nnut);
    const net::DeepOnetG& g = ctx.models->g;
    net::DeepOnetG::Workspace ws = g.make_workspace();
    const VectorXd az = ctx.models->norm_a.normalize(a);
    const VectorXd mz = ctx.models->norm_mu.normalize(mu_full);
    VectorXd gz(g.n_out());
    g.forward(az.data(), mz.data(), ws, gz.data());
    return ctx.models->norm_g.denormalize(gz);
}

Eigen::VectorXd eval_closure(const SolveContext& ctx, ClosureMode mode,
                             const VectorXd& a, const VectorXd& g,
                             const VectorXd& mu_full) {
    const int d = ctx.ops->dims.nu + ctx.ops->dims.np;
    switch (mode) {
        case ClosureMode::None:
            return VectorXd::Zero(d);
        case ClosureMode::Quadratic: {
            if (ctx.ansatz == nullptr)
                throw std::invalid_argument("eval_closure: quadratic mode without ansatz");
            return evaluate_quadratic_ansatz(*ctx.ansatz, a);
        }
        case ClosureMode::DD:
        case ClosureMode::DDStar: {
            if (ctx.models == nullptr || !ctx.models->m)
                throw std::invalid_argument("eval_closure: dd mode without correction net");
            const net::MIONetM& m = *ctx.models->m;
            net::MIONetM::Workspace ws = m.make_workspace();
            const VectorXd az = ctx.models->norm_a.normalize(a);
            const VectorXd gz = ctx.models->norm_g.normalize(g);
            const VectorXd mz = ctx.models->norm_mu.normalize(mu_full);
            VectorXd tz(m.n_out());
            m.forward(az.data(), gz.data(), mz.data(), ws, tz.data());
            return ctx.models->norm_tau.denormalize(tz);
        }
    }
    return VectorXd::Zero(d);
}

TimeDerivative TimeDerivative::steady(int n) {
    TimeDerivative td;
    td.c_new = 0.0;
    td.rest = VectorXd::Zero(n);
    return td;
}

TimeDerivative time_derivative(const std::vector<VectorXd>& history, TimeScheme scheme,
                               double dt) {
    if (dt <= 0.0) throw std::invalid_argument("time_derivative: dt must be > 0");
    TimeDerivative td;
    if (scheme == TimeScheme::FirstOrder) {
        if (history.empty())
            throw std::invalid_argument("time_derivative: first order needs 1 state");
        td.c_new = 1.0 / dt;
        td.rest = -history.back() / dt;
    } else {
        if (history.size() < 2)
            throw std::invalid_argument("time_derivative: second order needs 2 states");
        const VectorXd& an = history.back();
        const VectorXd& anm1 = history[history.size() - 2];
        td.c_new = 3.0 / (2.0 * dt);
        td.rest = (-4.0 * an + anm1) / (2.0 * dt);
    }
    return td;
}

Eigen::VectorXd residual(const RomState& state, const VectorXd& adot,
                         const VectorXd& g, const VectorXd& tau_u,
                         const VectorXd& tau_p, const ReducedOperators& ops,
                         const BoundarySpec& bnd, double nu) {
    const int nu_dim = ops.dims.nu, np = ops.dims.np;
    VectorXd r(nu_dim + np);
    r.head(nu_dim) = -ops.mass * adot + nu * ((ops.lap + ops.lap_t) * state.a) -
                     contract_jk(ops.conv, state.a, state.a) +
                     contract_jk(ops.turb_mom_lap, g, state.a) +
                     contract_jk(ops.turb_mom_div, g, state.a) -
                     ops.grad_p * state.b + penalty_contribution(state.a, ops, bnd) +
                     tau_u;
    r.tail(np) = ops.p_lap * state.b + contract_jk(ops.p_conv, state.a, state.a) -
                 contract_jk(ops.turb_p_lap, g, state.a) -
                 contract_jk(ops.turb_p_div, g, state.a) - nu * (ops.p_bnd * state.a) -
                 ops.p_flux + tau_p;
    return r;
}

namespace {

// Residual at an iterate, with the closure maps evaluated there.
VectorXd full_residual(const SolveContext& ctx, const SolverConfig& cfg,
                       const RomState& st, const TimeDerivative& td,
                       const VectorXd& mu_full) {
    const VectorXd g = eval_g(ctx, st.a, mu_full);
    const VectorXd tau = eval_closure(ctx, cfg.mode, st.a, g, mu_full);
    const int nu_dim = ctx.ops->dims.nu;
    return residual(st, td.eval(st.a), g, tau.head(nu_dim),
                    tau.tail(ctx.ops->dims.np), *ctx.ops, ctx.bnd, ctx.nu);
}

MatrixXd jacobian(const SolveContext& ctx, const SolverConfig& cfg, const RomState& st,
                  const TimeDerivative& td, const VectorXd& mu_full, const VectorXd& g,
                  const VectorXd& r0) {
    const ReducedOperators& ops = *ctx.ops;
    const int nu_dim = ops.dims.nu, np = ops.dims.np;
    const int d = nu_dim + np;
    MatrixXd j = MatrixXd::Zero(d, d);

    // Analytic polynomial part with g and tau frozen.
    MatrixXd juu = -td.c_new * ops.mass + ctx.nu * (ops.lap + ops.lap_t) -
                   (contract_k(ops.conv, st.a) + contract_j(ops.conv, st.a)) +
                   contract_j(ops.turb_mom_lap, g) + contract_j(ops.turb_mom_div, g);
    for (std::size_t k = 0; k < ops.bnd_mass.size(); ++k)
        juu -= ctx.bnd.tau * ops.bnd_mass[k];
    j.topLeftCorner(nu_dim, nu_dim) = juu;
    j.topRightCorner(nu_dim, np) = -ops.grad_p;
    j.bottomLeftCorner(np, nu_dim) =
        contract_k(ops.p_conv, st.a) + contract_j(ops.p_conv, st.a) -
        contract_j(ops.turb_p_lap, g) - contract_j(ops.turb_p_div, g) -
        ctx.nu * ops.p_bnd;
    j.bottomRightCorner(np, np) = ops.p_lap;

    // Sensitivity of the residual to g at frozen a.
    MatrixXd dr_dg(d, ops.dims.nnut);
    dr_dg.topRows(nu_dim) =
        contract_k(ops.turb_mom_lap, st.a) + contract_k(ops.turb_mom_div, st.a);
    dr_dg.bottomRows(np) =
        -(contract_k(ops.turb_p_lap, st.a) + contract_k(ops.turb_p_div, st.a));

    if (cfg.mode == ClosureMode::Quadratic) {
        // The quadratic closure is polynomial; differentiate analytically.
        const QuadraticAnsatz& qa = *ctx.ansatz;
        VectorXd z = VectorXd::Zero(d);
        z.head(nu_dim) = st.a;
        MatrixXd dtau = qa.a_tilde + contract_k(qa.b_tilde, z) + contract_j(qa.b_tilde, z);
        j.leftCols(nu_dim) += dtau.leftCols(nu_dim);
    }

    // Network-dependent terms by forward differences in a.
    if (ctx.models != nullptr) {
        const VectorXd tau0 = eval_closure(ctx, cfg.mode, st.a, g, mu_full);
        (void)r0;
        const bool net_tau =
            cfg.mode == ClosureMode::DD || cfg.mode == ClosureMode::DDStar;
        for (int mcol = 0; mcol < nu_dim; ++mcol) {
            const double h = 1e-6 * (1.0 + std::abs(st.a[mcol]));
            VectorXd ap = st.a;
            ap[mcol] += h;
            const VectorXd gp = eval_g(ctx, ap, mu_full);
            j.col(mcol) += dr_dg * ((gp - g) / h);
            if (net_tau) {
                // Correction at the perturbed a with g following the network.
                const VectorXd taup = eval_closure(ctx, cfg.mode, ap, gp, mu_full);
                j.col(mcol) += (taup - tau0) / h;
            }
        }
    }
    return j;
}

}  // namespace

NewtonResult newton_solve(const RomState& init, const SolveContext& ctx,
                          const SolverConfig& cfg, const TimeDerivative& td,
                          const VectorXd& mu_full) {
    if (ctx.ops == nullptr) throw std::invalid_argument("newton_solve: missing operators");
    NewtonResult res;
    res.state = init;

    VectorXd r = full_residual(ctx, cfg, res.state, td, mu_full);
    double rnorm = r.norm();
    const int d = ctx.ops->dims.nu + ctx.ops->dims.np;

    for (int it = 0; it < cfg.max_iter && rnorm > cfg.tol; ++it) {
        const VectorXd g = eval_g(ctx, res.state.a, mu_full);
        MatrixXd jac = jacobian(ctx, cfg, res.state, td, mu_full, g, r);
        Eigen::FullPivLU<MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            std::ostringstream os;
            os << "newton_solve: singular Jacobian at iteration " << it
               << " (residual " << rnorm << ")";
            throw SingularJacobianError(os.str());
        }
        const VectorXd delta = lu.solve(-r);

        // Damped update: up to 8 halvings looking for a residual decrease;
        // the best tried candidate is taken either way.
        double lambda = 1.0;
        RomState best = res.state;
        VectorXd best_r = r;
        double best_norm = rnorm;
        bool decreased = false;
        for (int h = 0; h <= 8; ++h) {
            RomState cand;
            cand.a = res.state.a + lambda * delta.head(ctx.ops->dims.nu);
            cand.b = res.state.b + lambda * delta.tail(ctx.ops->dims.np);
            const VectorXd cr = full_residual(ctx, cfg, cand, td, mu_full);
            const double cn = cr.norm();
            if (cn < best_norm) {
                best = cand;
                best_r = cr;
                best_norm = cn;
            }
            if (cn < rnorm) {
                decreased = true;
                break;
            }
            lambda *= 0.5;
        }
        (void)decreased;
        if (best_norm >= rnorm) {
            // No progress at any step length; report and stop.
            res.iterations = it + 1;
            res.residual_norm = rnorm;
            res.converged = rnorm <= cfg.tol;
            return res;
        }
        res.state = best;
        r = best_r;
        rnorm = best_norm;
        res.iterations = it + 1;
    }
    res.residual_norm = rnorm;
    res.converged = rnorm <= cfg.tol;
    return res;
}

NewtonResult solve_steady(const RomState& init, const SolveContext& ctx,
                          const SolverConfig& cfg) {
    const TimeDerivative td = TimeDerivative::steady(ctx.ops->dims.nu);
    return newton_solve(init, ctx, cfg, td, ctx.mu_phys);
}

RomTrajectory solve_unsteady(const RomState& init, const SolveContext& ctx,
                             const SolverConfig& cfg, double t0) {
    if (cfg.dt <= 0.0) throw std::invalid_argument("solve_unsteady: dt must be > 0");
    RomTrajectory traj;
    traj.mu_phys = ctx.mu_phys;
    traj.cfg = cfg;

    const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    std::vector<VectorXd> history{init.a};

    TrajectoryPoint p0;
    p0.t = t0;
    p0.a = init.a;
    p0.b = init.b;
    traj.points.push_back(p0);

    RomState current = init;
    for (int n = 0; n < steps; ++n) {
        const double tn = t0 + n * cfg.dt;
        VectorXd mu_full(1 + ctx.mu_phys.size());
        mu_full[0] = tn;
        mu_full.tail(ctx.mu_phys.size()) = ctx.mu_phys;

        // First step of a second-order run falls back to first order.
        const TimeScheme scheme =
            (cfg.scheme == TimeScheme::SecondOrder && history.size() >= 2)
                ? TimeScheme::SecondOrder
                : TimeScheme::FirstOrder;
        const TimeDerivative td = time_derivative(history, scheme, cfg.dt);

        NewtonResult r = newton_solve(current, ctx, cfg, td, mu_full);
        current = r.state;  // best iterate continues the march even if flagged

        TrajectoryPoint pt;
        pt.t = tn + cfg.dt;
        pt.a = current.a;
        pt.b = current.b;
        pt.iterations = r.iterations;
        pt.residual_norm = r.residual_norm;
        pt.converged = r.converged;
        traj.points.push_back(pt);

        history.push_back(current.a);
        if (history.size() > 2) history.erase(history.begin());
    }
    return traj;
}

void save_trajectory(const RomTrajectory& traj, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json m;
    m["format_version"] = "1";
    m["mu_phys"] = std::vector<double>(traj.mu_phys.data(),
                                       traj.mu_phys.data() + traj.mu_phys.size());
    m["config"] = {{"tol", traj.cfg.tol},
                   {"max_iter", traj.cfg.max_iter},
                   {"scheme", traj.cfg.scheme == TimeScheme::SecondOrder ? 2 : 1},
                   {"dt", traj.cfg.dt},
                   {"horizon", traj.cfg.horizon},
                   {"mode", closure_mode_name(traj.cfg.mode)}};
    std::vector<int> iters;
    std::vector<double> resids;
    std::vector<bool> flags;
    for (const auto& p : traj.points) {
        iters.push_back(p.iterations);
        resids.push_back(p.residual_norm);
        flags.push_back(p.converged);
    }
    m["iterations"] = iters;
    m["residuals"] = resids;
    m["converged"] = flags;
    m["point_count"] = traj.points.size();
    m["dims"] = {{"nu", traj.points.empty() ? 0 : traj.points[0].a.size()},
                 {"np", traj.points.empty() ? 0 : traj.points[0].b.size()}};
    io::write_file(dir / "manifest.json", m.dump(2) + "\n");

    std::string buf;
    for (const auto& p : traj.points) {
        io::append_f64_le(buf, &p.t, 1);
        io::append_f64_le(buf, p.a.data(), p.a.size());
        io::append_f64_le(buf, p.b.data(), p.b.size());
    }
    io::write_file(dir / "trajectory.bin", buf);
}

RomTrajectory load_trajectory(const std::filesystem::path& dir) {
    const json m = json::parse(io::read_file(dir / "manifest.json"));
    RomTrajectory traj;
    const auto mu = m.at("mu_phys").get<std::vector<double>>();
    traj.mu_phys = Eigen::Map<const VectorXd>(mu.data(), mu.size());
    traj.cfg.tol = m.at("config").at("tol").get<double>();
    traj.cfg.max_iter = m.at("config").at("max_iter").get<int>();
    traj.cfg.scheme = m.at("config").at("scheme").get<int>() == 2
                          ? TimeScheme::SecondOrder
                          : TimeScheme::FirstOrder;
    traj.cfg.dt = m.at("config").at("dt").get<double>();
    traj.cfg.horizon = m.at("config").at("horizon").get<double>();
    traj.cfg.mode = closure_mode_from_name(m.at("config").at("mode").get<std::string>());

    const auto iters = m.at("iterations").get<std::vector<int>>();
    const auto resids = m.at("residuals").get<std::vector<double>>();
    const auto flags = m.at("converged").get<std::vector<bool>>();
    const std::size_t count = m.at("point_count").get<std::size_t>();
    const int nu_dim = m.at("dims").at("nu").get<int>();
    const int np = m.at("dims").at("np").get<int>();

    const std::string buf = io::read_file(dir / "trajectory.bin");
    std::size_t off = 0;
    for (std::size_t i = 0; i < count; ++i) {
        TrajectoryPoint p;
        p.t = io::read_f64_le(buf, off, 1)[0];
        std::vector<double> a = io::read_f64_le(buf, off, nu_dim);
        std::vector<double> b = io::read_f64_le(buf, off, np);
        p.a = Eigen::Map<const VectorXd>(a.data(), a.size());
        p.b = Eigen::Map<const VectorXd>(b.data(), b.size());
        p.iterations = iters.at(i);
        p.residual_norm = resids.at(i);
        p.converged = flags.at(i);
        traj.points.push_back(std::move(p));
    }
    return traj;
}

}  // namespace rom
