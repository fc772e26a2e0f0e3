#include "rom/fom.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rom {

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

int SnapshotSet::frames_per_param(int param) const {
    int n = 0;
    for (int p : frame_param)
        if (p == param) ++n;
    return n;
}

std::vector<double> compute_eddy_viscosity(const std::vector<double>& u,
                                           const GridSpec& grid,
                                           const FomParams& prm) {
    const int n = grid.cells();
    if (static_cast<int>(u.size()) != 2 * n)
        throw std::invalid_argument("compute_eddy_viscosity: velocity size mismatch");
    Stencils st(grid);
    const FieldBc bcx = prm.fully_periodic ? FieldBc{YBc::Periodic}
                                           : FieldBc{YBc::Wall, 0.0, prm.lid};
    const FieldBc bcy = prm.fully_periodic ? FieldBc{YBc::Periodic}
                                           : FieldBc{YBc::Wall, 0.0, 0.0};
    ExtField ux(grid, u.data(), bcx);
    ExtField uy(grid, u.data() + n, bcy);
    std::vector<double> dxux(n), dyux(n), dxuy(n), dyuy(n);
    st.ddx(ux, dxux.data());
    st.ddy(ux, dyux.data());
    st.ddx(uy, dxuy.data());
    st.ddy(uy, dyuy.data());

    std::vector<double> nut(n);
    for (int c = 0; c < n; ++c) {
        const double gxx = 2.0 * dxux[c];
        const double gyy = 2.0 * dyuy[c];
        const double gxy = dyux[c] + dxuy[c];
        const double norm = std::sqrt(gxx * gxx + 2.0 * gxy * gxy + gyy * gyy);
        nut[c] = prm.cs * prm.cs * grid.cell_areas[c] * norm;
    }
    return nut;
}

FomSolver::FomSolver(const GridSpec& grid, const FomParams& prm, double dt)
    : grid_(grid), prm_(prm), dt_(dt), st_(grid_) {
    if (dt <= 0.0) throw std::invalid_argument("FomSolver: dt must be > 0");
    st_ = Stencils(grid_);

    const YBc wall = prm_.fully_periodic ? YBc::Periodic : YBc::Wall;
    const YBc scal = prm_.fully_periodic ? YBc::Periodic : YBc::ZeroGradient;

    // Momentum: (I - dt*nu*L) with homogeneous-wall Laplacian; wall data
    // enters through the affine source terms.
    Eigen::SparseMatrix<double> lap_u = st_.laplacian_matrix(wall);
    Eigen::SparseMatrix<double> eye(grid_.cells(), grid_.cells());
    eye.setIdentity();
    mom_mat_ = eye - (dt_ * prm_.nu) * lap_u;
    mom_src_x_ = st_.laplacian_source(bc_ux());
    mom_src_y_ = st_.laplacian_source(bc_uy());

    ppe_mat_ = st_.laplacian_matrix(scal);
    // Pin the reference pressure at cell 0.
    for (int k = 0; k < ppe_mat_.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(ppe_mat_, k); it; ++it) {
            if (it.row() == 0) it.valueRef() = (it.col() == 0) ? 1.0 : 0.0;
        }
    }
    ppe_mat_.prune(0.0);
    ppe_mat_.makeCompressed();
    mom_mat_.makeCompressed();

    mom_lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    mom_lu_->compute(mom_mat_);
    if (mom_lu_->info() != Eigen::Success)
        throw LinearSolveError("FomSolver: momentum matrix factorization failed");
    ppe_lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    ppe_lu_->compute(ppe_mat_);
    if (ppe_lu_->info() != Eigen::Success)
        throw LinearSolveError("FomSolver: pressure matrix factorization failed");
}

FieldBc FomSolver::bc_ux() const {
    return prm_.fully_periodic ? FieldBc{YBc::Periodic}
                               : FieldBc{YBc::Wall, 0.0, prm_.lid};
}
FieldBc FomSolver::bc_uy() const {
    return prm_.fully_periodic ? FieldBc{YBc::Periodic}
                               : FieldBc{YBc::Wall, 0.0, 0.0};
}
FieldBc FomSolver::bc_scalar() const {
    return prm_.fully_periodic ? FieldBc{YBc::Periodic} : FieldBc{YBc::ZeroGradient};
}

double FomSolver::cfl_limit(const FieldFrame& state) const {
    const int n = grid_.cells();
    double umax = 0.0;
    for (int c = 0; c < n; ++c) {
        umax = std::max(umax, std::abs(state.u[c]));
        umax = std::max(umax, std::abs(state.u[n + c]));
    }
    umax = std::max(umax, std::abs(prm_.lid));
    double hmin = std::sqrt(*std::min_element(grid_.cell_areas.begin(),
                                              grid_.cell_areas.end()));
    double nut_max = 0.0;
    for (double v : state.nut) nut_max = std::max(nut_max, v);

    const double dt_conv = hmin / std::max(umax, 1e-12);
    const double dt_eddy = hmin * hmin / std::max(4.0 * nut_max, 1e-12);
    return prm_.cfl * std::min(dt_conv, dt_eddy);
}

std::vector<double> FomSolver::momentum_rhs(const FieldFrame& state, int comp) const {
    const int n = grid_.cells();
    ExtField ux(grid_, state.u.data(), bc_ux());
    ExtField uy(grid_, state.u.data() + n, bc_uy());
    const ExtField& um = (comp == 0) ? ux : uy;

    // Convection in conservative form: d/dx(um*ux) + d/dy(um*uy). Products
    // are formed in extended space so the lid value drives the top row.
    ExtField prodx = um, prody = um;
    for (int j = -1; j <= grid_.ny; ++j) {
        for (int i = -1; i <= grid_.nx; ++i) {
            prodx.at(i, j) = um.at(i, j) * ux.at(i, j);
            prody.at(i, j) = um.at(i, j) * uy.at(i, j);
        }
    }
    std::vector<double> conv(n), tmp(n);
    st_.ddx(prodx, conv.data());
    st_.ddy(prody, tmp.data());
    for (int c = 0; c < n; ++c) conv[c] += tmp[c];

    // Pressure gradient from the previous Poisson solve.
    ExtField pext(grid_, state.p.data(), bc_scalar());
    std::vector<double> gradp(n);
    if (comp == 0)
        st_.ddx(pext, gradp.data());
    else
        st_.ddy(pext, gradp.data());

    // Explicit diffusion: the eddy part of div(nu_tot*(grad u + grad u^T)),
    // expanded as nut*lap(um) + grad(nut).grad(um)
    //           + nu_tot*d_m(div u) + grad(nut).d_m(u).
    ExtField nutext(grid_, state.nut.data(), bc_scalar());
    std::vector<double> lapm(n), dxnut(n), dynut(n);
    st_.laplacian(um, lapm.data());
    st_.ddx(nutext, dxnut.data());
    st_.ddy(nutext, dynut.data());

    std::vector<double> dxum(n), dyum(n), dxux(n), dyuy(n), dmux(n), dmuy(n);
    st_.ddx(um, dxum.data());
    st_.ddy(um, dyum.data());
    st_.ddx(ux, dxux.data());
    st_.ddy(uy, dyuy.data());
    std::vector<double> divu(n);
    for (int c = 0; c < n; ++c) divu[c] = dxux[c] + dyuy[c];
    ExtField divext(grid_, divu.data(), FieldBc{bc_scalar().kind});
    std::vector<double> dmdiv(n);
    if (comp == 0)
        st_.ddx(divext, dmdiv.data());
    else
        st_.ddy(divext, dmdiv.data());
    if (comp == 0) {
        st_.ddx(ux, dmux.data());
        st_.ddx(uy, dmuy.data());
    } else {
        st_.ddy(ux, dmux.data());
        st_.ddy(uy, dmuy.data());
    }

    std::vector<double> rhs(n);
    for (int c = 0; c < n; ++c) {
        const double nut = state.nut[c];
        const double diff = nut * lapm[c] + dxnut[c] * dxum[c] + dynut[c] * dyum[c] +
                            (prm_.nu + nut) * dmdiv[c] +
                            dxnut[c] * dmux[c] + dynut[c] * dmuy[c];
        rhs[c] = -conv[c] - gradp[c] + diff;
    }
    return rhs;
}

FieldFrame FomSolver::step(const FieldFrame& state) const {
    const int n = grid_.cells();
    if (static_cast<int>(state.u.size()) != 2 * n)
        throw std::invalid_argument("step: state size mismatch");
    const double limit = cfl_limit(state);
    if (dt_ > limit) {
        std::ostringstream os;
        os << "step: dt=" << dt_ << " exceeds CFL bound " << limit << " at t=" << state.t;
        throw CflError(os.str());
    }

    FieldFrame next;
    next.t = state.t + dt_;
    next.mu = state.mu;
    next.u.resize(2 * n);

    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> rhs = momentum_rhs(state, comp);
        const std::vector<double>& src = (comp == 0) ? mom_src_x_ : mom_src_y_;
        Eigen::VectorXd b(n);
        for (int c = 0; c < n; ++c)
            b[c] = state.u[comp * n + c] + dt_ * rhs[c] + dt_ * prm_.nu * src[c];
        Eigen::VectorXd x = mom_lu_->solve(b);
        const double resid = (mom_mat_ * x - b).norm();
        if (resid > 1e-10 * std::max(1.0, b.norm())) {
            std::ostringstream os;
            os << "step: momentum solve residual " << resid;
            throw LinearSolveError(os.str());
        }
        for (int c = 0; c < n; ++c) next.u[comp * n + c] = x[c];
    }

    if (max_abs(next.u) > prm_.divergence_cap) {
        std::ostringstream os;
        os << "step: velocity norm " << max_abs(next.u) << " exceeds divergence cap at t="
           << next.t;
        throw DivergedError(os.str());
    }

    next.nut = compute_eddy_viscosity(next.u, grid_, prm_);
    next.p = pressure_poisson(next.u, next.nut);
    if (max_abs(next.p) > prm_.divergence_cap)
        throw DivergedError("step: pressure exceeds divergence cap");
    return next;
}

std::vector<double> FomSolver::pressure_rhs(const std::vector<double>& u,
                                            const std::vector<double>& nut) const {
    const int n = grid_.cells();
    if (static_cast<int>(u.size()) != 2 * n || static_cast<int>(nut.size()) != n)
        throw std::invalid_argument("pressure_rhs: size mismatch");
    ExtField ux(grid_, u.data(), bc_ux());
    ExtField uy(grid_, u.data() + n, bc_uy());

    // div(div(T)) computed as outer-div of the inner-div vector; derived
    // fields are extended with zero gradient.
    auto div_div = [&](const std::vector<double>& txx, const std::vector<double>& txy,
                       const std::vector<double>& tyx, const std::vector<double>& tyy) {
        std::vector<double> vx(n), vy(n), tmp(n);
        ExtField e(grid_, txx.data(), FieldBc{bc_scalar().kind});
        st_.ddx(e, vx.data());
        e.assign(grid_, txy.data(), FieldBc{bc_scalar().kind});
        st_.ddy(e, tmp.data());
        for (int c = 0; c < n; ++c) vx[c] += tmp[c];
        e.assign(grid_, tyx.data(), FieldBc{bc_scalar().kind});
        st_.ddx(e, vy.data());
        e.assign(grid_, tyy.data(), FieldBc{bc_scalar().kind});
        st_.ddy(e, tmp.data());
        for (int c = 0; c < n; ++c) vy[c] += tmp[c];

        std::vector<double> out(n);
        e.assign(grid_, vx.data(), FieldBc{bc_scalar().kind});
        st_.ddx(e, out.data());
        e.assign(grid_, vy.data(), FieldBc{bc_scalar().kind});
        st_.ddy(e, tmp.data());
        for (int c = 0; c < n; ++c) out[c] += tmp[c];
        return out;
    };

    // Convective tensor u (x) u, formed from the extended velocity so the
    // lid value is seen; interior values only are kept (div_div re-extends).
    std::vector<double> uuxx(n), uuxy(n), uuyy(n);
    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i < grid_.nx; ++i) {
            const int c = grid_.idx(i, j);
            uuxx[c] = ux.at(i, j) * ux.at(i, j);
            uuxy[c] = ux.at(i, j) * uy.at(i, j);
            uuyy[c] = uy.at(i, j) * uy.at(i, j);
        }
    }
    std::vector<double> conv = div_div(uuxx, uuxy, uuxy, uuyy);

    std::vector<double> dxux(n), dyux(n), dxuy(n), dyuy(n);
    st_.ddx(ux, dxux.data());
    st_.ddy(ux, dyux.data());
    st_.ddx(uy, dxuy.data());
    st_.ddy(uy, dyuy.data());
    std::vector<double> sxx(n), sxy(n), syy(n);
    for (int c = 0; c < n; ++c) {
        sxx[c] = nut[c] * 2.0 * dxux[c];
        sxy[c] = nut[c] * (dyux[c] + dxuy[c]);
        syy[c] = nut[c] * 2.0 * dyuy[c];
    }
    std::vector<double> turb = div_div(sxx, sxy, sxy, syy);

    std::vector<double> rhs(n);
    for (int c = 0; c < n; ++c) rhs[c] = -conv[c] + turb[c];
    rhs[0] = 0.0;  // pinned reference cell
    return rhs;
}

std::vector<double> FomSolver::pressure_poisson(const std::vector<double>& u,
                                                const std::vector<double>& nut) const {
    const int n = grid_.cells();
    std::vector<double> rhs = pressure_rhs(u, nut);
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::VectorXd x = ppe_lu_->solve(b);
    const double resid = (ppe_mat_ * x - b).norm();
    if (resid > 1e-9 * std::max(1.0, b.norm())) {
        std::ostringstream os;
        os << "pressure_poisson: solve residual " << resid;
        throw LinearSolveError(os.str());
    }
    return std::vector<double>(x.data(), x.data() + n);
}

FieldFrame FomSolver::initial_state(const std::vector<double>& mu,
                                    double perturb_amplitude, int perturb_modes,
                                    unsigned long long seed) const {
    const int n = grid_.cells();
    FieldFrame f;
    f.t = 0.0;
    f.mu = mu;
    f.u.assign(2 * n, 0.0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> amp(perturb_modes), phase(perturb_modes), ampy(perturb_modes),
        phasey(perturb_modes);
    for (int k = 0; k < perturb_modes; ++k) {
        amp[k] = perturb_amplitude * (0.5 + 0.5 * unif(rng));
        phase[k] = 2.0 * kPi * unif(rng);
        ampy[k] = perturb_amplitude * (0.5 + 0.5 * unif(rng));
        phasey[k] = 2.0 * kPi * unif(rng);
    }

    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i < grid_.nx; ++i) {
            const int c = grid_.idx(i, j);
            const double x = grid_.x_center(i);
            const double zeta = grid_.zeta_center(j);
            const double yfrac = zeta / grid_.ly;
            double uxv = prm_.fully_periodic ? 0.0 : prm_.lid * yfrac;
            double uyv = 0.0;
            const double wall = std::sin(kPi * yfrac);  // vanishes at both walls
            for (int k = 0; k < perturb_modes; ++k) {
                const double cx = std::cos(2.0 * kPi * (k + 1) * x / grid_.lx + phase[k]);
                const double cy = std::cos(2.0 * kPi * (k + 1) * x / grid_.lx + phasey[k]);
                uxv += amp[k] * cx * wall;
                uyv += ampy[k] * cy * wall;
            }
            f.u[c] = uxv;
            f.u[n + c] = uyv;
        }
    }
    f.nut = compute_eddy_viscosity(f.u, grid_, prm_);
    f.p = pressure_poisson(f.u, f.nut);
    return f;
}

CaseConfig case_config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CaseConfig c;
    c.kind = j.at("case").get<std::string>();
    c.nx = j.value("nx", c.nx);
    c.ny = j.value("ny", c.ny);
    c.lx = j.value("lx", c.lx);
    c.ly = j.value("ly", c.ly);
    c.nu = j.value("nu", c.nu);
    if (j.contains("nus")) c.nus = j["nus"].get<std::vector<double>>();
    if (j.contains("geo_params"))
        c.geo_params = j["geo_params"].get<std::vector<std::vector<double>>>();
    c.lid = j.value("lid", c.lid);
    c.cs = j.value("cs", c.cs);
    c.dt = j.value("dt", c.dt);
    c.stride = j.value("stride", c.stride);
    c.frames = j.value("frames", c.frames);
    c.steady_tol = j.value("steady_tol", c.steady_tol);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.intermediate_stride = j.value("intermediate_stride", c.intermediate_stride);
    c.perturb_amplitude = j.value("perturb_amplitude", c.perturb_amplitude);
    c.perturb_modes = j.value("perturb_modes", c.perturb_modes);
    c.seed = j.value("seed", c.seed);
    return c;
}

SnapshotSet run_case(const CaseConfig& cfg) {
    SnapshotSet set;
    set.grid = build_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly);
    set.stride = cfg.stride;
    set.seed = cfg.seed;

    if (cfg.kind == "unsteady-channel") {
        if (cfg.nus.empty()) throw std::invalid_argument("run_case: empty parameter list");
        set.kind = SnapshotKind::Unsteady;
        for (double nu : cfg.nus) set.params.push_back({nu});
        for (std::size_t ip = 0; ip < cfg.nus.size(); ++ip) {
            FomParams prm;
            prm.nu = cfg.nus[ip];
            prm.cs = cfg.cs;
            prm.lid = cfg.lid;
            FomSolver solver(set.grid, prm, cfg.dt);
            FieldFrame state = solver.initial_state(set.params[ip], cfg.perturb_amplitude,
                                                    cfg.perturb_modes, cfg.seed);
            set.frames.push_back(state);
            set.frame_param.push_back(static_cast<int>(ip));
            for (int f = 1; f < cfg.frames; ++f) {
                for (int s = 0; s < cfg.stride; ++s) state = solver.step(state);
                set.frames.push_back(state);
                set.frame_param.push_back(static_cast<int>(ip));
            }
        }
    } else if (cfg.kind == "steady-deformed") {
        if (cfg.geo_params.empty())
            throw std::invalid_argument("run_case: empty parameter list");
        set.kind = SnapshotKind::SteadyWithIntermediates;
        set.params = cfg.geo_params;
        set.stride = cfg.intermediate_stride;
        for (std::size_t ip = 0; ip < cfg.geo_params.size(); ++ip) {
            GridSpec grid = build_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly, cfg.geo_params[ip]);
            FomParams prm;
            prm.nu = cfg.nu;
            prm.cs = cfg.cs;
            prm.lid = cfg.lid;
            FomSolver solver(grid, prm, cfg.dt);
            FieldFrame state = solver.initial_state(cfg.geo_params[ip], 0.0, 0, cfg.seed);
            set.frames.push_back(state);
            set.frame_param.push_back(static_cast<int>(ip));
            bool converged = false;
            for (int s = 1; s <= cfg.max_steps; ++s) {
                FieldFrame next = solver.step(state);
                double dn = 0.0, base = 0.0;
                for (std::size_t c = 0; c < next.u.size(); ++c) {
                    const double d = next.u[c] - state.u[c];
                    dn += d * d;
                    base += state.u[c] * state.u[c];
                }
                dn = std::sqrt(dn);
                base = std::sqrt(base);
                state = next;
                const bool stop = base > 0.0 && dn / base <= cfg.steady_tol;
                if (s % cfg.intermediate_stride == 0 && !stop) {
                    set.frames.push_back(state);
                    set.frame_param.push_back(static_cast<int>(ip));
                }
                if (stop) {
                    set.frames.push_back(state);  // converged state closes the group
                    set.frame_param.push_back(static_cast<int>(ip));
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                std::ostringstream os;
                os << "run_case: steady iteration did not reach tol=" << cfg.steady_tol
                   << " within " << cfg.max_steps << " steps (|u|=" << l2(state.u) << ")";
                throw std::runtime_error(os.str());
            }
        }
    } else {
        throw std::invalid_argument("run_case: unknown case kind '" + cfg.kind + "'");
    }
    return set;
}

}  // namespace rom
