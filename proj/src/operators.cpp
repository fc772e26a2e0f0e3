#include "rom/operators.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rom/io.hpp"
#include "rom/stencils.hpp"

namespace rom {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

struct UModeDeriv {
    VectorXd vx, vy;
    VectorXd dx_vx, dy_vx, dx_vy, dy_vy;
    VectorXd lap_x, lap_y;
    VectorXd div, dx_div, dy_div;
    VectorXd curl;
};

struct ScalarModeDeriv {
    VectorXd v, dx, dy;
};

VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), v.size());
}

// Natural extension for mode data: zero-gradient walls.
const FieldBc kModeBc{YBc::ZeroGradient, 0.0, 0.0};

UModeDeriv u_mode_derivatives(const Stencils& st, const GridSpec& g,
                              const Eigen::VectorXd& mode) {
    const int n = g.cells();
    UModeDeriv d;
    d.vx = mode.head(n);
    d.vy = mode.tail(n);
    ExtField ex(g, d.vx.data(), kModeBc);
    ExtField ey(g, d.vy.data(), kModeBc);
    std::vector<double> tmp(n);
    auto grab = [&](auto&& f, const ExtField& e) {
        f(e, tmp.data());
        return to_vec(tmp);
    };
    d.dx_vx = grab([&](const ExtField& e, double* o) { st.ddx(e, o); }, ex);
    d.dy_vx = grab([&](const ExtField& e, double* o) { st.ddy(e, o); }, ex);
    d.dx_vy = grab([&](const ExtField& e, double* o) { st.ddx(e, o); }, ey);
    d.dy_vy = grab([&](const ExtField& e, double* o) { st.ddy(e, o); }, ey);
    d.lap_x = grab([&](const ExtField& e, double* o) { st.laplacian(e, o); }, ex);
    d.lap_y = grab([&](const ExtField& e, double* o) { st.laplacian(e, o); }, ey);
    d.div = d.dx_vx + d.dy_vy;
    ExtField ediv(g, d.div.data(), kModeBc);
    d.dx_div = grab([&](const ExtField& e, double* o) { st.ddx(e, o); }, ediv);
    d.dy_div = grab([&](const ExtField& e, double* o) { st.ddy(e, o); }, ediv);
    d.curl = d.dx_vy - d.dy_vx;
    return d;
}

ScalarModeDeriv scalar_mode_derivatives(const Stencils& st, const GridSpec& g,
                                        const Eigen::VectorXd& mode) {
    const int n = g.cells();
    ScalarModeDeriv d;
    d.v = mode;
    ExtField e(g, mode.data(), kModeBc);
    std::vector<double> tmp(n);
    st.ddx(e, tmp.data());
    d.dx = to_vec(tmp);
    st.ddy(e, tmp.data());
    d.dy = to_vec(tmp);
    return d;
}

double wdot(const VectorXd& a, const VectorXd& b, const std::vector<double>& w) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < a.size(); ++c) s += a[c] * w[c] * b[c];
    return s;
}

struct BoundaryGeom {
    // Per boundary cell: column index, edge length, outward normal.
    std::vector<int> cell;
    std::vector<double> len, nx, ny;
};

BoundaryGeom boundary_geometry(const GridSpec& g, int boundary) {
    BoundaryGeom bg;
    std::vector<double> h(g.nx + 1);
    for (int i = 0; i <= g.nx; ++i)
        h[i] = deformation_scale(g.deformation, g.lx, i * g.dxi);
    for (int i = 0; i < g.nx; ++i) {
        if (boundary == 0) {  // top lid: mapped curve y' = ly * (1 + m(x))
            const double dy = g.ly * (h[i + 1] - h[i]);
            const double len = std::hypot(g.dxi, dy);
            bg.cell.push_back(g.idx(i, g.ny - 1));
            bg.len.push_back(len);
            bg.nx.push_back(-dy / len);
            bg.ny.push_back(g.dxi / len);
        } else {  // bottom wall: flat
            bg.cell.push_back(g.idx(i, 0));
            bg.len.push_back(g.dxi);
            bg.nx.push_back(0.0);
            bg.ny.push_back(-1.0);
        }
    }
    return bg;
}

}  // namespace

ReducedOperators assemble(const PodBasis& ubasis, const PodBasis& pbasis,
                          const PodBasis& nutbasis, const GridSpec& grid,
                          const BoundarySpec& bnd, const OpDims& dims) {
    const int n = grid.cells();
    if (bnd.tau <= 0.0) throw std::invalid_argument("assemble: tau must be > 0");
    if (dims.nu > ubasis.rank() || dims.np > pbasis.rank() || dims.nnut > nutbasis.rank())
        throw std::invalid_argument("assemble: dims exceed basis ranks");
    if (ubasis.modes.rows() != 2 * n || pbasis.modes.rows() != n ||
        nutbasis.modes.rows() != n)
        throw std::invalid_argument("assemble: basis/grid dof mismatch");

    Stencils st(grid);
    const std::vector<double>& w = grid.cell_areas;

    std::vector<UModeDeriv> um;
    um.reserve(dims.nu);
    for (int i = 0; i < dims.nu; ++i)
        um.push_back(u_mode_derivatives(st, grid, ubasis.modes.col(i)));
    std::vector<ScalarModeDeriv> pm;
    pm.reserve(dims.np);
    for (int i = 0; i < dims.np; ++i)
        pm.push_back(scalar_mode_derivatives(st, grid, pbasis.modes.col(i)));
    std::vector<ScalarModeDeriv> em;
    em.reserve(dims.nnut);
    for (int i = 0; i < dims.nnut; ++i)
        em.push_back(scalar_mode_derivatives(st, grid, nutbasis.modes.col(i)));

    ReducedOperators ops;
    ops.dims = dims;
    ops.tau = bnd.tau;

    ops.mass.resize(dims.nu, dims.nu);
    ops.lap.resize(dims.nu, dims.nu);
    ops.lap_t.resize(dims.nu, dims.nu);
    for (int i = 0; i < dims.nu; ++i) {
        for (int j = 0; j < dims.nu; ++j) {
            ops.mass(i, j) = wdot(um[i].vx, um[j].vx, w) + wdot(um[i].vy, um[j].vy, w);
            ops.lap(i, j) = wdot(um[i].vx, um[j].lap_x, w) + wdot(um[i].vy, um[j].lap_y, w);
            ops.lap_t(i, j) =
                wdot(um[i].vx, um[j].dx_div, w) + wdot(um[i].vy, um[j].dy_div, w);
        }
    }

    ops.grad_p.resize(dims.nu, dims.np);
    for (int i = 0; i < dims.nu; ++i)
        for (int j = 0; j < dims.np; ++j)
            ops.grad_p(i, j) = wdot(um[i].vx, pm[j].dx, w) + wdot(um[i].vy, pm[j].dy, w);

    ops.p_lap.resize(dims.np, dims.np);
    for (int i = 0; i < dims.np; ++i)
        for (int j = 0; j < dims.np; ++j)
            ops.p_lap(i, j) = wdot(pm[i].dx, pm[j].dx, w) + wdot(pm[i].dy, pm[j].dy, w);

    // Convective fields div(phi_j (x) phi_k) shared by the momentum and
    // pressure tensors; products are derived fields (zero-gradient ghosts).
    ops.conv = Tensor3(dims.nu, dims.nu, dims.nu);
    ops.p_conv = Tensor3(dims.np, dims.nu, dims.nu);
    {
        std::vector<double> px(n), py(n), tmp(n);
        VectorXd cx(n), cy(n);
        for (int j = 0; j < dims.nu; ++j) {
            for (int k = 0; k < dims.nu; ++k) {
                for (int c = 0; c < n; ++c) {
                    px[c] = um[j].vx[c] * um[k].vx[c];
                    py[c] = um[j].vx[c] * um[k].vy[c];
                }
                ExtField ex(grid, px.data(), kModeBc), ey(grid, py.data(), kModeBc);
                st.ddx(ex, tmp.data());
                cx = to_vec(tmp);
                st.ddy(ey, tmp.data());
                cx += to_vec(tmp);
                for (int c = 0; c < n; ++c) {
                    px[c] = um[j].vy[c] * um[k].vx[c];
                    py[c] = um[j].vy[c] * um[k].vy[c];
                }
                ex.assign(grid, px.data(), kModeBc);
                ey.assign(grid, py.data(), kModeBc);
                st.ddx(ex, tmp.data());
                cy = to_vec(tmp);
                st.ddy(ey, tmp.data());
                cy += to_vec(tmp);

                for (int i = 0; i < dims.nu; ++i)
                    ops.conv(i, j, k) = wdot(um[i].vx, cx, w) + wdot(um[i].vy, cy, w);
                for (int i = 0; i < dims.np; ++i)
                    ops.p_conv(i, j, k) = wdot(pm[i].dx, cx, w) + wdot(pm[i].dy, cy, w);
            }
        }
    }

    ops.turb_mom_lap = Tensor3(dims.nu, dims.nnut, dims.nu);
    ops.turb_mom_div = Tensor3(dims.nu, dims.nnut, dims.nu);
    ops.turb_p_lap = Tensor3(dims.np, dims.nnut, dims.nu);
    ops.turb_p_div = Tensor3(dims.np, dims.nnut, dims.nu);
    {
        std::vector<double> f1(n), f2(n), tmp(n);
        VectorXd tx(n), ty(n), ex_lap(n), ey_lap(n);
        for (int j = 0; j < dims.nnut; ++j) {
            for (int k = 0; k < dims.nu; ++k) {
                // eta_j * vector laplacian of phi_k
                for (int c = 0; c < n; ++c) {
                    ex_lap[c] = em[j].v[c] * um[k].lap_x[c];
                    ey_lap[c] = em[j].v[c] * um[k].lap_y[c];
                }
                // div(eta_j (grad phi_k)^T):
                //   x: ddx(eta*dx_vx) + ddy(eta*dx_vy)
                //   y: ddx(eta*dy_vx) + ddy(eta*dy_vy)
                for (int c = 0; c < n; ++c) {
                    f1[c] = em[j].v[c] * um[k].dx_vx[c];
                    f2[c] = em[j].v[c] * um[k].dx_vy[c];
                }
                ExtField e1(grid, f1.data(), kModeBc), e2(grid, f2.data(), kModeBc);
                st.ddx(e1, tmp.data());
                tx = to_vec(tmp);
                st.ddy(e2, tmp.data());
                tx += to_vec(tmp);
                for (int c = 0; c < n; ++c) {
                    f1[c] = em[j].v[c] * um[k].dy_vx[c];
                    f2[c] = em[j].v[c] * um[k].dy_vy[c];
                }
                e1.assign(grid, f1.data(), kModeBc);
                e2.assign(grid, f2.data(), kModeBc);
                st.ddx(e1, tmp.data());
                ty = to_vec(tmp);
                st.ddy(e2, tmp.data());
                ty += to_vec(tmp);

                for (int i = 0; i < dims.nu; ++i) {
                    ops.turb_mom_lap(i, j, k) =
                        wdot(um[i].vx, ex_lap, w) + wdot(um[i].vy, ey_lap, w);
                    ops.turb_mom_div(i, j, k) =
                        wdot(um[i].vx, tx, w) + wdot(um[i].vy, ty, w);
                }
                for (int i = 0; i < dims.np; ++i) {
                    ops.turb_p_lap(i, j, k) =
                        wdot(pm[i].dx, ex_lap, w) + wdot(pm[i].dy, ey_lap, w);
                    ops.turb_p_div(i, j, k) =
                        wdot(pm[i].dx, tx, w) + wdot(pm[i].dy, ty, w);
                }
            }
        }
    }

    // Boundary operators. The pressure boundary term integrates over the
    // whole physical boundary (top + bottom); the penalty operators only
    // over the configured Dirichlet boundaries.
    ops.p_bnd = MatrixXd::Zero(dims.np, dims.nu);
    for (int boundary : {0, 1}) {
        const BoundaryGeom bg = boundary_geometry(grid, boundary);
        for (std::size_t e = 0; e < bg.cell.size(); ++e) {
            const int c = bg.cell[e];
            for (int i = 0; i < dims.np; ++i) {
                const double ncross = bg.nx[e] * pm[i].dy[c] - bg.ny[e] * pm[i].dx[c];
                for (int j = 0; j < dims.nu; ++j)
                    ops.p_bnd(i, j) += ncross * um[j].curl[c] * bg.len[e];
            }
        }
    }
    // Boundary flux vector: the full-order flux tensor is not part of this
    // formulation; assembled as zero and flagged in the manifest.
    ops.p_flux = VectorXd::Zero(dims.np);

    for (const auto& entry : bnd.entries) {
        const BoundaryGeom bg = boundary_geometry(grid, entry.boundary);
        MatrixXd e = MatrixXd::Zero(dims.nu, dims.nu);
        VectorXd d = VectorXd::Zero(dims.nu);
        for (std::size_t q = 0; q < bg.cell.size(); ++q) {
            const int c = bg.cell[q];
            for (int i = 0; i < dims.nu; ++i) {
                d[i] += um[i].vx[c] * bg.len[q];
                for (int j = 0; j < dims.nu; ++j)
                    e(i, j) += (um[i].vx[c] * um[j].vx[c] + um[i].vy[c] * um[j].vy[c]) *
                               bg.len[q];
            }
        }
        ops.bnd_mass.push_back(std::move(e));
        ops.bnd_trace.push_back(std::move(d));
    }
    return ops;
}

ReducedOperators assemble_for_parameter(const PodBasis& ubasis, const PodBasis& pbasis,
                                        const PodBasis& nutbasis,
                                        const GridSpec& base_grid,
                                        const std::vector<double>& mu_g,
                                        const BoundarySpec& bnd, const OpDims& dims) {
    const GridSpec grid =
        build_grid(base_grid.nx, base_grid.ny, base_grid.lx, base_grid.ly, mu_g);
    ReducedOperators ops = assemble(ubasis, pbasis, nutbasis, grid, bnd, dims);
    ops.mu = mu_g;
    return ops;
}

Eigen::VectorXd penalty_contribution(const Eigen::VectorXd& a,
                                     const ReducedOperators& ops,
                                     const BoundarySpec& bnd) {
    if (bnd.entries.size() != ops.bnd_mass.size())
        throw std::invalid_argument("penalty_contribution: boundary count mismatch");
    VectorXd r = VectorXd::Zero(ops.dims.nu);
    for (std::size_t k = 0; k < bnd.entries.size(); ++k) {
        r += bnd.entries[k].value * ops.bnd_trace[k] - ops.bnd_mass[k] * a;
    }
    return bnd.tau * r;
}

double boundary_trace_mismatch(const Eigen::VectorXd& a, const ReducedOperators& ops,
                               const BoundarySpec& bnd, const GridSpec& grid) {
    double total = 0.0;
    for (std::size_t k = 0; k < bnd.entries.size(); ++k) {
        const BoundaryGeom bg = boundary_geometry(grid, bnd.entries[k].boundary);
        double blen = 0.0;
        for (double l : bg.len) blen += l;
        const double u = bnd.entries[k].value;
        double m2 = a.dot(ops.bnd_mass[k] * a) - 2.0 * u * ops.bnd_trace[k].dot(a) +
                    u * u * blen;
        total += std::max(m2, 0.0);
    }
    return std::sqrt(total);
}

void save_operators(const ReducedOperators& ops, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    auto dump_matrix = [&](const MatrixXd& m, const std::string& name) {
        std::string buf;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                io::append_f64_le(buf, &v, 1);
            }
        io::write_file(dir / (name + ".bin"), buf);
    };
    auto dump_tensor = [&](const Tensor3& t, const std::string& name) {
        std::string buf;
        io::append_f64_le(buf, t.v.data(), t.v.size());
        io::write_file(dir / (name + ".bin"), buf);
    };

    json m;
    m["format_version"] = "1";
    m["dims"] = {{"nu", ops.dims.nu}, {"np", ops.dims.np}, {"nnut", ops.dims.nnut}};
    m["mu"] = ops.mu;
    m["tau"] = ops.tau;
    m["n_bc"] = ops.bnd_mass.size();
    m["flux_term_zero"] = true;
    m["boundary_term"] = "n x grad(chi) against curl(phi)";
    io::write_file(dir / "manifest.json", m.dump(2) + "\n");

    dump_matrix(ops.mass, "mass");
    dump_matrix(ops.lap, "lap");
    dump_matrix(ops.lap_t, "lap_t");
    dump_matrix(ops.grad_p, "grad_p");
    dump_matrix(ops.p_lap, "p_lap");
    dump_matrix(ops.p_bnd, "p_bnd");
    dump_matrix(ops.p_flux, "p_flux");
    dump_tensor(ops.conv, "conv");
    dump_tensor(ops.p_conv, "p_conv");
    dump_tensor(ops.turb_mom_lap, "turb_mom_lap");
    dump_tensor(ops.turb_mom_div, "turb_mom_div");
    dump_tensor(ops.turb_p_lap, "turb_p_lap");
    dump_tensor(ops.turb_p_div, "turb_p_div");
    for (std::size_t k = 0; k < ops.bnd_mass.size(); ++k) {
        dump_matrix(ops.bnd_mass[k], "bnd_mass_" + std::to_string(k));
        dump_matrix(ops.bnd_trace[k], "bnd_trace_" + std::to_string(k));
    }
}

ReducedOperators load_operators(const std::filesystem::path& dir) {
    const json m = json::parse(io::read_file(dir / "manifest.json"));
    ReducedOperators ops;
    ops.dims.nu = m.at("dims").at("nu").get<int>();
    ops.dims.np = m.at("dims").at("np").get<int>();
    ops.dims.nnut = m.at("dims").at("nnut").get<int>();
    ops.mu = m.at("mu").get<std::vector<double>>();
    ops.tau = m.at("tau").get<double>();
    const std::size_t nbc = m.at("n_bc").get<std::size_t>();

    auto load_matrix = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        const std::string buf = io::read_file(dir / (name + ".bin"));
        std::size_t off = 0;
        std::vector<double> v =
            io::read_f64_le(buf, off, static_cast<std::size_t>(rows * cols));
        MatrixXd out(rows, cols);
        std::size_t q = 0;
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = v[q++];
        return out;
    };
    auto load_tensor = [&](const std::string& name, int a, int b, int c) {
        const std::string buf = io::read_file(dir / (name + ".bin"));
        std::size_t off = 0;
        Tensor3 t(a, b, c);
        t.v = io::read_f64_le(buf, off, t.v.size());
        return t;
    };

    const int nu = ops.dims.nu, np = ops.dims.np, nnut = ops.dims.nnut;
    ops.mass = load_matrix("mass", nu, nu);
    ops.lap = load_matrix("lap", nu, nu);
    ops.lap_t = load_matrix("lap_t", nu, nu);
    ops.grad_p = load_matrix("grad_p", nu, np);
    ops.p_lap = load_matrix("p_lap", np, np);
    ops.p_bnd = load_matrix("p_bnd", np, nu);
    ops.p_flux = load_matrix("p_flux", np, 1);
    ops.conv = load_tensor("conv", nu, nu, nu);
    ops.p_conv = load_tensor("p_conv", np, nu, nu);
    ops.turb_mom_lap = load_tensor("turb_mom_lap", nu, nnut, nu);
    ops.turb_mom_div = load_tensor("turb_mom_div", nu, nnut, nu);
    ops.turb_p_lap = load_tensor("turb_p_lap", np, nnut, nu);
    ops.turb_p_div = load_tensor("turb_p_div", np, nnut, nu);
    for (std::size_t k = 0; k < nbc; ++k) {
        ops.bnd_mass.push_back(load_matrix("bnd_mass_" + std::to_string(k), nu, nu));
        ops.bnd_trace.push_back(load_matrix("bnd_trace_" + std::to_string(k), nu, 1));
    }
    return ops;
}

}  // namespace rom
