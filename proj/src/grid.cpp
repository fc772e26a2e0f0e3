#include "rom/grid.hpp"

#include <cmath>
#include <numbers>

namespace rom {

namespace {
constexpr double kPi = std::numbers::pi;
}

double deformation_scale(const std::vector<double>& mu_g, double lx, double x) {
    double m = 0.0;
    for (std::size_t k = 0; k < mu_g.size(); ++k) {
        const double s = std::sin((k + 1) * kPi * x / lx);
        m += mu_g[k] * s * s;
    }
    return 1.0 + m;
}

double deformation_slope(const std::vector<double>& mu_g, double lx, double x) {
    double d = 0.0;
    for (std::size_t k = 0; k < mu_g.size(); ++k) {
        const double w = (k + 1) * kPi / lx;
        d += mu_g[k] * w * std::sin(2.0 * w * x);
    }
    return d;
}

double deformation_curvature(const std::vector<double>& mu_g, double lx, double x) {
    double d = 0.0;
    for (std::size_t k = 0; k < mu_g.size(); ++k) {
        const double w = (k + 1) * kPi / lx;
        d += mu_g[k] * 2.0 * w * w * std::cos(2.0 * w * x);
    }
    return d;
}

double GridSpec::y_center(int i, int j) const {
    return zeta_center(j) * deformation_scale(deformation, lx, x_center(i));
}

bool GridSpec::deformed() const {
    for (double m : deformation)
        if (m != 0.0) return true;
    return false;
}

GridSpec build_grid(int nx, int ny, double lx, double ly,
                    const std::vector<double>& mu_g) {
    if (nx < 4 || ny < 4) throw std::invalid_argument("build_grid: nx, ny must be >= 4");
    if (lx <= 0.0 || ly <= 0.0) throw std::invalid_argument("build_grid: extents must be > 0");
    for (double m : mu_g) {
        if (std::abs(m) > kDeformationBox)
            throw std::invalid_argument("build_grid: deformation parameter outside admissible box");
    }

    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.lx = lx;
    g.ly = ly;
    g.deformation = mu_g;
    g.dxi = lx / nx;
    g.dzeta = ly / ny;

    // Scale factors at the corner abscissae x_i = i*dxi, i = 0..nx.
    std::vector<double> h(nx + 1);
    for (int i = 0; i <= nx; ++i) h[i] = deformation_scale(mu_g, lx, i * g.dxi);

    // A mapped cell is a trapezoid with vertical sides at x_i, x_{i+1} and
    // heights dzeta*h(x_i), dzeta*h(x_{i+1}); shoelace reduces to the
    // trapezoid rule.
    g.cell_areas.resize(g.cells());
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double a = g.dxi * g.dzeta * 0.5 * (h[i] + h[i + 1]);
            if (a <= 0.0)
                throw std::runtime_error("build_grid: deformation produces non-positive cell area");
            g.cell_areas[g.idx(i, j)] = a;
        }
    }

    g.alpha.resize(g.cells());
    g.beta.resize(g.cells());
    g.gamma.resize(g.cells());
    for (int j = 0; j < ny; ++j) {
        const double zeta = g.zeta_center(j);
        for (int i = 0; i < nx; ++i) {
            const double x = g.x_center(i);
            const double scale = deformation_scale(mu_g, lx, x);
            const double mp = deformation_slope(mu_g, lx, x);
            const double mpp = deformation_curvature(mu_g, lx, x);
            const double beta = 1.0 / scale;
            const int c = g.idx(i, j);
            g.beta[c] = beta;
            g.alpha[c] = -zeta * mp * beta;
            g.gamma[c] = -zeta * mpp * beta + 2.0 * zeta * mp * mp * beta * beta;
        }
    }
    return g;
}

}  // namespace rom
