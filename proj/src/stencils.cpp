#include "rom/stencils.hpp"

#include <cstring>

namespace rom {

void ExtField::assign(const GridSpec& g, const double* f, const FieldBc& bc) {
    stride_ = g.nx + 2;
    data_.assign(static_cast<std::size_t>(stride_) * (g.ny + 2), 0.0);
    for (int j = 0; j < g.ny; ++j) {
        std::memcpy(&data_[(j + 1) * stride_ + 1], f + j * g.nx,
                    sizeof(double) * g.nx);
    }
    refresh_ghosts(g, bc);
}

void ExtField::refresh_ghosts(const GridSpec& g, const FieldBc& bc) {
    const int nx = g.nx, ny = g.ny;
    // y ghosts first, then periodic x wrap (including the ghost rows, so the
    // corner ghosts needed by the mixed derivative are well defined).
    for (int i = 0; i < nx; ++i) {
        switch (bc.kind) {
            case YBc::Wall:
                at(i, -1) = 2.0 * bc.bottom - at(i, 0);
                at(i, ny) = 2.0 * bc.top - at(i, ny - 1);
                break;
            case YBc::ZeroGradient:
                at(i, -1) = at(i, 0);
                at(i, ny) = at(i, ny - 1);
                break;
            case YBc::Periodic:
                at(i, -1) = at(i, ny - 1);
                at(i, ny) = at(i, 0);
                break;
        }
    }
    for (int j = -1; j <= ny; ++j) {
        at(-1, j) = at(nx - 1, j);
        at(nx, j) = at(0, j);
    }
}

void Stencils::dxi(const ExtField& f, double* out) const {
    const double inv = 1.0 / (2.0 * g_->dxi);
    for (int j = 0; j < g_->ny; ++j)
        for (int i = 0; i < g_->nx; ++i)
            out[g_->idx(i, j)] = (f.at(i + 1, j) - f.at(i - 1, j)) * inv;
}

void Stencils::dzeta(const ExtField& f, double* out) const {
    const double inv = 1.0 / (2.0 * g_->dzeta);
    for (int j = 0; j < g_->ny; ++j)
        for (int i = 0; i < g_->nx; ++i)
            out[g_->idx(i, j)] = (f.at(i, j + 1) - f.at(i, j - 1)) * inv;
}

void Stencils::d2xi(const ExtField& f, double* out) const {
    const double inv = 1.0 / (g_->dxi * g_->dxi);
    for (int j = 0; j < g_->ny; ++j)
        for (int i = 0; i < g_->nx; ++i)
            out[g_->idx(i, j)] =
                (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) * inv;
}

void Stencils::d2zeta(const ExtField& f, double* out) const {
    const double inv = 1.0 / (g_->dzeta * g_->dzeta);
    for (int j = 0; j < g_->ny; ++j)
        for (int i = 0; i < g_->nx; ++i)
            out[g_->idx(i, j)] =
                (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) * inv;
}

void Stencils::dxizeta(const ExtField& f, double* out) const {
    const double inv = 1.0 / (4.0 * g_->dxi * g_->dzeta);
    for (int j = 0; j < g_->ny; ++j)
        for (int i = 0; i < g_->nx; ++i)
            out[g_->idx(i, j)] = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) -
                                  f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) *
                                 inv;
}

void Stencils::ddx(const ExtField& f, double* out) const {
    const double invx = 1.0 / (2.0 * g_->dxi);
    const double invz = 1.0 / (2.0 * g_->dzeta);
    for (int j = 0; j < g_->ny; ++j) {
        for (int i = 0; i < g_->nx; ++i) {
            const int c = g_->idx(i, j);
            const double fx = (f.at(i + 1, j) - f.at(i - 1, j)) * invx;
            const double fz = (f.at(i, j + 1) - f.at(i, j - 1)) * invz;
            out[c] = fx + g_->alpha[c] * fz;
        }
    }
}

void Stencils::ddy(const ExtField& f, double* out) const {
    const double invz = 1.0 / (2.0 * g_->dzeta);
    for (int j = 0; j < g_->ny; ++j) {
        for (int i = 0; i < g_->nx; ++i) {
            const int c = g_->idx(i, j);
            out[c] = g_->beta[c] * (f.at(i, j + 1) - f.at(i, j - 1)) * invz;
        }
    }
}

void Stencils::laplacian(const ExtField& f, double* out) const {
    // lap f = f_xx' + f_yy' expanded in computational coordinates:
    //   f_xixi + 2*alpha*f_xizeta + (alpha^2 + beta^2)*f_zetazeta + gamma*f_zeta
    const double ix2 = 1.0 / (g_->dxi * g_->dxi);
    const double iz2 = 1.0 / (g_->dzeta * g_->dzeta);
    const double ixz = 1.0 / (4.0 * g_->dxi * g_->dzeta);
    const double iz = 1.0 / (2.0 * g_->dzeta);
    for (int j = 0; j < g_->ny; ++j) {
        for (int i = 0; i < g_->nx; ++i) {
            const int c = g_->idx(i, j);
            const double fxx = (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) * ix2;
            const double fzz = (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) * iz2;
            const double fxz = (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) -
                                f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) * ixz;
            const double fz = (f.at(i, j + 1) - f.at(i, j - 1)) * iz;
            const double a = g_->alpha[c];
            const double b = g_->beta[c];
            out[c] = fxx + 2.0 * a * fxz + (a * a + b * b) * fzz + g_->gamma[c] * fz;
        }
    }
}

std::vector<double> Stencils::ddx(const double* f, const FieldBc& bc) const {
    ExtField ext(*g_, f, bc);
    std::vector<double> out(g_->cells());
    ddx(ext, out.data());
    return out;
}

std::vector<double> Stencils::ddy(const double* f, const FieldBc& bc) const {
    ExtField ext(*g_, f, bc);
    std::vector<double> out(g_->cells());
    ddy(ext, out.data());
    return out;
}

std::vector<double> Stencils::laplacian(const double* f, const FieldBc& bc) const {
    ExtField ext(*g_, f, bc);
    std::vector<double> out(g_->cells());
    laplacian(ext, out.data());
    return out;
}

Eigen::SparseMatrix<double> Stencils::laplacian_matrix(YBc ykind) const {
    const int n = g_->cells();
    const FieldBc hom{ykind, 0.0, 0.0};
    std::vector<double> unit(n, 0.0), col(n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 13);
    for (int k = 0; k < n; ++k) {
        unit[k] = 1.0;
        col = laplacian(unit.data(), hom);
        unit[k] = 0.0;
        for (int r = 0; r < n; ++r)
            if (col[r] != 0.0) trips.emplace_back(r, k, col[r]);
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

std::vector<double> Stencils::laplacian_source(const FieldBc& bc) const {
    std::vector<double> zero(g_->cells(), 0.0);
    return laplacian(zero.data(), bc);
}

}  // namespace rom
