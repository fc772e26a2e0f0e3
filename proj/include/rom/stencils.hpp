#pragma once

/// Finite-difference calculus on a (possibly deformed) structured grid.
///
/// All operators work on cell-centered scalar arrays. The grid is periodic
/// in x; the y boundary treatment is chosen per field through FieldBc:
///   Wall         ghost = 2*wall_value - first_interior (Dirichlet at the face)
///   ZeroGradient ghost = first_interior
///   Periodic     ghost wraps around
/// Physical derivatives combine computational-space central differences with
/// the analytic metric terms stored in GridSpec, so the same stencils serve
/// the undeformed and deformed grids.

#include <Eigen/Sparse>
#include <vector>

#include "rom/grid.hpp"

namespace rom {

enum class YBc { Wall, ZeroGradient, Periodic };

struct FieldBc {
    YBc kind = YBc::ZeroGradient;
    double bottom = 0.0;  // wall values, used only for YBc::Wall
    double top = 0.0;
};

/// Cell-centered array extended by one ghost layer on each side.
/// Layout: ext[(j+1)*(nx+2) + (i+1)] for cell (i, j).
class ExtField {
  public:
    ExtField() = default;
    ExtField(const GridSpec& g, const double* f, const FieldBc& bc) { assign(g, f, bc); }

    void assign(const GridSpec& g, const double* f, const FieldBc& bc);
    /// Re-derive the ghost layer from the current interior values.
    void refresh_ghosts(const GridSpec& g, const FieldBc& bc);

    double at(int i, int j) const { return data_[(j + 1) * stride_ + (i + 1)]; }
    double& at(int i, int j) { return data_[(j + 1) * stride_ + (i + 1)]; }

    int nx() const { return stride_ - 2; }
    int ny() const { return static_cast<int>(data_.size()) / stride_ - 2; }

  private:
    int stride_ = 0;
    std::vector<double> data_;
};

class Stencils {
  public:
    explicit Stencils(const GridSpec& g) : g_(&g) {}

    const GridSpec& grid() const { return *g_; }

    // Computational-space central differences (interior output, size nx*ny).
    void dxi(const ExtField& f, double* out) const;
    void dzeta(const ExtField& f, double* out) const;
    void d2xi(const ExtField& f, double* out) const;
    void d2zeta(const ExtField& f, double* out) const;
    void dxizeta(const ExtField& f, double* out) const;

    // Physical derivatives d/dx', d/dy' and the compact Laplacian.
    void ddx(const ExtField& f, double* out) const;
    void ddy(const ExtField& f, double* out) const;
    void laplacian(const ExtField& f, double* out) const;

    std::vector<double> ddx(const double* f, const FieldBc& bc) const;
    std::vector<double> ddy(const double* f, const FieldBc& bc) const;
    std::vector<double> laplacian(const double* f, const FieldBc& bc) const;

    /// Matrix A with A*f == laplacian(f, homogeneous bc). Assembled by
    /// applying the stencil code to unit vectors, so matrix and apply() can
    /// never drift apart.
    Eigen::SparseMatrix<double> laplacian_matrix(YBc ykind) const;

    /// Affine boundary contribution s with laplacian(f, bc) == A*f + s.
    /// Non-zero only for Wall bcs with non-zero wall values.
    std::vector<double> laplacian_source(const FieldBc& bc) const;

  private:
    const GridSpec* g_;
};

}  // namespace rom
