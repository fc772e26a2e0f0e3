#pragma once

/// Structured 2-D grid with a smooth parametric deformation of the upper
/// coordinate: y' = y * (1 + m(x)) with m(x) = sum_k mu_k * sin^2((k+1) pi x / lx).
/// The map is periodic in x and the identity for mu = 0. Fields are
/// cell-centered; index (i, j) maps to i + j*nx with i the x index.

#include <stdexcept>
#include <vector>

namespace rom {

struct GridSpec {
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    std::vector<double> deformation;  // geometric parameters mu_g (may be empty)
    std::vector<double> cell_areas;   // per cell, from the mapped quadrilaterals

    // Cell-center metric terms of the map (x, zeta) -> (x, zeta*(1+m(x))).
    // alpha = d(zeta)/dx' and beta = d(zeta)/dy' at cell centers; gamma is the
    // first-derivative coefficient appearing in the physical Laplacian.
    std::vector<double> alpha, beta, gamma;

    double dxi = 0.0, dzeta = 0.0;

    int cells() const { return nx * ny; }
    int idx(int i, int j) const { return i + j * nx; }

    double x_center(int i) const { return (i + 0.5) * dxi; }
    double zeta_center(int j) const { return (j + 0.5) * dzeta; }
    /// Physical y of a cell center after deformation.
    double y_center(int i, int j) const;

    bool deformed() const;
};

/// Largest admissible |mu_k| for the deformation box.
inline constexpr double kDeformationBox = 0.45;

/// Scale factor 1 + m(x) of the deformation at abscissa x.
double deformation_scale(const std::vector<double>& mu_g, double lx, double x);
/// d/dx and d2/dx2 of m(x).
double deformation_slope(const std::vector<double>& mu_g, double lx, double x);
double deformation_curvature(const std::vector<double>& mu_g, double lx, double x);

/// Builds the grid, recomputing cell areas from the mapped quadrilaterals.
/// Throws std::invalid_argument for bad sizes or parameters outside the
/// admissible box, std::runtime_error if any mapped cell area is <= 0.
GridSpec build_grid(int nx, int ny, double lx, double ly,
                    const std::vector<double>& mu_g = {});

}  // namespace rom
