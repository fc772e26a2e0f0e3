#pragma once

/// Low-level arithmetic kernels used by the network training hot loops.
///
/// Every kernel has a scalar reference implementation and, on x86-64, an
/// AVX2/FMA variant selected once at startup (override with the environment
/// variable ROM_KERNELS=scalar|avx2). SIMD variants reassociate reductions,
/// so results may differ from the scalar path in the last few ulps; the two
/// paths are equivalence-tested against each other.

#include <cstddef>

namespace rom::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();

/// Force a backend (used by the equivalence tests). Throws if the requested
/// backend is not available on this machine.
void set_backend(Backend b);

double dot(const double* x, const double* y, std::size_t n);

/// y += a*x
void axpy(double a, const double* x, double* y, std::size_t n);

/// x *= a
void scal(double a, double* x, std::size_t n);

/// y = W x + b with W row-major (rows x cols), b length rows.
void dense_forward(const double* w, const double* b, const double* x,
                   double* y, std::size_t rows, std::size_t cols);

/// xgrad = W^T ygrad with W row-major (rows x cols). Overwrites xgrad.
void dense_backward_input(const double* w, const double* ygrad,
                          double* xgrad, std::size_t rows, std::size_t cols);

/// wgrad += ygrad ⊗ x, bgrad += ygrad.
void dense_backward_params(const double* ygrad, const double* x,
                           double* wgrad, double* bgrad,
                           std::size_t rows, std::size_t cols);

/// One Adam update over n parameters. bc1 = 1-beta1^t, bc2 = 1-beta2^t.
void adam_step(double* theta, const double* grad, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void dense_forward(const double* w, const double* b, const double* x,
                   double* y, std::size_t rows, std::size_t cols);
void dense_backward_input(const double* w, const double* ygrad,
                          double* xgrad, std::size_t rows, std::size_t cols);
void dense_backward_params(const double* ygrad, const double* x,
                           double* wgrad, double* bgrad,
                           std::size_t rows, std::size_t cols);
void adam_step(double* theta, const double* grad, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2);
}  // namespace scalar

}  // namespace rom::kernels
