#include "rom/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace rom::kernels {

#if defined(ROM_HAVE_AVX2_TU)
namespace avx2 {
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
}  // namespace avx2
#endif

namespace {

bool avx2_available() {
#if defined(ROM_HAVE_AVX2_TU) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend pick_initial_backend() {
    if (const char* env = std::getenv("ROM_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_available()) return Backend::avx2;
    }
    return avx2_available() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_initial_backend();

}  // namespace

Backend active_backend() { return g_backend; }

const char* backend_name() {
    return g_backend == Backend::avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_available()) {
        throw std::runtime_error("kernels: avx2 backend not available on this machine");
    }
    g_backend = b;
}

double dot(const double* x, const double* y, std::size_t n) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::dot(x, y, n);
#endif
    return scalar::dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::axpy(a, x, y, n);
#endif
    scalar::axpy(a, x, y, n);
}

void scal(double a, double* x, std::size_t n) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::scal(a, x, n);
#endif
    scalar::scal(a, x, n);
}

void dense_forward(const double* w, const double* b, const double* x,
                   double* y, std::size_t rows, std::size_t cols) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2) return avx2::dense_forward(w, b, x, y, rows, cols);
#endif
    scalar::dense_forward(w, b, x, y, rows, cols);
}

void dense_backward_input(const double* w, const double* ygrad,
                          double* xgrad, std::size_t rows, std::size_t cols) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2)
        return avx2::dense_backward_input(w, ygrad, xgrad, rows, cols);
#endif
    scalar::dense_backward_input(w, ygrad, xgrad, rows, cols);
}

void dense_backward_params(const double* ygrad, const double* x,
                           double* wgrad, double* bgrad,
                           std::size_t rows, std::size_t cols) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2)
        return avx2::dense_backward_params(ygrad, x, wgrad, bgrad, rows, cols);
#endif
    scalar::dense_backward_params(ygrad, x, wgrad, bgrad, rows, cols);
}

void adam_step(double* theta, const double* grad, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
#if defined(ROM_HAVE_AVX2_TU)
    if (g_backend == Backend::avx2)
        return avx2::adam_step(theta, grad, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
#endif
    scalar::adam_step(theta, grad, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace rom::kernels
