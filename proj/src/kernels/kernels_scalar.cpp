#include "rom/kernels.hpp"

#include <cmath>

namespace rom::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void dense_forward(const double* w, const double* b, const double* x,
                   double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double s = b[r];
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
        y[r] = s;
    }
}

void dense_backward_input(const double* w, const double* ygrad,
                          double* xgrad, std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) xgrad[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const double g = ygrad[r];
        for (std::size_t c = 0; c < cols; ++c) xgrad[c] += wr[c] * g;
    }
}

void dense_backward_params(const double* ygrad, const double* x,
                           double* wgrad, double* bgrad,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* wr = wgrad + r * cols;
        const double g = ygrad[r];
        for (std::size_t c = 0; c < cols; ++c) wr[c] += g * x[c];
        bgrad[r] += g;
    }
}

void adam_step(double* theta, const double* grad, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace rom::kernels::scalar
