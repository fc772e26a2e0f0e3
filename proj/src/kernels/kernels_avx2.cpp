// AVX2/FMA variants of the training kernels. This translation unit is only
// compiled on x86-64 and is entered through the runtime dispatch table, so
// the intrinsics never execute on machines without AVX2.

#include "rom/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace rom::kernels::avx2 {

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

void dense_forward(const double* w, const double* b, const double* x,
                   double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = b[r] + dot(w + r * cols, x, cols);
    }
}

void dense_backward_input(const double* w, const double* ygrad,
                          double* xgrad, std::size_t rows, std::size_t cols) {
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) _mm256_storeu_pd(xgrad + c, _mm256_setzero_pd());
    for (; c < cols; ++c) xgrad[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const __m256d g = _mm256_set1_pd(ygrad[r]);
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            __m256d xg = _mm256_loadu_pd(xgrad + i);
            xg = _mm256_fmadd_pd(g, _mm256_loadu_pd(wr + i), xg);
            _mm256_storeu_pd(xgrad + i, xg);
        }
        for (; i < cols; ++i) xgrad[i] += wr[i] * ygrad[r];
    }
}

void dense_backward_params(const double* ygrad, const double* x,
                           double* wgrad, double* bgrad,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* wr = wgrad + r * cols;
        const __m256d g = _mm256_set1_pd(ygrad[r]);
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            __m256d wv = _mm256_loadu_pd(wr + i);
            wv = _mm256_fmadd_pd(g, _mm256_loadu_pd(x + i), wv);
            _mm256_storeu_pd(wr + i, wv);
        }
        for (; i < cols; ++i) wr[i] += ygrad[r] * x[i];
        bgrad[r] += ygrad[r];
    }
}

void adam_step(double* theta, const double* grad, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_fmadd_pd(vb1c, g, _mm256_mul_pd(vb1, mi));
        vi = _mm256_fmadd_pd(vb2c, _mm256_mul_pd(g, g), _mm256_mul_pd(vb2, vi));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_div_pd(mi, vbc1);
        const __m256d vhat = _mm256_div_pd(vi, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d th = _mm256_loadu_pd(theta + i);
        th = _mm256_sub_pd(th, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
        _mm256_storeu_pd(theta + i, th);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace rom::kernels::avx2
