#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace rom {

/// Dense rank-3 tensor, row-major over (i, j, k).
struct Tensor3 {
    int d0 = 0, d1 = 0, d2 = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int a, int b, int c) : d0(a), d1(b), d2(c), v(static_cast<std::size_t>(a) * b * c, 0.0) {}

    double& operator()(int i, int j, int k) {
        return v[(static_cast<std::size_t>(i) * d1 + j) * d2 + k];
    }
    double operator()(int i, int j, int k) const {
        return v[(static_cast<std::size_t>(i) * d1 + j) * d2 + k];
    }
};

/// r_i = sum_{j,k} x_j T(i,j,k) y_k
inline Eigen::VectorXd contract_jk(const Tensor3& t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) {
    if (x.size() != t.d1 || y.size() != t.d2)
        throw std::invalid_argument("contract_jk: size mismatch");
    Eigen::VectorXd r = Eigen::VectorXd::Zero(t.d0);
    for (int i = 0; i < t.d0; ++i) {
        double s = 0.0;
        for (int j = 0; j < t.d1; ++j)
            for (int k = 0; k < t.d2; ++k) s += x[j] * t(i, j, k) * y[k];
        r[i] = s;
    }
    return r;
}

/// M_ij = sum_k T(i,j,k) y_k
inline Eigen::MatrixXd contract_k(const Tensor3& t, const Eigen::VectorXd& y) {
    if (y.size() != t.d2) throw std::invalid_argument("contract_k: size mismatch");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t.d0, t.d1);
    for (int i = 0; i < t.d0; ++i)
        for (int j = 0; j < t.d1; ++j) {
            double s = 0.0;
            for (int k = 0; k < t.d2; ++k) s += t(i, j, k) * y[k];
            m(i, j) = s;
        }
    return m;
}

/// M_ik = sum_j x_j T(i,j,k)
inline Eigen::MatrixXd contract_j(const Tensor3& t, const Eigen::VectorXd& x) {
    if (x.size() != t.d1) throw std::invalid_argument("contract_j: size mismatch");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(t.d0, t.d2);
    for (int i = 0; i < t.d0; ++i)
        for (int k = 0; k < t.d2; ++k) {
            double s = 0.0;
            for (int j = 0; j < t.d1; ++j) s += x[j] * t(i, j, k);
            m(i, k) = s;
        }
    return m;
}

}  // namespace rom
