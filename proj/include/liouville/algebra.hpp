#pragma once

#include <algorithm>
#include <array>
#include <cstddef>

#include "dual.hpp"
#include "linalg.hpp"

namespace liouville {

template <std::size_t K>
using PoissonTensor = Eigen::Matrix<cplx, K, K>;

/// d L(u) / d x_k for every local field x_k, by forward-mode differentiation.
/// `lax` is a generic callable (std::array<T, K>, cplx u) -> M2<T>.
template <std::size_t K, class LaxFn>
std::array<Mat2, K> lax_jacobian(const LaxFn& lax, const std::array<cplx, K>& x, cplx u) {
    std::array<Mat2, K> out;
    for (std::size_t k = 0; k < K; ++k) {
        std::array<Dual, K> xd;
        for (std::size_t i = 0; i < K; ++i) xd[i] = Dual(x[i], i == k ? 1.0 : 0.0);
        out[k] = deriv_mat(lax(xd, u));
    }
    return out;
}

/// {L_a(lambda), L_b(mu)} = sum_{f,g} {f,g} dL(lambda)/df (x) dL(mu)/dg.
template <std::size_t K, class LaxFn>
Mat4 quadratic_bracket_lhs(const LaxFn& lax, const std::array<cplx, K>& x, const PoissonTensor<K>& p,
                           cplx lambda, cplx mu) {
    const auto ja = lax_jacobian(lax, x, std::exp(lambda));
    const auto jb = lax_jacobian(lax, x, std::exp(mu));
    Mat4 out = Mat4::Zero();
    for (std::size_t f = 0; f < K; ++f)
        for (std::size_t g = 0; g < K; ++g)
            if (p(f, g) != cplx{}) out += p(f, g) * kron(ja[f], jb[g]);
    return out;
}

/// [r_ab(lambda - mu), L_a(lambda) L_b(mu)] with L_a = L (x) 1, L_b = 1 (x) L.
inline Mat4 quadratic_bracket_rhs(const Mat2& la, const Mat2& lb, cplx lambda, cplx mu) {
    const Mat4 r = r_matrix(lambda - mu);
    const Mat4 prod = kron(la, Mat2::Identity()) * kron(Mat2::Identity(), lb);
    return r * prod - prod * r;
}

/// [r_ab(lambda - mu), U_a(lambda) + U_b(mu)].
inline Mat4 linear_bracket_rhs(const Mat2& ua, const Mat2& ub, cplx lambda, cplx mu) {
    const Mat4 r = r_matrix(lambda - mu);
    const Mat4 sum = kron(ua, Mat2::Identity()) + kron(Mat2::Identity(), ub);
    return r * sum - sum * r;
}

/// Max over (i, j, k) of |sum_l P_li d_l P_jk + cyclic|. `tensor` maps
/// std::array<T, K> to PoissonTensor-like K x K array of T.
template <std::size_t K, class TensorFn>
double jacobi_residual(const TensorFn& tensor, const std::array<cplx, K>& x) {
    const auto p0 = tensor(x);
    // dp[l](j, k) = d P_jk / d x_l
    std::array<std::array<std::array<cplx, K>, K>, K> dp{};
    for (std::size_t l = 0; l < K; ++l) {
        std::array<Dual, K> xd;
        for (std::size_t i = 0; i < K; ++i) xd[i] = Dual(x[i], i == l ? 1.0 : 0.0);
        const auto pd = tensor(xd);
        for (std::size_t j = 0; j < K; ++j)
            for (std::size_t k = 0; k < K; ++k) dp[l][j][k] = deriv_of(pd[j][k]);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            for (std::size_t k = 0; k < K; ++k) {
                cplx s{};
                for (std::size_t l = 0; l < K; ++l)
                    s += p0[l][i] * dp[l][j][k] + p0[l][j] * dp[l][k][i] + p0[l][k] * dp[l][i][j];
                worst = std::max(worst, std::abs(s));
            }
    return worst;
}

}  // namespace liouville
