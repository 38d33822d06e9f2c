#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dual.hpp"
#include "errors.hpp"

namespace liouville {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

/// Fixed 2x2 matrix over an arbitrary scalar (complex or dual).
template <class T>
struct M2 {
    T a11{}, a12{}, a21{}, a22{};
};

template <class T>
M2<T> operator*(const M2<T>& x, const M2<T>& y) {
    return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
            x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
}

inline Mat2 to_mat(const M2<cplx>& m) {
    Mat2 r;
    r << m.a11, m.a12, m.a21, m.a22;
    return r;
}
inline Mat2 value_mat(const M2<Dual>& m) {
    Mat2 r;
    r << m.a11.v, m.a12.v, m.a21.v, m.a22.v;
    return r;
}
inline Mat2 deriv_mat(const M2<Dual>& m) {
    Mat2 r;
    r << m.a11.d, m.a12.d, m.a21.d, m.a22.d;
    return r;
}

/// kron(A, B)[2i+k, 2j+l] = A_ij B_kl; auxiliary space a is the first factor.
inline Mat4 kron(const Mat2& a, const Mat2& b) {
    Mat4 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) r(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return r;
}

inline double max_abs(const Eigen::MatrixXcd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Smallest |sinh(lambda - mu)| accepted before reporting the r-matrix pole.
inline constexpr double kPoleGuard = 1e-12;

/// r(lambda) = [cosh(lambda) (E11xE11 + E22xE22) + E12xE21 + E21xE12] / sinh(lambda).
inline Mat4 r_matrix(cplx lambda) {
    const cplx s = std::sinh(lambda);
    if (std::abs(s) < kPoleGuard) throw PoleError("r-matrix pole: sinh(lambda - mu) = 0");
    const cplx c = std::cosh(lambda) / s;
    Mat4 r = Mat4::Zero();
    r(0, 0) = c;
    r(3, 3) = c;
    r(1, 2) = 1.0 / s;
    r(2, 1) = 1.0 / s;
    return r;
}

inline Mat2 sigma_z() { return (Mat2() << 1, 0, 0, -1).finished(); }
inline Mat2 sigma_plus() { return (Mat2() << 0, 1, 0, 0).finished(); }
inline Mat2 sigma_minus() { return (Mat2() << 0, 0, 1, 0).finished(); }

/// Continuous unwrapping of a sequence of principal-branch phases.
template <class Vec>
void unwrap_phases(Vec& im_parts) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    for (std::size_t k = 1; k < im_parts.size(); ++k) {
        double d = im_parts[k] - im_parts[k - 1];
        im_parts[k] -= two_pi * std::round(d / two_pi);
    }
}

}  // namespace liouville
