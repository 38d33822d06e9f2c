#pragma once

#include <cmath>
#include <complex>

#include "continuum.hpp"

namespace liouville {

/// Fields on [-L, x0] (left, phi^-) and [x0, L] (right, phi^+) with a type-II defect (z, z_bar, X) at x0.
/// Both halves are closed grids whose inner endpoints sit at x0.
struct SplitFieldConfig {
    FieldConfig left, right;
    double x0 = 0.0;
    cplx z{}, z_bar{}, X{1.0};
};

inline void validate(const SplitFieldConfig& c) {
    validate(c.left);
    validate(c.right);
    if (c.left.periodic || c.right.periodic) throw ConfigError("split halves must be closed grids");
    const double tol = 1e-9 * std::max(1.0, std::abs(c.x0));
    if (std::abs(c.left.x(c.left.points() - 1) - c.x0) > tol || std::abs(c.right.x_min - c.x0) > tol)
        throw ConfigError("split halves must abut x0");
    if (c.X == cplx{}) throw SingularStateError("defect field X is zero");
}

/// Split [-L, L] at x0 with `points_left` and `points_right` samples on the closed halves.
inline SplitFieldConfig split_config(double L, double x0, std::size_t points_left, std::size_t points_right,
                                     const FieldFn& phi_m, const FieldFn& pi_m, const FieldFn& phi_p,
                                     const FieldFn& pi_p, cplx z, cplx z_bar, cplx X) {
    if (!(x0 > -L && x0 < L)) throw ConfigError("defect location must lie inside (-L, L)");
    SplitFieldConfig c{closed_config(-L, x0, points_left, phi_m, pi_m), closed_config(x0, L, points_right, phi_p, pi_p),
                       x0, z, z_bar, X};
    validate(c);
    return c;
}

/// Values at the defect flanks; gradients use second-order one-sided stencils.
struct FlankValues {
    cplx phi_p, phi_m, phi_x_p, phi_x_m, pi_p, pi_m;
};

inline FlankValues flank_values(const SplitFieldConfig& c) {
    validate(c);
    const CVec dl = phi_x(c.left), dr = phi_x(c.right);
    const std::size_t last = c.left.points() - 1;
    return {c.right.phi[0], c.left.phi[last], dr[0], dl[last], c.right.pi[0], c.left.pi[last]};
}

/// A = X e^{-i(phi+ - phi-)/2}.
inline cplx defect_A(cplx X, const FlankValues& f) { return X * std::exp(-0.5 * kI * (f.phi_p - f.phi_m)); }

/// D = A + 1/A.
inline cplx defect_D(cplx X, const FlankValues& f) {
    const cplx a = defect_A(X, f);
    return a + 1.0 / a;
}

inline cplx checked_D(const SplitFieldConfig& c, const FlankValues& f) {
    const cplx d = defect_D(c.X, f);
    if (std::abs(d) < 1e-14) throw DegenerateError("defect quantity D vanishes");
    return d;
}

namespace detail {

/// z e^{-i(phi+ + phi-)/2} + z_bar e^{i(phi+ + phi-)/2}.
inline cplx defect_potential(const SplitFieldConfig& c, const FlankValues& f) {
    const cplx s = 0.5 * kI * (f.phi_p + f.phi_m);
    return c.z * std::exp(-s) + c.z_bar * std::exp(s);
}

/// -1/2 integral of (1/4 (phi_x + sign pi)^2 + e^{-2i phi}) over one closed half.
inline cplx half_I1(const FieldConfig& h, double sign) {
    const CVec px = phi_x(h);
    CVec f(h.points());
    for (std::size_t k = 0; k < f.size(); ++k) {
        const cplx w = px[k] + sign * h.pi[k];
        f[k] = 0.25 * w * w + std::exp(-2.0 * kI * h.phi[k]);
    }
    return -0.5 * trapezoid(f, h.h, false);
}

}  // namespace detail

/// First defect charge: bulk integrals on both halves plus the defect terms in z, z_bar, D, A.
inline cplx defect_charge_I1(const SplitFieldConfig& c) {
    const FlankValues f = flank_values(c);
    const cplx d = checked_D(c, f), a = defect_A(c.X, f);
    return detail::half_I1(c.right, -1.0) + detail::half_I1(c.left, -1.0) + detail::defect_potential(c, f) / d -
           kI * a / (2.0 * d) * (f.phi_x_p - f.pi_p + f.phi_x_m - f.pi_m) + 0.5 * kI * (f.phi_x_p - f.pi_p);
}

/// Symmetric partner of defect_charge_I1: pi enters with + sign and A with A^{-1}.
inline cplx defect_charge_I1_sym(const SplitFieldConfig& c) {
    const FlankValues f = flank_values(c);
    const cplx d = checked_D(c, f), a = defect_A(c.X, f);
    return detail::half_I1(c.right, 1.0) + detail::half_I1(c.left, 1.0) + detail::defect_potential(c, f) / d -
           kI / (2.0 * a * d) * (f.phi_x_p + f.pi_p + f.phi_x_m + f.pi_m) + 0.5 * kI * (f.phi_x_p + f.pi_p);
}

struct DefectMomentumHamiltonian {
    cplx P, H;
};

/// Momentum and Hamiltonian with the boundary couplings (A - A^{-1})/D and the -4/D defect potential.
inline DefectMomentumHamiltonian defect_momentum_hamiltonian(const SplitFieldConfig& c) {
    const FlankValues f = flank_values(c);
    const cplx d = checked_D(c, f), a = defect_A(c.X, f);
    const cplx coupling = (a - 1.0 / a) / d;
    cplx p{}, h{};
    for (const FieldConfig* half : {&c.left, &c.right}) {
        const CVec px = phi_x(*half);
        CVec fp(half->points()), fh(half->points());
        for (std::size_t k = 0; k < fp.size(); ++k) {
            fp[k] = px[k] * half->pi[k];
            fh[k] = 0.5 * (px[k] * px[k] + half->pi[k] * half->pi[k]) + 2.0 * std::exp(-2.0 * kI * half->phi[k]);
        }
        p += trapezoid(fp, half->h, false);
        h += trapezoid(fh, half->h, false);
    }
    p += -kI * (f.pi_p - f.pi_m) - kI * coupling * (f.phi_x_p + f.phi_x_m);
    h += -4.0 / d * detail::defect_potential(c, f) - kI * (f.phi_x_p - f.phi_x_m) - kI * coupling * (f.pi_p + f.pi_m);
    return {p, h};
}

/// First-order time-Lax components on both sides of the defect and at it.
struct DefectVMatrices {
    Mat2 V_plus, V_minus, Vt_plus, Vt_minus;
};

inline DefectVMatrices v_matrices_near_defect(const SplitFieldConfig& c, cplx mu) {
    const FlankValues f = flank_values(c);
    const cplx d = checked_D(c, f), a = defect_A(c.X, f);
    const cplx em = std::exp(-mu);
    const cplx s = 0.5 * kI * (f.phi_p + f.phi_m);
    auto bulk = [&](cplx phi, cplx px, cplx pi) {
        return Mat2(-kI * (px - pi) * sigma_z() +
                    4.0 * em * (std::exp(-kI * phi) * sigma_plus() + std::exp(kI * phi) * sigma_minus()));
    };
    const cplx grad = -0.5 * kI * (f.phi_x_p - f.pi_p + f.phi_x_m - f.pi_m);
    const Mat2 vt_plus = (1.0 / (d * d)) * (c.z * std::exp(-s) / a - a * c.z_bar * std::exp(s) + grad) * sigma_z() +
                         (2.0 / d) * em * (std::exp(-s) / c.X * sigma_plus() + c.X * std::exp(s) * sigma_minus());
    const Mat2 vt_minus = (1.0 / (d * d)) * (c.z_bar * std::exp(s) / a - a * c.z * std::exp(-s) + grad) * sigma_z() +
                          (2.0 / d) * em * (c.X * std::exp(-s) * sigma_plus() + std::exp(s) / c.X * sigma_minus());
    return {bulk(f.phi_p, f.phi_x_p, f.pi_p), bulk(f.phi_m, f.phi_x_m, f.pi_m), vt_plus, vt_minus};
}

/// S_1 = X - e^{i(phi+ - phi-)/2}; zero when the gluing condition holds.
inline cplx sewing_residual(const SplitFieldConfig& c) {
    const FlankValues f = flank_values(c);
    return c.X - std::exp(0.5 * kI * (f.phi_p - f.phi_m));
}

/// Largest off-diagonal gap between V~^{+-(1)} and V^{+-(1)}/4 at x0 (the bulk V carries 4 e^{-mu},
/// the defect one 2/D e^{-mu} with D = 2 when S_1 = 0).
inline double sewing_mismatch(const SplitFieldConfig& c, cplx mu) {
    const auto v = v_matrices_near_defect(c, mu);
    double worst = 0.0;
    for (auto [vt, vb] : {std::pair{&v.Vt_plus, &v.V_plus}, std::pair{&v.Vt_minus, &v.V_minus}}) {
        worst = std::max(worst, std::abs((*vt)(0, 1) - 0.25 * (*vb)(0, 1)));
        worst = std::max(worst, std::abs((*vt)(1, 0) - 0.25 * (*vb)(1, 0)));
    }
    return worst;
}

/// Defect with S_1 = 0 imposed: X = e^{i(phi+ - phi-)/2} at the current flanks.
inline SplitFieldConfig with_sewing(SplitFieldConfig c) {
    c.X = std::exp(0.5 * kI * (c.right.phi[0] - c.left.phi[c.left.points() - 1]));
    return c;
}

}  // namespace liouville
