#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "dual.hpp"
#include "errors.hpp"
#include "integrators.hpp"
#include "linalg.hpp"

namespace liouville {

// ---------------------------------------------------------------- field configurations

/// Complex fields (phi, pi = phi_t) sampled on a uniform grid.
/// Periodic: x_k = x_min + k h, k < points, h = length / points.
/// Closed: both endpoints sampled, h = length / (points - 1).
struct FieldConfig {
    double x_min = 0.0, h = 1.0;
    bool periodic = true;
    CVec phi, pi;

    std::size_t points() const { return phi.size(); }
    double x(std::size_t k) const { return x_min + static_cast<double>(k) * h; }
    double length() const { return h * static_cast<double>(periodic ? points() : points() - 1); }
};

inline void validate(const FieldConfig& c) {
    if (c.phi.size() != c.pi.size()) throw ConfigError("phi and pi must have equal length");
    if (c.points() < (c.periodic ? 4u : 3u)) throw ConfigError("field grid too small");
    if (!(c.h > 0.0)) throw ConfigError("grid spacing must be positive");
    if (!all_finite(c.phi) || !all_finite(c.pi)) throw ConfigError("fields must be finite");
}

using FieldFn = std::function<cplx(double)>;

/// Periodic grid over [-L, L) with `points` samples.
inline FieldConfig periodic_config(double L, std::size_t points, const FieldFn& phi, const FieldFn& pi) {
    if (!(L > 0.0)) throw ConfigError("half-length L must be positive");
    FieldConfig c;
    c.x_min = -L;
    c.h = 2.0 * L / static_cast<double>(points);
    c.periodic = true;
    for (std::size_t k = 0; k < points; ++k) {
        c.phi.push_back(phi(c.x(k)));
        c.pi.push_back(pi(c.x(k)));
    }
    validate(c);
    return c;
}

/// Closed grid over [a, b] with both endpoints sampled.
inline FieldConfig closed_config(double a, double b, std::size_t points, const FieldFn& phi, const FieldFn& pi) {
    if (!(b > a) || points < 3) throw ConfigError("closed grid needs b > a and at least 3 points");
    FieldConfig c;
    c.x_min = a;
    c.h = (b - a) / static_cast<double>(points - 1);
    c.periodic = false;
    for (std::size_t k = 0; k < points; ++k) {
        c.phi.push_back(phi(c.x(k)));
        c.pi.push_back(pi(c.x(k)));
    }
    validate(c);
    return c;
}

inline FieldConfig zero_field(double L, std::size_t points) {
    return periodic_config(L, points, [](double) { return cplx{}; }, [](double) { return cplx{}; });
}

/// Smooth periodic data: constant plus `modes` Fourier modes with seeded coefficients of
/// modulus <= amplitude / m^2.
template <class Rng>
FieldConfig smooth_random_config(Rng& rng, double L, std::size_t points, double amplitude = 0.3, int modes = 3) {
    std::vector<std::array<cplx, 4>> c(static_cast<std::size_t>(modes) + 1);
    for (int m = 0; m <= modes; ++m) {
        const double s = amplitude / static_cast<double>(std::max(1, m * m));
        c[m] = {rng.disk(s), rng.disk(s), rng.disk(s), rng.disk(s)};
    }
    auto series = [&, L](double x, int which) {
        cplx v = c[0][2 * which];
        for (int m = 1; m <= modes; ++m) {
            const double k = std::numbers::pi * m / L;
            v += c[m][2 * which] * std::cos(k * x) + c[m][2 * which + 1] * std::sin(k * x);
        }
        return v;
    };
    return periodic_config(L, points, [&](double x) { return series(x, 0); }, [&](double x) { return series(x, 1); });
}

/// Central first derivative; closed grids use second-order one-sided stencils at the ends.
inline CVec d_dx(const CVec& f, double h, bool periodic) {
    const std::size_t n = f.size();
    CVec d(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (periodic) {
            d[k] = (f[(k + 1) % n] - f[(k + n - 1) % n]) / (2.0 * h);
        } else if (k == 0) {
            d[k] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        } else if (k == n - 1) {
            d[k] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        } else {
            d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
        }
    }
    return d;
}

/// Central second derivative on a periodic grid.
inline CVec d2_dx2_periodic(const CVec& f, double h) {
    const std::size_t n = f.size();
    CVec d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = (f[(k + 1) % n] - 2.0 * f[k] + f[(k + n - 1) % n]) / (h * h);
    return d;
}

/// Trapezoid rule: h sum f on periodic grids, half weights at the ends on closed grids.
inline cplx trapezoid(const CVec& f, double h, bool periodic) {
    cplx s{};
    for (const auto& v : f) s += v;
    if (!periodic) s -= 0.5 * (f.front() + f.back());
    return h * s;
}

inline CVec phi_x(const FieldConfig& c) { return d_dx(c.phi, c.h, c.periodic); }

// ---------------------------------------------------------------- Lax pair and gauge

/// U = 1/2 [[-i pi, -2 e^{-lambda - i phi}], [4 sinh(lambda - i phi), i pi]].
template <class T>
M2<T> lax_U(const T& phi, const T& pi, cplx lambda) {
    using std::exp;
    using std::sinh;
    const cplx i(0.0, 1.0);
    return {-0.5 * i * pi, -1.0 * exp(-lambda - i * phi), 2.0 * sinh(lambda - i * phi), 0.5 * i * pi};
}

/// V = 1/2 [[-i phi_x, 2 e^{-lambda - i phi}], [4 cosh(lambda - i phi), i phi_x]].
template <class T>
M2<T> lax_V(const T& phi, const T& phi_x, cplx lambda) {
    using std::cosh;
    using std::exp;
    const cplx i(0.0, 1.0);
    return {-0.5 * i * phi_x, exp(-lambda - i * phi), 2.0 * cosh(lambda - i * phi), 0.5 * i * phi_x};
}

inline Mat2 lax_U_mat(cplx phi, cplx pi, cplx lambda) { return to_mat(lax_U(phi, pi, lambda)); }
inline Mat2 lax_V_mat(cplx phi, cplx phi_x, cplx lambda) { return to_mat(lax_V(phi, phi_x, lambda)); }

/// g = exp(-i phi sigma_z / 2).
inline Mat2 gauge_g(cplx phi) {
    const cplx i(0.0, 1.0);
    return (Mat2() << std::exp(-0.5 * i * phi), 0.0, 0.0, std::exp(0.5 * i * phi)).finished();
}

/// U~ = g^-1 U g - g^-1 g_x = 1/2 [[i(phi_x - pi), -2 e^{-lambda}], [2 e^{lambda - 2 i phi} - 2 e^{-lambda}, -i(phi_x - pi)]].
inline Mat2 gauged_U(cplx phi, cplx phi_x, cplx pi, cplx lambda) {
    const cplx i(0.0, 1.0);
    const cplx d = 0.5 * i * (phi_x - pi);
    return (Mat2() << d, -std::exp(-lambda), std::exp(lambda - 2.0 * i * phi) - std::exp(-lambda), -d).finished();
}

/// Pointwise U~ samples along the grid.
inline std::vector<Mat2> gauge_transform(const FieldConfig& c, cplx lambda) {
    validate(c);
    const CVec px = phi_x(c);
    std::vector<Mat2> out;
    out.reserve(c.points());
    for (std::size_t k = 0; k < c.points(); ++k) out.push_back(gauged_U(c.phi[k], px[k], c.pi[k], lambda));
    return out;
}

// ---------------------------------------------------------------- equation of motion

struct FieldRate {
    CVec phi, pi;
};

/// Method of lines: phi_t = pi, pi_t = phi_xx + 4 i e^{-2 i phi}.
inline FieldRate liouville_rhs(const FieldConfig& c) {
    if (!c.periodic) throw ConfigError("liouville_rhs requires a periodic grid");
    const cplx i(0.0, 1.0);
    FieldRate r{c.pi, d2_dx2_periodic(c.phi, c.h)};
    for (std::size_t k = 0; k < c.points(); ++k) r.pi[k] += 4.0 * i * std::exp(-2.0 * i * c.phi[k]);
    return r;
}

// ---------------------------------------------------------------- charges

struct ContinuumCharges {
    cplx I1, I1_sym, P, H;
};

struct DualCharges {
    cplx P_t, H_t;
};

/// The printed first charges, momentum and Hamiltonian by trapezoid quadrature.
inline ContinuumCharges charges(const FieldConfig& c) {
    validate(c);
    const cplx i(0.0, 1.0);
    const CVec px = phi_x(c);
    const std::size_t n = c.points();
    CVec f1(n), f1s(n), fp(n), fh(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx e = std::exp(-2.0 * i * c.phi[k]);
        const cplx q = px[k] * px[k] + c.pi[k] * c.pi[k];
        f1[k] = 0.25 * (q - 2.0 * px[k] * c.pi[k]) + e;
        f1s[k] = 0.25 * (q + 2.0 * px[k] * c.pi[k]) + e;
        fp[k] = px[k] * c.pi[k];
        fh[k] = 0.5 * q + 2.0 * e;
    }
    return {-0.5 * trapezoid(f1, c.h, c.periodic), -0.5 * trapezoid(f1s, c.h, c.periodic),
            trapezoid(fp, c.h, c.periodic), trapezoid(fh, c.h, c.periodic)};
}

/// Time-like versions on the supplied slice: the potential enters with the opposite sign.
inline DualCharges dual_charges(const FieldConfig& c) {
    validate(c);
    const cplx i(0.0, 1.0);
    const CVec px = phi_x(c);
    CVec fh(c.points());
    for (std::size_t k = 0; k < c.points(); ++k)
        fh[k] = 0.5 * (px[k] * px[k] + c.pi[k] * c.pi[k]) - 2.0 * std::exp(-2.0 * i * c.phi[k]);
    return {charges(c).P, trapezoid(fh, c.h, c.periodic)};
}

/// Proportionality constants measured from the printed forms: P = k_P (I1_sym - I1),
/// H = k_H (I1_sym + I1). Both equal -2.
struct Proportionality {
    cplx k_P, k_H;
};

inline Proportionality measure_proportionality(const ContinuumCharges& q) {
    return {q.P / (q.I1_sym - q.I1), q.H / (q.I1_sym + q.I1)};
}

/// Semi-discrete energy sum h [pi^2/2 + (D+ phi)^2/2 + 2 e^{-2 i phi}], an exact invariant
/// of liouville_rhs on a periodic grid, so its drift isolates the time integrator.
inline cplx semi_discrete_energy(const FieldConfig& c) {
    if (!c.periodic) throw ConfigError("semi_discrete_energy requires a periodic grid");
    const cplx i(0.0, 1.0);
    const std::size_t n = c.points();
    cplx s{};
    for (std::size_t k = 0; k < n; ++k) {
        const cplx dp = (c.phi[(k + 1) % n] - c.phi[k]) / c.h;
        s += 0.5 * c.pi[k] * c.pi[k] + 0.5 * dp * dp + 2.0 * std::exp(-2.0 * i * c.phi[k]);
    }
    return c.h * s;
}

// ---------------------------------------------------------------- monodromy

/// Transport matrix with the scalar normalization kept as a log: T = exp(log_scale) matrix.
struct Monodromy {
    Mat2 matrix;
    double log_scale = 0.0;

    cplx log_trace() const { return log_scale + std::log(matrix.trace()); }
    cplx log_det() const { return 2.0 * log_scale + std::log(matrix.determinant()); }
};

/// exp(w) for traceless 2x2 w as exp(shift) * matrix, with shift = |Re s| and s^2 = -det w.
inline Monodromy traceless_exp(const Mat2& w) {
    const cplx s = std::sqrt(-w.determinant());
    const double shift = std::abs(s.real());
    const cplx ch = 0.5 * (std::exp(s - shift) + std::exp(-s - shift));
    // sinh(s)/s, by its series near s = 0
    const cplx shc = std::abs(s) < 1e-4 ? std::exp(-shift) * (1.0 + s * s / 6.0 + s * s * s * s / 120.0)
                                         : 0.5 * (std::exp(s - shift) - std::exp(-s - shift)) / s;
    return {ch * Mat2::Identity() + shc * w, shift};
}

/// Integrates T_x = U~ T across the periodic grid with the fourth-order Magnus step of width 2h
/// (grid samples serve as start, midpoint and end nodes), renormalizing after each step.
/// The step is exact for constant U~, so it stays accurate when |U~| h is not small.
inline Monodromy monodromy_ode(const FieldConfig& c, cplx lambda) {
    validate(c);
    if (!c.periodic) throw ConfigError("monodromy_ode requires a periodic grid");
    const std::size_t n = c.points();
    if (n % 2 != 0) throw ConfigError("monodromy_ode needs an even number of grid points");
    const std::vector<Mat2> u = gauge_transform(c, lambda);
    const double step = 2.0 * c.h;
    Monodromy t{Mat2::Identity(), 0.0};
    for (std::size_t k = 0; k < n; k += 2) {
        const Mat2& u0 = u[k];
        const Mat2& um = u[k + 1];
        const Mat2& u1 = u[(k + 2) % n];
        const Mat2 omega = step / 6.0 * (u0 + 4.0 * um + u1) + step * step / 12.0 * (u1 * u0 - u0 * u1);
        const Monodromy e = traceless_exp(omega);
        t.matrix = e.matrix * t.matrix;
        const double scale = t.matrix.cwiseAbs().maxCoeff();
        if (!std::isfinite(scale) || scale == 0.0) throw OverflowError("monodromy_ode: transport matrix overflow");
        t.matrix /= scale;
        t.log_scale += e.log_scale + std::log(scale);
    }
    return t;
}

/// exp(2L U~) for phi = pi = 0: U~^2 = (u^-2 - 1) Id.
inline Monodromy zero_field_monodromy(double L, cplx lambda) {
    const cplx u = std::exp(lambda);
    const cplx kappa = std::sqrt(1.0 / (u * u) - 1.0);
    const Mat2 ut = gauged_U(0.0, 0.0, 0.0, lambda);
    const cplx s = 2.0 * L * kappa;
    // cosh(s) I + sinh(s)/kappa U~, scaled by exp(-Re s) to stay finite
    const double shift = std::abs(s.real());
    const cplx ch = 0.5 * (std::exp(s - shift) + std::exp(-s - shift));
    const cplx sh = 0.5 * (std::exp(s - shift) - std::exp(-s - shift));
    return {ch * Mat2::Identity() + (sh / kappa) * ut, shift};
}

inline std::vector<double> default_fit_window() {
    std::vector<double> u(8);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = 0.05 + 0.15 * static_cast<double>(k) / 7.0;
    return u;
}

/// Least-squares fit ln tr T(u) ~ c_{-1} u^-1 + c_0 + c_1 u + c_2 u^2 + c_3 u^3 over real u.
struct MonodromyFit {
    cplx c_minus1, c0, c1, c2, c3;
    double rms_residual = 0.0;
};

inline MonodromyFit fit_monodromy(const FieldConfig& c, const std::vector<double>& us = default_fit_window()) {
    if (us.size() < 5) throw ConfigError("monodromy fit needs at least 5 sample points");
    std::vector<double> re, im;
    for (double u : us) {
        if (!(u > 0.0)) throw ConfigError("fit window must be positive");
        const cplx lt = monodromy_ode(c, std::log(u)).log_trace();
        re.push_back(lt.real());
        im.push_back(lt.imag());
    }
    unwrap_phases(im);
    Eigen::MatrixXcd a(us.size(), 5);
    Eigen::VectorXcd b(us.size());
    for (std::size_t k = 0; k < us.size(); ++k) {
        const double u = us[k];
        a.row(k) << 1.0 / u, 1.0, u, u * u, u * u * u;
        b(k) = cplx(re[k], im[k]);
    }
    const Eigen::VectorXcd x = a.colPivHouseholderQr().solve(b);
    const double rms = (a * x - b).norm() / std::sqrt(static_cast<double>(us.size()));
    return {x(0), x(1), x(2), x(3), x(4), rms};
}

// ---------------------------------------------------------------- linear algebra

/// Canonical bracket normalization {phi(x), pi(y)} = kappa delta(x - y), measured from the
/// linear algebra for U and frozen.
inline constexpr double kCanonicalBracket = 2.0;

struct LinearAlgebraSides {
    Mat4 lhs, rhs;
};

/// Both sides of {U_a(lambda), U_b(mu)} = [r_ab(lambda - mu), U_a(lambda) + U_b(mu)] with the
/// delta factor stripped.
inline LinearAlgebraSides linear_algebra_sides(cplx phi, cplx pi, cplx lambda, cplx mu,
                                               double kappa = kCanonicalBracket) {
    const Mat2 ua_phi = deriv_mat(lax_U(Dual(phi, 1.0), Dual(pi, 0.0), lambda));
    const Mat2 ua_pi = deriv_mat(lax_U(Dual(phi, 0.0), Dual(pi, 1.0), lambda));
    const Mat2 ub_phi = deriv_mat(lax_U(Dual(phi, 1.0), Dual(pi, 0.0), mu));
    const Mat2 ub_pi = deriv_mat(lax_U(Dual(phi, 0.0), Dual(pi, 1.0), mu));
    LinearAlgebraSides s;
    s.lhs = kappa * (kron(ua_phi, ub_pi) - kron(ua_pi, ub_phi));
    s.rhs = linear_bracket_rhs(lax_U_mat(phi, pi, lambda), lax_U_mat(phi, pi, mu), lambda, mu);
    return s;
}

inline double check_linear_algebra(cplx phi, cplx pi, cplx lambda, cplx mu, double kappa = kCanonicalBracket) {
    const auto s = linear_algebra_sides(phi, pi, lambda, mu, kappa);
    return max_abs(s.lhs - s.rhs);
}

// ---------------------------------------------------------------- exact solutions

/// Field value with its first derivatives at one space-time point.
struct FieldJet {
    cplx phi, phi_x, phi_t;
};

/// Value, first and second derivative of a function of one light-cone variable.
using LightConeFn = std::function<std::array<cplx, 3>(double)>;

/// General solution e^{-2 i phi} = -f'(z) g'(w) / (f + g)^2 with z = x + t, w = x - t.
struct LightConeSolution {
    LightConeFn f, g;

    FieldJet jet(double x, double t) const {
        const cplx i(0.0, 1.0);
        const auto fz = f(x + t);
        const auto gw = g(x - t);
        const cplx sum = fz[0] + gw[0];
        const cplx phi = 0.5 * i * std::log(-fz[1] * gw[1] / (sum * sum));
        const cplx pz = 0.5 * i * (fz[2] / fz[1] - 2.0 * fz[1] / sum);
        const cplx pw = 0.5 * i * (gw[2] / gw[1] - 2.0 * gw[1] / sum);
        return {phi, pz + pw, pz - pw};
    }

    cplx phi(double x, double t) const { return jet(x, t).phi; }

    FieldConfig slice(double L, std::size_t points, double t) const {
        return periodic_config(
            L, points, [&](double x) { return jet(x, t).phi; }, [&](double x) { return jet(x, t).phi_t; });
    }
};

/// Exact solution periodic in x with period 2L: f = z + 3 + eps sin(k z), g = -w - delta sin(k w),
/// k = pi m / L.
inline LightConeSolution periodic_exact_solution(double L, int m, double eps, double delta) {
    const double k = std::numbers::pi * m / L;
    LightConeSolution s;
    s.f = [=](double z) {
        return std::array<cplx, 3>{z + 3.0 + eps * std::sin(k * z), 1.0 + eps * k * std::cos(k * z),
                                   -eps * k * k * std::sin(k * z)};
    };
    s.g = [=](double w) {
        return std::array<cplx, 3>{-w - delta * std::sin(k * w), -1.0 - delta * k * std::cos(k * w),
                                   delta * k * k * std::sin(k * w)};
    };
    return s;
}

// ---------------------------------------------------------------- residuals

using SpaceTimeFn = std::function<cplx(double, double)>;

/// phi_tt - phi_xx - 4 i e^{-2 i phi} by central second differences of step h.
inline cplx pde_residual(const SpaceTimeFn& phi, double x, double t, double h) {
    const cplx i(0.0, 1.0);
    const cplx c = phi(x, t);
    const cplx tt = (phi(x, t + h) - 2.0 * c + phi(x, t - h)) / (h * h);
    const cplx xx = (phi(x + h, t) - 2.0 * c + phi(x - h, t)) / (h * h);
    return tt - xx - 4.0 * i * std::exp(-2.0 * i * c);
}

using JetFn = std::function<FieldJet(double, double)>;

/// U_t - V_x + [U, V] at (x, t) with pi = phi_t, derivatives by central differences of step h.
inline double zero_curvature_residual(const JetFn& jet, double x, double t, cplx lambda, double h) {
    auto U = [&](double xx, double tt) {
        const auto j = jet(xx, tt);
        return lax_U_mat(j.phi, j.phi_t, lambda);
    };
    auto V = [&](double xx, double tt) {
        const auto j = jet(xx, tt);
        return lax_V_mat(j.phi, j.phi_x, lambda);
    };
    const Mat2 ut = (U(x, t + h) - U(x, t - h)) / (2.0 * h);
    const Mat2 vx = (V(x + h, t) - V(x - h, t)) / (2.0 * h);
    const Mat2 u = U(x, t), v = V(x, t);
    return max_abs(ut - vx + u * v - v * u);
}

/// Samples phi(x_i, t_j) on a uniform space-time grid, row-major in time.
struct SpaceTimeGrid {
    double x_min = 0.0, h = 1.0, t_min = 0.0, dt = 1.0;
    std::size_t nx = 0, nt = 0;
    CVec values;

    cplx& operator()(std::size_t it, std::size_t ix) { return values[it * nx + ix]; }
    const cplx& operator()(std::size_t it, std::size_t ix) const { return values[it * nx + ix]; }
    double x(std::size_t ix) const { return x_min + static_cast<double>(ix) * h; }
    double t(std::size_t it) const { return t_min + static_cast<double>(it) * dt; }
};

/// Max |phi_tt - phi_xx - 4 i e^{-2 i phi}| over interior nodes with time index in
/// [it_from, it_to] and at least `margin` nodes from the x ends.
inline double max_pde_residual(const SpaceTimeGrid& g, std::size_t it_from, std::size_t it_to, std::size_t margin = 1) {
    if (g.nt < 3 || g.nx < 3) throw ConfigError("space-time grid too small for second differences");
    const cplx i(0.0, 1.0);
    it_from = std::max<std::size_t>(it_from, 1);
    it_to = std::min(it_to, g.nt - 2);
    margin = std::max<std::size_t>(margin, 1);
    double worst = 0.0;
    for (std::size_t it = it_from; it <= it_to; ++it)
        for (std::size_t ix = margin; ix + margin < g.nx; ++ix) {
            const cplx c = g(it, ix);
            const cplx tt = (g(it + 1, ix) - 2.0 * c + g(it - 1, ix)) / (g.dt * g.dt);
            const cplx xx = (g(it, ix + 1) - 2.0 * c + g(it, ix - 1)) / (g.h * g.h);
            worst = std::max(worst, std::abs(tt - xx - 4.0 * i * std::exp(-2.0 * i * c)));
        }
    return worst;
}

// ---------------------------------------------------------------- evolution

struct ContinuumSample {
    double t = 0.0;
    cplx H, H_h, P, I1;
    std::vector<cplx> log_trace;  // ln tr T at each probe lambda
};

struct ContinuumDrift {
    double H = 0.0, H_h = 0.0, P = 0.0, I1 = 0.0;
    std::vector<double> log_trace;
};

struct ContinuumTrajectory {
    std::vector<double> times;
    std::vector<FieldConfig> states;
    std::vector<ContinuumSample> samples;
    ContinuumDrift drift;
    bool aborted = false;
    std::string abort_reason;
};

struct EvolveOptions {
    std::size_t record_every = 1;
    double blowup_threshold = 1e6;
    std::vector<cplx> probe_lambdas;
};

inline CVec pack(const FieldConfig& c) {
    CVec y = c.phi;
    y.insert(y.end(), c.pi.begin(), c.pi.end());
    return y;
}

inline FieldConfig unpack_fields(const CVec& y, const FieldConfig& shape) {
    FieldConfig c = shape;
    const std::size_t n = shape.points();
    c.phi.assign(y.begin(), y.begin() + n);
    c.pi.assign(y.begin() + n, y.end());
    return c;
}

/// RK4 method of lines with H, H_h, P, I1 (and optional ln tr T) monitoring.
inline ContinuumTrajectory evolve(const FieldConfig& c0, double dt, double t_end, const EvolveOptions& opt = {}) {
    validate(c0);
    if (!c0.periodic) throw ConfigError("evolve requires a periodic grid");
    if (!(dt > 0.0) || dt > t_end) throw ConfigError("evolve: require 0 < dt <= t_end");
    auto sample = [&](double t, const FieldConfig& c) {
        const auto q = charges(c);
        ContinuumSample s{t, q.H, semi_discrete_energy(c), q.P, q.I1, {}};
        for (const auto& l : opt.probe_lambdas) s.log_trace.push_back(monodromy_ode(c, l).log_trace());
        return s;
    };
    auto rhs = [&](double, const CVec& y) {
        const auto r = liouville_rhs(unpack_fields(y, c0));
        CVec out = r.phi;
        out.insert(out.end(), r.pi.begin(), r.pi.end());
        return out;
    };
    ContinuumTrajectory tr;
    tr.drift.log_trace.assign(opt.probe_lambdas.size(), 0.0);
    const ContinuumSample s0 = sample(0.0, c0);
    tr.times.push_back(0.0);
    tr.states.push_back(c0);
    tr.samples.push_back(s0);
    CVec y = pack(c0);
    const std::size_t steps = step_count(dt, t_end);
    double t = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double h = std::min(dt, t_end - t);
        CVec next = rk4_step(rhs, t, y, h);
        t = (k == steps) ? t_end : t + h;
        double biggest = 0.0;
        for (const auto& v : next) biggest = std::max(biggest, std::abs(v));
        if (!all_finite(next) || biggest > opt.blowup_threshold) {
            tr.aborted = true;
            tr.abort_reason = "field blow-up at t = " + std::to_string(t);
            return tr;
        }
        y = std::move(next);
        const FieldConfig c = unpack_fields(y, c0);
        const ContinuumSample s = sample(t, c);
        tr.drift.H = std::max(tr.drift.H, std::abs(s.H - s0.H));
        tr.drift.H_h = std::max(tr.drift.H_h, std::abs(s.H_h - s0.H_h));
        tr.drift.P = std::max(tr.drift.P, std::abs(s.P - s0.P));
        tr.drift.I1 = std::max(tr.drift.I1, std::abs(s.I1 - s0.I1));
        for (std::size_t q = 0; q < s.log_trace.size(); ++q)
            tr.drift.log_trace[q] = std::max(tr.drift.log_trace[q], std::abs(s.log_trace[q] - s0.log_trace[q]));
        if (k % opt.record_every == 0 || k == steps) {
            tr.times.push_back(t);
            tr.states.push_back(c);
            tr.samples.push_back(s);
        }
    }
    return tr;
}

}  // namespace liouville
