#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "continuum.hpp"

namespace liouville {

// ---------------------------------------------------------------- type-II Darboux matrix

/// Darboux entries with parameter theta. Y and Z are the variables of the Backlund relations;
/// the matrix carries 2Y and 2Z off the diagonal.
struct DarbouxState {
    cplx X{1.0}, Y{}, Z{}, theta{};
};

inline Mat2 darboux_matrix_typeII(const DarbouxState& d, cplx u) {
    if (d.X == cplx{}) throw SingularStateError("Darboux entry X is zero");
    const cplx em = std::exp(-d.theta), ep = std::exp(d.theta);
    return Mat2{{u * em * d.X - ep / (u * d.X), 2.0 * d.Y}, {2.0 * d.Z, u * em / d.X - ep * d.X / u}};
}

/// X = e^{i(phi~ - phi)/2} for a bound field pair.
inline cplx darboux_X(cplx phi, cplx phit) { return std::exp(0.5 * kI * (phit - phi)); }

/// Point values of a field pair (phi, phi~) with first derivatives.
struct BTFields {
    cplx phi, phi_t, phi_x, phit, phit_t, phit_x;
};

/// Coefficient of the transport term (phi_x + phi~_x) Y in the anti-diagonal relations.
inline constexpr double kBTTransport = 0.5;

namespace detail {

/// alpha = e^theta e^{-is}, beta = e^{-theta} e^{is}, gamma = e^{-theta} e^{-is}, s = (phi + phi~)/2,
/// and the source sinh i(phi~ - phi).
struct BTCoefficients {
    cplx alpha, beta, gamma, source;
};

inline BTCoefficients bt_coefficients(cplx phi, cplx phit, cplx theta) {
    const cplx s = 0.5 * (phi + phit);
    const cplx es = std::exp(kI * s);
    return {std::exp(theta) / es, std::exp(-theta) * es, std::exp(-theta) / es, std::sinh(kI * (phit - phi))};
}

}  // namespace detail

struct YZ {
    cplx Y, Z;
};

/// Solves the two diagonal relations
///   i(phi~_t - phi_t) = -2Y(alpha + beta) + 2Z gamma,  i(phi~_x - phi_x) = -2Y(alpha - beta) - 2Z gamma
/// for (Y, Z). The system determinant is 8 alpha gamma.
inline YZ bt_solve_YZ(const BTFields& f, cplx theta) {
    const auto c = detail::bt_coefficients(f.phi, f.phit, theta);
    const cplx det = 8.0 * c.alpha * c.gamma;
    if (!std::isfinite(std::abs(det)) || std::abs(det) < 1e-300) throw DegenerateError("bt_solve_YZ: singular system");
    const cplx dt = kI * (f.phit_t - f.phi_t), dx = kI * (f.phit_x - f.phi_x);
    const cplx y = -(dt + dx) / (4.0 * c.alpha);
    const cplx z = (dt - dx + 4.0 * y * c.beta) / (4.0 * c.gamma);
    return {y, z};
}

/// Residuals of the two diagonal relations.
inline std::pair<cplx, cplx> bt_diagonal_residual(const BTFields& f, YZ yz, cplx theta) {
    const auto c = detail::bt_coefficients(f.phi, f.phit, theta);
    return {kI * (f.phit_t - f.phi_t) + 2.0 * yz.Y * (c.alpha + c.beta) - 2.0 * yz.Z * c.gamma,
            kI * (f.phit_x - f.phi_x) + 2.0 * yz.Y * (c.alpha - c.beta) + 2.0 * yz.Z * c.gamma};
}

/// Space-like defect, t-part: Y_t = -k i(phi_x + phi~_x) Y - gamma S, Z_t = k i(phi_x + phi~_x) Z + (alpha + beta) S.
inline std::pair<cplx, cplx> bt_residual_t(const BTFields& f, YZ yz, YZ yz_t, cplx theta, double transport = kBTTransport) {
    const auto c = detail::bt_coefficients(f.phi, f.phit, theta);
    const cplx g = transport * kI * (f.phi_x + f.phit_x);
    return {yz_t.Y + g * yz.Y + c.gamma * c.source, yz_t.Z - g * yz.Z - (c.alpha + c.beta) * c.source};
}

/// Time-like defect, x-part: Y_x = -k i(phi_t + phi~_t) Y + gamma S, Z_x = k i(phi_t + phi~_t) Z + (alpha - beta) S.
inline std::pair<cplx, cplx> bt_residual_x(const BTFields& f, YZ yz, YZ yz_x, cplx theta, double transport = kBTTransport) {
    const auto c = detail::bt_coefficients(f.phi, f.phit, theta);
    const cplx g = transport * kI * (f.phi_t + f.phit_t);
    return {yz_x.Y + g * yz.Y - c.gamma * c.source, yz_x.Z - g * yz.Z - (c.alpha - c.beta) * c.source};
}

/// All first derivatives of (phi~, Y, Z) implied by the relations at one point.
struct BTRates {
    cplx phit_t, phit_x, Y_t, Z_t, Y_x, Z_x;
};

inline BTRates bt_rates(const FieldJet& phi, cplx phit, YZ yz, cplx theta) {
    const auto c = detail::bt_coefficients(phi.phi, phit, theta);
    BTRates r;
    r.phit_t = phi.phi_t - kI * (-2.0 * yz.Y * (c.alpha + c.beta) + 2.0 * yz.Z * c.gamma);
    r.phit_x = phi.phi_x - kI * (-2.0 * yz.Y * (c.alpha - c.beta) - 2.0 * yz.Z * c.gamma);
    const cplx gt = kBTTransport * kI * (phi.phi_x + r.phit_x);
    const cplx gx = kBTTransport * kI * (phi.phi_t + r.phit_t);
    r.Y_t = -gt * yz.Y - c.gamma * c.source;
    r.Z_t = gt * yz.Z + (c.alpha + c.beta) * c.source;
    r.Y_x = -gx * yz.Y + c.gamma * c.source;
    r.Z_x = gx * yz.Z + (c.alpha - c.beta) * c.source;
    return r;
}

// ---------------------------------------------------------------- Backlund-driven generation

/// phi~, Y, Z and the independently carried X on a uniform x grid at one time.
struct BTSlice {
    double x_min = 0.0, h = 1.0, t = 0.0;
    CVec phit, Y, Z, X;

    std::size_t points() const { return phit.size(); }
    double x(std::size_t k) const { return x_min + static_cast<double>(k) * h; }
};

namespace detail {

/// State (phi~, Y, Z, X) derivative along t (space-like) or x (time-like) at a point.
inline CVec bt_point_rate(const FieldJet& phi, const CVec& s, cplx theta, bool along_t) {
    const BTRates r = bt_rates(phi, s[0], {s[1], s[2]}, theta);
    const cplx dphit = along_t ? r.phit_t : r.phit_x;
    const cplx dphi = along_t ? phi.phi_t : phi.phi_x;
    return {dphit, along_t ? r.Y_t : r.Y_x, along_t ? r.Z_t : r.Z_x, s[3] * 0.5 * kI * (dphit - dphi)};
}

}  // namespace detail

/// Consistent initial slice: integrates the time-like (x-part) relations along the line t = t0
/// from seed values at x_min with RK4 of step h.
inline BTSlice bt_space_profile(const JetFn& phi, double t0, double x_min, double h, std::size_t points, cplx seed_phit,
                                YZ seed_yz, cplx theta) {
    if (points < 2 || !(h > 0.0)) throw ConfigError("bt_space_profile needs at least 2 points and h > 0");
    BTSlice s{x_min, h, t0, {}, {}, {}, {}};
    CVec y{seed_phit, seed_yz.Y, seed_yz.Z, darboux_X(phi(x_min, t0).phi, seed_phit)};
    auto rate = [&](double x, const CVec& v) { return detail::bt_point_rate(phi(x, t0), v, theta, false); };
    for (std::size_t k = 0; k < points; ++k) {
        s.phit.push_back(y[0]);
        s.Y.push_back(y[1]);
        s.Z.push_back(y[2]);
        s.X.push_back(y[3]);
        if (k + 1 < points) y = rk4_step(rate, s.x(k), y, h);
        if (!all_finite(y)) throw OverflowError("bt_space_profile: non-finite state");
    }
    return s;
}

/// Initial slice from a supplied (phi~, pi~) slice: phi~_x by central differences, (Y, Z) from bt_solve_YZ.
inline BTSlice bt_slice_from_fields(const JetFn& phi, double t0, double x_min, double h, const CVec& phit,
                                    const CVec& pit, cplx theta) {
    if (phit.size() != pit.size() || phit.size() < 3) throw ConfigError("bt_slice_from_fields: bad slice sizes");
    BTSlice s{x_min, h, t0, phit, {}, {}, {}};
    const CVec dx = d_dx(phit, h, false);
    for (std::size_t k = 0; k < phit.size(); ++k) {
        const FieldJet j = phi(s.x(k), t0);
        const YZ yz = bt_solve_YZ({j.phi, j.phi_t, j.phi_x, phit[k], pit[k], dx[k]}, theta);
        s.Y.push_back(yz.Y);
        s.Z.push_back(yz.Z);
        s.X.push_back(darboux_X(j.phi, phit[k]));
    }
    return s;
}

struct BTEvolution {
    SpaceTimeGrid phit, Y, Z;
    BTSlice final_slice;
    double max_x_relation_error = 0.0;
};

/// Evolves a slice in t with the space-like (t-part) relations: at each x an RK4 integration of
/// (phi~, Y, Z, X). The input solution phi is only sampled, never modified.
inline BTEvolution bt_evolve(const JetFn& phi, const BTSlice& s0, cplx theta, double dt, double t_end) {
    if (!(dt > 0.0) || !(t_end > s0.t)) throw ConfigError("bt_evolve needs dt > 0 and t_end > slice time");
    const std::size_t steps = step_count(dt, t_end - s0.t);
    const double step = (t_end - s0.t) / static_cast<double>(steps);
    const std::size_t nx = s0.points();
    BTEvolution out;
    out.phit = SpaceTimeGrid{s0.x_min, s0.h, s0.t, step, nx, steps + 1, CVec((steps + 1) * nx)};
    out.Y = out.Z = out.phit;
    out.final_slice = s0;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double x = s0.x(ix);
        auto rate = [&](double t, const CVec& v) { return detail::bt_point_rate(phi(x, t), v, theta, true); };
        CVec y{s0.phit[ix], s0.Y[ix], s0.Z[ix], s0.X[ix]};
        for (std::size_t it = 0; it <= steps; ++it) {
            const double t = s0.t + static_cast<double>(it) * step;
            out.phit(it, ix) = y[0];
            out.Y(it, ix) = y[1];
            out.Z(it, ix) = y[2];
            out.max_x_relation_error =
                std::max(out.max_x_relation_error, std::abs(y[3] - darboux_X(phi(x, t).phi, y[0])));
            if (it < steps) y = rk4_step(rate, t, y, step);
            if (!all_finite(y)) throw OverflowError("bt_evolve: non-finite state at x = " + std::to_string(x));
        }
        out.final_slice.phit[ix] = y[0];
        out.final_slice.Y[ix] = y[1];
        out.final_slice.Z[ix] = y[2];
        out.final_slice.X[ix] = y[3];
    }
    out.final_slice.t = t_end;
    return out;
}

// ---------------------------------------------------------------- hetero-Backlund (Liouville | free)

struct HeteroParams {
    cplx c{1.0}, Theta{};
};

/// Exponent assignments for the interface Darboux matrix: as printed (Z = B = e^{(phi~ - phi)/2}),
/// printed with an i in that exponent, and with the two exponents swapped.
enum class HeteroVariant { printed, printed_i, swapped };

inline const char* to_string(HeteroVariant v) {
    switch (v) {
        case HeteroVariant::printed: return "printed";
        case HeteroVariant::printed_i: return "printed_i";
        case HeteroVariant::swapped: return "swapped";
    }
    return "?";
}

struct HeteroDarboux {
    cplx A, B, X, Z;
};

inline HeteroDarboux hetero_darboux(cplx phi, cplx phit, HeteroVariant v = HeteroVariant::swapped) {
    const cplx plus = std::exp(0.5 * kI * (phit + phi));
    const cplx minus_i = std::exp(0.5 * kI * (phit - phi));
    switch (v) {
        case HeteroVariant::printed: {
            const cplx m = std::exp(0.5 * (phit - phi));
            return {plus, m, plus, m};
        }
        case HeteroVariant::printed_i: return {plus, minus_i, plus, minus_i};
        case HeteroVariant::swapped: return {minus_i, plus, minus_i, plus};
    }
    return {};
}

/// [[A, X e^{-lambda-Theta}], [Z e^{lambda+Theta}, B]].
inline Mat2 hetero_darboux_matrix(const HeteroDarboux& d, const HeteroParams& p, cplx lambda) {
    return Mat2{{d.A, d.X * std::exp(-lambda - p.Theta)}, {d.Z * std::exp(lambda + p.Theta), d.B}};
}

/// Modified Liouville pair with tilded fields throughout; V's (1,2) entry carries -2c.
inline Mat2 modified_liouville_U(cplx phit, cplx pit, cplx c, cplx lambda) {
    return 0.5 * Mat2{{-kI * pit, -2.0 * c * std::exp(-lambda + kI * phit)},
                      {-2.0 * c * std::exp(lambda + kI * phit), kI * pit}};
}

inline Mat2 modified_liouville_V(cplx phit, cplx phit_x, cplx c, cplx lambda) {
    return 0.5 * Mat2{{-kI * phit_x, -2.0 * c * std::exp(-lambda + kI * phit)},
                      {2.0 * c * std::exp(lambda + kI * phit), kI * phit_x}};
}

inline Mat2 free_U(cplx pi) { return -0.5 * kI * pi * Mat2::Identity(); }
inline Mat2 free_V(cplx phi_x) { return -0.5 * kI * phi_x * Mat2::Identity(); }

/// Samples on a light-cone lattice z = z0 + i h, w = w0 + j h (z = x + t, w = x - t).
struct LightConeGrid {
    double z0 = 0.0, w0 = 0.0, h = 1.0;
    std::size_t nz = 0, nw = 0;
    CVec values;

    cplx& operator()(std::size_t iz, std::size_t iw) { return values[iz * nw + iw]; }
    const cplx& operator()(std::size_t iz, std::size_t iw) const { return values[iz * nw + iw]; }
    double z(std::size_t iz) const { return z0 + static_cast<double>(iz) * h; }
    double w(std::size_t iw) const { return w0 + static_cast<double>(iw) * h; }
};

/// Free field phi = f(z) + g(w); f and g return (value, first, second derivative).
struct FreeField {
    LightConeFn f, g;

    cplx operator()(double z, double w) const { return f(z)[0] + g(w)[0]; }
};

inline LightConeGrid sample(const FreeField& phi, double z0, double w0, double h, std::size_t nz, std::size_t nw) {
    LightConeGrid g{z0, w0, h, nz, nw, CVec(nz * nw)};
    for (std::size_t i = 0; i < nz; ++i)
        for (std::size_t j = 0; j < nw; ++j) g(i, j) = phi(g.z(i), g.w(j));
    return g;
}

struct HeteroGeneration {
    LightConeGrid phit;
    bool aborted = false;
    std::string abort_reason;
    double singular_z = 0.0, singular_w = 0.0;
};

/// Fills the rectangle from phi~(z0, w0) = seed. With d_z, d_w the plain light-cone derivatives the
/// relations read d_z phi~ = f' + i c e^Theta e^{i(phi~ + phi)} and d_w phi~ = -g' + i c e^{-Theta} e^{i(phi~ - phi)}
/// (the combinations d_x +- d_t are twice these). The seed line w = w0 is integrated first,
/// then every z-node is continued along w, both with RK4 of step h.
inline HeteroGeneration hetero_bt_generate(const FreeField& phi, const HeteroParams& p, double z0, double w0, double h,
                                           std::size_t nz, std::size_t nw, cplx seed, double blowup = 1e8) {
    if (nz < 2 || nw < 2 || !(h > 0.0)) throw ConfigError("hetero_bt_generate needs a 2x2 or larger lattice");
    if (p.c == cplx{}) throw ConfigError("hetero coupling c must be nonzero");
    HeteroGeneration out{LightConeGrid{z0, w0, h, nz, nw, CVec(nz * nw)}};
    const cplx ce = p.c * std::exp(p.Theta), cm = p.c * std::exp(-p.Theta);
    const cplx g0 = phi.g(w0)[0];
    auto along_z = [&](double z, const CVec& y) {
        const auto fz = phi.f(z);
        return CVec{fz[1] + kI * ce * std::exp(kI * (y[0] + fz[0] + g0))};
    };
    auto check = [&](const CVec& y, double z, double w) {
        if (all_finite(y) && std::abs(std::exp(kI * y[0])) < blowup) return true;
        out.aborted = true;
        out.singular_z = z;
        out.singular_w = w;
        out.abort_reason = "e^{i phi~} blow-up near z = " + std::to_string(z) + ", w = " + std::to_string(w);
        return false;
    };
    CVec y{seed};
    for (std::size_t i = 0; i < nz; ++i) {
        out.phit(i, 0) = y[0];
        if (i + 1 < nz) {
            y = rk4_step(along_z, out.phit.z(i), y, h);
            if (!check(y, out.phit.z(i + 1), w0)) return out;
        }
    }
    for (std::size_t i = 0; i < nz; ++i) {
        const auto fz = phi.f(out.phit.z(i));
        auto along_w = [&](double w, const CVec& v) {
            const auto gw = phi.g(w);
            return CVec{-gw[1] + kI * cm * std::exp(kI * (v[0] - fz[0] - gw[0]))};
        };
        CVec v{out.phit(i, 0)};
        for (std::size_t j = 0; j + 1 < nw; ++j) {
            v = rk4_step(along_w, out.phit.w(j), v, h);
            if (!check(v, out.phit.z(i), out.phit.w(j + 1))) return out;
            out.phit(i, j + 1) = v[0];
        }
    }
    return out;
}

/// phi~ for phi = 0: e^{-i phi~} = e^{-i seed} + c e^Theta (z - z0) + c e^{-Theta} (w - w0).
inline cplx hetero_free_closed_form(const HeteroParams& p, double z0, double w0, cplx seed, double z, double w) {
    const cplx psi = std::exp(-kI * seed) + p.c * std::exp(p.Theta) * (z - z0) + p.c * std::exp(-p.Theta) * (w - w0);
    return kI * std::log(psi);
}

namespace detail {

inline void require_interior(const LightConeGrid& g, std::size_t margin) {
    if (g.nz < 2 * margin + 1 || g.nw < 2 * margin + 1 || margin < 1) throw ConfigError("lattice too small for stencil");
}

/// Central differences in z and w at an interior node.
inline std::pair<cplx, cplx> dz_dw(const LightConeGrid& g, std::size_t i, std::size_t j) {
    return {(g(i + 1, j) - g(i - 1, j)) / (2.0 * g.h), (g(i, j + 1) - g(i, j - 1)) / (2.0 * g.h)};
}

}  // namespace detail

/// Max |phi~_xx - phi~_tt + 4 i c^2 e^{2 i phi~}| over the interior, with phi~_xx - phi~_tt = 4 d_z d_w phi~
/// by the centred mixed difference.
inline double max_em1_residual(const LightConeGrid& g, cplx c, std::size_t margin = 1) {
    detail::require_interior(g, margin);
    double worst = 0.0;
    for (std::size_t i = margin; i + margin < g.nz; ++i)
        for (std::size_t j = margin; j + margin < g.nw; ++j) {
            const cplx mixed = (g(i + 1, j + 1) - g(i + 1, j - 1) - g(i - 1, j + 1) + g(i - 1, j - 1)) / (4.0 * g.h * g.h);
            worst = std::max(worst, std::abs(4.0 * mixed + 4.0 * kI * c * c * std::exp(2.0 * kI * g(i, j))));
        }
    return worst;
}

/// Max residuals of both light-cone relations over the interior (central differences).
inline std::pair<double, double> max_lbt_residual(const LightConeGrid& phit, const LightConeGrid& phi,
                                                  const HeteroParams& p, std::size_t margin = 1) {
    detail::require_interior(phit, margin);
    double rz = 0.0, rw = 0.0;
    for (std::size_t i = margin; i + margin < phit.nz; ++i)
        for (std::size_t j = margin; j + margin < phit.nw; ++j) {
            const auto [tz, tw] = detail::dz_dw(phit, i, j);
            const auto [fz, fw] = detail::dz_dw(phi, i, j);
            const cplx a = phit(i, j), b = phi(i, j);
            rz = std::max(rz, std::abs(2.0 * kI * (tz - fz) + 2.0 * p.c * std::exp(p.Theta) * std::exp(kI * (a + b))));
            rw = std::max(rw, std::abs(2.0 * kI * (tw + fw) + 2.0 * p.c * std::exp(-p.Theta) * std::exp(kI * (a - b))));
        }
    return {rz, rw};
}

/// Max over interior nodes of |dL~/dt - (V+ L~ - L~ V-)| with d_t = d_z - d_w and d_x = d_z + d_w
/// by central differences.
inline double interface_residual(const LightConeGrid& phi, const LightConeGrid& phit, const HeteroParams& p,
                                 cplx lambda, HeteroVariant v = HeteroVariant::swapped, std::size_t margin = 1) {
    detail::require_interior(phi, margin);
    if (phi.nz != phit.nz || phi.nw != phit.nw) throw ConfigError("interface_residual: lattice mismatch");
    auto lt = [&](std::size_t i, std::size_t j) {
        return hetero_darboux_matrix(hetero_darboux(phi(i, j), phit(i, j), v), p, lambda);
    };
    double worst = 0.0;
    for (std::size_t i = margin; i + margin < phi.nz; ++i)
        for (std::size_t j = margin; j + margin < phi.nw; ++j) {
            const Mat2 dz = (lt(i + 1, j) - lt(i - 1, j)) / (2.0 * phi.h);
            const Mat2 dw = (lt(i, j + 1) - lt(i, j - 1)) / (2.0 * phi.h);
            const auto [tz, tw] = detail::dz_dw(phit, i, j);
            const auto [fz, fw] = detail::dz_dw(phi, i, j);
            const Mat2 l = lt(i, j);
            const Mat2 vp = modified_liouville_V(phit(i, j), tz + tw, p.c, lambda);
            const Mat2 r = (dz - dw) - (vp * l - l * free_V(fz + fw));
            worst = std::max(worst, max_abs(r));
        }
    return worst;
}

struct VariantScan {
    HeteroVariant best = HeteroVariant::swapped;
    std::vector<std::pair<HeteroVariant, double>> residuals;
};

/// Interface residual of every exponent variant on a reference pair; the smallest wins.
inline VariantScan scan_variants(const LightConeGrid& phi, const LightConeGrid& phit, const HeteroParams& p, cplx lambda) {
    VariantScan s;
    double best = INFINITY;
    for (auto v : {HeteroVariant::printed, HeteroVariant::printed_i, HeteroVariant::swapped}) {
        const double r = interface_residual(phi, phit, p, lambda, v);
        s.residuals.emplace_back(v, r);
        if (r < best) {
            best = r;
            s.best = v;
        }
    }
    return s;
}

}  // namespace liouville
