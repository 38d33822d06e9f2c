#pragma once

#include <array>
#include <string>
#include <utility>

#include "lattice.hpp"

namespace liouville {

/// Type-II defect occupying site n (0-based) of a periodic chain. The bulk arrays keep
/// an entry for site n, which the defect replaces and which is never read.
/// Neighbour indices n - 1 and n + 1 wrap around the chain.
template <class T>
struct BasicDefectSite {
    std::size_t n = 1;
    cplx theta{};
    T z{}, z_bar{}, X{1.0};

    T y() const { return z / X; }
    T y_bar() const { return z_bar / X; }
};

using DefectSite = BasicDefectSite<cplx>;

enum class DefectSpecies { z, z_bar, X };

/// Chain and defect checks. The local formulas (charges, time-Lax, equations of motion)
/// need distinct neighbours n - 1 and n + 1, hence at least 3 sites; the monodromy alone
/// accepts 2.
inline void validate(const LatticeState& s, const DefectSite& d, std::size_t min_sites = 3) {
    validate(s);
    if (s.size() < min_sites)
        throw ConfigError("a defect chain needs at least " + std::to_string(min_sites) + " sites");
    if (d.n >= s.size()) throw ConfigError("defect site out of range");
    if (d.X == cplx{}) throw SingularStateError("defect X = 0");
}

inline DefectSite transparent_defect(std::size_t n) { return {n, 0.0, 0.0, 0.0, 1.0}; }

inline DefectSite random_defect(Sampler& rng, std::size_t n, double amplitude = 1.0, double log_x_radius = 0.5,
                                double theta_radius = 0.5) {
    DefectSite d;
    d.n = n;
    d.theta = rng.disk(theta_radius);
    d.z = rng.disk(amplitude);
    d.z_bar = rng.disk(amplitude);
    d.X = std::exp(rng.disk(log_x_radius));
    return d;
}

/// Defect seeded near the bulk fields of site n: theta = d0, z = a_n (1 + d1),
/// z_bar = a_bar_n (1 + d2), X = v_n exp(d3), with |d| <= eps.
inline DefectSite perturbed_defect(Sampler& rng, const LatticeState& s, std::size_t n, double eps) {
    DefectSite d;
    d.n = n;
    d.theta = rng.disk(eps);
    d.z = s.a[n] * (1.0 + rng.disk(eps));
    d.z_bar = s.a_bar[n] * (1.0 + rng.disk(eps));
    d.X = s.v[n] * std::exp(rng.disk(eps));
    return d;
}

inline BasicDefectSite<Dual> lift(const DefectSite& d, cplx dz, cplx dz_bar, cplx dX) {
    return {d.n, d.theta, Dual(d.z, dz), Dual(d.z_bar, dz_bar), Dual(d.X, dX)};
}

// ---------------------------------------------------------------- Lax matrix

/// [[u e^-theta X - e^theta/(u X), z_bar], [z, u e^-theta / X - e^theta X / u]].
template <class T>
M2<T> defect_lax(const T& z, const T& z_bar, const T& X, cplx theta, cplx u) {
    const cplx em = std::exp(-theta), ep = std::exp(theta);
    return {u * em * X - ep / (u * X), z_bar, z, u * em / X - ep * X / u};
}

inline LaurentMatrix build_defect_lax(const DefectSite& d) {
    if (d.X == cplx{}) throw SingularStateError("defect X = 0");
    const cplx em = std::exp(-d.theta), ep = std::exp(d.theta);
    LaurentMatrix m;
    m(0, 0) = LaurentSeries({{1, em * d.X}, {-1, -ep / d.X}});
    m(0, 1) = LaurentSeries::constant(d.z_bar);
    m(1, 0) = LaurentSeries::constant(d.z);
    m(1, 1) = LaurentSeries({{1, em / d.X}, {-1, -ep * d.X}});
    return m;
}

/// Monodromy with the defect matrix in place of L_n.
inline LaurentMatrix defect_monodromy(const LatticeState& s, const DefectSite& d) {
    validate(s, d, 2);
    std::vector<LaurentMatrix> chain;
    for (std::size_t k = s.size(); k-- > 0;) chain.push_back(k == d.n ? build_defect_lax(d) : build_lax(s, k));
    return matrix_product_chain(chain);
}

// ---------------------------------------------------------------- Poisson structure

/// Defect Poisson tensor in field order (z, z_bar, X).
template <class T>
std::array<std::array<T, 3>, 3> defect_poisson_tensor(const std::array<T, 3>& f) {
    const T& z = f[0];
    const T& zb = f[1];
    const T& X = f[2];
    std::array<std::array<T, 3>, 3> p{};
    p[0][2] = z * X;
    p[2][0] = -p[0][2];
    p[1][2] = -zb * X;
    p[2][1] = -p[1][2];
    p[0][1] = 2.0 * (1.0 / (X * X) - X * X);
    p[1][0] = -p[0][1];
    return p;
}

inline std::array<cplx, 3> defect_fields(const DefectSite& d) { return {d.z, d.z_bar, d.X}; }

inline cplx defect_bracket(DefectSpecies f, DefectSpecies g, const DefectSite& d) {
    return defect_poisson_tensor(defect_fields(d))[static_cast<int>(f)][static_cast<int>(g)];
}

/// Bulk and defect fields Poisson-commute (ultralocality).
inline cplx mixed_bracket(const FieldRef& f, DefectSpecies, const LatticeState& s, const DefectSite& d) {
    if (f.site >= s.size() || f.site == d.n) throw ConfigError("unknown bulk field reference");
    return 0.0;
}

inline auto defect_lax_fn(cplx theta) {
    return [theta](const auto& f, cplx u) { return defect_lax(f[0], f[1], f[2], theta, u); };
}

/// Max entrywise residual of the quadratic algebra for the defect matrix.
inline double check_defect_algebra(const DefectSite& d, cplx lambda, cplx mu) {
    if (d.X == cplx{}) throw SingularStateError("defect X = 0");
    const auto f = defect_fields(d);
    const PoissonTensor<3> t = to_tensor(defect_poisson_tensor(f));
    const Mat4 rhs = quadratic_bracket_rhs(to_mat(defect_lax(d.z, d.z_bar, d.X, d.theta, std::exp(lambda))),
                                           to_mat(defect_lax(d.z, d.z_bar, d.X, d.theta, std::exp(mu))), lambda, mu);
    const Mat4 lhs = quadratic_bracket_lhs<3>(defect_lax_fn(d.theta), f, t, lambda, mu);
    return max_abs(lhs - rhs);
}

inline double defect_jacobi_residual(const DefectSite& d) {
    return jacobi_residual<3>([](const auto& f) { return defect_poisson_tensor(f); }, defect_fields(d));
}

// ---------------------------------------------------------------- charges

/// b~_{n,n-1} = e^theta y + b_{n-1} X^-2.
template <class T>
T b_tilde(const BasicLatticeState<T>& s, const BasicDefectSite<T>& d) {
    const long n = static_cast<long>(d.n);
    return std::exp(d.theta) * d.y() + s.b(n - 1) / (d.X * d.X);
}

/// b_bar~_{n,n+1} = e^theta y_bar + b_bar_{n+1} X^-2.
template <class T>
T b_bar_tilde(const BasicLatticeState<T>& s, const BasicDefectSite<T>& d) {
    const long n = static_cast<long>(d.n);
    return std::exp(d.theta) * d.y_bar() + s.b_bar(n + 1) / (d.X * d.X);
}

template <class T>
T defect_charge_I2(const BasicLatticeState<T>& s, const BasicDefectSite<T>& d) {
    const long N = static_cast<long>(s.size()), n = static_cast<long>(d.n);
    const long prev = static_cast<long>(s.wrap(n - 1));
    const cplx et = std::exp(d.theta);
    T sum{};
    for (long j = 0; j < N; ++j) {
        if (j != n && j != prev) sum += s.b_bar(j + 1) * s.b(j);
        if (j != n) sum -= 1.0 / (s.v[j] * s.v[j]);
    }
    sum += et * (d.y_bar() * s.b(n - 1) + s.b_bar(n + 1) * d.y());
    sum += s.b_bar(n + 1) * s.b(n - 1) / (d.X * d.X);
    sum -= et * et / (d.X * d.X);
    return sum;
}

inline LatticeCharges defect_charges(const LatticeState& s, const DefectSite& d) {
    validate(s, d);
    cplx i0 = std::log(d.X) - d.theta;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (j != d.n) i0 += std::log(s.v[j]);
    return {i0, 0.0, defect_charge_I2(s, d)};
}

inline LogExpansion defect_charges_from_trace(const LatticeState& s, const DefectSite& d, int depth = 4) {
    if (depth < 2) throw ConfigError("defect_charges_from_trace: depth must be >= 2");
    return log_expand(defect_monodromy(s, d).trace(), depth);
}

// ---------------------------------------------------------------- time-Lax

/// Time-Lax matrix A_k at every site, deformed at k = n and k = n + 1.
inline Mat2 defect_time_lax_at(const LatticeState& s, const DefectSite& d, std::size_t k, cplx mu) {
    validate(s, d);
    if (k >= s.size()) throw ConfigError("site index out of range");
    const long kk = static_cast<long>(k);
    const std::size_t next = s.wrap(static_cast<long>(d.n) + 1);
    if (k == d.n) return time_lax_A2_from(s.b(kk - 1), b_bar_tilde(s, d), mu);
    if (k == next) return time_lax_A2_from(b_tilde(s, d), s.b_bar(kk), mu);
    return time_lax_A2_from(s.b(kk - 1), s.b_bar(kk), mu);
}

inline std::pair<Mat2, Mat2> defect_time_lax(const LatticeState& s, const DefectSite& d, cplx mu) {
    return {defect_time_lax_at(s, d, d.n, mu), defect_time_lax_at(s, d, s.wrap(static_cast<long>(d.n) + 1), mu)};
}

// ---------------------------------------------------------------- dynamics

struct DefectRate {
    LatticeState bulk;  // entry n is zero
    cplx z, z_bar, X;
};

inline DefectRate defect_eom(const LatticeState& s, const DefectSite& d) {
    validate(s, d);
    const long N = static_cast<long>(s.size()), n = static_cast<long>(d.n);
    const long prev = static_cast<long>(s.wrap(n - 1)), next = static_cast<long>(s.wrap(n + 1));
    const cplx bt = b_tilde(s, d), bbt = b_bar_tilde(s, d), et = std::exp(d.theta);
    DefectRate r{{CVec(N), CVec(N), CVec(N)}, 0.0, 0.0, 0.0};
    for (long j = 0; j < N; ++j) {
        if (j == n) continue;
        const cplx v = s.v[j], a = s.a[j], ab = s.a_bar[j];
        const cplx bm = (j == next) ? bt : s.b(j - 1);
        const cplx bbp = (j == prev) ? bbt : s.b_bar(j + 1);
        const cplx bj = s.b(j), bbj = s.b_bar(j);
        r.bulk.a[j] = 2.0 * bm * v - 2.0 * bj / v + bbp * bj * a + bbj * bm * a;
        r.bulk.a_bar[j] = -2.0 * bbp * v + 2.0 * bbj / v - bbp * bj * ab - bbj * bm * ab;
        r.bulk.v[j] = bbp * a - ab * bm;
    }
    const cplx bprev = s.b(n - 1), bbnext = s.b_bar(n + 1);
    r.z = 2.0 * et * bprev * d.X - 2.0 * et * bt / d.X + bbnext * bt * d.z + bbt * bprev * d.z;
    r.z_bar = -2.0 * et * bbnext * d.X + 2.0 * et * bbt / d.X - bbnext * bt * d.z_bar - bbt * bprev * d.z_bar;
    r.X = et * bbnext * d.z - et * d.z_bar * bprev;
    return r;
}

/// f -> {I~2, f} through the bulk and defect tables.
inline DefectRate defect_hamiltonian_flow(const LatticeState& s, const DefectSite& d) {
    validate(s, d);
    const std::size_t N = s.size();
    auto charge = [&](const LatticeState& ds, cplx dz, cplx dzb, cplx dX) {
        const auto sd = lift(s, ds);
        return deriv_of(defect_charge_I2(sd, lift(d, dz, dzb, dX)));
    };
    LatticeState zero{CVec(N), CVec(N), CVec(N)};
    DefectRate out{zero, 0.0, 0.0, 0.0};
    std::array<CVec*, 3> dst{&out.bulk.a, &out.bulk.a_bar, &out.bulk.v};
    for (std::size_t j = 0; j < N; ++j) {
        if (j == d.n) continue;
        std::array<cplx, 3> grad;
        for (int q = 0; q < 3; ++q) {
            LatticeState e = zero;
            (q == 0 ? e.a : q == 1 ? e.a_bar : e.v)[j] = 1.0;
            grad[q] = charge(e, 0.0, 0.0, 0.0);
        }
        const auto p = site_poisson_tensor(site_fields(s, j));
        for (int f = 0; f < 3; ++f) {
            cplx acc{};
            for (int q = 0; q < 3; ++q) acc += grad[q] * p[q][f];
            (*dst[f])[j] = acc;
        }
    }
    const std::array<cplx, 3> grad{charge(zero, 1.0, 0.0, 0.0), charge(zero, 0.0, 1.0, 0.0),
                                   charge(zero, 0.0, 0.0, 1.0)};
    const auto p = defect_poisson_tensor(defect_fields(d));
    std::array<cplx, 3> flow{};
    for (int f = 0; f < 3; ++f)
        for (int q = 0; q < 3; ++q) flow[f] += grad[q] * p[q][f];
    out.z = kFlowSign * flow[0];
    out.z_bar = kFlowSign * flow[1];
    out.X = kFlowSign * flow[2];
    for (auto* arr : dst)
        for (auto& c : *arr) c *= kFlowSign;
    return out;
}

/// d I~2 / dt along a rate, by forward differentiation.
inline cplx defect_charge_rate(const LatticeState& s, const DefectSite& d, const DefectRate& r) {
    return deriv_of(defect_charge_I2(lift(s, r.bulk), lift(d, r.z, r.z_bar, r.X)));
}

/// |dL_k/dt - (A_{k+1} L_k - L_k A_k)| at u = e^mu for any site k, the defect matrix at k = n.
inline double defect_zero_curvature_residual(const LatticeState& s, const DefectSite& d, std::size_t k, cplx mu,
                                             const DefectRate& rate) {
    validate(s, d);
    const cplx u = std::exp(mu);
    M2<Dual> ld;
    if (k == d.n) {
        ld = defect_lax(Dual(d.z, rate.z), Dual(d.z_bar, rate.z_bar), Dual(d.X, rate.X), d.theta, u);
    } else {
        ld = site_lax(Dual(s.a[k], rate.bulk.a[k]), Dual(s.a_bar[k], rate.bulk.a_bar[k]), Dual(s.v[k], rate.bulk.v[k]),
                      u);
    }
    const Mat2 l = value_mat(ld), l_dot = deriv_mat(ld);
    const Mat2 a_k = defect_time_lax_at(s, d, k, mu);
    const Mat2 a_next = defect_time_lax_at(s, d, s.wrap(static_cast<long>(k) + 1), mu);
    return max_abs(l_dot - (a_next * l - l * a_k));
}

inline double defect_zero_curvature_residual(const LatticeState& s, const DefectSite& d, std::size_t k, cplx mu) {
    return defect_zero_curvature_residual(s, d, k, mu, defect_eom(s, d));
}

// ---------------------------------------------------------------- integration

struct DefectChain {
    LatticeState bulk;
    DefectSite defect;
};

inline CVec pack(const LatticeState& s, const DefectSite& d) {
    CVec y = pack(s);
    y.push_back(d.z);
    y.push_back(d.z_bar);
    y.push_back(d.X);
    return y;
}

inline DefectChain unpack_defect(const CVec& y, std::size_t n_sites, const DefectSite& shape) {
    DefectChain c{unpack(y, n_sites), shape};
    c.defect.z = y[3 * n_sites];
    c.defect.z_bar = y[3 * n_sites + 1];
    c.defect.X = y[3 * n_sites + 2];
    return c;
}

/// RK4 trajectory of the coupled bulk + defect system, monitoring I~0, I~2 and the trace.
inline Trajectory<DefectChain> integrate_with_defect(const LatticeState& s0, const DefectSite& d0, double dt,
                                                     double t_end, const IntegrateOptions& opt = {}) {
    validate(s0, d0);
    const std::size_t N = s0.size();
    auto product = [&](const CVec& y) {
        const auto c = unpack_defect(y, N, d0);
        cplx p = c.defect.X;
        for (std::size_t j = 0; j < N; ++j)
            if (j != d0.n) p *= c.bulk.v[j];
        return p;
    };
    const cplx p0 = product(pack(s0, d0));
    const cplx log_p0 = defect_charges(s0, d0).I0;
    auto rhs = [&](double, const CVec& y) {
        const auto c = unpack_defect(y, N, d0);
        const auto r = defect_eom(c.bulk, c.defect);
        CVec out = pack(r.bulk);
        out.push_back(r.z);
        out.push_back(r.z_bar);
        out.push_back(r.X);
        return out;
    };
    auto sample = [&](double t, const CVec& y) {
        const auto c = unpack_defect(y, N, d0);
        ChargeSample cs;
        cs.t = t;
        cs.I0 = log_p0 + std::log(product(y) / p0);
        cs.I2 = defect_charge_I2(c.bulk, c.defect);
        const LaurentSeries tr_t = defect_monodromy(c.bulk, c.defect).trace();
        for (const auto& u : opt.probes) cs.trace_at_probe.push_back(tr_t.eval(u));
        return cs;
    };
    auto singular = [&](const CVec& y) {
        for (std::size_t j = 0; j < N; ++j)
            if (j != d0.n && std::abs(y[2 * N + j]) < opt.singular_threshold) return true;
        return std::abs(y[3 * N + 2]) < opt.singular_threshold;
    };
    return run_rk4<DefectChain>(pack(s0, d0), dt, t_end, opt, rhs, sample, product,
                                [&](const CVec& y) { return unpack_defect(y, N, d0); }, singular);
}

}  // namespace liouville
