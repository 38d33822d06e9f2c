#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "integrators.hpp"
#include "laurent.hpp"
#include "random.hpp"

namespace liouville {

/// Periodic deformed-oscillator chain. Sites are 0-based; site N is site 0.
template <class T>
struct BasicLatticeState {
    std::vector<T> a, a_bar, v;

    std::size_t size() const { return v.size(); }
    std::size_t wrap(long j) const {
        const long n = static_cast<long>(size());
        return static_cast<std::size_t>(((j % n) + n) % n);
    }
    T b(long j) const { return a[wrap(j)] / v[wrap(j)]; }
    T b_bar(long j) const { return a_bar[wrap(j)] / v[wrap(j)]; }
};

using LatticeState = BasicLatticeState<cplx>;

inline void validate(const LatticeState& s) {
    if (s.size() < 1 || s.a.size() != s.size() || s.a_bar.size() != s.size())
        throw ConfigError("lattice state arrays must be nonempty and of equal length");
    for (std::size_t j = 0; j < s.size(); ++j)
        if (s.v[j] == cplx{}) throw SingularStateError("v_" + std::to_string(j) + " = 0");
}

inline LatticeState zero_amplitude_state(std::size_t n) {
    return {CVec(n), CVec(n), CVec(n, 1.0)};
}

/// |a|, |a_bar| <= amplitude and v = exp(w) with |w| <= log_v_radius.
inline LatticeState random_state(Sampler& rng, std::size_t n, double amplitude = 1.0, double log_v_radius = 0.5) {
    LatticeState s{CVec(n), CVec(n), CVec(n)};
    for (std::size_t j = 0; j < n; ++j) {
        s.a[j] = rng.disk(amplitude);
        s.a_bar[j] = rng.disk(amplitude);
        s.v[j] = std::exp(rng.disk(log_v_radius));
    }
    return s;
}

/// Uniform fixed point of the bulk flow: a = a_bar = sqrt(1 - v^2) at every site.
inline LatticeState uniform_fixed_point(std::size_t n, cplx v) {
    const cplx a = std::sqrt(1.0 - v * v);
    return {CVec(n, a), CVec(n, a), CVec(n, v)};
}

/// a (1 + d1), a_bar (1 + d2), v exp(d3) with seeded |d| <= eps, site by site.
inline LatticeState perturb(Sampler& rng, const LatticeState& s, double eps) {
    LatticeState r = s;
    for (std::size_t j = 0; j < s.size(); ++j) {
        r.a[j] *= 1.0 + rng.disk(eps);
        r.a_bar[j] *= 1.0 + rng.disk(eps);
        r.v[j] *= std::exp(rng.disk(eps));
    }
    return r;
}

/// Background modulus and phase of v for long runs. The complex flow has growing modes
/// (rate up to 4 at the zero-amplitude point); around this fixed point the largest growth
/// rate is 2 / |v|^2 = 0.5, so seeded perturbations stay resolved over t = 5.
inline const cplx kLongRunBackground = std::polar(2.0, std::numbers::pi / 4.0);

/// s + eps * ds with eps a dual unit: every closed form then returns its derivative along ds.
inline BasicLatticeState<Dual> lift(const LatticeState& s, const LatticeState& ds) {
    BasicLatticeState<Dual> r;
    for (std::size_t j = 0; j < s.size(); ++j) {
        r.a.emplace_back(s.a[j], ds.a[j]);
        r.a_bar.emplace_back(s.a_bar[j], ds.a_bar[j]);
        r.v.emplace_back(s.v[j], ds.v[j]);
    }
    return r;
}

inline CVec pack(const LatticeState& s) {
    CVec y;
    y.reserve(3 * s.size());
    y.insert(y.end(), s.a.begin(), s.a.end());
    y.insert(y.end(), s.a_bar.begin(), s.a_bar.end());
    y.insert(y.end(), s.v.begin(), s.v.end());
    return y;
}

inline LatticeState unpack(const CVec& y, std::size_t n) {
    return {CVec(y.begin(), y.begin() + n), CVec(y.begin() + n, y.begin() + 2 * n),
            CVec(y.begin() + 2 * n, y.begin() + 3 * n)};
}

// ---------------------------------------------------------------- Lax matrix

/// [[u v - 1/(u v), a_bar], [a, -v/u]] for one site's fields (a, a_bar, v).
template <class T>
M2<T> site_lax(const T& a, const T& a_bar, const T& v, cplx u) {
    return {u * v - 1.0 / (u * v), a_bar, a, -v / u};
}

/// Lax matrix of site j as an exact Laurent matrix in u.
inline LaurentMatrix build_lax(const LatticeState& s, std::size_t j) {
    if (j >= s.size()) throw ConfigError("site index out of range");
    const cplx v = s.v[j];
    if (v == cplx{}) throw SingularStateError("v_" + std::to_string(j) + " = 0");
    LaurentMatrix m;
    m(0, 0) = LaurentSeries({{1, v}, {-1, -1.0 / v}});
    m(0, 1) = LaurentSeries::constant(s.a_bar[j]);
    m(1, 0) = LaurentSeries::constant(s.a[j]);
    m(1, 1) = LaurentSeries::monomial(-v, -1);
    return m;
}

/// T = L_{N-1} ... L_1 L_0 (highest site leftmost).
inline LaurentMatrix monodromy(const LatticeState& s) {
    validate(s);
    std::vector<LaurentMatrix> chain;
    for (std::size_t k = s.size(); k-- > 0;) chain.push_back(build_lax(s, k));
    return matrix_product_chain(chain);
}

// ---------------------------------------------------------------- charges

struct LatticeCharges {
    cplx I0, I1, I2;
};

template <class T>
T charge_I2(const BasicLatticeState<T>& s) {
    T sum{};
    const long n = static_cast<long>(s.size());
    for (long j = 0; j < n; ++j) sum += s.b_bar(j + 1) * s.b(j) - 1.0 / (s.v[j] * s.v[j]);
    return sum;
}

inline LatticeCharges charges_closed_form(const LatticeState& s) {
    validate(s);
    cplx i0{};
    for (const auto& v : s.v) i0 += std::log(v);
    return {i0, 0.0, charge_I2(s)};
}

/// ln tr T = N ln u + I0 + sum_m I^(m) u^{-m}.
inline LogExpansion charges_from_trace(const LatticeState& s, int depth = 4) {
    if (depth < 2) throw ConfigError("charges_from_trace: depth must be >= 2");
    return log_expand(monodromy(s).trace(), depth);
}

// ---------------------------------------------------------------- Poisson structure

enum class Species { a, a_bar, v };

struct FieldRef {
    Species species;
    std::size_t site;
};

/// Site-local Poisson tensor in field order (a, a_bar, v).
template <class T>
std::array<std::array<T, 3>, 3> site_poisson_tensor(const std::array<T, 3>& f) {
    const T& a = f[0];
    const T& ab = f[1];
    const T& v = f[2];
    std::array<std::array<T, 3>, 3> p{};
    p[0][2] = a * v;
    p[2][0] = -p[0][2];
    p[1][2] = -ab * v;
    p[2][1] = -p[1][2];
    p[0][1] = -2.0 * v * v;
    p[1][0] = -p[0][1];
    return p;
}

inline PoissonTensor<3> to_tensor(const std::array<std::array<cplx, 3>, 3>& p) {
    PoissonTensor<3> t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t(i, j) = p[i][j];
    return t;
}

inline std::array<cplx, 3> site_fields(const LatticeState& s, std::size_t j) { return {s.a[j], s.a_bar[j], s.v[j]}; }

inline cplx poisson_bracket(const FieldRef& f, const FieldRef& g, const LatticeState& s) {
    if (f.site >= s.size() || g.site >= s.size()) throw ConfigError("unknown field reference: site out of range");
    if (f.site != g.site) return 0.0;
    const auto p = site_poisson_tensor(site_fields(s, f.site));
    return p[static_cast<int>(f.species)][static_cast<int>(g.species)];
}

inline auto bulk_lax_fn() {
    return [](const auto& f, cplx u) { return site_lax(f[0], f[1], f[2], u); };
}

struct AlgebraSides {
    Mat4 lhs, rhs;
};

/// Both sides of {L_aj(lambda), L_bm(mu)} = delta_jm [r(lambda - mu), L_aj(lambda) L_bm(mu)],
/// the bracket side expanded bilinearly through the field table.
inline AlgebraSides quadratic_algebra_sides(const LatticeState& s, cplx lambda, cplx mu, std::size_t j, std::size_t m) {
    validate(s);
    if (j >= s.size() || m >= s.size()) throw ConfigError("site index out of range");
    const auto ja = lax_jacobian<3>(bulk_lax_fn(), site_fields(s, j), std::exp(lambda));
    const auto jb = lax_jacobian<3>(bulk_lax_fn(), site_fields(s, m), std::exp(mu));
    AlgebraSides out{Mat4::Zero(), Mat4::Zero()};
    for (int f = 0; f < 3; ++f)
        for (int g = 0; g < 3; ++g) {
            const cplx br = poisson_bracket({static_cast<Species>(f), j}, {static_cast<Species>(g), m}, s);
            if (br != cplx{}) out.lhs += br * kron(ja[f], jb[g]);
        }
    if (j == m)
        out.rhs = quadratic_bracket_rhs(to_mat(site_lax(s.a[j], s.a_bar[j], s.v[j], std::exp(lambda))),
                                        to_mat(site_lax(s.a[m], s.a_bar[m], s.v[m], std::exp(mu))), lambda, mu);
    else
        (void)r_matrix(lambda - mu);  // pole check applies regardless of the sites
    return out;
}

/// Max entrywise residual of the quadratic algebra for sites j, m.
inline double check_quadratic_algebra(const LatticeState& s, cplx lambda, cplx mu, std::size_t j, std::size_t m) {
    const auto sides = quadratic_algebra_sides(s, lambda, mu, j, m);
    return max_abs(sides.lhs - sides.rhs);
}

inline double check_quadratic_algebra(const LatticeState& s, cplx lambda, cplx mu, std::size_t j) {
    return check_quadratic_algebra(s, lambda, mu, j, j);
}

inline double jacobi_residual(const LatticeState& s, std::size_t j) {
    return jacobi_residual<3>([](const auto& f) { return site_poisson_tensor(f); }, site_fields(s, j));
}

// ---------------------------------------------------------------- dynamics

/// Bulk equations of motion with periodic neighbours.
inline LatticeState bulk_eom(const LatticeState& s) {
    validate(s);
    const long n = static_cast<long>(s.size());
    LatticeState d{CVec(n), CVec(n), CVec(n)};
    for (long j = 0; j < n; ++j) {
        const cplx v = s.v[j], a = s.a[j], ab = s.a_bar[j];
        const cplx bm = s.b(j - 1), bj = s.b(j), bbj = s.b_bar(j), bbp = s.b_bar(j + 1);
        d.a[j] = 2.0 * bm * v - 2.0 * bj / v + bbp * bj * a + bbj * bm * a;
        d.a_bar[j] = -2.0 * bbp * v + 2.0 * bbj / v - bbp * bj * ab - bbj * bm * ab;
        d.v[j] = bbp * a - ab * bm;
    }
    return d;
}

/// dI/dx for every field, ordered like `pack`.
template <class ChargeFn>
CVec gradient(const ChargeFn& charge, const LatticeState& s) {
    const std::size_t n = s.size();
    CVec g(3 * n);
    for (std::size_t k = 0; k < 3 * n; ++k) {
        CVec e(3 * n);
        e[k] = 1.0;
        g[k] = deriv_of(charge(lift(s, unpack(e, n))));
    }
    return g;
}

/// f -> {H, f} = sum_g dH/dg {g, f} through the site-local table.
template <class ChargeFn>
LatticeState bracket_flow(const ChargeFn& charge, const LatticeState& s) {
    validate(s);
    const std::size_t n = s.size();
    const CVec g = gradient(charge, s);
    LatticeState out{CVec(n), CVec(n), CVec(n)};
    std::array<CVec*, 3> dst{&out.a, &out.a_bar, &out.v};
    for (std::size_t j = 0; j < n; ++j) {
        const auto p = site_poisson_tensor(site_fields(s, j));
        for (int f = 0; f < 3; ++f) {
            cplx acc{};
            for (int q = 0; q < 3; ++q) acc += g[q * n + j] * p[q][f];
            (*dst[f])[j] = acc;
        }
    }
    return out;
}

/// Sign relating the printed equations of motion to the bracket flow {I2, f}.
inline constexpr double kFlowSign = 1.0;

/// The bracket flow f -> kFlowSign * {I2, f}.
inline LatticeState hamiltonian_flow(const LatticeState& s) {
    LatticeState d = bracket_flow([](const auto& x) { return charge_I2(x); }, s);
    for (auto* arr : {&d.a, &d.a_bar, &d.v})
        for (auto& c : *arr) c *= kFlowSign;
    return d;
}

/// Measures the sign once: +1 if v' from bulk_eom equals {I2, v}, -1 if it equals {v, I2}.
inline double calibrate_flow_sign(const LatticeState& s) {
    const LatticeState eom = bulk_eom(s);
    const LatticeState flow = bracket_flow([](const auto& x) { return charge_I2(x); }, s);
    cplx num{}, den{};
    for (std::size_t j = 0; j < s.size(); ++j) {
        num += eom.v[j] * std::conj(flow.v[j]);
        den += flow.v[j] * std::conj(flow.v[j]);
    }
    return (num / den).real() >= 0.0 ? 1.0 : -1.0;
}

// ---------------------------------------------------------------- time-Lax

inline Mat2 time_lax_A2_from(cplx b_prev, cplx b_bar_j, cplx mu) {
    const cplx w = std::exp(mu);
    Mat2 m;
    m << 2.0 * w * w - b_bar_j * b_prev, 2.0 * w * b_bar_j, 2.0 * w * b_prev, b_bar_j * b_prev;
    return m;
}

inline Mat2 time_lax_A0() { return (Mat2() << 1, 0, 0, 0).finished(); }
inline Mat2 time_lax_A1() { return Mat2::Zero(); }

/// A_j^(2)(mu) built from b_{j-1} and b_bar_j.
inline Mat2 time_lax_A2(const LatticeState& s, std::size_t j, cplx mu) {
    validate(s);
    return time_lax_A2_from(s.b(static_cast<long>(j) - 1), s.b_bar(static_cast<long>(j)), mu);
}

/// Proportionality between the trace-formula coefficient and the printed A^(2).
inline constexpr double kTimeLaxNormalization = 1.0;

/// coth(lambda - mu) and 1/sinh(lambda - mu) as series in u^{-1} with w = e^mu, known to u^{-depth}.
inline std::pair<LaurentSeries, LaurentSeries> r_matrix_series(cplx mu, int depth) {
    const cplx w = std::exp(mu);
    LaurentSeries::Coeffs ct{{0, 1.0}}, cs;
    for (int k = 1; 2 * k <= depth; ++k) ct[-2 * k] = 2.0 * std::pow(w, 2 * k);
    for (int k = 0; 2 * k + 1 <= depth; ++k) cs[-2 * k - 1] = 2.0 * std::pow(w, 2 * k + 1);
    return {LaurentSeries(ct, -depth), LaurentSeries(cs, -depth)};
}

/// Expansion coefficients A[m] (m = 0..depth, order u^{-m}) of
/// t^{-1}(lambda) tr_a{ T_a(N, j) r_ab(lambda - mu) T_a(j-1, 1) }.
inline std::vector<Mat2> time_lax_from_rmatrix(const LatticeState& s, std::size_t j, cplx mu, int depth = 4) {
    validate(s);
    if (depth < 2) throw ConfigError("time_lax_from_rmatrix: depth must be >= 2");
    if (j >= s.size()) throw ConfigError("site index out of range");
    LaurentMatrix left = LaurentMatrix::identity(), right = LaurentMatrix::identity();
    for (std::size_t k = s.size(); k-- > j;) left = left * build_lax(s, k);
    for (std::size_t k = j; k-- > 0;) right = right * build_lax(s, k);
    const LaurentSeries t_inv = series_inverse((left * right).trace(), depth);
    const auto [coth, csch] = r_matrix_series(mu, depth);

    auto unit = [](int p, int q) {
        LaurentMatrix e;
        e(p, q) = LaurentSeries::constant(1.0);
        return e;
    };
    auto tr_between = [&](int p, int q) { return (left * unit(p, q) * right).trace(); };

    // tr_a over r = coth (E11xE11 + E22xE22) + csch (E12xE21 + E21xE12)
    std::array<LaurentSeries, 4> entry;
    entry[0] = t_inv * (coth * tr_between(0, 0));
    entry[3] = t_inv * (coth * tr_between(1, 1));
    entry[2] = t_inv * (csch * tr_between(0, 1));
    entry[1] = t_inv * (csch * tr_between(1, 0));

    std::vector<Mat2> out(depth + 1, Mat2::Zero());
    for (int m = 0; m <= depth; ++m)
        for (int k = 0; k < 4; ++k) out[m](k / 2, k % 2) = entry[k].coeff(-m) / kTimeLaxNormalization;
    return out;
}

/// Ratio of (1,2) entries between the trace formula and the printed A^(2).
inline cplx calibrate_time_lax_normalization(const LatticeState& s, std::size_t j, cplx mu) {
    const auto coeffs = time_lax_from_rmatrix(s, j, mu, 2);
    return coeffs[2](0, 1) * kTimeLaxNormalization / time_lax_A2(s, j, mu)(0, 1);
}

/// |dL_j/dt - (A_{j+1} L_j - L_j A_j)| at u = e^mu, with dL_j/dt by the chain rule along `rate`.
inline double zero_curvature_residual(const LatticeState& s, std::size_t j, cplx mu, const LatticeState& rate) {
    validate(s);
    const cplx u = std::exp(mu);
    const auto sd = lift(s, rate);
    const M2<Dual> ld = site_lax(sd.a[j], sd.a_bar[j], sd.v[j], u);
    const Mat2 l = value_mat(ld), l_dot = deriv_mat(ld);
    const Mat2 a_j = time_lax_A2(s, j, mu);
    const Mat2 a_next = time_lax_A2(s, s.wrap(static_cast<long>(j) + 1), mu);
    return max_abs(l_dot - (a_next * l - l * a_j));
}

inline double zero_curvature_residual(const LatticeState& s, std::size_t j, cplx mu) {
    return zero_curvature_residual(s, j, mu, bulk_eom(s));
}

// ---------------------------------------------------------------- integration

/// Conserved-quantity monitor shared by the bulk and defect integrators.
struct ChargeSample {
    double t = 0.0;
    cplx I0, I2;
    std::vector<cplx> trace_at_probe;
};

struct Drift {
    double I0 = 0.0;  // |ln(prod v(t) / prod v(0))|, branch-free
    double I2 = 0.0;  // max |I2(t) - I2(0)|
    std::vector<double> trace;  // max |tr T(u*)(t) - tr T(u*)(0)| / |tr T(u*)(0)|
};

template <class State>
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<ChargeSample> samples;
    Drift drift;
    bool aborted = false;
    std::string abort_reason;
};

inline const std::vector<cplx> kDefaultProbes{2.0, 3.0};

struct IntegrateOptions {
    std::vector<cplx> probes = kDefaultProbes;
    std::size_t record_every = 1;
    double singular_threshold = 1e-10;
};

/// Runs fixed-step RK4 and fills samples and drift. `rhs` maps packed state to rate,
/// `sample` computes a ChargeSample, `product` returns the branch-free I0 monitor
/// (the product whose log is I0), `singular` tests a packed state.
template <class State, class Rhs, class Sample, class Product, class Unpack, class Singular>
Trajectory<State> run_rk4(const CVec& y0, double dt, double t_end, const IntegrateOptions& opt, const Rhs& rhs,
                          const Sample& sample, const Product& product, const Unpack& unpack_fn,
                          const Singular& singular) {
    if (!(dt > 0.0) || dt > t_end) throw ConfigError("integrate: require 0 < dt <= t_end");
    Trajectory<State> tr;
    CVec y = y0;
    const std::size_t steps = step_count(dt, t_end);
    const cplx p0 = product(y);
    const ChargeSample s0 = sample(0.0, y);
    tr.drift.trace.assign(opt.probes.size(), 0.0);
    auto record = [&](double t, const CVec& yy, const ChargeSample& cs) {
        tr.times.push_back(t);
        tr.states.push_back(unpack_fn(yy));
        tr.samples.push_back(cs);
    };
    record(0.0, y, s0);
    double t = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double h = std::min(dt, t_end - t);
        CVec next = rk4_step(rhs, t, y, h);
        t = (k == steps) ? t_end : t + h;
        if (!all_finite(next) || singular(next)) {
            tr.aborted = true;
            tr.abort_reason = "singular trajectory at t = " + std::to_string(t);
            return tr;
        }
        y = std::move(next);
        const ChargeSample cs = sample(t, y);
        tr.drift.I0 = std::max(tr.drift.I0, std::abs(std::log(product(y) / p0)));
        tr.drift.I2 = std::max(tr.drift.I2, std::abs(cs.I2 - s0.I2));
        for (std::size_t q = 0; q < opt.probes.size(); ++q)
            tr.drift.trace[q] = std::max(
                tr.drift.trace[q], std::abs(cs.trace_at_probe[q] - s0.trace_at_probe[q]) / std::abs(s0.trace_at_probe[q]));
        if (k % opt.record_every == 0 || k == steps) record(t, y, cs);
    }
    return tr;
}

inline cplx product_of_v(const LatticeState& s) {
    cplx p = 1.0;
    for (const auto& v : s.v) p *= v;
    return p;
}

using LatticeEom = std::function<LatticeState(const LatticeState&)>;

/// Bulk RK4 trajectory of the vector field `eom` with I0, I2 and tr T(u*) monitoring.
inline Trajectory<LatticeState> integrate(const LatticeState& s0, double dt, double t_end, const IntegrateOptions& opt,
                                          const LatticeEom& eom) {
    validate(s0);
    const std::size_t n = s0.size();
    const cplx log_p0 = charges_closed_form(s0).I0;
    const cplx p0 = product_of_v(s0);
    auto rhs = [n, &eom](double, const CVec& y) { return pack(eom(unpack(y, n))); };
    auto sample = [&](double t, const CVec& y) {
        const LatticeState s = unpack(y, n);
        ChargeSample cs;
        cs.t = t;
        cs.I0 = log_p0 + std::log(product_of_v(s) / p0);
        cs.I2 = charge_I2(s);
        const LaurentSeries tr_t = monodromy(s).trace();
        for (const auto& u : opt.probes) cs.trace_at_probe.push_back(tr_t.eval(u));
        return cs;
    };
    auto product = [n](const CVec& y) { return product_of_v(unpack(y, n)); };
    auto singular = [n, &opt](const CVec& y) {
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(y[2 * n + j]) < opt.singular_threshold) return true;
        return false;
    };
    return run_rk4<LatticeState>(pack(s0), dt, t_end, opt, rhs, sample, product,
                                 [n](const CVec& y) { return unpack(y, n); }, singular);
}

inline Trajectory<LatticeState> integrate(const LatticeState& s0, double dt, double t_end,
                                          const IntegrateOptions& opt = {}) {
    return integrate(s0, dt, t_end, opt, bulk_eom);
}

}  // namespace liouville
