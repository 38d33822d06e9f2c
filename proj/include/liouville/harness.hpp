#pragma once

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "backlund.hpp"
#include "continuum.hpp"
#include "continuum_defect.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "lattice_defect.hpp"
#include "random.hpp"

namespace liouville::harness {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string> kModes{
    "verify-charges",  "verify-poisson",   "verify-zero-curvature", "lattice-sim", "lattice-defect-sim",
    "liouville-evolve", "monodromy-check", "defect-charges",        "hetero-bt",   "bt-evolve"};

inline constexpr std::uint64_t kDefaultSeed = 7;

// ---------------------------------------------------------------- records

/// One verification outcome. `min` and `max` bound the measured value; a NaN never passes.
struct CheckRecord {
    std::string name, anchor;
    double measured = 0.0;
    std::optional<double> min, max;
    bool pass = false;
};

/// A table written as CSV; every cell is a number.
struct Series {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Report {
    std::string mode;
    Json config = Json::object();
    std::vector<CheckRecord> checks;
    std::vector<Series> series;
    std::string error;

    bool pass() const {
        return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
    }
};

/// Builds check records; `tolerance_scale` multiplies every upper-bound tolerance. Lower bounds
/// (convergence ratios, negative-control floors) are not scaled.
class Checker {
public:
    explicit Checker(double tolerance_scale) : scale_(tolerance_scale) {}

    void at_most(std::string name, std::string anchor, double measured, double tol) {
        add(std::move(name), std::move(anchor), measured, std::nullopt, tol * scale_);
    }
    void at_least(std::string name, std::string anchor, double measured, double min) {
        add(std::move(name), std::move(anchor), measured, min, std::nullopt);
    }
    void within(std::string name, std::string anchor, double measured, double lo, double hi) {
        add(std::move(name), std::move(anchor), measured, lo, hi);
    }
    void holds(std::string name, std::string anchor, bool ok) {
        add(std::move(name), std::move(anchor), ok ? 1.0 : 0.0, 1.0, std::nullopt);
    }

    std::vector<CheckRecord>& records() { return records_; }

private:
    void add(std::string name, std::string anchor, double measured, std::optional<double> lo, std::optional<double> hi) {
        bool ok = !std::isnan(measured);
        if (lo) ok = ok && measured >= *lo;
        if (hi) ok = ok && measured <= *hi;
        records_.push_back({std::move(name), std::move(anchor), measured, lo, hi, ok});
    }

    double scale_;
    std::vector<CheckRecord> records_;
};

// ---------------------------------------------------------------- configuration

/// Typed access to a mode's JSON config. Every value read (or defaulted) is echoed in access
/// order; keys never read are rejected by `finish`.
class Params {
public:
    explicit Params(Json cfg) : in_(std::move(cfg)) {
        if (!in_.is_object()) throw ConfigError("config must be a JSON object");
    }

    double number(const std::string& key, double def) {
        const double v = read(key, def, [](const Json& j) { return j.is_number(); }, "a number").get<double>();
        if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
        return v;
    }

    double positive(const std::string& key, double def) {
        const double v = number(key, def);
        if (!(v > 0.0)) throw ConfigError("'" + key + "' must be positive");
        return v;
    }

    static bool is_whole(const Json& j) {
        return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
    }

    std::size_t count(const std::string& key, std::size_t def, std::size_t min = 1) {
        const Json v = read(key, def, is_whole, "a non-negative integer");
        const std::size_t n = v.get<std::size_t>();
        if (n < min) throw ConfigError("'" + key + "' must be at least " + std::to_string(min));
        return n;
    }

    std::uint64_t seed(std::uint64_t def) {
        return read("seed", def, is_whole, "a non-negative integer")
            .get<std::uint64_t>();
    }

    /// A complex number as `x` or `[re, im]`.
    cplx complex(const std::string& key, cplx def) {
        const Json v = read(key, Json::array({def.real(), def.imag()}), [](const Json& j) { return is_complex(j); },
                            "a number or [re, im]");
        return to_complex(v);
    }

    std::vector<double> positives(const std::string& key, const std::vector<double>& def, std::size_t min_size = 1) {
        const Json v = read(key, def, [](const Json& j) { return j.is_array(); }, "an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number() || !(e.get<double>() > 0.0))
                throw ConfigError("'" + key + "' entries must be positive numbers");
            out.push_back(e.get<double>());
        }
        if (out.size() < min_size) throw ConfigError("'" + key + "' needs at least " + std::to_string(min_size) + " entries");
        return out;
    }

    std::vector<cplx> complexes(const std::string& key, const std::vector<cplx>& def) {
        Json d = Json::array();
        for (const auto& c : def) d.push_back(Json::array({c.real(), c.imag()}));
        const Json v = read(key, d, [](const Json& j) { return j.is_array() && !j.empty(); }, "a non-empty array");
        std::vector<cplx> out;
        for (const auto& e : v) {
            if (!is_complex(e)) throw ConfigError("'" + key + "' entries must be numbers or [re, im]");
            out.push_back(to_complex(e));
        }
        return out;
    }

    std::string text(const std::string& key, const std::string& def) {
        return read(key, def, [](const Json& j) { return j.is_string(); }, "a string").get<std::string>();
    }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
        const std::string v = read(key, def, [](const Json& j) { return j.is_string(); }, "a string").get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ConfigError("'" + key + "' must be one of: " + list);
        }
        return v;
    }

    /// Rejects keys the mode never read.
    void finish() const {
        for (const auto& [k, v] : in_.items())
            if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

    const Json& echo() const { return echo_; }

private:
    static bool is_complex(const Json& j) {
        return j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number());
    }

    static cplx to_complex(const Json& j) {
        if (j.is_number()) return {j.get<double>(), 0.0};
        return {j[0].get<double>(), j[1].get<double>()};
    }

    template <class Pred>
    Json read(const std::string& key, const Json& def, Pred ok, const char* what) {
        used_.insert(key);
        const Json v = in_.contains(key) ? in_[key] : def;
        if (!ok(v)) throw ConfigError("'" + key + "' must be " + what);
        echo_[key] = v;
        return v;
    }

    Json in_;
    Json echo_ = Json::object();
    std::set<std::string> used_;
};

/// Command-line overrides applied on top of a config.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance_scale;
};

// ---------------------------------------------------------------- shared helpers

namespace detail {

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

/// Spectral probes away from the r-matrix pole sinh(lambda - mu) = 0.
inline std::pair<cplx, cplx> probe_pair(Sampler& rng) {
    for (;;) {
        const cplx l = rng.square(1.0), m = rng.square(1.0);
        if (std::abs(std::sinh(l - m)) > 0.1) return {l, m};
    }
}

inline std::vector<double> cells(cplx c) { return {c.real(), c.imag()}; }

inline void append(std::vector<double>& row, cplx c) {
    row.push_back(c.real());
    row.push_back(c.imag());
}

inline void add_complex_columns(std::vector<std::string>& cols, const std::string& name) {
    cols.push_back(name + "_re");
    cols.push_back(name + "_im");
}

/// Ratios of successive entries (coarse over fine).
inline std::vector<double> ratios(const std::vector<double>& v) {
    std::vector<double> r;
    for (std::size_t k = 1; k < v.size(); ++k) r.push_back(v[k - 1] / v[k]);
    return r;
}

inline std::string probe_label(cplx u) {
    std::ostringstream os;
    os << u.real();
    if (u.imag() != 0.0) os << (u.imag() > 0 ? "+" : "") << u.imag() << "i";
    return os.str();
}

}  // namespace detail

/// bulk_eom with the sign of the 2 b_{j-1} v_j term in da_j/dt flipped (mutation-sanity control).
inline LatticeState mutated_bulk_eom(const LatticeState& s) {
    LatticeState d = bulk_eom(s);
    for (std::size_t j = 0; j < s.size(); ++j) d.a[j] -= 4.0 * s.b(static_cast<long>(j) - 1) * s.v[j];
    return d;
}

inline LatticeEom eom_for(const std::string& mutation) {
    if (mutation == "bulk-eom-sign") return mutated_bulk_eom;
    return bulk_eom;
}

struct Context {
    Params& params;
    Checker& check;
    std::vector<Series>& series;
    std::uint64_t seed;
};

// ---------------------------------------------------------------- modes

/// Laurent-extracted charges against the closed forms, bulk and with a defect.
inline void mode_verify_charges(Context& cx) {
    auto& p = cx.params;
    const std::size_t n_min = p.count("n_min", 2), n_max = p.count("n_max", 6);
    const std::size_t samples = p.count("samples", 100);
    const std::size_t dn_min = p.count("defect_n_min", 3), dn_max = p.count("defect_n_max", 6);
    const std::size_t dsamples = p.count("defect_samples", 100);
    const double amp = p.positive("amplitude", 1.0);
    if (n_max < n_min || dn_max < dn_min) throw ConfigError("site ranges must satisfy min <= max");
    if (dn_min < 3) throw ConfigError("defect chains need at least 3 sites");
    Sampler rng(cx.seed);

    double c1 = 0.0, c2 = 0.0, c0 = 0.0;
    bool lead = true;
    for (std::size_t n = n_min; n <= n_max; ++n)
        for (std::size_t k = 0; k < samples; ++k) {
            const auto s = random_state(rng, n, amp);
            const auto c = charges_closed_form(s);
            const auto e = charges_from_trace(s, 4);
            lead = lead && e.leading_exponent == static_cast<int>(n);
            c0 = std::max(c0, detail::rel(std::exp(e.c[0]), std::exp(c.I0)));
            c1 = std::max(c1, std::abs(e.c[1]) / std::max(1.0, std::abs(c.I2)));
            c2 = std::max(c2, detail::rel(e.c[2], c.I2));
        }
    cx.check.holds("bulk.leading_power", "tr T = u^N (...): leading power equals N", lead);
    cx.check.at_most("bulk.exp_c0", "exp I(0) = prod_j v_j", c0, 1e-12);
    cx.check.at_most("bulk.c1_vanishes", "I(1) = 0", c1, 1e-12);
    cx.check.at_most("bulk.c2_equals_I2", "I(2) = sum_j (b_bar_{j+1} b_j - v_j^-2)", c2, 1e-12);

    double d0 = 0.0, d1 = 0.0, d2 = 0.0;
    lead = true;
    for (std::size_t n = dn_min; n <= dn_max; ++n)
        for (std::size_t k = 0; k < dsamples; ++k) {
            const auto s = random_state(rng, n, amp);
            const auto d = random_defect(rng, k % n, amp);
            const auto c = defect_charges(s, d);
            const auto e = defect_charges_from_trace(s, d, 4);
            lead = lead && e.leading_exponent == static_cast<int>(n);
            d0 = std::max(d0, detail::rel(std::exp(e.c[0]), std::exp(c.I0)));
            d1 = std::max(d1, std::abs(e.c[1]) / std::max(1.0, std::abs(c.I2)));
            d2 = std::max(d2, std::abs(e.c[2] - c.I2) / std::max(1.0, std::abs(c.I2)));
        }
    cx.check.holds("defect.leading_power", "tr T~ = u^N (...): leading power equals N", lead);
    cx.check.at_most("defect.exp_c0", "exp I~(0) = X e^-theta prod_{j != n} v_j", d0, 1e-12);
    cx.check.at_most("defect.c1_vanishes", "I~(1) = 0", d1, 1e-12);
    cx.check.at_most("defect.c2_equals_I2", "I~(2) with defect terms e^theta (y_bar b_{n-1} + b_bar_{n+1} y) and X^-2",
                     d2, 1e-12);
}

/// Quadratic (lattice) and linear (continuum) algebra plus the Jacobi identities.
inline void mode_verify_poisson(Context& cx) {
    auto& p = cx.params;
    const std::size_t samples = p.count("samples", 100);
    const std::size_t n = p.count("sites", 3, 2);
    Sampler rng(cx.seed);
    double bulk = 0.0, defect = 0.0, linear = 0.0, jac = 0.0, djac = 0.0, local = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const auto s = random_state(rng, n);
        const auto [l, m] = detail::probe_pair(rng);
        const std::size_t j = k % n;
        bulk = std::max(bulk, check_quadratic_algebra(s, l, m, j));
        jac = std::max(jac, jacobi_residual(s, j));
        const auto sides = quadratic_algebra_sides(s, l, m, j, (j + 1) % n);
        local = std::max({local, max_abs(sides.lhs), max_abs(sides.rhs)});
        const auto d = random_defect(rng, j);
        const auto [dl, dm] = detail::probe_pair(rng);
        defect = std::max(defect, check_defect_algebra(d, dl, dm));
        djac = std::max(djac, defect_jacobi_residual(d));
        const cplx phi = rng.square(1.0), pi = rng.square(1.0);
        const auto [cl, cm] = detail::probe_pair(rng);
        linear = std::max(linear, check_linear_algebra(phi, pi, cl, cm));
    }
    cx.check.at_most("bulk.quadratic_algebra", "{L_a(l), L_b(m)} = [r_ab(l - m), L_a(l) L_b(m)]", bulk, 1e-10);
    cx.check.at_most("bulk.ultralocality", "{L_j(l), L_k(m)} = 0 for j != k", local, 1e-12);
    cx.check.at_most("bulk.jacobi", "Jacobi identity of the site bracket table", jac, 1e-10);
    cx.check.at_most("defect.quadratic_algebra", "{L~_a(l), L~_b(m)} = [r_ab(l - m), L~_a(l) L~_b(m)]", defect, 1e-10);
    cx.check.at_most("defect.jacobi", "Jacobi identity of the (z, z_bar, X) bracket table", djac, 1e-10);
    cx.check.at_most("continuum.linear_algebra",
                     "{U_a(x, l), U_b(y, m)} = [r_ab(l - m), U_a(x, l) + U_b(y, m)] delta(x - y)", linear, 1e-10);
}

/// Discrete zero curvature for bulk and defect chains, and the Hamiltonian-flow identities.
inline void mode_verify_zero_curvature(Context& cx) {
    auto& p = cx.params;
    const std::size_t samples = p.count("samples", 100);
    const std::size_t n_min = p.count("n_min", 3, 3), n_max = p.count("n_max", 6, 3);
    const std::string mutation = p.choice("mutation", "none", {"none", "bulk-eom-sign"});
    if (n_max < n_min) throw ConfigError("n_min must not exceed n_max");
    const LatticeEom eom = eom_for(mutation);
    Sampler rng(cx.seed);
    const std::size_t span = n_max - n_min + 1;

    const auto s_cal = random_state(rng, n_min);
    cx.check.holds("bulk.flow_sign", "dv/dt = +{I(2), v}", calibrate_flow_sign(s_cal) == kFlowSign);
    cx.check.at_most("bulk.time_lax_normalization", "A_j = coefficient of t^-1 tr_a (T r T)",
                     std::abs(calibrate_time_lax_normalization(s_cal, 0, 0.3) - kTimeLaxNormalization), 1e-10);

    double zc = 0.0, flow = 0.0, dzc = 0.0, dflow = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const std::size_t n = n_min + k % span;
        const auto s = random_state(rng, n);
        const cplx mu = rng.square(1.0);
        const LatticeState rate = eom(s), hf = hamiltonian_flow(s);
        zc = std::max(zc, zero_curvature_residual(s, k % n, mu, rate));
        for (std::size_t j = 0; j < n; ++j)
            flow = std::max({flow, std::abs(rate.a[j] - hf.a[j]), std::abs(rate.a_bar[j] - hf.a_bar[j]),
                             std::abs(rate.v[j] - hf.v[j])});
        const auto d = random_defect(rng, k % n);
        const cplx dmu = rng.square(1.0);
        for (std::size_t site = 0; site < n; ++site) dzc = std::max(dzc, defect_zero_curvature_residual(s, d, site, dmu));
        const auto e = defect_eom(s, d), h = defect_hamiltonian_flow(s, d);
        for (std::size_t j = 0; j < n; ++j)
            dflow = std::max({dflow, std::abs(e.bulk.a[j] - h.bulk.a[j]), std::abs(e.bulk.a_bar[j] - h.bulk.a_bar[j]),
                              std::abs(e.bulk.v[j] - h.bulk.v[j])});
        dflow = std::max({dflow, std::abs(e.z - h.z), std::abs(e.z_bar - h.z_bar), std::abs(e.X - h.X)});
    }
    cx.check.at_most("bulk.zero_curvature", "dL_j/dt = A_{j+1} L_j - L_j A_j", zc, 1e-10);
    cx.check.at_most("bulk.hamiltonian_flow", "bulk equations of motion = {I(2), .}", flow, 1e-12);
    cx.check.at_most("defect.zero_curvature", "dL~_n/dt = A~_{n+1} L~_n - L~_n A~_n", dzc, 1e-10);
    cx.check.at_most("defect.hamiltonian_flow", "defect equations of motion = {I~(2), .}", dflow, 1e-10);
}

namespace detail {

struct SimSetup {
    std::size_t n;
    double t_end;
    std::vector<double> dts;
    std::string initial;
    IntegrateOptions opt;
};

inline SimSetup read_sim(Params& p) {
    SimSetup s;
    s.n = p.count("N", 8, 3);
    s.t_end = p.positive("t_end", 5.0);
    s.dts = p.positives("dt", {1e-2, 5e-3}, 2);
    s.initial = p.choice("initial", "perturbed-fixed-point", {"perturbed-fixed-point", "zero-amplitude", "random"});
    s.opt.probes = p.complexes("probes", kDefaultProbes);
    s.opt.record_every = p.count("record_every", 10);
    for (double dt : s.dts)
        if (dt > s.t_end) throw ConfigError("every dt must be <= t_end");
    return s;
}

/// Smallest |v_j| (j != skip) and |X| over every recorded state.
inline double singular_distance(const LatticeState& s, std::size_t skip = static_cast<std::size_t>(-1)) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.size(); ++j)
        if (j != skip) d = std::min(d, std::abs(s.v[j]));
    return d;
}

inline double singular_distance(const Trajectory<LatticeState>& tr) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : tr.states) d = std::min(d, singular_distance(s));
    return d;
}

inline double singular_distance(const Trajectory<DefectChain>& tr) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : tr.states) d = std::min({d, singular_distance(c.bulk, c.defect.n), std::abs(c.defect.X)});
    return d;
}

/// Draws members of the long-run family from the seeded stream until the coarsest-dt trajectory
/// keeps |v_j| and |X| above `floor` (the equations have poles at v = 0 and X = 0, and a member
/// passing close to them is not resolved at the coarse step). `draw` returns the runs for one
/// member, coarsest first; fixed-point and random starts are taken as drawn.
template <class State, class Draw>
std::vector<Trajectory<State>> screened_runs(Context& cx, bool screen, double floor, std::size_t max_draws,
                                             const Draw& draw) {
    std::vector<Trajectory<State>> runs;
    double dist = 0.0;
    std::size_t k = 0;
    for (; k < max_draws; ++k) {
        runs = draw();
        if (!screen) break;
        dist = runs.front().aborted ? 0.0 : singular_distance(runs.front());
        if (dist >= floor) break;
    }
    if (screen) {
        cx.check.at_most("family.draws", "family members drawn before one stays clear of v = 0 and X = 0",
                         static_cast<double>(std::min(k + 1, max_draws)), static_cast<double>(max_draws));
        cx.check.at_least("family.singular_distance", "min over the coarse trajectory of |v_j| and |X|", dist, floor);
    }
    return runs;
}

template <class State>
Series charge_series(const Trajectory<State>& tr, const std::vector<cplx>& probes) {
    Series s{"trajectory", {"t"}, {}};
    add_complex_columns(s.columns, "I0");
    add_complex_columns(s.columns, "I2");
    for (const auto& u : probes) add_complex_columns(s.columns, "trace_u" + probe_label(u));
    s.columns.push_back("I2_drift");
    const cplx i2_0 = tr.samples.front().I2;
    for (const auto& cs : tr.samples) {
        std::vector<double> row{cs.t};
        append(row, cs.I0);
        append(row, cs.I2);
        for (const auto& v : cs.trace_at_probe) append(row, v);
        row.push_back(std::abs(cs.I2 - i2_0));
        s.rows.push_back(std::move(row));
    }
    return s;
}

/// Shared conservation checks: a flat series at a fixed point, otherwise fourth-order drift ratios.
template <class State>
void conservation_checks(Context& cx, const std::string& prefix, const std::string& i2_anchor,
                         const std::vector<Trajectory<State>>& runs, bool fixed_point, const std::vector<cplx>& probes) {
    bool completed = true;
    std::string reason;
    for (const auto& r : runs)
        if (r.aborted) {
            completed = false;
            reason = r.abort_reason;
        }
    cx.check.holds(prefix + ".completed", "RK4 trajectory stays regular" + (reason.empty() ? "" : ": " + reason),
                   completed);
    if (!completed) return;
    const auto& fine = runs.back();
    if (fixed_point) {
        cx.check.at_most(prefix + ".I2_flat", i2_anchor + " is constant at the fixed point", fine.drift.I2, 1e-12);
        cx.check.at_most(prefix + ".I0_flat", "I(0) is constant at the fixed point", fine.drift.I0, 1e-12);
        for (std::size_t q = 0; q < probes.size(); ++q)
            cx.check.at_most(prefix + ".trace_flat_u" + probe_label(probes[q]), "tr T(u) is constant at the fixed point",
                             fine.drift.trace[q], 1e-12);
        return;
    }
    std::vector<double> i2, i0;
    std::vector<std::vector<double>> tr(probes.size());
    for (const auto& r : runs) {
        i2.push_back(r.drift.I2);
        i0.push_back(r.drift.I0);
        for (std::size_t q = 0; q < probes.size(); ++q) tr[q].push_back(r.drift.trace[q]);
    }
    const auto r2 = ratios(i2);
    for (std::size_t k = 0; k < r2.size(); ++k)
        cx.check.within(prefix + ".I2_drift_ratio_" + std::to_string(k + 1),
                        "d" + i2_anchor + "/dt = 0 (RK4 drift ratio per halved dt, nominal 16)", r2[k], 12.0, 20.0);
    for (std::size_t q = 0; q < probes.size(); ++q) {
        const auto rq = ratios(tr[q]);
        for (std::size_t k = 0; k < rq.size(); ++k)
            cx.check.within(prefix + ".trace_drift_ratio_u" + probe_label(probes[q]) + "_" + std::to_string(k + 1),
                            "d tr T(u)/dt = 0 (RK4 drift ratio per halved dt, nominal 16)", rq[k], 12.0, 20.0);
    }
    const auto r0 = ratios(i0);
    for (std::size_t k = 0; k < r0.size(); ++k)
        cx.check.within(prefix + ".I0_drift_ratio_" + std::to_string(k + 1),
                        "d I(0)/dt = 0 (RK4 drift ratio per halved dt, nominal 16)", r0[k], 12.0, 20.0);
}

}  // namespace detail

/// Long bulk RK4 runs at several dt; conservation of I(2), I(0) and tr T(u).
inline void mode_lattice_sim(Context& cx) {
    auto& p = cx.params;
    auto setup = detail::read_sim(p);
    const std::string mutation = p.choice("mutation", "none", {"none", "bulk-eom-sign"});
    const LatticeEom eom = eom_for(mutation);
    Sampler rng(cx.seed);
    const bool screen = setup.initial == "perturbed-fixed-point";
    const cplx v = screen ? p.complex("background_v", kLongRunBackground) : cplx{};
    const double eps = screen ? p.positive("perturbation", 0.05) : 0.0;
    const double amp = setup.initial == "random" ? p.positive("amplitude", 0.5) : 0.0;
    const double floor = screen ? p.positive("singular_floor", 0.25) : 0.0;
    const std::size_t max_draws = screen ? p.count("max_draws", 20) : 1;
    auto runs = detail::screened_runs<LatticeState>(cx, screen, floor, max_draws, [&] {
        LatticeState s0 = setup.initial == "zero-amplitude" ? zero_amplitude_state(setup.n)
                          : setup.initial == "random"       ? random_state(rng, setup.n, amp)
                                                            : perturb(rng, uniform_fixed_point(setup.n, v), eps);
        std::vector<Trajectory<LatticeState>> r;
        for (std::size_t k = 0; k < setup.dts.size(); ++k) {
            IntegrateOptions o = setup.opt;
            if (k == 0 && screen) o.record_every = 1;
            r.push_back(integrate(s0, setup.dts[k], setup.t_end, o, eom));
        }
        return r;
    });
    detail::conservation_checks(cx, "bulk", "I(2)", runs, setup.initial == "zero-amplitude", setup.opt.probes);
    cx.series.push_back(detail::charge_series(runs.back(), setup.opt.probes));
}

/// Long bulk + defect RK4 runs; conservation of I~(2), I~(0) and tr T~(u).
inline void mode_lattice_defect_sim(Context& cx) {
    auto& p = cx.params;
    auto setup = detail::read_sim(p);
    const std::size_t site = p.count("defect_site", 2, 0);
    if (site >= setup.n) throw ConfigError("defect_site must be < N");
    Sampler rng(cx.seed);
    const bool screen = setup.initial == "perturbed-fixed-point";
    const cplx v = screen ? p.complex("background_v", kLongRunBackground) : cplx{};
    const double eps = screen ? p.positive("perturbation", 0.05) : 0.0;
    const double amp = setup.initial == "random" ? p.positive("amplitude", 0.5) : 0.0;
    const double deps = setup.initial == "zero-amplitude" ? 0.0 : p.positive("defect_perturbation", 0.05);
    const double floor = screen ? p.positive("singular_floor", 0.25) : 0.0;
    const std::size_t max_draws = screen ? p.count("max_draws", 20) : 1;
    auto runs = detail::screened_runs<DefectChain>(cx, screen, floor, max_draws, [&] {
        LatticeState s0 = setup.initial == "zero-amplitude" ? zero_amplitude_state(setup.n)
                          : setup.initial == "random"       ? random_state(rng, setup.n, amp)
                                                            : perturb(rng, uniform_fixed_point(setup.n, v), eps);
        const DefectSite d0 = setup.initial == "zero-amplitude" ? transparent_defect(site)
                                                                : perturbed_defect(rng, s0, site, deps);
        std::vector<Trajectory<DefectChain>> r;
        for (std::size_t k = 0; k < setup.dts.size(); ++k) {
            IntegrateOptions o = setup.opt;
            if (k == 0 && screen) o.record_every = 1;
            r.push_back(integrate_with_defect(s0, d0, setup.dts[k], setup.t_end, o));
        }
        return r;
    });
    detail::conservation_checks(cx, "defect", "I~(2)", runs, setup.initial == "zero-amplitude", setup.opt.probes);
    cx.series.push_back(detail::charge_series(runs.back(), setup.opt.probes));
}

/// Method-of-lines Liouville runs: fourth-order drift of the semi-discrete energy, H and P
/// monitoring, ln tr T at probe lambdas.
inline void mode_liouville_evolve(Context& cx) {
    auto& p = cx.params;
    const double L = p.positive("L", std::numbers::pi);
    const std::size_t points = p.count("points", 64, 4);
    const double t_end = p.positive("t_end", 1.0);
    const auto dts = p.positives("dt", {2e-2, 1e-2}, 2);
    const double amp = p.positive("amplitude", 0.1);
    const double background = p.number("background", -std::numbers::pi / 2.0);
    EvolveOptions opt;
    opt.probe_lambdas = p.complexes("probe_lambdas", {cplx(0.3)});
    opt.record_every = p.count("record_every", 5);
    for (double dt : dts)
        if (dt > t_end) throw ConfigError("every dt must be <= t_end");
    Sampler rng(cx.seed);
    auto c0 = smooth_random_config(rng, L, points, amp);
    for (auto& v : c0.phi) v += background;

    std::vector<ContinuumTrajectory> runs;
    for (double dt : dts) runs.push_back(evolve(c0, dt, t_end, opt));
    bool completed = true;
    std::string reason;
    for (const auto& r : runs)
        if (r.aborted) {
            completed = false;
            reason = r.abort_reason;
        }
    cx.check.holds("continuum.completed", "method-of-lines trajectory stays bounded" + (reason.empty() ? "" : ": " + reason),
                   completed);
    if (!completed) return;
    std::vector<double> hh;
    for (const auto& r : runs) hh.push_back(r.drift.H_h);
    const auto rh = detail::ratios(hh);
    for (std::size_t k = 0; k < rh.size(); ++k)
        cx.check.within("continuum.H_h_drift_ratio_" + std::to_string(k + 1),
                        "semi-discrete H = sum (pi^2/2 + (D+ phi)^2/2 + 2 e^{-2 i phi}) h (RK4 drift ratio, nominal 16)",
                        rh[k], 12.0, 20.0);
    const auto& fine = runs.back();
    const double scale = std::max(1.0, std::abs(fine.samples.front().H));
    cx.check.at_most("continuum.H_drift", "H = integral (pi^2/2 + phi_x^2/2 + 2 e^{-2 i phi}) dx (relative)",
                     fine.drift.H / scale, 1e-3);
    cx.check.at_most("continuum.P_drift", "P = integral phi_x pi dx (relative to H)", fine.drift.P / scale, 1e-3);
    for (std::size_t q = 0; q < opt.probe_lambdas.size(); ++q)
        cx.check.at_most("continuum.log_trace_drift_" + detail::probe_label(opt.probe_lambdas[q]),
                         "ln tr T(lambda) conserved", fine.drift.log_trace[q], 1e-3);

    Series s{"trajectory", {"t"}, {}};
    for (const char* c : {"H", "H_h", "P", "I1"}) detail::add_complex_columns(s.columns, c);
    for (const auto& l : opt.probe_lambdas) detail::add_complex_columns(s.columns, "log_trace_l" + detail::probe_label(l));
    s.columns.push_back("H_h_drift");
    for (const auto& cs : fine.samples) {
        std::vector<double> row{cs.t};
        for (cplx v : {cs.H, cs.H_h, cs.P, cs.I1}) detail::append(row, v);
        for (const auto& v : cs.log_trace) detail::append(row, v);
        row.push_back(std::abs(cs.H_h - fine.samples.front().H_h));
        s.rows.push_back(std::move(row));
    }
    cx.series.push_back(std::move(s));
}

/// Zero-field charge constants, the zero-field monodromy closed form, and the monodromy fit of I1.
inline void mode_monodromy_check(Context& cx) {
    auto& p = cx.params;
    const auto lengths = p.positives("zero_field_L", {0.5, 1.0, 3.0});
    const std::size_t zero_points = p.count("zero_field_points", 64, 4);
    const std::size_t configs = p.count("configs", 10);
    const double L = p.positive("L", 2.0);
    const std::size_t points = p.count("points", 512, 4);
    const double amp = p.positive("amplitude", 0.3);
    const std::size_t modes = p.count("modes", 3);
    const double fit_tol = p.positive("fit_tolerance", 0.01);

    double i1 = 0.0, h = 0.0, pp = 0.0, ht = 0.0;
    for (double l : lengths) {
        const auto c = zero_field(l, zero_points);
        const auto q = charges(c);
        const auto d = dual_charges(c);
        i1 = std::max(i1, std::abs(q.I1 + l) / l);
        h = std::max(h, std::abs(q.H - 4.0 * l) / l);
        pp = std::max(pp, std::abs(q.P) / l);
        ht = std::max(ht, std::abs(d.H_t + 4.0 * l) / l);
    }
    cx.check.at_most("zero_field.I1", "I1 = -L at phi = pi = 0 (relative)", i1, 1e-13);
    cx.check.at_most("zero_field.H", "H = 4L at phi = pi = 0 (relative)", h, 1e-13);
    cx.check.at_most("zero_field.P", "P = 0 at phi = pi = 0", pp, 1e-13);
    cx.check.at_most("zero_field.H_t", "H_t = -4L at phi = pi = 0 (relative)", ht, 1e-13);

    double closed = 0.0;
    for (cplx l : {cplx(std::log(0.1)), cplx(0.3, 0.2), cplx(-1.0, 0.5)}) {
        const auto t = monodromy_ode(zero_field(1.0, 400), l);
        const auto e = zero_field_monodromy(1.0, l);
        closed = std::max(closed, max_abs(std::exp(t.log_scale - e.log_scale) * t.matrix - e.matrix) / max_abs(e.matrix));
    }
    cx.check.at_most("zero_field.monodromy_closed_form", "T(lambda) = exp(2L U~(lambda)) at phi = pi = 0", closed, 1e-10);

    Sampler rng(cx.seed);
    double fit_err = 0.0, lead = 0.0;
    Series s{"fit", {"config"}, {}};
    detail::add_complex_columns(s.columns, "I1");
    detail::add_complex_columns(s.columns, "fit_c1");
    detail::add_complex_columns(s.columns, "fit_c_minus1");
    s.columns.push_back("relative_error");
    for (std::size_t k = 0; k < configs; ++k) {
        const auto c = smooth_random_config(rng, L, points, amp, static_cast<int>(modes));
        const auto fit = fit_monodromy(c);
        const auto q = charges(c);
        const double err = detail::rel(fit.c1, q.I1);
        fit_err = std::max(fit_err, err);
        lead = std::max(lead, std::abs(fit.c_minus1 - 2.0 * L) / (2.0 * L));
        std::vector<double> row{static_cast<double>(k)};
        detail::append(row, q.I1);
        detail::append(row, fit.c1);
        detail::append(row, fit.c_minus1);
        row.push_back(err);
        s.rows.push_back(std::move(row));
    }
    cx.check.at_most("fit.I1", "ln tr T = 2L/u + I1 u + ... as u -> 0 (relative error of fitted I1)", fit_err, fit_tol);
    cx.check.at_most("fit.leading", "leading coefficient 2L of ln tr T (relative)", lead, 1e-3);
    cx.series.push_back(std::move(s));
}

namespace detail {

/// Independent smooth fields on the two halves of [-1.5, 1.5] split at 0.2, random defect data.
inline SplitFieldConfig random_split(Sampler& rng, std::size_t points) {
    std::array<cplx, 8> c;
    for (auto& v : c) v = rng.disk(0.4);
    auto wave = [](cplx a, cplx b, double k) { return FieldFn([=](double x) { return a + b * std::sin(k * x + 0.3); }); };
    return split_config(1.5, 0.2, points, points, wave(c[0], c[1], 1.3), wave(c[2], c[3], 0.7), wave(c[4], c[5], 1.1),
                        wave(c[6], c[7], 0.9), rng.disk(0.5), rng.disk(0.5), std::exp(rng.disk(0.3)));
}

}  // namespace detail

/// Continuum defect: sewing condition, the P/H relations to the first charges, and conservation
/// across a transparent defect on an exact solution.
inline void mode_defect_charges(Context& cx) {
    auto& p = cx.params;
    const std::size_t samples = p.count("samples", 50);
    const std::size_t points = p.count("points", 81, 3);
    const double control_X = p.positive("control_X", 2.0);
    const auto grids = p.positives("conservation_points", {101, 201, 401}, 2);
    Sampler rng(cx.seed);

    double sew = 0.0, ph = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const auto raw = detail::random_split(rng, points);
        const auto c = with_sewing(raw);
        sew = std::max(sew, sewing_mismatch(c, rng.square(1.0)));
        const cplx i1 = defect_charge_I1(raw), i1s = defect_charge_I1_sym(raw);
        const auto mh = defect_momentum_hamiltonian(raw);
        ph = std::max({ph, std::abs(mh.P + 2.0 * (i1s - i1)) / std::max(1.0, std::abs(mh.P)),
                       std::abs(mh.H + 2.0 * (i1s + i1)) / std::max(1.0, std::abs(mh.H))});
    }
    cx.check.at_most("sewing.matched", "S1 = X - e^{i(phi+ - phi-)/2} = 0 => V~^{+-(1)} off-diagonals match", sew, 1e-12);

    const FieldFn zero = [](double) { return cplx{}; };
    const auto ctrl = split_config(1.0, 0.0, 41, 61, zero, zero, zero, zero, 0.0, 0.0, control_X);
    cx.check.at_least("sewing.negative_control", "S1 = 1 (X = 2, phi+- = 0) => off-diagonal mismatch O(1)",
                      sewing_mismatch(ctrl, cplx(0.3, -0.2)), 0.1);
    cx.check.at_most("charges.P_H_from_I1", "P = -2 (I1_sym - I1), H = -2 (I1_sym + I1) with defect terms", ph, 1e-10);

    const auto sol = periodic_exact_solution(2.0, 1, 0.2, 0.15);
    auto at = [&](double t, std::size_t n) {
        const FieldFn phi = [&, t](double x) { return sol.jet(x, t).phi; };
        const FieldFn pi = [&, t](double x) { return sol.jet(x, t).phi_t; };
        return defect_momentum_hamiltonian(
            with_sewing(split_config(2.0, 0.4, n, n, phi, pi, phi, pi, 0.0, 0.0, 1.0)));
    };
    std::vector<double> drift;
    Series s{"conservation", {"points", "drift"}, {}};
    for (double g : grids) {
        const auto n = static_cast<std::size_t>(g);
        const auto a = at(0.0, n), b = at(0.5, n);
        drift.push_back(std::max(std::abs(a.P - b.P), std::abs(a.H - b.H)));
        s.rows.push_back({g, drift.back()});
    }
    const auto r = detail::ratios(drift);
    for (std::size_t k = 0; k < r.size(); ++k)
        cx.check.at_least("conservation.refinement_ratio_" + std::to_string(k + 1),
                          "dP/dt = dH/dt = 0 across a transparent defect (quadrature O(h^2))", r[k], 3.5);
    cx.series.push_back(std::move(s));
}

/// Hetero-Backlund generation from a free field: modified Liouville residual, both light-cone
/// relations, the phi = 0 closed form and the interface pair/non-pair discrimination.
inline void mode_hetero_bt(Context& cx) {
    auto& p = cx.params;
    const HeteroParams hp{p.complex("c", cplx(0.5, 0.1)), p.complex("Theta", cplx(0.2, 0.0))};
    const cplx seed = p.complex("seed_value", cplx(0.1, 0.0));
    const double fa = p.number("f_amplitude", 0.3), fk = p.number("f_wavenumber", 1.0);
    const double ga = p.number("g_amplitude", 0.2), gk = p.number("g_wavenumber", 1.3);
    const std::size_t base = p.count("base_cells", 20, 4);
    const std::size_t levels = p.count("refinements", 3, 2);
    const cplx lambda = p.complex("lambda", cplx(0.3, 0.0));
    if (hp.c == cplx{}) throw ConfigError("'c' must be nonzero");

    auto mode = [](double a, double k, double phase) {
        return LightConeFn([=](double z) {
            return std::array<cplx, 3>{a * std::sin(k * z + phase), a * k * std::cos(k * z + phase),
                                       -a * k * k * std::sin(k * z + phase)};
        });
    };
    const FreeField free{mode(fa, fk, 0.0), mode(ga, gk, std::numbers::pi / 2.0)};

    std::vector<double> em1, lz, lw, inter, nonpair;
    bool completed = true;
    std::string reason;
    bool swapped = false;
    Series s{"refinement", {"h", "em1_residual", "z_relation", "w_relation", "interface_pair", "interface_mirrored"}, {}};
    for (std::size_t lvl = 0, r = 1; lvl < levels; ++lvl, r *= 2) {
        const std::size_t cells = base * r;
        const double h = 1.0 / static_cast<double>(cells);
        const auto gen = hetero_bt_generate(free, hp, 0.0, 0.0, h, cells + 1, cells + 1, seed);
        if (gen.aborted) {
            completed = false;
            reason = gen.abort_reason;
            break;
        }
        const auto phi = sample(free, 0.0, 0.0, h, cells + 1, cells + 1);
        em1.push_back(max_em1_residual(gen.phit, hp.c));
        const auto [rz, rw] = max_lbt_residual(gen.phit, phi, hp);
        lz.push_back(rz);
        lw.push_back(rw);
        LightConeGrid mirrored = gen.phit;
        for (std::size_t i = 0; i < mirrored.nz; ++i)
            for (std::size_t j = 0; j < mirrored.nw; ++j) mirrored(i, j) = gen.phit(gen.phit.nz - 1 - i, j);
        inter.push_back(interface_residual(phi, gen.phit, hp, lambda));
        nonpair.push_back(interface_residual(phi, mirrored, hp, lambda));
        if (lvl == 1) swapped = scan_variants(phi, gen.phit, hp, lambda).best == HeteroVariant::swapped;
        s.rows.push_back({h, em1.back(), rz, rw, inter.back(), nonpair.back()});
    }
    cx.check.holds("generation.completed", "no Liouville pole inside the rectangle" + (reason.empty() ? "" : ": " + reason),
                   completed);
    if (!completed) return;
    const std::string em1_anchor = "phi~_xx - phi~_tt + 4 i c^2 e^{2 i phi~} = 0 (residual ratio per halved step, nominal 4)";
    const auto re = detail::ratios(em1), rz = detail::ratios(lz), rw = detail::ratios(lw);
    for (std::size_t k = 0; k < re.size(); ++k) {
        const std::string sfx = "_" + std::to_string(k + 1);
        cx.check.at_least("em1.refinement_ratio" + sfx, em1_anchor, re[k], 3.5);
        cx.check.at_least("lbt.z_relation_ratio" + sfx,
                          "i d_z(phi~ - phi) = -2 c e^Theta e^{i(phi~ + phi)} on the whole rectangle", rz[k], 3.5);
        cx.check.at_least("lbt.w_relation_ratio" + sfx,
                          "i d_zbar(phi~ + phi) = -2 c e^-Theta e^{i(phi~ - phi)} on the whole rectangle", rw[k], 3.5);
    }
    const std::size_t mid = std::min<std::size_t>(1, inter.size() - 1);
    cx.check.at_least("interface.pair_vs_mirrored", "dL~/dt = V+ L~ - L~ V- holds only for a BT pair (ratio)",
                      nonpair[mid] / inter[mid], 100.0);
    cx.check.holds("interface.variant", "Darboux exponents A = X = e^{i(phi~ - phi)/2}, Z = B = e^{i(phi~ + phi)/2}",
                   swapped);

    const FreeField zero{[](double) { return std::array<cplx, 3>{}; }, [](double) { return std::array<cplx, 3>{}; }};
    const std::size_t cf_cells = p.count("closed_form_cells", 100, 2);
    const double cf_h = 1.0 / static_cast<double>(cf_cells);
    const auto g = hetero_bt_generate(zero, hp, 0.0, 0.0, cf_h, cf_cells + 1, cf_cells + 1, 0.0);
    double worst = std::numeric_limits<double>::quiet_NaN();
    if (!g.aborted) {
        worst = 0.0;
        for (std::size_t i = 0; i < g.phit.nz; ++i)
            for (std::size_t j = 0; j < g.phit.nw; ++j)
                worst = std::max(worst, std::abs(g.phit(i, j) - hetero_free_closed_form(hp, 0.0, 0.0, 0.0, g.phit.z(i),
                                                                                        g.phit.w(j))));
    }
    cx.check.at_most("free.closed_form",
                     "phi = 0: e^{-i phi~} = e^{-i phi~_0} + c e^Theta (z - z0) + c e^-Theta (zbar - zbar0)", worst,
                     1e-8);
    cx.series.push_back(std::move(s));
}

/// Auto-Backlund partner of an exact Liouville solution: PDE residual and the carried X relation
/// under refinement.
inline void mode_bt_evolve(Context& cx) {
    auto& p = cx.params;
    const double L = p.positive("L", 2.0);
    const std::size_t m = p.count("exact_mode", 1);
    const double eps = p.positive("eps", 0.2), delta = p.number("delta", 0.15);
    const cplx theta = p.complex("theta", cplx(0.3, 0.0));
    const std::size_t base = p.count("base_cells", 40, 4);
    const std::size_t levels = p.count("refinements", 3, 2);
    const double x_min = p.number("x_min", -0.5), width = p.positive("width", 1.0);
    const double t_end = p.positive("t_end", 0.5);
    const cplx offset = p.complex("seed_offset", cplx(0.2, 0.0));
    const cplx y0 = p.complex("seed_Y", cplx(0.05, 0.02)), z0 = p.complex("seed_Z", cplx(-0.03, 0.04));

    const auto sol = periodic_exact_solution(L, static_cast<int>(m), eps, delta);
    const JetFn phi = [&sol](double x, double t) { return sol.jet(x, t); };
    std::vector<double> pde, xrel;
    Series s{"refinement", {"h", "pde_residual", "x_relation_error"}, {}};
    for (std::size_t lvl = 0, r = 1; lvl < levels; ++lvl, r *= 2) {
        const std::size_t cells = base * r;
        const double h = width / static_cast<double>(cells);
        if (h > t_end) throw ConfigError("t_end must exceed the grid step");
        const auto j0 = phi(x_min, 0.0);
        const auto s0 = bt_space_profile(phi, 0.0, x_min, h, cells + 1, j0.phi + offset, {y0, z0}, theta);
        const auto e = bt_evolve(phi, s0, theta, h, t_end);
        pde.push_back(max_pde_residual(e.phit, 1, e.phit.nt - 2, 1));
        xrel.push_back(e.max_x_relation_error);
        s.rows.push_back({h, pde.back(), xrel.back()});
    }
    const auto rp = detail::ratios(pde), rx = detail::ratios(xrel);
    for (std::size_t k = 0; k < rp.size(); ++k) {
        const std::string sfx = "_" + std::to_string(k + 1);
        cx.check.at_least("pde.refinement_ratio" + sfx,
                          "phi~_tt - phi~_xx = 4 i e^{-2 i phi~} (residual ratio per halved step, nominal 4)", rp[k], 3.5);
        cx.check.at_least("x_relation.refinement_ratio" + sfx, "X = e^{i(phi~ - phi)/2} along the trajectory", rx[k], 3.5);
    }
    cx.check.at_most("pde.finest", "phi~_tt - phi~_xx = 4 i e^{-2 i phi~} (finest grid)", pde.back(), 1e-4);
    cx.series.push_back(std::move(s));
}

// ---------------------------------------------------------------- dispatch

inline const std::map<std::string, std::function<void(Context&)>>& mode_table() {
    static const std::map<std::string, std::function<void(Context&)>> table{
        {"verify-charges", mode_verify_charges},
        {"verify-poisson", mode_verify_poisson},
        {"verify-zero-curvature", mode_verify_zero_curvature},
        {"lattice-sim", mode_lattice_sim},
        {"lattice-defect-sim", mode_lattice_defect_sim},
        {"liouville-evolve", mode_liouville_evolve},
        {"monodromy-check", mode_monodromy_check},
        {"defect-charges", mode_defect_charges},
        {"hetero-bt", mode_hetero_bt},
        {"bt-evolve", mode_bt_evolve}};
    return table;
}

/// Runs one configuration. Throws ConfigError for invalid configs; numerical failures inside the
/// modules (singular states, poles) become a failed "run.completed" record.
inline Report run(Json config, const Overrides& ov = {}) {
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    if (ov.seed) config["seed"] = *ov.seed;
    if (ov.tolerance_scale) config["tolerance_scale"] = *ov.tolerance_scale;
    Params p(std::move(config));
    Report rep;
    rep.mode = p.choice("mode", "", kModes);
    const std::uint64_t seed = p.seed(kDefaultSeed);
    Checker check(p.positive("tolerance_scale", 1.0));
    p.text("output_dir", ".");
    Context cx{p, check, rep.series, seed};
    try {
        mode_table().at(rep.mode)(cx);
        p.finish();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        rep.error = e.what();
        check.holds("run.completed", "module calls finish without a singular state", false);
    }
    rep.config = p.echo();
    rep.checks = std::move(check.records());
    return rep;
}

// ---------------------------------------------------------------- serialization

inline Json to_json(const CheckRecord& c) {
    Json tol = Json::object();
    if (c.min) tol["min"] = *c.min;
    if (c.max) tol["max"] = *c.max;
    return Json{{"name", c.name}, {"anchor", c.anchor}, {"measured", c.measured}, {"tolerance", tol}, {"pass", c.pass}};
}

inline std::string series_file(const std::string& stem, const Series& s) { return stem + "." + s.name + ".csv"; }

/// The report as JSON; series are referenced by file name relative to the report.
inline Json to_json(const Report& r, const std::string& stem) {
    Json j{{"mode", r.mode}, {"status", r.pass() ? "pass" : "fail"}, {"config", r.config}};
    Json checks = Json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    j["checks"] = std::move(checks);
    Json series = Json::array();
    for (const auto& s : r.series)
        series.push_back({{"name", s.name}, {"file", series_file(stem, s)}, {"columns", s.columns}, {"rows", s.rows.size()}});
    j["series"] = std::move(series);
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline std::string report_text(const Report& r, const std::string& stem) { return to_json(r, stem).dump(2) + "\n"; }

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// One RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
inline std::string csv_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char ch : f) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

/// RFC 4180 text: header row, CRLF line breaks.
inline std::string to_csv(const Series& s) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + csv_field(cells[k]);
        out += "\r\n";
    };
    line(s.columns);
    for (const auto& row : s.rows) {
        std::vector<std::string> cells;
        for (double v : row) cells.push_back(format_number(v));
        line(cells);
    }
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
    if (!f) throw ConfigError("failed writing " + path.string());
}

/// Writes <stem>.report.json, one <stem>.<series>.csv per series and the <stem>.timing.json
/// sidecar (kept out of the report so that reports are reproducible byte for byte).
inline std::vector<std::filesystem::path> write_artifacts(const Report& r, const std::filesystem::path& dir,
                                                          const std::string& stem, double seconds) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files{dir / (stem + ".report.json")};
    write_file(files.back(), report_text(r, stem));
    for (const auto& s : r.series) {
        files.push_back(dir / series_file(stem, s));
        write_file(files.back(), to_csv(s));
    }
    files.push_back(dir / (stem + ".timing.json"));
    write_file(files.back(), Json{{"seconds", seconds}}.dump(2) + "\n");
    return files;
}

inline Json read_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config " + path.string());
    try {
        return Json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------- suite

struct TimedReport {
    Report report;
    double seconds = 0.0;
};

template <class F>
auto timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    return std::pair{std::move(r), std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
}

struct SuiteResult {
    Report summary;
    std::vector<TimedReport> runs;
    double seconds = 0.0;
};

/// Every mode at its default parameters; the summary carries each check prefixed by its mode.
inline SuiteResult suite(const Overrides& ov = {}) {
    SuiteResult out;
    out.summary.mode = "suite";
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& m : kModes) {
        auto [rep, secs] = timed([&] { return run(Json{{"mode", m}}, ov); });
        for (auto c : rep.checks) {
            c.name = m + "/" + c.name;
            out.summary.checks.push_back(std::move(c));
        }
        if (!rep.error.empty()) out.summary.error += (out.summary.error.empty() ? "" : "; ") + m + ": " + rep.error;
        out.runs.push_back({std::move(rep), secs});
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json modes = Json::array();
    for (const auto& m : kModes) modes.push_back(m);
    out.summary.config = Json{{"seed", ov.seed.value_or(kDefaultSeed)},
                              {"tolerance_scale", ov.tolerance_scale.value_or(1.0)},
                              {"modes", modes}};
    return out;
}

inline std::vector<std::filesystem::path> write_suite(const SuiteResult& s, const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    Json timing = Json::object();
    for (const auto& r : s.runs) {
        const auto f = write_artifacts(r.report, dir, r.report.mode, r.seconds);
        files.insert(files.end(), f.begin(), f.end());
        timing[r.report.mode] = r.seconds;
    }
    timing["total"] = s.seconds;
    files.push_back(dir / "suite.report.json");
    write_file(files.back(), report_text(s.summary, "suite"));
    files.push_back(dir / "suite.timing.json");
    write_file(files.back(), Json{{"seconds", timing}}.dump(2) + "\n");
    return files;
}

}  // namespace liouville::harness
