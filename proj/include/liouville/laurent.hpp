#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace liouville {

/// Laurent polynomial (or truncated Laurent series) in u = e^lambda.
///
/// A series with truncation order t knows its coefficients only at exponents >= t;
/// everything below is unknown and never stored. An exact polynomial has no
/// truncation order.
class LaurentSeries {
public:
    using Coeffs = std::map<int, cplx>;

    /// Coefficients below this fraction of the largest magnitude are dropped.
    static constexpr double kRelativeCutoff = 1e-15;

    LaurentSeries() = default;
    explicit LaurentSeries(Coeffs coeffs, std::optional<int> trunc = std::nullopt)
        : coeffs_(std::move(coeffs)), trunc_(trunc) {
        normalize();
    }

    static LaurentSeries constant(cplx c) { return monomial(c, 0); }
    static LaurentSeries monomial(cplx c, int exponent) { return LaurentSeries(Coeffs{{exponent, c}}); }

    const Coeffs& coeffs() const { return coeffs_; }
    std::optional<int> truncation_order() const { return trunc_; }
    bool is_exact() const { return !trunc_.has_value(); }
    bool empty() const { return coeffs_.empty(); }

    int max_exponent() const {
        if (coeffs_.empty()) throw EmptySeriesError("empty series has no degree");
        return coeffs_.rbegin()->first;
    }
    int min_exponent() const {
        if (coeffs_.empty()) throw EmptySeriesError("empty series has no degree");
        return coeffs_.begin()->first;
    }
    cplx leading_coefficient() const {
        if (coeffs_.empty()) throw EmptySeriesError("empty series has no leading coefficient");
        return coeffs_.rbegin()->second;
    }

    /// Coefficient at an exponent; zero if absent. Asking below the truncation order throws.
    cplx coeff(int exponent) const {
        if (trunc_ && exponent < *trunc_) throw PrecisionError("coefficient below truncation order");
        auto it = coeffs_.find(exponent);
        return it == coeffs_.end() ? cplx{} : it->second;
    }

    /// Sum of the known terms at u.
    cplx eval(cplx u) const {
        cplx s{};
        for (const auto& [e, c] : coeffs_) s += c * std::pow(u, e);
        return s;
    }

    /// Drops terms below `order` and records it as the truncation order.
    LaurentSeries truncated(int order) const {
        Coeffs kept;
        for (const auto& [e, c] : coeffs_)
            if (e >= order) kept.emplace(e, c);
        return LaurentSeries(std::move(kept), trunc_ ? std::max(*trunc_, order) : order);
    }

    LaurentSeries operator-() const {
        Coeffs r = coeffs_;
        for (auto& [e, c] : r) c = -c;
        return LaurentSeries(std::move(r), trunc_);
    }

    friend LaurentSeries operator+(const LaurentSeries& a, const LaurentSeries& b) {
        Coeffs r = a.coeffs_;
        for (const auto& [e, c] : b.coeffs_) r[e] += c;
        return LaurentSeries(std::move(r), combine_trunc(a.trunc_, b.trunc_));
    }
    friend LaurentSeries operator-(const LaurentSeries& a, const LaurentSeries& b) { return a + (-b); }

    friend LaurentSeries operator*(const LaurentSeries& a, const LaurentSeries& b) {
        if ((a.is_exact() && a.empty()) || (b.is_exact() && b.empty())) return {};
        Coeffs r;
        for (const auto& [ea, ca] : a.coeffs_)
            for (const auto& [eb, cb] : b.coeffs_) r[ea + eb] += ca * cb;
        // Unknown terms of one factor pollute everything below (its trunc + top degree of the other).
        std::optional<int> t;
        if (a.trunc_) t = *a.trunc_ + b.top();
        if (b.trunc_) {
            const int tb = *b.trunc_ + a.top();
            t = t ? std::max(*t, tb) : tb;
        }
        return LaurentSeries(std::move(r), t);
    }

    friend LaurentSeries operator*(cplx s, const LaurentSeries& a) {
        Coeffs r = a.coeffs_;
        for (auto& [e, c] : r) c *= s;
        return LaurentSeries(std::move(r), a.trunc_);
    }
    friend LaurentSeries operator*(const LaurentSeries& a, cplx s) { return s * a; }

private:
    static std::optional<int> combine_trunc(std::optional<int> a, std::optional<int> b) {
        if (a && b) return std::max(*a, *b);
        return a ? a : b;
    }

    /// Highest exponent that may be nonzero. For an empty truncated series every known
    /// coefficient vanishes, so the highest possibly-nonzero term sits just below trunc.
    int top() const {
        if (!coeffs_.empty()) return coeffs_.rbegin()->first;
        return trunc_ ? *trunc_ - 1 : 0;
    }

    void normalize() {
        double biggest = 0.0;
        for (const auto& [e, c] : coeffs_) biggest = std::max(biggest, std::abs(c));
        const double cut = kRelativeCutoff * biggest;
        for (auto it = coeffs_.begin(); it != coeffs_.end();) {
            const bool below_trunc = trunc_ && it->first < *trunc_;
            if (below_trunc || it->second == cplx{} || std::abs(it->second) < cut)
                it = coeffs_.erase(it);
            else
                ++it;
        }
    }

    Coeffs coeffs_;
    std::optional<int> trunc_;
};

/// 2x2 matrix over LaurentSeries, row-major entries.
struct LaurentMatrix {
    std::array<LaurentSeries, 4> e;

    const LaurentSeries& operator()(int i, int j) const { return e[2 * i + j]; }
    LaurentSeries& operator()(int i, int j) { return e[2 * i + j]; }

    static LaurentMatrix identity() {
        LaurentMatrix m;
        m(0, 0) = LaurentSeries::constant(1.0);
        m(1, 1) = LaurentSeries::constant(1.0);
        return m;
    }

    LaurentSeries trace() const { return e[0] + e[3]; }

    Mat2 eval(cplx u) const {
        Mat2 r;
        r << e[0].eval(u), e[1].eval(u), e[2].eval(u), e[3].eval(u);
        return r;
    }

    /// Degree span over all nonzero entries.
    std::pair<int, int> degree_span() const {
        int lo = 0, hi = 0;
        bool any = false;
        for (const auto& s : e) {
            if (s.empty()) continue;
            lo = any ? std::min(lo, s.min_exponent()) : s.min_exponent();
            hi = any ? std::max(hi, s.max_exponent()) : s.max_exponent();
            any = true;
        }
        if (!any) throw EmptySeriesError("zero matrix has no degree span");
        return {lo, hi};
    }

    friend LaurentMatrix operator*(const LaurentMatrix& a, const LaurentMatrix& b) {
        LaurentMatrix r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
        return r;
    }
    friend LaurentMatrix operator+(const LaurentMatrix& a, const LaurentMatrix& b) {
        LaurentMatrix r;
        for (int k = 0; k < 4; ++k) r.e[k] = a.e[k] + b.e[k];
        return r;
    }
    friend LaurentMatrix operator*(const LaurentSeries& s, const LaurentMatrix& a) {
        LaurentMatrix r;
        for (int k = 0; k < 4; ++k) r.e[k] = s * a.e[k];
        return r;
    }
};

/// Ordered product ms[0] * ms[1] * ... ; the monodromy passes L_N first.
inline LaurentMatrix matrix_product_chain(const std::vector<LaurentMatrix>& ms) {
    if (ms.empty()) throw ConfigError("matrix_product_chain: empty list");
    LaurentMatrix r = ms.front();
    for (std::size_t k = 1; k < ms.size(); ++k) r = r * ms[k];
    return r;
}

/// ln p(u) = N ln u + c[0] + sum_{m>=1} c[m] u^{-m} + O(u^{-depth-1}).
struct LogExpansion {
    int leading_exponent = 0;
    std::vector<cplx> c;
};

/// Coefficients x_1..x_depth of p / (lead * u^N) - 1 in powers of u^{-1}.
inline std::vector<cplx> normalized_tail(const LaurentSeries& p, int depth, int& lead_exp, cplx& lead) {
    if (p.empty()) throw EmptySeriesError("empty generating functional");
    lead_exp = p.max_exponent();
    lead = p.leading_coefficient();
    if (auto t = p.truncation_order(); t && lead_exp - depth < *t)
        throw PrecisionError("series truncated above the requested depth");
    std::vector<cplx> x(depth + 1);
    for (int k = 1; k <= depth; ++k) x[k] = p.coeff(lead_exp - k) / lead;
    return x;
}

inline LogExpansion log_expand(const LaurentSeries& p, int depth = 4) {
    LogExpansion out;
    cplx lead;
    const auto x = normalized_tail(p, depth, out.leading_exponent, lead);
    out.c.assign(depth + 1, cplx{});
    out.c[0] = std::log(lead);
    // ln(1 + x): n y_n = n x_n - sum_{k=1}^{n-1} k y_k x_{n-k}
    for (int n = 1; n <= depth; ++n) {
        cplx acc = static_cast<double>(n) * x[n];
        for (int k = 1; k < n; ++k) acc -= static_cast<double>(k) * out.c[k] * x[n - k];
        out.c[n] = acc / static_cast<double>(n);
    }
    return out;
}

/// Truncated inverse q with p q = 1 + O(u^{-depth-1}).
inline LaurentSeries series_inverse(const LaurentSeries& p, int depth) {
    int n_lead = 0;
    cplx lead;
    const auto x = normalized_tail(p, depth, n_lead, lead);
    std::vector<cplx> w(depth + 1);
    w[0] = 1.0;
    for (int n = 1; n <= depth; ++n) {
        cplx acc{};
        for (int k = 1; k <= n; ++k) acc -= x[k] * w[n - k];
        w[n] = acc;
    }
    LaurentSeries::Coeffs q;
    for (int n = 0; n <= depth; ++n) q[-n_lead - n] = w[n] / lead;
    return LaurentSeries(std::move(q), -n_lead - depth);
}

}  // namespace liouville
