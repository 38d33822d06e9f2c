#include <gtest/gtest.h>

#include <liouville/laurent.hpp>
#include <liouville/random.hpp>

#include <cmath>

using namespace liouville;

namespace {

LaurentSeries random_poly(Sampler& rng, int lo, int hi) {
    LaurentSeries::Coeffs c;
    for (int e = lo; e <= hi; ++e) c[e] = rng.square(1.0);
    return LaurentSeries(c);
}

LaurentMatrix random_matrix(Sampler& rng) {
    LaurentMatrix m;
    for (auto& s : m.e) s = random_poly(rng, -2, 2);
    return m;
}

double coeff_distance(const LaurentSeries& a, const LaurentSeries& b) {
    double worst = 0.0, scale = 1.0;
    for (const auto& [e, c] : a.coeffs()) scale = std::max(scale, std::abs(c));
    for (const auto& [e, c] : a.coeffs()) worst = std::max(worst, std::abs(c - b.coeff(e)));
    for (const auto& [e, c] : b.coeffs()) worst = std::max(worst, std::abs(c - a.coeff(e)));
    return worst / scale;
}

const LaurentSeries u = LaurentSeries::monomial(1.0, 1);
const LaurentSeries u_inv = LaurentSeries::monomial(1.0, -1);

}  // namespace

TEST(SeriesMul, DifferenceOfSquares) {
    const auto p = (u - u_inv) * (u + u_inv);
    EXPECT_EQ(p.coeffs().size(), 2u);
    EXPECT_EQ(p.coeff(2), cplx(1.0));
    EXPECT_EQ(p.coeff(-2), cplx(-1.0));
    EXPECT_TRUE(p.is_exact());
}

TEST(SeriesMul, IdentityFactor) {
    Sampler rng(1);
    const auto p = random_poly(rng, -3, 4);
    EXPECT_EQ(coeff_distance(LaurentSeries::constant(1.0) * p, p), 0.0);
}

TEST(SeriesMul, MatchesBruteForceConvolution) {
    Sampler rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_poly(rng, -4, 4);
        const auto b = random_poly(rng, -4, 4);
        const auto p = a * b;
        for (int e = -8; e <= 8; ++e) {
            cplx expect{};
            for (int i = -4; i <= 4; ++i)
                for (int j = -4; j <= 4; ++j)
                    if (i + j == e) expect += a.coeff(i) * b.coeff(j);
            EXPECT_NEAR(std::abs(p.coeff(e) - expect), 0.0, 1e-14);
        }
    }
}

TEST(SeriesMul, TruncationPropagates) {
    // 1 + u^-1 known down to u^-3, times exact (u + 1): known down to u^-2.
    const LaurentSeries s({{0, 1.0}, {-1, 1.0}}, -3);
    const auto p = s * (u + LaurentSeries::constant(1.0));
    ASSERT_TRUE(p.truncation_order().has_value());
    EXPECT_EQ(*p.truncation_order(), -2);
    EXPECT_THROW(p.coeff(-3), PrecisionError);
}

TEST(SeriesNormalForm, NoZeroCoefficients) {
    const auto p = (u + u_inv) - u;
    for (const auto& [e, c] : p.coeffs()) EXPECT_NE(c, cplx{});
    EXPECT_EQ(p.coeffs().size(), 1u);
    EXPECT_TRUE(((u - u)).empty());
}

TEST(SeriesNormalForm, DropsRoundingNoise) {
    const LaurentSeries p({{3, 1.0}, {0, 1e-17}});
    EXPECT_EQ(p.coeffs().size(), 1u);
    EXPECT_LE(p.min_exponent(), p.max_exponent());
}

TEST(SeriesProperties, AssociativeAndDistributive) {
    Sampler rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = random_poly(rng, -3, 3), b = random_poly(rng, -2, 4), c = random_poly(rng, -4, 1);
        EXPECT_LE(coeff_distance((a * b) * c, a * (b * c)), 1e-14);
        EXPECT_LE(coeff_distance(a * (b + c), a * b + a * c), 1e-14);
        EXPECT_TRUE((a * b + c).is_exact());
    }
}

TEST(MatrixChain, SingleMatrix) {
    Sampler rng(4);
    const auto m = random_matrix(rng);
    const auto p = matrix_product_chain({m});
    for (int k = 0; k < 4; ++k) EXPECT_EQ(coeff_distance(p.e[k], m.e[k]), 0.0);
}

TEST(MatrixChain, TwoMatricesByHand) {
    Sampler rng(5);
    const auto a = random_matrix(rng), b = random_matrix(rng);
    const auto p = matrix_product_chain({a, b});
    // entry (i,j) = a_i0 b_0j + a_i1 b_1j, checked at numeric u
    for (cplx uu : {cplx(0.7, 0.2), cplx(-1.3, 0.5)}) {
        const Mat2 ma = a.eval(uu), mb = b.eval(uu), mp = p.eval(uu);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                EXPECT_NEAR(std::abs(mp(i, j) - (ma(i, 0) * mb(0, j) + ma(i, 1) * mb(1, j))), 0.0, 1e-12);
    }
}

TEST(MatrixChain, DiagonalPower) {
    LaurentMatrix d;
    d(0, 0) = u;
    d(1, 1) = -u_inv;
    for (int n = 1; n <= 6; ++n) {
        const auto p = matrix_product_chain(std::vector<LaurentMatrix>(n, d));
        EXPECT_EQ(p(0, 0).coeff(n), cplx(1.0));
        EXPECT_EQ(p(0, 0).coeffs().size(), 1u);
        EXPECT_EQ(p(1, 1).coeff(-n), cplx(n % 2 == 0 ? 1.0 : -1.0));
        EXPECT_TRUE(p(0, 1).empty());
        const auto [lo, hi] = p.degree_span();
        EXPECT_EQ(lo, -n);
        EXPECT_EQ(hi, n);
    }
}

TEST(MatrixChain, Associative) {
    Sampler rng(6);
    const auto a = random_matrix(rng), b = random_matrix(rng), c = random_matrix(rng);
    const auto l = (a * b) * c, r = a * (b * c);
    for (int k = 0; k < 4; ++k) EXPECT_LE(coeff_distance(l.e[k], r.e[k]), 1e-14);
}

TEST(LogExpand, Monomial) {
    const cplx v(1.3, -0.4);
    const auto e = log_expand(LaurentSeries::monomial(v, 1), 4);
    EXPECT_EQ(e.leading_exponent, 1);
    EXPECT_NEAR(std::abs(e.c[0] - std::log(v)), 0.0, 1e-15);
    for (int m = 1; m <= 4; ++m) EXPECT_EQ(e.c[m], cplx{});
}

TEST(LogExpand, SquareOfDifference) {
    // 2 ln(1 - u^-2) = -2 u^-2 - u^-4 + ...
    const auto e = log_expand((u - u_inv) * (u - u_inv), 4);
    EXPECT_EQ(e.leading_exponent, 2);
    EXPECT_NEAR(std::abs(e.c[0]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e.c[1]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e.c[2] - cplx(-2.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e.c[3]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e.c[4] - cplx(-1.0)), 0.0, 1e-15);
}

TEST(LogExpand, EmptyIsError) {
    EXPECT_THROW(log_expand(LaurentSeries{}, 4), EmptySeriesError);
}

TEST(LogExpand, RoundTripThroughExponential) {
    Sampler rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int depth = 5;
        const auto p = random_poly(rng, -depth + 2, 2) + LaurentSeries::monomial(3.0, 2);
        const auto e = log_expand(p, depth);
        // exp of sum_{m>=1} c_m u^{-m} by the power series, truncated at u^{-depth}
        LaurentSeries::Coeffs lc;
        for (int m = 1; m <= depth; ++m) lc[-m] = e.c[m];
        const LaurentSeries ls(lc, -depth);
        LaurentSeries term = LaurentSeries::constant(1.0), sum = LaurentSeries::constant(1.0);
        for (int k = 1; k <= depth; ++k) {
            term = (1.0 / k) * (term * ls);
            sum = sum + term;
        }
        const auto rebuilt =
            LaurentSeries::monomial(std::exp(e.c[0]), e.leading_exponent) * sum.truncated(-depth);
        const auto again = log_expand(rebuilt, depth);
        EXPECT_EQ(again.leading_exponent, e.leading_exponent);
        for (int m = 1; m <= depth; ++m) EXPECT_NEAR(std::abs(again.c[m] - e.c[m]), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(std::exp(again.c[0]) - std::exp(e.c[0])), 0.0, 1e-12 * std::abs(std::exp(e.c[0])));
    }
}

TEST(SeriesInverse, Monomial) {
    const auto q = series_inverse(u, 4);
    EXPECT_EQ(q.coeff(-1), cplx(1.0));
    for (int e = -5; e <= 0; ++e)
        if (e != -1) EXPECT_EQ(q.coeff(e), cplx{});
}

TEST(SeriesInverse, GeometricSeries) {
    const auto q = series_inverse(u * (LaurentSeries::constant(1.0) - LaurentSeries::monomial(1.0, -2)), 4);
    EXPECT_NEAR(std::abs(q.coeff(-1) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(q.coeff(-3) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(q.coeff(-5) - 1.0), 0.0, 1e-15);
    EXPECT_EQ(q.coeff(-2), cplx{});
    EXPECT_EQ(q.coeff(-4), cplx{});
}

TEST(SeriesInverse, SelfConsistentProduct) {
    Sampler rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_poly(rng, -3, 3) + LaurentSeries::monomial(3.0, 3);
        const auto prod = p * series_inverse(p, 6) - LaurentSeries::constant(1.0);
        for (const auto& [e, c] : prod.coeffs()) EXPECT_LT(std::abs(c), 1e-14);
        EXPECT_TRUE(prod.truncation_order().has_value());
    }
}

TEST(SeriesInverse, ZeroIsError) {
    EXPECT_THROW(series_inverse(LaurentSeries{}, 3), EmptySeriesError);
}
