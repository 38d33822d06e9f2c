#include <gtest/gtest.h>

#include <liouville/continuum.hpp>
#include <liouville/random.hpp>

#include <cmath>

using namespace liouville;

namespace {

const cplx I(0.0, 1.0);

/// Swap of the two tensor factors of C^2 (x) C^2.
Mat4 swap_factors(const Mat4& m) {
    Mat4 p = Mat4::Zero();
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) p(2 * i + k, 2 * k + i) = 1.0;
    return p * m * p;
}

const LightConeSolution kExact = periodic_exact_solution(2.0, 1, 0.2, 0.15);

/// Small smooth perturbation of phi = -pi/2, where e^{-2i phi} = -1 decays instead of blowing up.
FieldConfig regular_config(Sampler& rng, double L, std::size_t points) {
    auto c = smooth_random_config(rng, L, points, 0.1);
    for (auto& p : c.phi) p -= std::numbers::pi / 2.0;
    return c;
}

}  // namespace

TEST(LaxPair, ZeroFieldAtZeroSpectral) {
    const Mat2 u = lax_U_mat(0.0, 0.0, 0.0);
    EXPECT_EQ(u(0, 0), cplx{});
    EXPECT_NEAR(std::abs(u(0, 1) + 1.0), 0.0, 1e-15);
    EXPECT_EQ(u(1, 0), cplx{});
    EXPECT_EQ(u(1, 1), cplx{});
}

TEST(LaxPair, Traceless) {
    Sampler rng(60);
    for (int trial = 0; trial < 20; ++trial) {
        const cplx phi = rng.square(1.0), pi = rng.square(1.0), px = rng.square(1.0), l = rng.square(1.0);
        EXPECT_NEAR(std::abs(lax_U_mat(phi, pi, l).trace()), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(lax_V_mat(phi, px, l).trace()), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(gauged_U(phi, px, pi, l).trace()), 0.0, 1e-14);
    }
}

TEST(LaxPair, ZeroCurvatureOnExactSolution) {
    const JetFn jet = [](double x, double t) { return kExact.jet(x, t); };
    double prev = 0.0;
    for (double h : {0.02, 0.01, 0.005}) {
        double worst = 0.0;
        for (double x : {-1.3, 0.1, 0.9})
            for (cplx l : {cplx(0.2), cplx(-0.3, 0.4)}) worst = std::max(worst, zero_curvature_residual(jet, x, 0.1, l, h));
        if (prev > 0.0) {
            EXPECT_GE(prev / worst, 3.5);
            EXPECT_LE(prev / worst, 4.5);
        }
        prev = worst;
    }
    EXPECT_LE(prev, 1e-3);
}

TEST(Gauge, ZeroField) {
    EXPECT_LE(max_abs(gauge_g(0.0) - Mat2::Identity()), 0.0);
    const cplx l(0.4, -0.2);
    EXPECT_NEAR(std::abs(gauged_U(0.0, 0.0, 0.0, l)(0, 1) + std::exp(-l)), 0.0, 1e-15);
}

TEST(Gauge, MatchesConjugationWithFiniteDifferenceGx) {
    // phi(x) smooth; g_x by central differences, so the mismatch is O(h^2).
    auto phi = [](double x) { return cplx(0.3 * std::sin(x), 0.2 * std::cos(2.0 * x)); };
    auto phi_xa = [](double x) { return cplx(0.3 * std::cos(x), -0.4 * std::sin(2.0 * x)); };
    const cplx pi(0.1, -0.2), l(0.3, 0.1);
    double prev = 0.0;
    for (double h : {0.01, 0.005}) {
        double worst = 0.0;
        for (double x : {-0.7, 0.2, 1.1}) {
            const Mat2 g = gauge_g(phi(x)), gi = g.inverse();
            const Mat2 gx = (gauge_g(phi(x + h)) - gauge_g(phi(x - h))) / (2.0 * h);
            const Mat2 conj = gi * lax_U_mat(phi(x), pi, l) * g - gi * gx;
            worst = std::max(worst, max_abs(conj - gauged_U(phi(x), phi_xa(x), pi, l)));
        }
        if (prev > 0.0) EXPECT_GE(prev / worst, 3.5);
        prev = worst;
    }
    EXPECT_LE(prev, 1e-5);
}

TEST(LiouvilleRhs, ConstantField) {
    const cplx phi0(0.3, -0.1);
    const auto c = periodic_config(1.0, 16, [&](double) { return phi0; }, [](double) { return cplx{}; });
    const auto r = liouville_rhs(c);
    for (std::size_t k = 0; k < 16; ++k) {
        EXPECT_EQ(r.phi[k], cplx{});
        EXPECT_NEAR(std::abs(r.pi[k] - 4.0 * I * std::exp(-2.0 * I * phi0)), 0.0, 1e-13);
    }
}

TEST(LiouvilleRhs, SemiDiscreteResidualIsSecondOrder) {
    // pi_t of the exact solution (fine central difference in t) against the semi-discrete rhs.
    double prev = 0.0;
    for (std::size_t n : {64u, 128u, 256u}) {
        const auto c = kExact.slice(2.0, n, 0.0);
        const auto r = liouville_rhs(c);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = c.x(k), d = 1e-5;
            const cplx pi_t = (kExact.jet(x, d).phi_t - kExact.jet(x, -d).phi_t) / (2.0 * d);
            worst = std::max(worst, std::abs(r.pi[k] - pi_t));
        }
        if (prev > 0.0) {
            EXPECT_GE(prev / worst, 3.5);
            EXPECT_LE(prev / worst, 4.5);
        }
        prev = worst;
    }
}

TEST(LiouvilleRhs, RejectsClosedGrid) {
    const auto c = closed_config(-1.0, 1.0, 9, [](double) { return cplx{}; }, [](double) { return cplx{}; });
    EXPECT_THROW(liouville_rhs(c), ConfigError);
}

TEST(ExactSolution, SatisfiesPdeAtSecondOrder) {
    const SpaceTimeFn phi = [](double x, double t) { return kExact.phi(x, t); };
    double prev = 0.0;
    for (double h : {0.02, 0.01, 0.005}) {
        double worst = 0.0;
        for (double x : {-1.5, -0.2, 0.8})
            for (double t : {0.0, 0.3}) worst = std::max(worst, std::abs(pde_residual(phi, x, t, h)));
        if (prev > 0.0) {
            EXPECT_GE(prev / worst, 3.5);
            EXPECT_LE(prev / worst, 4.5);
        }
        prev = worst;
    }
}

TEST(ExactSolution, JetMatchesFiniteDifferences) {
    const double d = 1e-6;
    for (double x : {-1.0, 0.4})
        for (double t : {0.0, 0.2}) {
            const auto j = kExact.jet(x, t);
            EXPECT_NEAR(std::abs(j.phi_x - (kExact.phi(x + d, t) - kExact.phi(x - d, t)) / (2.0 * d)), 0.0, 1e-8);
            EXPECT_NEAR(std::abs(j.phi_t - (kExact.phi(x, t + d) - kExact.phi(x, t - d)) / (2.0 * d)), 0.0, 1e-8);
        }
}

TEST(ExactSolution, PeriodicInX) {
    for (double x : {-1.7, 0.3}) {
        const auto a = kExact.jet(x, 0.2), b = kExact.jet(x + 4.0, 0.2);
        EXPECT_NEAR(std::abs(std::exp(-2.0 * I * a.phi) - std::exp(-2.0 * I * b.phi)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(a.phi_x - b.phi_x), 0.0, 1e-12);
    }
}

TEST(Charges, ZeroField) {
    for (double L : {0.5, 1.0, 3.0}) {
        const auto c = zero_field(L, 64);
        const auto q = charges(c);
        const auto d = dual_charges(c);
        EXPECT_LE(std::abs(q.I1 + L) / L, 1e-13);
        EXPECT_LE(std::abs(q.I1_sym + L) / L, 1e-13);
        EXPECT_LE(std::abs(q.H - 4.0 * L) / L, 1e-13);
        EXPECT_EQ(q.P, cplx{});
        EXPECT_LE(std::abs(d.H_t + 4.0 * L) / L, 1e-13);
    }
}

TEST(Charges, QuadratureExactOnConstants) {
    const cplx phi0(0.2, 0.1), pi0(-0.4, 0.3);
    const auto c = periodic_config(1.7, 50, [&](double) { return phi0; }, [&](double) { return pi0; });
    const auto q = charges(c);
    const cplx e = std::exp(-2.0 * I * phi0);
    EXPECT_LE(std::abs(q.H - 2.0 * 1.7 * (0.5 * pi0 * pi0 + 2.0 * e)) / std::abs(q.H), 1e-13);
    EXPECT_LE(std::abs(q.I1 + 0.5 * 2.0 * 1.7 * (0.25 * pi0 * pi0 + e)) / std::abs(q.I1), 1e-13);
}

TEST(Charges, PrintedRelations) {
    Sampler rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = smooth_random_config(rng, 1.5, 64);
        const auto q = charges(c);
        const auto d = dual_charges(c);
        EXPECT_EQ(d.P_t, q.P);
        // H + H_t = integral of (phi_x^2 + pi^2)
        const CVec px = phi_x(c);
        CVec f(c.points());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = px[k] * px[k] + c.pi[k] * c.pi[k];
        EXPECT_LE(std::abs(q.H + d.H_t - trapezoid(f, c.h, true)), 1e-12 * std::max(1.0, std::abs(q.H)));
        // I1_sym(phi, pi) = I1(phi, -pi)
        FieldConfig flipped = c;
        for (auto& p : flipped.pi) p = -p;
        EXPECT_LE(std::abs(q.I1_sym - charges(flipped).I1), 1e-13 * std::max(1.0, std::abs(q.I1)));
        const auto k = measure_proportionality(q);
        EXPECT_NEAR(std::abs(k.k_P + 2.0), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(k.k_H + 2.0), 0.0, 1e-10);
    }
}

TEST(Charges, SemiDiscreteEnergyIsExactInvariantOfRhs) {
    Sampler rng(62);
    const auto c = smooth_random_config(rng, 1.0, 40);
    const auto r = liouville_rhs(c);
    // d/ds H_h(c + s r) at s = 0 by a symmetric difference
    const double s = 1e-6;
    FieldConfig p = c, m = c;
    for (std::size_t k = 0; k < c.points(); ++k) {
        p.phi[k] += s * r.phi[k];
        p.pi[k] += s * r.pi[k];
        m.phi[k] -= s * r.phi[k];
        m.pi[k] -= s * r.pi[k];
    }
    EXPECT_LE(std::abs((semi_discrete_energy(p) - semi_discrete_energy(m)) / (2.0 * s)), 1e-6);
}

TEST(Monodromy, ZeroFieldMatchesClosedForm) {
    for (cplx l : {cplx(std::log(0.1)), cplx(0.3, 0.2), cplx(-1.0, 0.5)}) {
        const auto t = monodromy_ode(zero_field(1.0, 400), l);
        const auto e = zero_field_monodromy(1.0, l);
        const cplx ratio = std::exp(t.log_scale - e.log_scale);
        EXPECT_LE(max_abs(ratio * t.matrix - e.matrix) / max_abs(e.matrix), 1e-10);
    }
}

TEST(Monodromy, UnitDeterminant) {
    Sampler rng(63);
    for (int trial = 0; trial < 5; ++trial) {
        const auto c = smooth_random_config(rng, 1.0, 64);
        EXPECT_LE(std::abs(monodromy_ode(c, cplx(0.2, 0.1)).log_det()), 1e-12);
    }
}

TEST(Monodromy, OddGridRejected) {
    EXPECT_THROW(monodromy_ode(zero_field(1.0, 63), 0.1), ConfigError);
}

TEST(Monodromy, FitRecoversFirstCharge) {
    Sampler rng(64);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = smooth_random_config(rng, 2.0, 512);
        const auto fit = fit_monodromy(c);
        const auto q = charges(c);
        EXPECT_LE(std::abs(fit.c1 - q.I1) / std::abs(q.I1), 0.01) << "trial " << trial;
        EXPECT_LE(std::abs(fit.c_minus1 - 4.0), 1e-3);
    }
}

TEST(Monodromy, FitZeroField) {
    const auto fit = fit_monodromy(zero_field(1.0, 512));
    EXPECT_NEAR(std::abs(fit.c_minus1 - 2.0), 0.0, 1e-4);
    EXPECT_NEAR(std::abs(fit.c0), 0.0, 1e-4);
    EXPECT_LE(std::abs(fit.c1 + 1.0), 2e-3);
}

TEST(LinearAlgebra, HoldsAtRandomSamples) {
    Sampler rng(65);
    for (int trial = 0; trial < 100; ++trial) {
        const cplx phi = rng.square(1.0), pi = rng.square(1.0);
        cplx l, m;
        do {
            l = rng.square(1.0);
            m = rng.square(1.0);
        } while (std::abs(std::sinh(l - m)) < 0.1);
        EXPECT_LE(check_linear_algebra(phi, pi, l, m), 1e-10);
    }
}

TEST(LinearAlgebra, UnitBracketFails) {
    EXPECT_GT(check_linear_algebra(cplx(0.2, 0.1), cplx(0.3, -0.2), 0.4, -0.3, 1.0), 0.1);
}

TEST(LinearAlgebra, AntisymmetricUnderSwap) {
    const cplx phi(0.2, -0.3), pi(0.5, 0.1), l(0.3, 0.2), m(-0.4, 0.1);
    const auto ab = linear_algebra_sides(phi, pi, l, m), ba = linear_algebra_sides(phi, pi, m, l);
    EXPECT_LE(max_abs(ab.lhs + swap_factors(ba.lhs)), 1e-14);
    EXPECT_LE(max_abs(ab.rhs + swap_factors(ba.rhs)), 1e-12);
}

TEST(LinearAlgebra, StructuralZeros) {
    // d/dpi of U is diagonal, so entries pairing two off-diagonal factors vanish on both sides.
    const auto s = linear_algebra_sides(cplx(0.1, 0.2), cplx(-0.3), 0.5, -0.2);
    for (auto [r, c] : {std::pair{0, 3}, std::pair{1, 2}, std::pair{2, 1}, std::pair{3, 0}}) {
        EXPECT_EQ(s.lhs(r, c), cplx{});
        EXPECT_NEAR(std::abs(s.rhs(r, c)), 0.0, 1e-14);
    }
}

TEST(LinearAlgebra, PoleIsError) {
    EXPECT_THROW(check_linear_algebra(0.1, 0.2, 0.3, 0.3), PoleError);
}

TEST(Evolve, SemiDiscreteEnergyDriftIsFourthOrder) {
    Sampler rng(66);
    const auto c = regular_config(rng, std::numbers::pi, 64);
    const auto coarse = evolve(c, 0.02, 1.0), fine = evolve(c, 0.01, 1.0);
    ASSERT_FALSE(coarse.aborted);
    ASSERT_FALSE(fine.aborted);
    const double ratio = coarse.drift.H_h / fine.drift.H_h;
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
}

TEST(Evolve, MomentumDriftShrinksWithGrid) {
    Sampler rng(67);
    double prev = 0.0;
    for (std::size_t n : {32u, 64u, 128u}) {
        Sampler again(67);
        const auto c = smooth_random_config(again, std::numbers::pi, n, 0.1);
        const auto tr = evolve(c, 0.005, 0.5);
        ASSERT_FALSE(tr.aborted);
        if (prev > 0.0) EXPECT_GE(prev / tr.drift.P, 3.0);
        prev = tr.drift.P;
    }
    (void)rng;
}

TEST(Evolve, TracksExactSolution) {
    double prev = 0.0;
    for (std::size_t n : {64u, 128u}) {
        const auto c = kExact.slice(2.0, n, 0.0);
        const double dt = 0.4 * c.h;
        const auto tr = evolve(c, dt, 0.4);
        ASSERT_FALSE(tr.aborted);
        const auto& last = tr.states.back();
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            err = std::max(err, std::abs(std::exp(-2.0 * I * last.phi[k]) -
                                         std::exp(-2.0 * I * kExact.phi(last.x(k), tr.times.back()))));
        if (prev > 0.0) EXPECT_GE(prev / err, 3.5);
        prev = err;
    }
    EXPECT_LE(prev, 1e-3);
}

TEST(Evolve, MonodromyTraceConserved) {
    Sampler rng(68);
    const auto c = smooth_random_config(rng, 1.0, 128, 0.1);
    EvolveOptions opt;
    opt.probe_lambdas = {cplx(0.3)};
    opt.record_every = 10;
    const auto tr = evolve(c, 0.005, 0.3, opt);
    ASSERT_FALSE(tr.aborted);
    EXPECT_LE(tr.drift.log_trace[0], 1e-3);
}

TEST(Evolve, UniformDataNearZeroBlowsUp) {
    // psi = -2i phi obeys psi'' = 8 e^psi, which from rest at 0 diverges at t = pi/4.
    const auto tr = evolve(zero_field(1.0, 16), 0.01, 2.0);
    EXPECT_TRUE(tr.aborted);
    EXPECT_NEAR(tr.times.back(), std::numbers::pi / 4.0, 0.05);
}

TEST(Evolve, BlowUpAborts) {
    const auto c = periodic_config(1.0, 16, [](double) { return cplx(0.0, 3.0); }, [](double) { return cplx{}; });
    EvolveOptions opt;
    opt.blowup_threshold = 1e3;
    const auto tr = evolve(c, 0.01, 5.0, opt);
    EXPECT_TRUE(tr.aborted);
    EXPECT_FALSE(tr.abort_reason.empty());
    EXPECT_GE(tr.states.size(), 1u);
}
