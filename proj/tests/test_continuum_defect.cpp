#include <gtest/gtest.h>

#include <liouville/continuum_defect.hpp>
#include <liouville/random.hpp>

#include <cmath>
#include <numbers>

using namespace liouville;

namespace {

const FieldFn kZero = [](double) { return cplx{}; };

SplitFieldConfig zero_split(double L, double x0, cplx z, cplx z_bar, cplx X) {
    return split_config(L, x0, 41, 61, kZero, kZero, kZero, kZero, z, z_bar, X);
}

/// Independent smooth fields on each half and random defect data.
SplitFieldConfig random_split(Sampler& rng, std::size_t points = 81) {
    std::array<cplx, 8> c;
    for (auto& v : c) v = rng.disk(0.4);
    auto wave = [](cplx a, cplx b, double k) { return FieldFn([=](double x) { return a + b * std::sin(k * x + 0.3); }); };
    return split_config(1.5, 0.2, points, points, wave(c[0], c[1], 1.3), wave(c[2], c[3], 0.7), wave(c[4], c[5], 1.1),
                        wave(c[6], c[7], 0.9), rng.disk(0.5), rng.disk(0.5), std::exp(rng.disk(0.3)));
}

/// A smooth field split continuously at x0 with no defect content.
SplitFieldConfig continuous_split(const FieldFn& phi, const FieldFn& pi, double L, double x0, std::size_t points) {
    return with_sewing(split_config(L, x0, points, points, phi, pi, phi, pi, 0.0, 0.0, 1.0));
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(SplitConfig, Validation) {
    EXPECT_THROW(split_config(1.0, 1.5, 11, 11, kZero, kZero, kZero, kZero, 0.0, 0.0, 1.0), ConfigError);
    EXPECT_THROW(zero_split(1.0, 0.0, 0.0, 0.0, 0.0), SingularStateError);
    auto c = zero_split(1.0, 0.0, 0.0, 0.0, 1.0);
    c.right.x_min += 0.1;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(SplitConfig, FlankGradientsAreSecondOrder) {
    const FieldFn phi = [](double x) { return cplx(std::sin(x), 0.5 * std::cos(2.0 * x)); };
    const double x0 = 0.3;
    const cplx exact(std::cos(x0), -std::sin(2.0 * x0));
    double prev = 0.0;
    for (std::size_t n : {41u, 81u, 161u}) {
        const auto f = flank_values(split_config(1.0, x0, n, n, phi, kZero, phi, kZero, 0.0, 0.0, 1.0));
        const double err = std::max(std::abs(f.phi_x_p - exact), std::abs(f.phi_x_m - exact));
        if (prev > 0.0) EXPECT_GE(prev / err, 3.5);
        prev = err;
    }
}

TEST(DefectQuantities, TransparentValues) {
    const auto f = flank_values(zero_split(1.0, 0.0, 0.0, 0.0, 1.0));
    EXPECT_NEAR(std::abs(defect_D(1.0, f) - 2.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(defect_A(1.0, f) - 1.0), 0.0, 1e-15);
}

TEST(DefectQuantities, VanishingDIsError) {
    EXPECT_THROW(defect_charge_I1(zero_split(1.0, 0.0, 0.0, 0.0, kI)), DegenerateError);
    EXPECT_THROW(defect_momentum_hamiltonian(zero_split(1.0, 0.0, 0.0, 0.0, kI)), DegenerateError);
    EXPECT_THROW(v_matrices_near_defect(zero_split(1.0, 0.0, 0.0, 0.0, -kI), 0.1), DegenerateError);
}

TEST(DefectCharges, ZeroFieldTransparent) {
    for (double L : {1.0, 2.5}) {
        const auto c = zero_split(L, 0.3, 0.0, 0.0, 1.0);
        EXPECT_LE(std::abs(defect_charge_I1(c) + L) / L, 1e-13);
        EXPECT_LE(std::abs(defect_charge_I1_sym(c) + L) / L, 1e-13);
        const auto ph = defect_momentum_hamiltonian(c);
        EXPECT_EQ(ph.P, cplx{});
        EXPECT_LE(std::abs(ph.H - 4.0 * L) / L, 1e-13);
    }
}

TEST(DefectCharges, ZeroFieldDefectPotential) {
    const cplx z(0.3, -0.2), zb(-0.1, 0.4);
    const auto c = zero_split(1.0, -0.2, z, zb, 1.0);
    EXPECT_LE(std::abs(defect_momentum_hamiltonian(c).H - (4.0 - 2.0 * (z + zb))), 1e-13);
    EXPECT_LE(std::abs(defect_charge_I1(c) - (-1.0 + 0.5 * (z + zb))), 1e-13);
}

TEST(DefectCharges, SymmetricDisplayMapsToFirst) {
    // pi -> -pi together with A -> 1/A (X -> X^{-1} e^{i(phi+ - phi-)}) maps one display onto the other.
    Sampler rng(70);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_split(rng);
        auto m = c;
        for (auto& p : m.left.pi) p = -p;
        for (auto& p : m.right.pi) p = -p;
        const auto f = flank_values(c);
        m.X = std::exp(kI * (f.phi_p - f.phi_m)) / c.X;
        EXPECT_LE(rel(defect_charge_I1_sym(c), defect_charge_I1(m)), 1e-13);
    }
}

TEST(DefectCharges, MomentumAndHamiltonianFromFirstCharges) {
    Sampler rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_split(rng);
        const cplx i1 = defect_charge_I1(c), s1 = defect_charge_I1_sym(c);
        const auto ph = defect_momentum_hamiltonian(c);
        EXPECT_LE(rel(ph.P, -2.0 * (s1 - i1)), 1e-12);
        EXPECT_LE(rel(ph.H, -2.0 * (s1 + i1)), 1e-12);
    }
}

TEST(DefectCharges, AffineInDefectFields) {
    Sampler rng(72);
    auto c = random_split(rng);
    auto with = [&](cplx z, cplx zb) {
        auto d = c;
        d.z = z;
        d.z_bar = zb;
        return defect_charge_I1(d);
    };
    const cplx base = with(0.0, 0.0);
    const cplx z1(0.2, 0.1), z2(-0.3, 0.5);
    EXPECT_LE(std::abs((with(z1 + z2, 2.0 * z1) - base) - (with(z1, z1) - base) - (with(z2, z1) - base)), 1e-13);
    EXPECT_LE(std::abs((with(3.0 * z1, 0.0) - base) - 3.0 * (with(z1, 0.0) - base)), 1e-13);
}

TEST(DefectCharges, PeriodicInSimultaneousShift) {
    Sampler rng(73);
    for (int trial = 0; trial < 5; ++trial) {
        const auto c = random_split(rng);
        auto s = c;
        for (auto& p : s.left.phi) p += 2.0 * std::numbers::pi;
        for (auto& p : s.right.phi) p += 2.0 * std::numbers::pi;
        EXPECT_LE(rel(defect_charge_I1(s), defect_charge_I1(c)), 1e-12);
        EXPECT_LE(rel(defect_charge_I1_sym(s), defect_charge_I1_sym(c)), 1e-12);
        EXPECT_LE(rel(defect_momentum_hamiltonian(s).H, defect_momentum_hamiltonian(c).H), 1e-12);
        EXPECT_LE(rel(defect_momentum_hamiltonian(s).P, defect_momentum_hamiltonian(c).P), 1e-12);
    }
}

TEST(DefectCharges, ReduceToBulkWithoutDefect) {
    const FieldFn phi = [](double x) { return cplx(0.3 * std::sin(std::numbers::pi * x), 0.1 * std::cos(std::numbers::pi * x)); };
    const FieldFn pi = [](double x) { return cplx(0.2 * std::cos(std::numbers::pi * x), -0.1); };
    const auto bulk = charges(periodic_config(1.0, 512, phi, pi));
    double prev = 0.0;
    for (std::size_t n : {41u, 81u, 161u}) {
        const auto c = continuous_split(phi, pi, 1.0, 0.25, n);
        EXPECT_LE(std::abs(sewing_residual(c)), 1e-15);
        const auto ph = defect_momentum_hamiltonian(c);
        const double err = std::max({std::abs(defect_charge_I1(c) - bulk.I1), std::abs(defect_charge_I1_sym(c) - bulk.I1_sym),
                                     std::abs(ph.P - bulk.P), std::abs(ph.H - bulk.H)});
        if (prev > 0.0) EXPECT_GE(prev / err, 3.5);
        prev = err;
    }
    EXPECT_LE(prev, 1e-3);
}

TEST(DefectCharges, ConservedOnSplitExactSolution) {
    // Transparent defect data (z = z_bar = 0, S_1 = 0) on an exact solution: P and H keep their
    // t = 0 values up to the O(h^2) quadrature error.
    const auto sol = periodic_exact_solution(2.0, 1, 0.2, 0.15);
    auto at = [&](double t, std::size_t n) {
        const FieldFn phi = [&, t](double x) { return sol.jet(x, t).phi; };
        const FieldFn pi = [&, t](double x) { return sol.jet(x, t).phi_t; };
        return defect_momentum_hamiltonian(continuous_split(phi, pi, 2.0, 0.4, n));
    };
    double prev = 0.0;
    for (std::size_t n : {101u, 201u, 401u}) {
        const auto a = at(0.0, n), b = at(0.5, n);
        const double drift = std::max(std::abs(a.P - b.P), std::abs(a.H - b.H));
        if (prev > 0.0) EXPECT_GE(prev / drift, 3.5);
        prev = drift;
    }
    EXPECT_LE(prev, 1e-3);
}

TEST(Sewing, Residual) {
    EXPECT_NEAR(std::abs(sewing_residual(zero_split(1.0, 0.0, 0.0, 0.0, 2.0)) - 1.0), 0.0, 1e-15);
    EXPECT_EQ(sewing_residual(zero_split(1.0, 0.0, 0.3, 0.1, 1.0)), cplx{});
    Sampler rng(74);
    for (int trial = 0; trial < 10; ++trial)
        EXPECT_LE(std::abs(sewing_residual(with_sewing(random_split(rng)))), 1e-15);
}

TEST(Sewing, OffDiagonalsMatchIffResidualVanishes) {
    Sampler rng(75);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = with_sewing(random_split(rng));
        const cplx mu = rng.square(1.0);
        EXPECT_LE(sewing_mismatch(c, mu), 1e-12);
        auto off = c;
        off.X *= std::exp(cplx(0.05 + 0.2 * rng.uniform(), 0.0));
        EXPECT_GT(sewing_mismatch(off, mu), 1e-3);
    }
}

TEST(Sewing, ZeroFieldOffDiagonals) {
    const cplx mu(0.3, -0.2);
    const auto v = v_matrices_near_defect(zero_split(1.0, 0.0, 0.0, 0.0, 1.0), mu);
    for (const Mat2* m : {&v.Vt_plus, &v.Vt_minus}) {
        EXPECT_NEAR(std::abs((*m)(0, 1) - std::exp(-mu)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs((*m)(1, 0) - std::exp(-mu)), 0.0, 1e-15);
    }
    EXPECT_NEAR(std::abs(v.V_plus(0, 1) - 4.0 * std::exp(-mu)), 0.0, 1e-15);
    EXPECT_LE(sewing_mismatch(zero_split(1.0, 0.0, 0.0, 0.0, 2.0), mu), 1e9);
    EXPECT_GT(sewing_mismatch(zero_split(1.0, 0.0, 0.0, 0.0, 2.0), mu), 0.1);
}

TEST(VMatrices, Traceless) {
    Sampler rng(76);
    for (int trial = 0; trial < 10; ++trial) {
        const auto v = v_matrices_near_defect(random_split(rng), rng.square(1.0));
        for (const Mat2* m : {&v.V_plus, &v.V_minus, &v.Vt_plus, &v.Vt_minus}) EXPECT_NEAR(std::abs(m->trace()), 0.0, 1e-14);
    }
}
