#include "reebkit/branched_cover.hpp"
#include "reebkit/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace reebkit;

namespace {

constexpr double kPi = std::numbers::pi;

Grid cover_grid(int n0, int n1, int n2) {
    return Grid{{GridAxis{0.0, kPi / 2 - 0.05, n0}, GridAxis{0.0, kTwoPi, n1}, GridAxis{0.0, kTwoPi, n2}}};
}

/// Order of the cokernel of a 2x2 integer matrix via Smith normal form
/// (0 for an infinite group).
long long smith_order(long long a, long long b, long long c, long long d) {
    // Columns (a, c) and (b, d) generate the relations.
    long long m[2][2] = {{a, b}, {c, d}};
    // Diagonalize by row/column Euclid steps.
    for (int pass = 0; pass < 64; ++pass) {
        bool changed = false;
        // Bring the smallest nonzero entry to (0,0).
        long long best = 0;
        int bi = -1, bj = -1;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                if (m[i][j] != 0 && (bi < 0 || std::llabs(m[i][j]) < best)) {
                    best = std::llabs(m[i][j]);
                    bi = i;
                    bj = j;
                }
        if (bi < 0) return 0;
        if (bi != 0) std::swap(m[0], m[1]);
        if (bj != 0) {
            std::swap(m[0][0], m[0][1]);
            std::swap(m[1][0], m[1][1]);
        }
        const long long piv = m[0][0];
        if (m[1][0] != 0) {
            const long long k = m[1][0] / piv;
            m[1][0] -= k * piv;
            m[1][1] -= k * m[0][1];
            changed = true;
        }
        if (m[0][1] != 0) {
            const long long k = m[0][1] / piv;
            m[0][1] -= k * piv;
            m[1][1] -= k * m[1][0];
            changed = true;
        }
        if (!changed) break;
    }
    return std::llabs(m[0][0] * m[1][1]);
}

/// |H_1| of the branched cover: Z^2 modulo the cover's two meridians, both
/// written in V1-cover coordinates as primitive lifts under P1.
long long cover_h1_oracle(const LensSpace& l, const BranchData& b1) {
    const long long x = b1.l * l.q - b1.k * l.p;
    const long long y = b1.m * l.p;
    const long long g = std::gcd(x, y);
    return smith_order(1, x / g, 0, y / g);
}

} // namespace

TEST(BranchMap, Examples) {
    const ChartMap id = branch_map({1, 0, 1}, false);
    const Vec3 x{0.4, 1.1, 2.2};
    const Vec3 y = id.apply(x);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(y[i], x[i]);

    const Vec3 d = branch_map({2, 0, 1}, false).apply({0.3, kPi / 3, 0.7});
    EXPECT_NEAR(d[1], 2 * kPi / 3, 1e-15);
    EXPECT_EQ(d[2], 0.7);

    const ChartMap s = branch_map({2, 1, 3}, true);
    const Vec3 z = s.apply({0.5, 0.2, 0.9});
    EXPECT_EQ(z[0], 0.25);
    EXPECT_NEAR(z[1], 0.4 + 0.9, 1e-15);
    EXPECT_NEAR(z[2], 2.7, 1e-15);
    EXPECT_EQ(s.jacobian({0.5, 0, 0})[0][0], 1.0);
    EXPECT_EQ(s.jacobian({0.0, 0, 0})[0][0], 0.0);
    EXPECT_THROW(branch_map({0, 0, 1}, false), InvalidArgument);
    EXPECT_THROW(branch_map({1, 0, -1}, false), InvalidArgument);
    EXPECT_EQ(s.map_winding({0, 1, 1}), (Winding{0, 3, 3}));
}

TEST(PullbackIntegrable, Examples) {
    const auto rho = ScalarField::coordinate(0);
    const auto m = alpha_r(std::sqrt(2.0));
    const auto& c = m.form.coeffs();
    const OneForm same = pullback_integrable(c[1], c[2], c[0], {1, 0, 1});
    const OneForm doubled = pullback_integrable(c[1], c[2], c[0], {2, 0, 1});
    for (double r : {0.1, 0.9}) {
        const Vec3 x{r, 0.3, 0.4};
        const Vec3 a = m.form.value(x), b = same.value(x), e = doubled.value(x);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
        EXPECT_NEAR(e[1], 2 * a[1], 1e-15);
        EXPECT_NEAR(e[2], a[2], 1e-15);
    }
    const OneForm t = pullback_integrable(pow(rho, 2), 1.0, 0.0, {3, 1, 2});
    const Vec3 v = t.value({0.5, 0, 0});
    EXPECT_NEAR(v[1], 0.75, 1e-15);
    EXPECT_NEAR(v[2], 2.25, 1e-15);
    EXPECT_THROW(pullback_integrable(ScalarField::coordinate(1), 1.0, 0.0, {1, 0, 1}), InvalidArgument);
}

TEST(PullbackIntegrable, AgreesWithGeneralPullback) {
    const auto m = alpha_r(1.3);
    const auto& c = m.form.coeffs();
    for (const BranchData d : {BranchData{2, 1, 3}, BranchData{1, -2, 2}, BranchData{4, 3, 1}}) {
        const OneForm lifted = pullback_integrable(c[1], c[2], c[0], d, m.form.chart());
        const ChartMap f = branch_map(d, false, m.form.chart());
        for (double r : {0.2, 0.7, 1.3}) {
            const Vec3 x{r, 0.5, 1.5};
            const Vec3 a = lifted.value(x), b = pullback(f, m.form, x);
            for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
        }
    }
}

TEST(Scaling, WedgeScalesByMl) {
    const auto m = alpha_r(std::sqrt(2.0));
    const auto& c = m.form.coeffs();
    for (long long mm = 1; mm <= 4; ++mm)
        for (long long k = -3; k <= 3; ++k)
            for (long long l = 1; l <= 4; ++l) {
                const auto rep = verify_contact_scaling(c[1], c[2], c[0], {mm, k, l}, cover_grid(10, 4, 4));
                EXPECT_TRUE(rep.passed()) << mm << k << l << " " << rep.max_rel_error;
                EXPECT_EQ(rep.expected, static_cast<double>(mm * l));
            }
    const auto r12 = verify_contact_scaling(c[1], c[2], c[0], {3, 2, 4}, cover_grid(20, 6, 6));
    EXPECT_NEAR(r12.min_ratio, 12.0, 1e-9);
    EXPECT_NEAR(r12.max_ratio, 12.0, 1e-9);
    const auto r1 = verify_contact_scaling(c[1], c[2], c[0], {1, 0, 1}, cover_grid(20, 6, 6));
    EXPECT_EQ(r1.max_rel_error, 0.0);
}

TEST(Scaling, LiftExtendsOverTheAxis) {
    const auto m = alpha_r(2.3);
    const auto& c = m.form.coeffs();
    const OneForm lifted = pullback_integrable(c[1], c[2], c[0], {3, 2, 2});
    Vec3 prev{};
    for (double r : {1e-3, 1e-4, 1e-5}) {
        const auto jets = lifted.jets({r, 0.0, 0.0});
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_TRUE(std::isfinite(jets[i].v));
            for (double gcomp : jets[i].g) EXPECT_TRUE(std::isfinite(gcomp));
        }
        const Vec3 v{jets[0].v, jets[1].v, jets[2].v};
        if (r < 1e-3)
            for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(std::abs(v[i] - prev[i]), 1e-4);
        prev = v;
    }
}

TEST(Bump, FunctionObject) {
    const BumpFunction b(0.1, 0.3);
    EXPECT_EQ(b.value(0.05), 1.0);
    EXPECT_EQ(b.value(0.3), 0.0);
    EXPECT_NEAR(b.value(0.2), 0.5, 1e-15);
    EXPECT_THROW(BumpFunction(0.0, 0.3), InvalidArgument);
    EXPECT_THROW(BumpFunction(0.3, 0.3), InvalidArgument);
}

TEST(Equivariant, ConstantFunction) {
    const auto res = equivariant_perturbation(1.0, BumpFunction(0.1, 0.3));
    EXPECT_TRUE(res.report.valid());
    EXPECT_EQ(res.g.value({0.2, 1.0, 2.0}), 1.0);
    EXPECT_EQ(res.report.min_g, 1.0);
    EXPECT_EQ(res.report.min_numerator, 2.0);
    const Vec3 b = res.beta.value({0.5, 0, 0});
    EXPECT_EQ(b[1], 0.25);
    EXPECT_EQ(b[2], 1.0);
}

TEST(Equivariant, TiltedFunction) {
    const auto rho = ScalarField::coordinate(0);
    const auto th = ScalarField::coordinate(1);
    const ScalarField f = 1.0 + rho * sin(th);
    const BumpFunction chi(0.1, 0.3);
    const auto res = equivariant_perturbation(f, chi);
    EXPECT_TRUE(res.report.valid()) << (res.report.failures.empty() ? "" : res.report.failures.front());
    EXPECT_GT(res.report.min_g, 0.5);
    EXPECT_GE(res.report.min_g, 0.7 - 1e-12);
    EXPECT_GT(res.report.min_numerator, 0.5);
    EXPECT_EQ(res.report.equivariance_defect, 0.0);
    // g = 1 + (1 - chi) rho sin(theta) up to the averaged slope, which vanishes.
    for (double r : {0.05, 0.15, 0.25, 0.4})
        for (double t : {0.3, 2.0, 4.5}) {
            const double expected = 1.0 + (1.0 - chi.value(r)) * r * std::sin(t);
            EXPECT_NEAR(res.g.value({r, t, 1.0}), expected, 1e-15);
        }
    // Reeb phi-component (2g + rho g_rho) / 2g^2 where g is theta-free; 1 on the axis.
    for (double r : {1e-6, 0.05}) {
        const Vec3 X = reeb_at(res.beta, {r, 1.0, 0.5});
        const Jet1 g = res.g.jet1({r, 1.0, 0.5});
        EXPECT_NEAR(X[2], (2 * g.v + r * g.g[0]) / (2 * g.v * g.v), 1e-8);
    }
    EXPECT_NEAR(reeb_at(res.beta, {0.0, 0.0, 0.0})[2], 1.0, 1e-8);
}

TEST(Equivariant, PositivityFailureIsReported) {
    const auto rho = ScalarField::coordinate(0);
    const auto th = ScalarField::coordinate(1);
    const auto res = equivariant_perturbation(0.2 + 8.0 * rho * sin(th), BumpFunction(0.1, 0.3));
    EXPECT_FALSE(res.report.valid());
    EXPECT_LT(res.report.min_g, 0.0);
}

TEST(Hyperbolic, ZeroEpsilonMirrorsBeta) {
    const OneForm tube = standard_tube_form();
    const Grid g = neighborhood_grid(0.6, 20, 8);
    const auto res = hyperbolic_perturbation(tube, BumpFunction(0.2, 0.4), 0.0, g);
    ASSERT_TRUE(res.report.epsilon);
    EXPECT_EQ(*res.report.epsilon, 0.0);
    EXPECT_NEAR(res.report.min_wedge, contact_check(tube, g).margin(), 1e-15);
}

TEST(Hyperbolic, TubeTwist) {
    const OneForm tube = standard_tube_form();
    const auto res = hyperbolic_perturbation(tube, BumpFunction(0.2, 0.4), 0.5);
    ASSERT_TRUE(res.report.valid());
    EXPECT_EQ(*res.report.epsilon, 0.5);
    // Near the axis dtheta has coefficient (1 + eps) rho^2.
    EXPECT_NEAR(res.abar.value({0.1, 0, 0})[1], 1.5 * 0.01, 1e-15);
}

TEST(Hyperbolic, SmoothLiftNeedsTheTwist) {
    const OneForm tube = standard_tube_form();
    const OneForm beta = pullback(branch_map({2, 0, 1}, true, tube.chart()), tube);
    const BumpFunction u(0.2, 0.4);
    // The lift alone degenerates on the axis: wedge = 8 rho^3.
    const auto plain = contact_check(beta, neighborhood_grid(0.8, 20, 8));
    ASSERT_TRUE(plain.axis_margin);
    EXPECT_LT(*plain.axis_margin, 1e-8);

    const auto res = hyperbolic_perturbation(beta, u, 0.1);
    ASSERT_TRUE(res.report.valid());
    EXPECT_GE(*res.report.epsilon, 0.05);
    EXPECT_GT(res.report.min_wedge, 0.0);
    ASSERT_TRUE(res.report.axis_margin);
    EXPECT_GT(*res.report.axis_margin, 0.0);
    // The axis stays a Reeb orbit.
    for (double t : {0.0, 1.0, 3.0}) EXPECT_LT(std::abs(reeb_at(res.abar, {1e-9, t, 0.5})[0]), 1e-10);

    // Any epsilon below the returned one also works.
    for (double f : {0.25, 0.5, 0.75}) {
        const auto below = hyperbolic_perturbation(beta, u, f * *res.report.epsilon);
        EXPECT_TRUE(below.report.valid());
        EXPECT_EQ(*below.report.epsilon, f * *res.report.epsilon);
    }
}

TEST(Hyperbolic, LargeTwistIsCutBack) {
    // A steep bump makes eps rho^2 u' dominate for large eps.
    const OneForm tube = standard_tube_form();
    const auto res = hyperbolic_perturbation(tube, BumpFunction(0.3, 0.31), 100.0);
    ASSERT_TRUE(res.report.valid());
    EXPECT_LT(*res.report.epsilon, 100.0);
    EXPECT_GT(*res.report.epsilon, 0.0);
    const auto check = contact_check(res.abar, neighborhood_grid(0.62));
    EXPECT_TRUE(check.passed());
}

TEST(LensCover, TrivialData) {
    for (long long p = 1; p <= 9; ++p)
        for (long long q = 0; q < p; ++q) {
            if (std::gcd(p, q) != 1) continue;
            EXPECT_EQ(lens_branched_cover({p, q}, {1, 0, 1}, {1, 0, 1}), LensSpace::normalized(p, q));
        }
}

TEST(LensCover, DoubleCoverOfTheSphere) {
    const LensSpace s3{1, 0};
    const LensSpace c = lens_branched_cover(s3, {2, 0, 1}, {1, 0, 2});
    EXPECT_EQ(c.p, cover_h1_oracle(s3, {2, 0, 1}));
    EXPECT_EQ(c, (LensSpace{1, 0}));
}

TEST(LensCover, H1MatchesSmithOracle) {
    int checked = 0;
    for (long long p = 1; p <= 12; ++p)
        for (long long q = 0; q < p; ++q) {
            if (std::gcd(p, q) != 1) continue;
            for (long long m1 = 1; m1 <= 3; ++m1)
                for (long long l1 = 1; l1 <= 3; ++l1)
                    for (long long k1 = -2; k1 <= 2; ++k1)
                        for (long long m2 = 1; m2 <= 3; ++m2) {
                            if ((m1 * l1) % m2 != 0) continue;
                            const long long l2 = m1 * l1 / m2;
                            for (long long k2 = -2; k2 <= 2; ++k2) {
                                const BranchData b1{m1, k1, l1}, b2{m2, k2, l2};
                                try {
                                    const LensSpace c = lens_branched_cover({p, q}, b1, b2);
                                    EXPECT_EQ(c.p, cover_h1_oracle({p, q}, b1)) << p << q << m1 << k1 << l1;
                                    ++checked;
                                } catch (const IncompatibleBranching&) {
                                }
                            }
                        }
        }
    EXPECT_GT(checked, 200);
}

TEST(LensCover, EqualLongitudinalDegrees) {
    for (long long p : {2, 4, 6, 9})
        for (long long q = 1; q < p; ++q) {
            if (std::gcd(p, q) != 1) continue;
            for (long long l : {1, 2, 3}) {
                if (p % l != 0) {
                    EXPECT_THROW(lens_branched_cover({p, q}, {1, 0, l}, {1, 0, l}), IncompatibleBranching);
                    continue;
                }
                const LensSpace c = lens_branched_cover({p, q}, {1, 0, l}, {1, 0, l});
                EXPECT_EQ(c.p, cover_h1_oracle({p, q}, {1, 0, l}));
            }
        }
    EXPECT_THROW(lens_branched_cover({5, 2}, {2, 0, 1}, {1, 0, 1}), IncompatibleBranching);
}
