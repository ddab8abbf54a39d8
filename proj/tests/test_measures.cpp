#include "bdforge/measures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bdforge;

namespace {

const Rect kUnit(rat(0), rat(1), rat(0), rat(1));

template <class F>
double simpson(const F& f, double a, double b, int panels = 4000)
{
    double h = (b - a) / panels, s = f(a) + f(b);
    for (int i = 1; i < panels; ++i)
        s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

AffineMap random_map(std::mt19937_64& rng)
{
    auto c = [&]() { return rat(static_cast<long>(rng() % 17) - 8, 4); };
    return {MatQ(c(), c(), c(), c()), {c(), c()}};
}

// Column split at x = 1/2.
PAField two_cells(const AffineMap& left, const AffineMap& right)
{
    return {kUnit, {{Rect(rat(0), rat(1, 2), rat(0), rat(1)), left}, {Rect(rat(1, 2), rat(1), rat(0), rat(1)), right}}};
}

double frob(double a, double b, double c, double d) { return std::sqrt(a * a + b * b + c * c + d * d); }

} // namespace

TEST(StrainReport, ZeroFieldIsAllZero)
{
    StrainReport r = strain_report(constant_field(kUnit));
    EXPECT_EQ(r.bulk_grad_l1.value, 0);
    EXPECT_EQ(r.bulk_strain_l1.value, 0);
    EXPECT_EQ(r.jump_du.value, 0);
    EXPECT_EQ(r.jump_eu.value, 0);
    EXPECT_EQ(r.jump_length, 0);
    EXPECT_EQ(r.jumps, 0u);
    EXPECT_EQ(r.sup_norm.value, 0);
    EXPECT_TRUE(r.skew_exact);
}

TEST(StrainReport, ContinuousInterfaceCarriesNoJump)
{
    AffineMap u{MatQ(rat(1), rat(2), rat(3), rat(4)), {rat(1), rat(0)}};
    StrainReport r = strain_report(two_cells(u, u));
    EXPECT_EQ(r.jumps, 0u);
    EXPECT_NEAR(r.bulk_grad_l1.value, std::sqrt(30.0), 1e-14);
    EXPECT_NEAR(r.bulk_strain_l1.value, frob(1, 2.5, 2.5, 4), 1e-14);
    EXPECT_NEAR(r.axis_grad_l1.value, std::sqrt(10.0) + std::sqrt(20.0), 1e-14);
    EXPECT_FALSE(r.skew_exact);
}

TEST(StrainReport, RigidJumpHasOnlyJumpStrain)
{
    AffineMap left{MatQ(rat(0), rat(1), rat(-1), rat(0)), {rat(0), rat(0)}};
    AffineMap right{MatQ::zero(), {rat(1), rat(0)}};
    StrainReport r = strain_report(two_cells(left, right));
    EXPECT_TRUE(r.skew_exact);
    EXPECT_EQ(r.bulk_strain_l1.value, 0);
    EXPECT_EQ(r.jump_length, rat(1));
}

TEST(StrainReport, JumpIntegralsMatchPointwiseOracle)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        AffineMap l = random_map(rng), rmap = random_map(rng);
        if (l == rmap)
            continue;
        StrainReport r = strain_report(two_cells(l, rmap));
        // [u] = u(right) - u(left) on x = 1/2, normal e_1.
        MatD A = to_double(rmap.A - l.A);
        VecD b = to_double(rmap.b - l.b);
        auto jump = [&](double y) {
            return VecD{A.m[0][0] * 0.5 + A.m[0][1] * y + b.x, A.m[1][0] * 0.5 + A.m[1][1] * y + b.y};
        };
        auto du = [&](double y) { VecD a = jump(y); return std::hypot(a.x, a.y); };
        // sym(a (x) e_1) = [[a1, a2/2], [a2/2, 0]].
        auto eu = [&](double y) { VecD a = jump(y); return frob(a.x, a.y / 2, a.y / 2, 0); };
        // Kinks at zeros of [u] are resolved by a fine grid; the tolerance absorbs them.
        double du_o = simpson(du, 0, 1, 200000), eu_o = simpson(eu, 0, 1, 200000);
        EXPECT_NEAR(r.jump_du.value, du_o, 1e-8 * (1 + du_o)) << trial;
        EXPECT_NEAR(r.jump_eu.value, eu_o, 1e-8 * (1 + eu_o)) << trial;
        EXPECT_LE(r.jump_eu.lo(), r.jump_du.hi());
        EXPECT_NEAR(r.du_total.value, r.bulk_grad_l1.value + r.jump_du.value, 1e-14 * (1 + r.du_total.value));
    }
}

TEST(StrainReport, InterfacesAreFoundAcrossUnequalNeighbours)
{
    // One cell on the left, two stacked on the right: the x = 1/2 interface splits in two segments.
    PAField f{kUnit, {}};
    f.cells.push_back({Rect(rat(0), rat(1, 2), rat(0), rat(1)), AffineMap{}});
    f.cells.push_back({Rect(rat(1, 2), rat(1), rat(0), rat(1, 3)), AffineMap{MatQ::zero(), {rat(1), rat(0)}}});
    f.cells.push_back({Rect(rat(1, 2), rat(1), rat(1, 3), rat(1)), AffineMap{MatQ::zero(), {rat(0), rat(2)}}});
    auto js = jump_set(f);
    Rat length(0);
    double du = 0;
    for (const auto& j : js) {
        length += j.length();
        du += jump_integrals(j).first.value;
    }
    // Left interface 1, and the horizontal one at y = 1/3 of length 1/2 with |[u]| = sqrt5.
    EXPECT_EQ(length, rat(3, 2));
    EXPECT_NEAR(du, 1.0 / 3 + 2.0 * 2 / 3 + std::sqrt(5.0) / 2, 1e-14);
}

TEST(StrainReport, PolynomialReportAgreesWithAffineOne)
{
    std::mt19937_64 rng(11);
    PAField f{kUnit, {}};
    for (int i = 0; i < 4; ++i)
        f.cells.push_back({Rect(rat(i, 4), rat(i + 1, 4), rat(0), rat(1)), random_map(rng)});
    StrainReport a = strain_report(f), p = strain_report(to_pp(f));
    auto agree = [](const NormIntegral& x, const NormIntegral& y) {
        return std::abs(x.value - y.value) <= x.abs_error_bound + y.abs_error_bound + 1e-14 * (1 + std::abs(x.value));
    };
    EXPECT_TRUE(agree(a.bulk_grad_l1, p.bulk_grad_l1));
    EXPECT_TRUE(agree(a.bulk_strain_l1, p.bulk_strain_l1));
    EXPECT_TRUE(agree(a.jump_du, p.jump_du)) << a.jump_du.value << " vs " << p.jump_du.value;
    EXPECT_TRUE(agree(a.jump_eu, p.jump_eu)) << a.jump_eu.value << " vs " << p.jump_eu.value;
    EXPECT_LT(std::abs(a.jump_du.value - p.jump_du.value), 1e-7 * a.jump_du.value);
    EXPECT_EQ(a.jump_length, p.jump_length);
}

TEST(LqGradient, ScalesWithExponent)
{
    AffineMap u{MatQ(rat(0), rat(2), rat(2), rat(0)), {rat(0), rat(0)}};
    PAField f = constant_field(kUnit, u);
    EXPECT_NEAR(lq_gradient(f, 1).value, 2 * std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(lq_gradient(f, 2).value, 8, 1e-13);
    EXPECT_THROW(lq_gradient(f, 0.5), std::invalid_argument);
}

TEST(Formatting, SeventeenSignificantDigits)
{
    EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
    EXPECT_EQ(fmt17(2), "2");
    EXPECT_EQ(std::stod(fmt17(M_PI)), M_PI);
}
