#include "bdforge/numeric.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bdforge;

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the Legendre recurrence.
std::pair<std::vector<double>, std::vector<double>> golub_welsch(int n)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b = k / std::sqrt(4.0 * k * k - 1);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        x[i] = es.eigenvalues()(i);
        w[i] = 2 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    }
    return {x, w};
}

// Composite Simpson with many panels; only used where the integrand is smooth.
template <class F>
double simpson(const F& f, double a, double b, int panels = 20000)
{
    double h = (b - a) / panels, s = f(a) + f(b);
    for (int i = 1; i < panels; ++i)
        s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

} // namespace

TEST(Rational, CanonicalConstruction)
{
    EXPECT_EQ(to_string(rat(6, 8)), "3/4");
    EXPECT_EQ(to_string(rat(4)), "4/1");
    EXPECT_EQ(to_string(rat(-2, -4)), "1/2");
    EXPECT_EQ(rat(2, 4), rat(1, 2));
}

TEST(Rational, ParseRoundTrip)
{
    for (const char* s : {"0/1", "-7/3", "123456789012345678901234567890/11", "1/1"})
        EXPECT_EQ(to_string(parse_rat(s)), s);
    EXPECT_EQ(parse_rat("6/4"), rat(3, 2));
    EXPECT_EQ(parse_rat("5"), rat(5));
}

TEST(Rational, ParseRejectsMalformed)
{
    for (const char* s : {"", "1/0", "abc", "1/2/3", "1.5", " 1/2"})
        EXPECT_THROW(parse_rat(s), std::exception) << s;
}

TEST(Rational, PowersOfTwo)
{
    EXPECT_EQ(pow2(0), rat(1));
    EXPECT_EQ(pow2(10), rat(1024));
    EXPECT_EQ(pow2(-3), rat(1, 8));
    EXPECT_EQ(pow2(70) * pow2(-70), rat(1));
}

TEST(Rational, FloorAndAbs)
{
    EXPECT_EQ(floor_rat(rat(7, 2)), rat(3));
    EXPECT_EQ(floor_rat(rat(-7, 2)), rat(-4));
    EXPECT_EQ(floor_rat(rat(4)), rat(4));
    EXPECT_EQ(abs_rat(rat(-3, 5)), rat(3, 5));
}

TEST(Matrix, SymmetricPartAndSkewTest)
{
    MatQ M(rat(1), rat(2), rat(4), rat(3));
    MatQ S = M.sym();
    EXPECT_EQ(S(0, 1), rat(3));
    EXPECT_EQ(S(1, 0), rat(3));
    EXPECT_FALSE(M.is_skew());
    EXPECT_TRUE(MatQ(rat(0), rat(5, 3), rat(-5, 3), rat(0)).is_skew());
}

TEST(Matrix, FrobeniusNorm)
{
    MatQ M(rat(0), rat(2), rat(2), rat(0));
    EXPECT_NEAR(norm(M), 2 * std::sqrt(2.0), 1e-15);
    MatD D(1e200, 1e200, 0, 0);
    EXPECT_NEAR(norm(D) / 1e200, std::sqrt(2.0), 1e-14);
}

TEST(Gauss, NodesMatchGolubWelsch)
{
    for (int n : {2, 5, 16, 33, 64, 128}) {
        const GaussRule& g = cached_rule(n);
        auto [x, w] = golub_welsch(n);
        for (int i = 0; i < n; ++i) {
            EXPECT_NEAR(g.x[i], x[i], 1e-13) << "n=" << n << " i=" << i;
            EXPECT_NEAR(g.w[i], w[i], 1e-13) << "n=" << n << " i=" << i;
        }
    }
}

TEST(Gauss, ExactOnPolynomials)
{
    // An n-point rule integrates degree 2n-1 exactly.
    for (int n : {2, 4, 8}) {
        const GaussRule& g = cached_rule(n);
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0;
            for (int i = 0; i < n; ++i)
                s += g.w[i] * std::pow(g.x[i], d);
            double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " d=" << d;
        }
    }
}

TEST(Gauss, OneDimensionalErrorBoundCoversTruth)
{
    auto f = [](double x) { return std::exp(std::sin(3 * x)); };
    NormIntegral r = gauss_quad_1d(f, -1.0, 2.0, 24);
    double truth = simpson(f, -1.0, 2.0, 200000);
    EXPECT_LE(std::abs(r.value - truth), r.abs_error_bound + 1e-12);
    EXPECT_LT(r.abs_error_bound, 1e-8);
}

TEST(Gauss, TwoDimensionalMatchesSeparableProduct)
{
    auto f = [](double x, double y) { return std::cos(x) * std::exp(y); };
    RectD r{0, 1, -1, 0.5};
    NormIntegral q = gauss_quad_2d(f, r, 10);
    double truth = std::sin(1.0) * (std::exp(0.5) - std::exp(-1.0));
    EXPECT_LE(std::abs(q.value - truth), q.abs_error_bound + 1e-15);
    EXPECT_NEAR(q.value, truth, 1e-13);
}

TEST(Gauss, RejectsBadOrder)
{
    auto f = [](double) { return 1.0; };
    EXPECT_THROW(gauss_quad_1d(f, 0, 1, 1), std::invalid_argument);
    EXPECT_THROW(gauss_quad_1d(f, 0, 1, 65), std::invalid_argument);
    EXPECT_THROW(cached_rule(0), std::invalid_argument);
}

TEST(SegmentNorm, MatchesSimpsonAcrossSignChanges)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int trial = 0; trial < 200; ++trial) {
        VecD p{U(rng), U(rng)}, q{U(rng), U(rng)};
        double L = 0.1 + std::abs(U(rng));
        NormIntegral r = seg_norm_integral(p, q, L);
        // Split Simpson at the closest-approach point where |p + t q| has a kink when it vanishes.
        auto f = [&](double t) { return std::hypot(p.x + t * q.x, p.y + t * q.y); };
        double tc = -(p.x * q.x + p.y * q.y) / (q.x * q.x + q.y * q.y);
        double truth = (tc > 0 && tc < L) ? simpson(f, 0, tc) + simpson(f, tc, L) : simpson(f, 0, L);
        EXPECT_NEAR(r.value, truth, 1e-9 * (1 + truth)) << "trial " << trial;
        EXPECT_LE(r.abs_error_bound, 1e-12 * (1 + truth));
    }
}

TEST(SegmentNorm, ParallelCaseIsPiecewiseLinear)
{
    // |s - 1| on [0, 3] integrates to 1/2 + 2.
    NormIntegral r = seg_norm_integral({-1, 0}, {1, 0}, 3);
    EXPECT_NEAR(r.value, 2.5, 1e-14);
    EXPECT_NEAR(seg_norm_integral({3, 4}, {0, 0}, 2).value, 10, 1e-14);
    EXPECT_THROW(seg_norm_integral({0, 0}, {1, 0}, 0), std::invalid_argument);
    EXPECT_THROW(seg_norm_integral({NAN, 0}, {1, 0}, 1), std::invalid_argument);
}

TEST(NormIntegralType, AccumulatesBounds)
{
    NormIntegral a{1, 1e-3}, b{2, 2e-3};
    NormIntegral c = a + b;
    EXPECT_DOUBLE_EQ(c.value, 3);
    EXPECT_DOUBLE_EQ(c.abs_error_bound, 3e-3);
    EXPECT_DOUBLE_EQ(c.lo(), 3 - 3e-3);
    NormIntegral e = exact_norm_value(rat(2), rat(1, 2));
    EXPECT_NEAR(e.value, std::sqrt(2.0) / 2, 1e-16);
    EXPECT_GT(e.abs_error_bound, 0);
}
