#include "bdforge/balls.hpp"
#include "bdforge/caccioppoli.hpp"
#include "bdforge/counterexamples.hpp"
#include "bdforge/svg.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace bdforge;

namespace {

std::size_t count_rects(const std::string& svg)
{
    std::size_t n = 0;
    for (std::size_t p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1))
        ++n;
    return n;
}

} // namespace

TEST(Balls, PartialSumsFromDefinitions)
{
    BallsReport rep = balls_partial({2, 12}, 1.5);
    ASSERT_EQ(rep.rows.size(), 12u);
    double h = 0, g = 0, gq = 0, sup = 0;
    for (int k = 1; k <= 12; ++k) {
        double r = std::ldexp(1.0, -k), d = std::ldexp(1.0, 2 * k) / (k * k);
        h += 2 * std::numbers::pi * r;
        double grad = std::sqrt(2.0) * d; // |d A| with A the rotation generator
        g += grad * std::numbers::pi * r * r;
        gq += std::pow(grad, 1.5) * std::numbers::pi * r * r;
        const BallsRow& row = rep.rows[k - 1];
        EXPECT_EQ(row.r, pow2(-k));
        EXPECT_NEAR(row.hausdorff, h, 1e-14 * h);
        EXPECT_NEAR(row.grad_l1, g, 1e-13 * g);
        EXPECT_NEAR(row.grad_lq, gq, 1e-12 * gq);
        sup = std::max(sup, d * r);
        EXPECT_DOUBLE_EQ(row.sup, sup);
    }
    EXPECT_LT(rep.rows.back().grad_l1, rep.basel_bound);
}

TEST(Balls, HigherDimensionProjection)
{
    // Closed forms for n = 3.
    EXPECT_NEAR(mean_planar_projection(3), std::numbers::pi / 4, 1e-14);
    EXPECT_NEAR(unit_ball_volume(3), 4 * std::numbers::pi / 3, 1e-14);
    EXPECT_THROW(balls_partial({1, 3}, 1), std::invalid_argument);
    EXPECT_THROW(balls_partial({2, 3}, 0.5), std::invalid_argument);
}

TEST(Balls, CsvShape)
{
    std::string csv = balls_partial({2, 3}, 1).csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), BallsReport::csv_header());
    EXPECT_NE(csv.find("\n1,1/2,4/1,"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Caccioppoli, ExactSideIntegrals)
{
    // |s - 1/2| on [0, 2] = 1/8 + 9/8.
    EXPECT_EQ(detail::abs_linear_integral(rat(-1, 2), rat(1), rat(0), rat(2)), rat(5, 4));
    EXPECT_EQ(detail::abs_linear_integral(rat(1), rat(0), rat(0), rat(3)), rat(3));
    EXPECT_EQ(detail::signed_linear_integral(rat(-1, 2), rat(1), rat(0), rat(2)), rat(1));
}

TEST(Caccioppoli, RandomFieldsSatisfyTheInequalities)
{
    for (CacMode mode : {CacMode::Rigid, CacMode::Affine})
        for (unsigned long long seed = 0; seed < 10; ++seed) {
            CacAffineField f = random_caccioppoli(seed, 30, mode);
            EXPECT_EQ(f.field.cells.size(), 30u);
            if (mode == CacMode::Rigid) {
                for (const auto& c : f.field.cells)
                    EXPECT_TRUE(c.f.A.is_skew());
            }
            GsbvReport r = gsbv_check(f);
            EXPECT_TRUE(r.identities_exact) << mode_name(mode) << " seed " << seed;
            EXPECT_TRUE(r.violations.empty()) << mode_name(mode) << " seed " << seed;
            for (int i = 0; i < 2; ++i) {
                EXPECT_LE(r.grad[i].lo(), r.boundary_rhs[i].get_d());
                EXPECT_LE(r.du_total[i].lo(), r.du_pieces[i].hi());
            }
        }
}

TEST(Caccioppoli, SeedsAreReproducible)
{
    CacAffineField a = random_caccioppoli(42, 20, CacMode::Affine), b = random_caccioppoli(42, 20, CacMode::Affine);
    ASSERT_EQ(a.field.cells.size(), b.field.cells.size());
    for (std::size_t i = 0; i < a.field.cells.size(); ++i) {
        EXPECT_EQ(a.field.cells[i].r, b.field.cells[i].r);
        EXPECT_EQ(a.field.cells[i].f, b.field.cells[i].f);
    }
    EXPECT_THROW(random_caccioppoli(1, 0, CacMode::Rigid), std::invalid_argument);
}

TEST(Ornstein, ShortRunSatisfiesTraceIdentities)
{
    OrnsteinConfig cfg;
    cfg.K = 3;
    OrnsteinRun run = ornstein_run(cfg);
    ASSERT_EQ(run.trace.rows.size(), 4u);
    TraceCheck c = check_trace(run.trace);
    EXPECT_TRUE(c.areas);
    EXPECT_TRUE(c.hat_areas);
    EXPECT_TRUE(c.gradients);
    EXPECT_TRUE(c.increments) << c.worst_increment_rel;
    EXPECT_TRUE(c.jumps);
    for (const auto& r : run.trace.rows)
        EXPECT_EQ(r.area_omega, rat(1, 4) * pow2(-r.k));
    // Omega_3 carries A_3, everything else is skew.
    EXPECT_EQ(omega_area(run.last.u, pencil(3).A), rat(1, 32));
    EXPECT_FALSE(partition_error(run.last.u));
}

TEST(Ornstein, CapOverrunIsRecorded)
{
    OrnsteinConfig cfg;
    cfg.K = 6;
    cfg.cell_cap = 50;
    OrnsteinRun run = ornstein_run(cfg);
    EXPECT_TRUE(run.trace.cap_reached);
    EXPECT_NE(run.trace.stop_reason.find("cell cap"), std::string::npos);
}

TEST(Svg, OneRectanglePerCellAndDeterministic)
{
    PAField one = constant_field(Rect(rat(0), rat(1), rat(0), rat(1)));
    std::string s = render_svg(one);
    EXPECT_EQ(count_rects(s), 1u);
    OrnsteinConfig cfg;
    cfg.K = 3;
    OrnsteinRun run = ornstein_run(cfg);
    std::string a = render_svg(run.last.u), b = render_svg(run.last.u);
    EXPECT_EQ(a, b);
    EXPECT_EQ(count_rects(a), run.trace.rows.back().cells);
}

TEST(Svg, CapSuggestsCoarsening)
{
    OrnsteinConfig cfg;
    cfg.K = 3;
    OrnsteinRun run = ornstein_run(cfg);
    RenderOptions opt;
    opt.cap = 5;
    try {
        render_svg(run.last.u, opt);
        ADD_FAILURE() << "expected RenderError";
    } catch (const RenderError& e) {
        EXPECT_NE(std::string(e.what()).find("--coarsen"), std::string::npos);
    }
    opt.coarsen = 8;
    EXPECT_EQ(count_rects(render_svg(run.last.u, opt)), 64u);
}

TEST(Svg, PaletteSeparatesPencilMatrices)
{
    GradientTag a = classify_gradient(pencil(2).A), b = classify_gradient(pencil(2).B), c = classify_gradient(pencil(2).C);
    EXPECT_NE(a.family, b.family);
    EXPECT_NE(b.family, c.family);
    EXPECT_EQ(a.k, 2);
}
