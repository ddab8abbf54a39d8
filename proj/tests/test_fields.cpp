#include "bdforge/io.hpp"

#include <gtest/gtest.h>

using namespace bdforge;

namespace {

const Rect kUnit(rat(0), rat(1), rat(0), rat(1));

AffineMap map(long a11, long a12, long a21, long a22, long b1 = 0, long b2 = 0)
{
    return {MatQ(rat(a11), rat(a12), rat(a21), rat(a22)), {rat(b1), rat(b2)}};
}

// 2x2 grid of cells with distinct maps.
PAField quad_field()
{
    PAField f{kUnit, {}};
    Rat h = rat(1, 2);
    f.cells.push_back({Rect(rat(0), h, rat(0), h), map(1, 0, 0, 1)});
    f.cells.push_back({Rect(h, rat(1), rat(0), h), map(0, 1, -1, 0, 1, 0)});
    f.cells.push_back({Rect(rat(0), h, h, rat(1)), map(2, 0, 0, 0, 0, 1)});
    f.cells.push_back({Rect(h, rat(1), h, rat(1)), map(0, 0, 0, 0, 3, -1)});
    return f;
}

// Exact squared sup over all pairwise cell intersections, checked at their corners.
Rat brute_sup2(const PAField& f, const PAField& g)
{
    Rat best(0);
    for (const auto& a : f.cells)
        for (const auto& b : g.cells) {
            if (!a.r.interior_intersects(b.r))
                continue;
            AffineMap d = a.f - b.f;
            for (const VecQ& x : a.r.intersect(b.r).corners())
                best = std::max(best, d(x).norm2());
        }
    return best;
}

} // namespace

TEST(Partition, AcceptsGridAndRejectsDefects)
{
    PAField f = quad_field();
    EXPECT_FALSE(partition_error(f));
    PAField gap = f;
    gap.cells.pop_back();
    ASSERT_TRUE(partition_error(gap));
    EXPECT_NE(partition_error(gap)->find("area mismatch"), std::string::npos);
    PAField overlap = f;
    overlap.cells[0].r.x1 = rat(3, 4);
    ASSERT_TRUE(partition_error(overlap));
    EXPECT_NE(partition_error(overlap)->find("overlap"), std::string::npos);
    PAField outside = f;
    outside.cells[3].r.x1 = rat(2);
    EXPECT_TRUE(partition_error(outside));
    PAField empty = f;
    empty.cells[0].r.x1 = empty.cells[0].r.x0;
    EXPECT_TRUE(partition_error(empty));
    EXPECT_THROW(require_valid(gap), FieldError);
}

TEST(Evaluate, UsesTheOwningCell)
{
    PAField f = quad_field();
    EXPECT_EQ(evaluate(f, {rat(1, 4), rat(1, 4)}), (VecQ{rat(1, 4), rat(1, 4)}));
    EXPECT_EQ(evaluate(f, {rat(3, 4), rat(1, 4)}), (VecQ{rat(5, 4), rat(-3, 4)}));
    EXPECT_EQ(evaluate(f, {rat(3, 4), rat(3, 4)}), (VecQ{rat(3), rat(-1)}));
    EXPECT_THROW(evaluate(f, {rat(2), rat(0)}), FieldError);
}

TEST(Refine, CommonRefinementPreservesValues)
{
    PAField f = quad_field();
    PAField g{kUnit, {}};
    g.cells.push_back({Rect(rat(0), rat(1, 3), rat(0), rat(1)), map(0, 0, 0, 0, 1, 1)});
    g.cells.push_back({Rect(rat(1, 3), rat(1), rat(0), rat(1)), map(1, 1, 1, 1)});
    auto [rf, rg] = common_refine(f, g);
    EXPECT_FALSE(partition_error(rf));
    EXPECT_FALSE(partition_error(rg));
    ASSERT_EQ(rf.cells.size(), rg.cells.size());
    for (std::size_t i = 0; i < rf.cells.size(); ++i) {
        EXPECT_EQ(rf.cells[i].r, rg.cells[i].r);
        VecQ c = rf.cells[i].r.center();
        EXPECT_EQ(rf.cells[i].f(c), evaluate(f, c));
        EXPECT_EQ(rg.cells[i].f(c), evaluate(g, c));
    }
    EXPECT_EQ(rf.cells.size(), 6u);
}

TEST(Refine, SupDistanceMatchesCornerSearch)
{
    PAField f = quad_field();
    PAField g{kUnit, {}};
    g.cells.push_back({Rect(rat(0), rat(1, 3), rat(0), rat(1)), map(0, 0, 0, 0, 1, 1)});
    g.cells.push_back({Rect(rat(1, 3), rat(1), rat(0), rat(1)), map(1, 1, 1, 1)});
    NormIntegral d = sup_distance(f, g);
    double oracle = std::sqrt(brute_sup2(f, g).get_d());
    EXPECT_NEAR(d.value, oracle, 1e-14 * oracle);
    EXPECT_DOUBLE_EQ(sup_distance(f, f).value, 0.0);
}

TEST(Pw1DProfile, InterpolateEvaluateAndVariation)
{
    Pw1D p = Pw1D::interpolate({rat(0), rat(1, 3), rat(1)}, {rat(0), rat(1), rat(0)});
    EXPECT_EQ(p.pieces(), 2u);
    EXPECT_EQ(p(rat(1, 6)), rat(1, 2));
    EXPECT_EQ(p(rat(2, 3)), rat(1, 2));
    EXPECT_EQ(p.total_variation(), rat(2));
    EXPECT_EQ(p.integral(), rat(1, 2));
    EXPECT_THROW(p(rat(2)), FieldError);
}

TEST(Conversion, PiecewisePolynomialRoundTrip)
{
    PAField f = quad_field();
    PPField pp = to_pp(f);
    EXPECT_EQ(pp.ncomp, 2);
    PAField back = to_pa(pp);
    ASSERT_EQ(back.cells.size(), f.cells.size());
    for (std::size_t i = 0; i < f.cells.size(); ++i) {
        EXPECT_EQ(back.cells[i].r, f.cells[i].r);
        EXPECT_EQ(back.cells[i].f, f.cells[i].f);
    }
}

TEST(Json, PAFieldRoundTripIsExact)
{
    PAField f = quad_field();
    f.cells[0].f.A(0, 1) = rat(-7, 3);
    f.cells[2].f.b.y = rat(123456789, 1024);
    std::string text = dump_json(to_json(f));
    PAField g = pa_from_json(parse_json_text(text));
    ASSERT_EQ(g.cells.size(), f.cells.size());
    for (std::size_t i = 0; i < f.cells.size(); ++i) {
        EXPECT_EQ(g.cells[i].r, f.cells[i].r);
        EXPECT_EQ(g.cells[i].f, f.cells[i].f) << "cell " << i;
    }
    EXPECT_EQ(dump_json(to_json(g)), text);
}

TEST(Json, PPFieldRoundTripIsExact)
{
    PPField f{kUnit, 3, {}};
    PPCell c{kUnit, {Poly2::separable(rat(1), rat(-2, 5), rat(3), rat(7)), Poly2::constant(rat(1, 9)), Poly2()}};
    c.comp[2] = c.comp[0] * c.comp[0];
    f.cells.push_back(c);
    PPField g = pp_from_json(parse_json_text(dump_json(to_json(f))));
    ASSERT_EQ(g.ncomp, 3);
    ASSERT_EQ(g.cells.size(), 1u);
    for (int k = 0; k < 3; ++k)
        EXPECT_TRUE(g.cells[0].comp[k] == f.cells[0].comp[k]) << k;
}

TEST(Json, RejectsMalformedDocuments)
{
    auto bad = [](const std::string& s) { return pa_from_json(parse_json_text(s)); };
    EXPECT_THROW(bad(R"({"kind":"PPField"})"), FormatError);
    EXPECT_THROW(bad(R"({"kind":"PAField","domain":{"x":["0","1"],"y":["0","1"]}})"), FormatError);
    EXPECT_THROW(bad(R"({"kind":"PAField","domain":{"x":["0","1"],"y":["0","1"]},"cells":[
        {"rect":{"x":["0","1"],"y":["0","1"]},"A":[["1","0"],["0"]],"b":["0","0"]}]})"),
                 FormatError);
    EXPECT_THROW(bad(R"({"kind":"PAField","domain":{"x":["0","1"],"y":["0","1"]},"cells":[
        {"rect":{"x":["0","1"],"y":["0","1/2"]},"A":[["1","0"],["0","1"]],"b":["0","0"]}]})"),
                 FormatError);
    EXPECT_THROW(bad(R"({"kind":"PAField","domain":{"x":[0,1],"y":["0","1"]},"cells":[]})"), FormatError);
    EXPECT_THROW(parse_json_text("{not json"), FormatError);
}
