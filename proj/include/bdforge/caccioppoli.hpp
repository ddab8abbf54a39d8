#pragma once

#include "fields.hpp"
#include "measures.hpp"

#include <random>
#include <string>
#include <vector>

namespace bdforge {

enum class CacMode { Rigid, Affine };

inline const char* mode_name(CacMode m) { return m == CacMode::Rigid ? "rigid" : "affine"; }

// One side of a piece; nu is the inner normal of the piece.
struct BoundarySide {
    int axis = 0; // 0: vertical side x = c, parametrised by y; 1: horizontal side y = c
    Rat c, s0, s1;
    VecQ nu;
    bool on_domain_boundary = false;
};

struct CacAffineField {
    PAField field; // one cell per piece E_k
    std::vector<std::vector<BoundarySide>> sides;
    unsigned long long seed = 0;
    CacMode mode = CacMode::Rigid;
};

namespace detail {

// Exact int_{s0}^{s1} |alpha + beta s| ds.
inline Rat abs_linear_integral(const Rat& alpha, const Rat& beta, const Rat& s0, const Rat& s1)
{
    Rat g0 = alpha + beta * s0, g1 = alpha + beta * s1;
    if ((g0 < 0 && g1 > 0) || (g0 > 0 && g1 < 0))
        return (g0 * g0 + g1 * g1) / (2 * abs_rat(beta));
    return abs_rat(g0 + g1) / 2 * (s1 - s0);
}

inline Rat signed_linear_integral(const Rat& alpha, const Rat& beta, const Rat& s0, const Rat& s1)
{
    return (2 * alpha + beta * (s0 + s1)) / 2 * (s1 - s0);
}

// v restricted to the side, as alpha + beta s.
inline std::pair<Rat, Rat> side_restriction(const VecQ& a, const Rat& b, const BoundarySide& s)
{
    if (s.axis == 0)
        return {a.x * s.c + b, a.y};
    return {a.y * s.c + b, a.x};
}

inline std::vector<BoundarySide> rect_sides(const Rect& r, const Rect& D)
{
    return {
        {0, r.x0, r.y0, r.y1, {Rat(1), Rat(0)}, r.x0 == D.x0},
        {0, r.x1, r.y0, r.y1, {Rat(-1), Rat(0)}, r.x1 == D.x1},
        {1, r.y0, r.x0, r.x1, {Rat(0), Rat(1)}, r.y0 == D.y0},
        {1, r.y1, r.x0, r.x1, {Rat(0), Rat(-1)}, r.y1 == D.y1},
    };
}

} // namespace detail

// Guillotine partition of the unit square: each cut splits a random piece at j/64 of one side.
inline CacAffineField random_caccioppoli(unsigned long long seed, int pieces, CacMode mode, const Rat& bound = Rat(1))
{
    if (pieces < 1)
        throw std::invalid_argument("random_caccioppoli: pieces must be positive");
    if (!(bound > 0))
        throw std::invalid_argument("random_caccioppoli: bound must be positive");
    std::mt19937_64 rng(seed);
    const Rect D(Rat(0), Rat(1), Rat(0), Rat(1));
    std::vector<Rect> rects{D};
    while (static_cast<int>(rects.size()) < pieces) {
        std::size_t i = rng() % rects.size();
        int axis = static_cast<int>(rng() % 2);
        Rat t = rat(static_cast<long>(1 + rng() % 63), 64);
        Rect r = rects[i];
        Rat cut = r.lo(axis) + t * r.side(axis);
        if (axis == 0) {
            rects[i] = Rect(r.x0, cut, r.y0, r.y1);
            rects.emplace_back(cut, r.x1, r.y0, r.y1);
        } else {
            rects[i] = Rect(r.x0, r.x1, r.y0, cut);
            rects.emplace_back(r.x0, r.x1, cut, r.y1);
        }
    }
    // Coefficients on the grid bound * (j/32 - 1), j = 0..64.
    auto coeff = [&]() -> Rat { return bound * (rat(static_cast<long>(rng() % 65), 32) - 1); };
    CacAffineField out;
    out.seed = seed;
    out.mode = mode;
    out.field.domain = D;
    for (const auto& r : rects) {
        AffineMap f;
        if (mode == CacMode::Rigid) {
            Rat s = coeff();
            f.A = MatQ(Rat(0), s, Rat(-s), Rat(0));
        } else {
            f.A = MatQ(coeff(), coeff(), coeff(), coeff());
        }
        f.b = {coeff(), coeff()};
        out.field.cells.push_back({r, f});
    }
    sort_cells(out.field.cells);
    for (const auto& c : out.field.cells)
        out.sides.push_back(detail::rect_sides(c.r, D));
    require_valid(out.field);
    return out;
}

struct GsbvViolation {
    std::size_t piece = 0;
    int component = 0;
    std::string what;
};

struct GsbvReport {
    std::size_t pieces = 0;
    // Per component i: sum_k int_{E_k} |grad u_k^i|, the interior-interface mass of the jumps,
    // sum_k |D u_k^i|(Omega), and sum_k int_{d*E_k} |v_k^i|.
    NormIntegral grad[2], du_total[2], du_pieces[2];
    Rat jump[2]{Rat(0), Rat(0)}, boundary_rhs[2]{Rat(0), Rat(0)};
    std::size_t checks = 0;
    bool identities_exact = true; // |a|^2 |E| = -int v a.nu exactly on every piece
    std::vector<GsbvViolation> violations;

    bool ok() const { return violations.empty() && identities_exact; }
};

inline GsbvReport gsbv_check(const CacAffineField& f)
{
    GsbvReport rep;
    rep.pieces = f.field.cells.size();
    for (std::size_t k = 0; k < f.field.cells.size(); ++k) {
        const PACell& c = f.field.cells[k];
        for (int i = 0; i < 2; ++i) {
            VecQ a{c.f.A(i, 0), c.f.A(i, 1)};
            Rat b = i == 0 ? c.f.b.x : c.f.b.y;
            Rat rhs(0), flux(0), interior(0);
            for (const auto& s : f.sides[k]) {
                auto [alpha, beta] = detail::side_restriction(a, b, s);
                Rat m = detail::abs_linear_integral(alpha, beta, s.s0, s.s1);
                rhs += m;
                if (!s.on_domain_boundary)
                    interior += m;
                flux += (a.x * s.nu.x + a.y * s.nu.y) * detail::signed_linear_integral(alpha, beta, s.s0, s.s1);
            }
            if (a.norm2() * c.r.area() != -flux) {
                rep.identities_exact = false;
                rep.violations.push_back({k, i, "divergence identity fails"});
            }
            NormIntegral lhs = exact_norm_value(a.norm2(), c.r.area());
            ++rep.checks;
            if (lhs.lo() > rhs.get_d())
                rep.violations.push_back({k, i, "int |grad u| = " + fmt17(lhs.value) + " exceeds boundary mass " +
                                                    fmt17(rhs.get_d())});
            rep.grad[i] += lhs;
            rep.boundary_rhs[i] += rhs;
            rep.du_pieces[i] += lhs;
            rep.du_pieces[i] += NormIntegral{interior.get_d(), kEps * interior.get_d()};
        }
    }
    for (const auto& j : jump_set(f.field)) {
        rep.jump[0] += detail::abs_linear_integral(j.p.x, j.q.x, Rat(0), j.length());
        rep.jump[1] += detail::abs_linear_integral(j.p.y, j.q.y, Rat(0), j.length());
    }
    for (int i = 0; i < 2; ++i) {
        rep.du_total[i] = rep.grad[i];
        rep.du_total[i] += NormIntegral{rep.jump[i].get_d(), kEps * rep.jump[i].get_d()};
        double two_rhs = 2 * rep.boundary_rhs[i].get_d();
        ++rep.checks;
        if (rep.du_total[i].lo() > rep.du_pieces[i].hi())
            rep.violations.push_back({rep.pieces, i, "|Du| exceeds the sum of the piece variations"});
        if (rep.du_pieces[i].lo() > two_rhs)
            rep.violations.push_back({rep.pieces, i, "sum of piece variations " + fmt17(rep.du_pieces[i].value) +
                                                         " exceeds twice the boundary mass " + fmt17(two_rhs)});
    }
    return rep;
}

} // namespace bdforge
