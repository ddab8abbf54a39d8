#pragma once

#include "fields.hpp"

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace bdforge {

// One maximal shared segment between two adjacent cells.  axis 0: the segment lies on the vertical line
// x = c and nu = e1; axis 1: on y = c and nu = e2.  The plus side is the side nu points to.
struct JumpRecord {
    int axis = 0;
    Rat c, s0, s1;
    std::size_t minus = 0, plus = 0;
    // [u](s) = p + (s - s0) q for s in [s0, s1].
    VecQ p, q;

    Rat length() const { return s1 - s0; }
    VecQ normal() const { return axis == 0 ? VecQ{Rat(1), Rat(0)} : VecQ{Rat(0), Rat(1)}; }
};

struct StrainReport {
    NormIntegral bulk_grad_l1, bulk_strain_l1;
    // sum_i int |d_i u|: the mass of the gradient split by coordinate direction.
    NormIntegral axis_grad_l1;
    bool skew_exact = true;
    Rat jump_length{0};
    NormIntegral jump_du, jump_eu, du_total, eu_total, sup_norm;
    std::size_t cells = 0, jumps = 0;
};

namespace detail {

struct EdgeRef {
    Rat c, s0, s1;
    std::size_t cell;
};

// Calls emit(axis, c, s0, s1, minus_cell, plus_cell) for every positive-length shared segment.
template <class Cells, class Emit>
void for_each_interface(const Cells& cells, const Emit& emit)
{
    for (int axis = 0; axis < 2; ++axis) {
        std::vector<EdgeRef> hi, lo;
        hi.reserve(cells.size());
        lo.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const Rect& r = cells[i].r;
            if (axis == 0) {
                hi.push_back({r.x1, r.y0, r.y1, i});
                lo.push_back({r.x0, r.y0, r.y1, i});
            } else {
                hi.push_back({r.y1, r.x0, r.x1, i});
                lo.push_back({r.y0, r.x0, r.x1, i});
            }
        }
        auto less = [](const EdgeRef& a, const EdgeRef& b) { return a.c != b.c ? a.c < b.c : a.s0 < b.s0; };
        std::sort(hi.begin(), hi.end(), less);
        std::sort(lo.begin(), lo.end(), less);
        std::size_t i = 0, j = 0;
        while (i < hi.size() && j < lo.size()) {
            if (hi[i].c < lo[j].c) {
                ++i;
                continue;
            }
            if (lo[j].c < hi[i].c) {
                ++j;
                continue;
            }
            const Rat c = hi[i].c;
            std::size_t ie = i, je = j;
            while (ie < hi.size() && hi[ie].c == c)
                ++ie;
            while (je < lo.size() && lo[je].c == c)
                ++je;
            std::size_t a = i, b = j;
            while (a < ie && b < je) {
                const Rat& s0 = hi[a].s0 < lo[b].s0 ? lo[b].s0 : hi[a].s0;
                const Rat& s1 = hi[a].s1 < lo[b].s1 ? hi[a].s1 : lo[b].s1;
                if (s0 < s1)
                    emit(axis, c, s0, s1, hi[a].cell, lo[b].cell);
                if (hi[a].s1 < lo[b].s1)
                    ++a;
                else
                    ++b;
            }
            i = ie;
            j = je;
        }
    }
}

inline VecQ trace_const(const AffineMap& f, int axis, const Rat& c)
{
    // Value at s = 0 of x -> f(x) restricted to the line.
    VecQ base = axis == 0 ? VecQ{c, Rat(0)} : VecQ{Rat(0), c};
    return f(base);
}

inline VecQ trace_slope(const AffineMap& f, int axis) { return f.A.col(axis == 0 ? 1 : 0); }

} // namespace detail

inline std::vector<JumpRecord> jump_set(const PAField& f)
{
    std::vector<JumpRecord> out;
    detail::for_each_interface(f.cells, [&](int axis, const Rat& c, const Rat& s0, const Rat& s1, std::size_t m, std::size_t p) {
        const AffineMap& fm = f.cells[m].f;
        const AffineMap& fp = f.cells[p].f;
        VecQ alpha = detail::trace_const(fp, axis, c) - detail::trace_const(fm, axis, c);
        VecQ beta = detail::trace_slope(fp, axis) - detail::trace_slope(fm, axis);
        if (alpha.x == 0 && alpha.y == 0 && beta.x == 0 && beta.y == 0)
            return;
        JumpRecord j;
        j.axis = axis;
        j.c = c;
        j.s0 = s0;
        j.s1 = s1;
        j.minus = m;
        j.plus = p;
        j.q = beta;
        j.p = alpha + beta * s0;
        out.push_back(std::move(j));
    });
    std::sort(out.begin(), out.end(), [](const JumpRecord& a, const JumpRecord& b) {
        if (a.axis != b.axis)
            return a.axis < b.axis;
        if (a.c != b.c)
            return a.c < b.c;
        return a.s0 < b.s0;
    });
    return out;
}

// Integral of |[u]| and of the symmetric jump density |[u] (.) nu| = sqrt((|a|^2 + (a.nu)^2)/2).
inline std::pair<NormIntegral, NormIntegral> jump_integrals(const JumpRecord& j)
{
    VecD p = to_double(j.p), q = to_double(j.q);
    double L = j.length().get_d();
    NormIntegral du = seg_norm_integral(p, q, L);
    const double r = std::sqrt(0.5);
    VecD ps = j.axis == 0 ? VecD{p.x, p.y * r} : VecD{p.x * r, p.y};
    VecD qs = j.axis == 0 ? VecD{q.x, q.y * r} : VecD{q.x * r, q.y};
    NormIntegral eu = seg_norm_integral(ps, qs, L);
    return {du, eu};
}

inline StrainReport strain_report(const PAField& f)
{
    StrainReport rep;
    rep.cells = f.cells.size();
    for (const auto& c : f.cells) {
        Rat area = c.r.area();
        NormIntegral g = exact_norm_value(c.f.A.frob2());
        NormIntegral s = exact_norm_value(c.f.A.sym().frob2());
        NormIntegral ax = exact_norm_value(c.f.A.col(0).norm2()) + exact_norm_value(c.f.A.col(1).norm2());
        double a = area.get_d();
        add_term(rep.bulk_grad_l1, g.value * a, g.abs_error_bound * a + kEps * g.value * a);
        add_term(rep.axis_grad_l1, ax.value * a, ax.abs_error_bound * a + kEps * ax.value * a);
        add_term(rep.bulk_strain_l1, s.value * a, s.abs_error_bound * a + kEps * s.value * a);
        if (!c.f.A.is_skew())
            rep.skew_exact = false;
    }
    for (const auto& j : jump_set(f)) {
        rep.jump_length += j.length();
        auto [du, eu] = jump_integrals(j);
        add_term(rep.jump_du, du.value, du.abs_error_bound);
        add_term(rep.jump_eu, eu.value, eu.abs_error_bound);
        ++rep.jumps;
    }
    rep.du_total = rep.bulk_grad_l1 + rep.jump_du;
    rep.eu_total = rep.bulk_strain_l1 + rep.jump_eu;
    rep.sup_norm = sup_norm(f);
    return rep;
}

inline NormIntegral lq_gradient(const PAField& f, double q)
{
    if (!(q >= 1))
        throw std::invalid_argument("lq_gradient: q must be at least 1");
    NormIntegral acc;
    for (const auto& c : f.cells) {
        double n = norm(c.f.A);
        double t = std::pow(n, q) * c.r.area().get_d();
        add_term(acc, t, 8 * q * kEps * t);
    }
    return acc;
}

// ---- piecewise-polynomial measures ----------------------------------------

struct QuadratureFailure : FieldError {
    using FieldError::FieldError;
};

struct QuadOptions {
    int order = 6;
    double rel_tol = 1e-8;
    double abs_tol = 1e-13;
    int max_depth = 6;
    // false: a cell that misses the tolerance keeps its estimate and its (larger) error bound.
    bool strict = true;
};

// Values and gradients of a PP cell restricted to a sub-rectangle, in unit coordinates (s, t) in [0,1]^2.
struct LocalJet {
    double hx = 1, hy = 1;
    std::vector<PolyD> val, gx, gy;
    bool constant_gradient = true;

    LocalJet(const PPCell& cell, const Rect& sub, int ncomp)
    {
        Rat Hx = sub.width(), Hy = sub.height();
        hx = Hx.get_d();
        hy = Hy.get_d();
        Rat ix = 1 / Hx, iy = 1 / Hy;
        for (int m = 0; m < ncomp; ++m) {
            Poly2 q = cell.comp[m].reparam(sub.x0, Hx, sub.y0, Hy);
            Poly2 ds = q.deriv_x() * ix, dt = q.deriv_y() * iy;
            if (ds.degree() > 0 || dt.degree() > 0)
                constant_gradient = false;
            val.emplace_back(q);
            gx.emplace_back(ds);
            gy.emplace_back(dt);
        }
    }
    double area() const { return hx * hy; }
};

namespace detail {

template <class F>
NormIntegral integrate_unit(const F& f, double s0, double s1, double t0, double t1, const QuadOptions& opt, int depth, bool& failed)
{
    NormIntegral q = gauss_quad_2d(f, RectD{s0, s1, t0, t1}, opt.order);
    if (q.abs_error_bound <= opt.rel_tol * std::abs(q.value) + opt.abs_tol * (s1 - s0) * (t1 - t0))
        return q;
    if (depth >= opt.max_depth) {
        failed = true;
        return q;
    }
    double sm = 0.5 * (s0 + s1), tm = 0.5 * (t0 + t1);
    NormIntegral r;
    r += integrate_unit(f, s0, sm, t0, tm, opt, depth + 1, failed);
    r += integrate_unit(f, sm, s1, t0, tm, opt, depth + 1, failed);
    r += integrate_unit(f, s0, sm, tm, t1, opt, depth + 1, failed);
    r += integrate_unit(f, sm, s1, tm, t1, opt, depth + 1, failed);
    return r;
}

// Kinks where the jump vanishes are isolated by bisection.
template <class F>
NormIntegral integrate_segment(const F& f, double a, double b, const QuadOptions& opt, int depth, bool& failed)
{
    NormIntegral q = gauss_quad_1d(f, a, b, opt.order);
    if (q.abs_error_bound <= opt.rel_tol * std::abs(q.value) + opt.abs_tol * (b - a))
        return q;
    if (depth >= 8 * opt.max_depth) {
        failed = true;
        return q;
    }
    double m = 0.5 * (a + b);
    NormIntegral r = integrate_segment(f, a, m, opt, depth + 1, failed);
    r += integrate_segment(f, m, b, opt, depth + 1, failed);
    return r;
}

} // namespace detail

// Integral over the sub-rectangle of integrand(jet, s, t); exact single evaluation when the integrand is
// declared gradient-only and the gradient is constant.
template <class F>
NormIntegral integrate_jet(const LocalJet& jet, const F& integrand, bool gradient_only, const QuadOptions& opt,
                           std::size_t cell_id)
{
    double a = jet.area();
    if (gradient_only && jet.constant_gradient) {
        double v = integrand(jet, 0.5, 0.5) * a;
        return {v, 16 * kEps * std::abs(v)};
    }
    bool failed = false;
    auto f = [&](double s, double t) { return integrand(jet, s, t); };
    NormIntegral q = detail::integrate_unit(f, 0.0, 1.0, 0.0, 1.0, opt, 0, failed);
    if (failed && opt.strict)
        throw QuadratureFailure("quadrature tolerance not met on cell " + std::to_string(cell_id));
    return {q.value * a, q.abs_error_bound * a};
}

// Gradient matrix of components (first, first+1) at a unit-coordinate point.
inline MatD jet_gradient(const LocalJet& j, double s, double t, int first = 0)
{
    return MatD(j.gx[first].eval(s, t), j.gy[first].eval(s, t), j.gx[first + 1].eval(s, t), j.gy[first + 1].eval(s, t));
}

// Components (first..first+3) read as a row-major matrix.
inline MatD jet_matrix(const LocalJet& j, double s, double t, int first)
{
    return MatD(j.val[first].eval(s, t), j.val[first + 1].eval(s, t), j.val[first + 2].eval(s, t), j.val[first + 3].eval(s, t));
}

inline double grad_norm(const LocalJet& j, double s, double t) { return norm(jet_gradient(j, s, t)); }
inline double sym_grad_norm(const LocalJet& j, double s, double t) { return norm(jet_gradient(j, s, t).sym()); }
inline double axis_grad_norm(const LocalJet& j, double s, double t)
{
    MatD g = jet_gradient(j, s, t);
    return norm(g.col(0)) + norm(g.col(1));
}

// Polynomial traces on both sides of a shared segment; used for continuity and jump integrals.
struct PPJump {
    int axis = 0;
    Rat c, s0, s1;
    std::size_t minus = 0, plus = 0;
    std::vector<std::vector<Rat>> jump; // per component, univariate coefficients in the line coordinate
};

namespace detail {

inline std::vector<Rat> sub_coeffs(std::vector<Rat> a, const std::vector<Rat>& b)
{
    if (a.size() < b.size())
        a.resize(b.size(), Rat(0));
    for (std::size_t i = 0; i < b.size(); ++i)
        a[i] -= b[i];
    return a;
}

inline bool all_zero(const std::vector<Rat>& a)
{
    for (const auto& v : a)
        if (v != 0)
            return false;
    return true;
}

inline double eval_univariate(const std::vector<Rat>& c, double s)
{
    double acc = 0;
    for (std::size_t i = c.size(); i-- > 0;)
        acc = acc * s + c[i].get_d();
    return acc;
}

} // namespace detail

// Interfaces on which some of the first ncomp components differ (exact comparison of traces).
inline std::vector<PPJump> jump_set(const PPField& f, int ncomp = 2)
{
    std::vector<PPJump> out;
    detail::for_each_interface(f.cells, [&](int axis, const Rat& c, const Rat& s0, const Rat& s1, std::size_t m, std::size_t p) {
        PPJump j;
        bool nonzero = false;
        for (int k = 0; k < ncomp; ++k) {
            const Poly2& pm = f.cells[m].comp[k];
            const Poly2& pp = f.cells[p].comp[k];
            if (pm == pp) {
                j.jump.emplace_back(1, Rat(0));
                continue;
            }
            auto tm = axis == 0 ? pm.restrict_x(c) : pm.restrict_y(c);
            auto tp = axis == 0 ? pp.restrict_x(c) : pp.restrict_y(c);
            auto d = detail::sub_coeffs(tp, tm);
            if (!detail::all_zero(d))
                nonzero = true;
            j.jump.push_back(std::move(d));
        }
        if (!nonzero)
            return;
        j.axis = axis;
        j.c = c;
        j.s0 = s0;
        j.s1 = s1;
        j.minus = m;
        j.plus = p;
        out.push_back(std::move(j));
    });
    return out;
}

inline std::pair<NormIntegral, NormIntegral> jump_integrals(const PPJump& j, const QuadOptions& opt = {})
{
    double a = j.s0.get_d(), b = j.s1.get_d();
    auto comp = [&](double s) {
        return VecD{detail::eval_univariate(j.jump[0], s), detail::eval_univariate(j.jump[1], s)};
    };
    bool failed = false;
    auto du = detail::integrate_segment([&](double s) { return norm(comp(s)); }, a, b, opt, 0, failed);
    auto eu = detail::integrate_segment(
        [&](double s) {
            VecD v = comp(s);
            double n = j.axis == 0 ? v.x : v.y;
            return std::sqrt(0.5 * (v.norm2() + n * n));
        },
        a, b, opt, 0, failed);
    if (failed && opt.strict)
        throw QuadratureFailure("quadrature tolerance not met on a jump segment");
    return {du, eu};
}

// Upper bound on |u| over a cell from Bernstein coefficients of the local polynomials.
inline double bernstein_sup_bound(const LocalJet& j, int ncomp)
{
    double s2 = 0;
    for (int m = 0; m < ncomp; ++m) {
        const PolyD& p = j.val[m];
        auto binom = [](int n, int k) {
            double r = 1;
            for (int i = 1; i <= k; ++i)
                r = r * (n - k + i) / i;
            return r;
        };
        double best = 0;
        for (int i = 0; i <= p.dx; ++i)
            for (int jj = 0; jj <= p.dy; ++jj) {
                double b = 0;
                for (int k = 0; k <= i; ++k)
                    for (int l = 0; l <= jj; ++l)
                        b += binom(i, k) / binom(p.dx, k) * binom(jj, l) / binom(p.dy, l) *
                             p.c[static_cast<std::size_t>(k * (p.dy + 1) + l)];
                best = std::max(best, std::abs(b));
            }
        s2 += best * best;
    }
    return std::sqrt(s2) * (1 + 64 * kEps);
}

inline NormIntegral sup_norm(const PPField& f)
{
    double lo = 0, hi = 0;
    for (const auto& c : f.cells) {
        LocalJet j(c, c.r, 2);
        for (int a = 0; a <= 4; ++a)
            for (int b = 0; b <= 4; ++b) {
                double s = a / 4.0, t = b / 4.0;
                lo = std::max(lo, std::hypot(j.val[0].eval(s, t), j.val[1].eval(s, t)));
            }
        hi = std::max(hi, bernstein_sup_bound(j, 2));
    }
    hi = std::max(hi, lo);
    return {lo, hi - lo + 4 * kEps * lo};
}

inline StrainReport strain_report(const PPField& f, const QuadOptions& opt = {})
{
    StrainReport rep;
    rep.cells = f.cells.size();
    for (std::size_t i = 0; i < f.cells.size(); ++i) {
        const auto& c = f.cells[i];
        Poly2 ux = c.comp[0].deriv_x(), uy = c.comp[0].deriv_y(), vx = c.comp[1].deriv_x(), vy = c.comp[1].deriv_y();
        if (!ux.is_zero() || !vy.is_zero() || uy + vx != Poly2())
            rep.skew_exact = false;
        LocalJet j(c, c.r, 2);
        rep.bulk_grad_l1 += integrate_jet(j, grad_norm, true, opt, i);
        rep.bulk_strain_l1 += integrate_jet(j, sym_grad_norm, true, opt, i);
        rep.axis_grad_l1 += integrate_jet(j, axis_grad_norm, true, opt, i);
    }
    for (const auto& jr : jump_set(f)) {
        rep.jump_length += jr.s1 - jr.s0;
        auto [du, eu] = jump_integrals(jr, opt);
        rep.jump_du += du;
        rep.jump_eu += eu;
        ++rep.jumps;
    }
    rep.du_total = rep.bulk_grad_l1 + rep.jump_du;
    rep.eu_total = rep.bulk_strain_l1 + rep.jump_eu;
    rep.sup_norm = sup_norm(f);
    return rep;
}

namespace detail {

template <class R>
std::optional<std::pair<std::size_t, std::size_t>> first_overlap(const std::vector<R>& rects)
{
    struct C {
        Rect r;
    };
    std::vector<C> cs;
    for (const auto& r : rects)
        cs.push_back({r});
    if (cs.empty())
        return std::nullopt;
    Rect hull = cs[0].r;
    for (const auto& c : cs)
        hull = Rect(c.r.x0 < hull.x0 ? c.r.x0 : hull.x0, c.r.x1 > hull.x1 ? c.r.x1 : hull.x1,
                    c.r.y0 < hull.y0 ? c.r.y0 : hull.y0, c.r.y1 > hull.y1 ? c.r.y1 : hull.y1);
    CellIndex idx(hull, cs);
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t k : idx.overlapping(cs[i].r))
            if (k != i)
                return std::pair{std::min(i, k), std::max(i, k)};
    return std::nullopt;
}

} // namespace detail

struct BandMass {
    NormIntegral mass;
    Rat lebesgue{0};
};

// Integral of integrand over the union of pairwise disjoint rectangles.
template <class F>
NormIntegral integrate_over(const PPField& f, const std::vector<Rect>& rects, const F& integrand, bool gradient_only,
                            int ncomp, const QuadOptions& opt = {})
{
    CellIndex idx(f.domain, f.cells);
    NormIntegral acc;
    for (const auto& b : rects)
        for (std::size_t i : idx.overlapping(b)) {
            LocalJet j(f.cells[i], f.cells[i].r.intersect(b), ncomp);
            acc += integrate_jet(j, integrand, gradient_only, opt, i);
        }
    return acc;
}

inline BandMass band_mass(const PPField& f, const std::vector<Rect>& bands, const QuadOptions& opt = {})
{
    if (auto o = detail::first_overlap(bands))
        throw FieldError("band_mass: bands " + std::to_string(o->first) + " and " + std::to_string(o->second) + " overlap");
    BandMass out;
    for (const auto& b : bands) {
        if (!f.domain.contains(b))
            throw FieldError("band_mass: band outside the domain");
        out.lebesgue += b.area();
    }
    int nc = f.ncomp;
    auto integrand = [nc](const LocalJet& j, double s, double t) {
        double s2 = 0;
        for (int m = 0; m < nc; ++m) {
            double a = j.gx[m].eval(s, t), b = j.gy[m].eval(s, t);
            s2 += a * a + b * b;
        }
        return std::sqrt(s2);
    };
    out.mass = integrate_over(f, bands, integrand, true, nc, opt);
    return out;
}

// ---- report output -----------------------------------------------------------

inline std::string fmt17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string strain_csv_header()
{
    return "cells,jumps,bulk_grad_l1,bulk_grad_l1_err,bulk_strain_l1,bulk_strain_l1_err,skew_exact,jump_length,"
           "jump_du,jump_du_err,jump_eu,jump_eu_err,du_total,du_total_err,eu_total,eu_total_err,sup_norm,sup_norm_err,"
           "axis_grad_l1,axis_grad_l1_err";
}

inline std::string strain_csv_row(const StrainReport& r)
{
    std::string s = std::to_string(r.cells) + "," + std::to_string(r.jumps);
    auto ni = [&](const NormIntegral& n) { s += "," + fmt17(n.value) + "," + fmt17(n.abs_error_bound); };
    ni(r.bulk_grad_l1);
    ni(r.bulk_strain_l1);
    s += std::string(",") + (r.skew_exact ? "true" : "false");
    s += "," + to_string(r.jump_length);
    ni(r.jump_du);
    ni(r.jump_eu);
    ni(r.du_total);
    ni(r.eu_total);
    ni(r.sup_norm);
    ni(r.axis_grad_l1);
    return s;
}

} // namespace bdforge
