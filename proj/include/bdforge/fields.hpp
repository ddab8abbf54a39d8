#pragma once

#include "numeric.hpp"
#include "poly.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdforge {

struct FieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Rect {
    Rat x0, x1, y0, y1;

    Rect() = default;
    Rect(Rat a, Rat b, Rat c, Rat d) : x0(std::move(a)), x1(std::move(b)), y0(std::move(c)), y1(std::move(d)) {}

    Rat width() const { return x1 - x0; }
    Rat height() const { return y1 - y0; }
    Rat area() const { return (x1 - x0) * (y1 - y0); }
    Rat perimeter() const { return 2 * ((x1 - x0) + (y1 - y0)); }
    Rat side(int axis) const { return axis == 0 ? width() : height(); }
    const Rat& lo(int axis) const { return axis == 0 ? x0 : y0; }
    const Rat& hi(int axis) const { return axis == 0 ? x1 : y1; }
    bool valid() const { return x0 < x1 && y0 < y1; }
    bool contains(const VecQ& p) const { return x0 <= p.x && p.x <= x1 && y0 <= p.y && p.y <= y1; }
    bool contains(const Rect& r) const { return x0 <= r.x0 && r.x1 <= x1 && y0 <= r.y0 && r.y1 <= y1; }
    bool interior_intersects(const Rect& r) const { return x0 < r.x1 && r.x0 < x1 && y0 < r.y1 && r.y0 < y1; }
    Rect intersect(const Rect& r) const { return Rect(max(x0, r.x0), min(x1, r.x1), max(y0, r.y0), min(y1, r.y1)); }
    VecQ center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
    std::array<VecQ, 4> corners() const { return {VecQ{x0, y0}, VecQ{x1, y0}, VecQ{x0, y1}, VecQ{x1, y1}}; }
    RectD to_double() const { return {x0.get_d(), x1.get_d(), y0.get_d(), y1.get_d()}; }
    bool operator==(const Rect& o) const { return x0 == o.x0 && x1 == o.x1 && y0 == o.y0 && y1 == o.y1; }
    bool operator!=(const Rect& o) const { return !(*this == o); }

  private:
    static Rat max(const Rat& a, const Rat& b) { return a < b ? b : a; }
    static Rat min(const Rat& a, const Rat& b) { return a < b ? a : b; }
};

inline bool rect_less(const Rect& a, const Rect& b)
{
    if (a.x0 != b.x0)
        return a.x0 < b.x0;
    if (a.y0 != b.y0)
        return a.y0 < b.y0;
    if (a.x1 != b.x1)
        return a.x1 < b.x1;
    return a.y1 < b.y1;
}

struct AffineMap {
    MatQ A = MatQ::zero();
    VecQ b{Rat(0), Rat(0)};

    VecQ operator()(const VecQ& x) const { return A * x + b; }
    bool operator==(const AffineMap& o) const { return A == o.A && b == o.b; }
    bool operator!=(const AffineMap& o) const { return !(*this == o); }
    AffineMap operator-(const AffineMap& o) const { return {A - o.A, b - o.b}; }
    AffineMap operator+(const AffineMap& o) const { return {A + o.A, b + o.b}; }
    AffineMap operator*(const Rat& s) const { return {A * s, b * s}; }
};

struct PACell {
    Rect r;
    AffineMap f;
};

struct PAField {
    Rect domain;
    std::vector<PACell> cells;
};

struct PPCell {
    Rect r;
    std::vector<Poly2> comp;
};

// Piecewise tensor-polynomial field with an arbitrary number of scalar components.
struct PPField {
    Rect domain;
    int ncomp = 2;
    std::vector<PPCell> cells;
};

constexpr int kDefaultDegreeCap = 12;

// ---- partition validity ---------------------------------------------------

namespace detail {

template <class Cells>
std::optional<std::string> partition_error(const Rect& domain, const Cells& cells)
{
    if (!domain.valid())
        return std::string("domain has empty interior");
    Rat total(0);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Rect& r = cells[i].r;
        if (!r.valid())
            return "cell " + std::to_string(i) + " has empty interior";
        if (!domain.contains(r))
            return "cell " + std::to_string(i) + " lies outside the domain";
        total += r.area();
    }
    // Sweep in x with the active cells kept as disjoint y-intervals.
    std::vector<std::size_t> by_start(cells.size()), by_end(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        by_start[i] = by_end[i] = i;
    std::sort(by_start.begin(), by_start.end(), [&](std::size_t a, std::size_t b) { return cells[a].r.x0 < cells[b].r.x0; });
    std::sort(by_end.begin(), by_end.end(), [&](std::size_t a, std::size_t b) { return cells[a].r.x1 < cells[b].r.x1; });
    struct Key {
        const Rat* y0;
        std::size_t id;
        bool operator<(const Key& o) const { return *y0 != *o.y0 ? *y0 < *o.y0 : id < o.id; }
    };
    std::map<Key, std::size_t> active;
    std::size_t s = 0, e = 0;
    while (s < by_start.size()) {
        const Rat& x = cells[by_start[s]].r.x0;
        while (e < by_end.size() && cells[by_end[e]].r.x1 <= x) {
            std::size_t id = by_end[e++];
            active.erase(Key{&cells[id].r.y0, id});
        }
        while (s < by_start.size() && cells[by_start[s]].r.x0 == x) {
            std::size_t id = by_start[s++];
            const Rect& r = cells[id].r;
            Key k{&r.y0, id};
            auto it = active.lower_bound(k);
            if (it != active.end() && cells[it->second].r.y0 < r.y1) {
                std::size_t a = std::min(id, it->second), b = std::max(id, it->second);
                return "cells " + std::to_string(a) + " and " + std::to_string(b) + " overlap";
            }
            if (it != active.begin()) {
                auto p = std::prev(it);
                if (cells[p->second].r.y1 > r.y0) {
                    std::size_t a = std::min(id, p->second), b = std::max(id, p->second);
                    return "cells " + std::to_string(a) + " and " + std::to_string(b) + " overlap";
                }
            }
            active.emplace(k, id);
        }
    }
    if (total != domain.area())
        return "area mismatch: cells cover " + to_string(total) + " of domain area " + to_string(domain.area());
    return std::nullopt;
}

} // namespace detail

inline std::optional<std::string> partition_error(const PAField& f) { return detail::partition_error(f.domain, f.cells); }
inline std::optional<std::string> partition_error(const PPField& f) { return detail::partition_error(f.domain, f.cells); }

template <class Field>
void require_valid(const Field& f)
{
    if (auto err = partition_error(f))
        throw FieldError("invalid partition: " + *err);
}

template <class Cells>
void sort_cells(Cells& cells)
{
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return rect_less(a.r, b.r); });
}

// ---- spatial index ---------------------------------------------------------

// Uniform bucket grid; candidate lookups are double-based and conservative, the final tests exact.
class CellIndex {
  public:
    template <class Cells>
    CellIndex(const Rect& domain, const Cells& cells) : rects_(cells.size()), stamp_(cells.size(), 0)
    {
        for (std::size_t i = 0; i < cells.size(); ++i)
            rects_[i] = &cells[i].r;
        RectD d = domain.to_double();
        X0_ = d.x0;
        Y0_ = d.y0;
        int n = static_cast<int>(std::sqrt(static_cast<double>(cells.size()))) + 1;
        nx_ = ny_ = std::min(n, 1024);
        sx_ = (d.x1 - d.x0) / nx_;
        sy_ = (d.y1 - d.y0) / ny_;
        buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            auto [ix0, ix1, iy0, iy1] = range(cells[i].r.to_double());
            for (int ix = ix0; ix <= ix1; ++ix)
                for (int iy = iy0; iy <= iy1; ++iy)
                    buckets_[static_cast<std::size_t>(ix * ny_ + iy)].push_back(static_cast<std::uint32_t>(i));
        }
    }

    // Ids of cells whose interior meets the interior of q, in increasing order.
    std::vector<std::size_t> overlapping(const Rect& q) const
    {
        std::vector<std::size_t> out;
        visit(q.to_double(), [&](std::size_t i) {
            if (rects_[i]->interior_intersects(q))
                out.push_back(i);
        });
        std::sort(out.begin(), out.end());
        return out;
    }

    // Ids of closed cells containing p, in increasing order.
    std::vector<std::size_t> containing(const VecQ& p) const
    {
        std::vector<std::size_t> out;
        double px = p.x.get_d(), py = p.y.get_d();
        visit({px, px, py, py}, [&](std::size_t i) {
            if (rects_[i]->contains(p))
                out.push_back(i);
        });
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    std::array<int, 4> range(const RectD& r) const
    {
        auto clampi = [](int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); };
        double tx = 1e-9 * sx_, ty = 1e-9 * sy_;
        int ix0 = clampi(static_cast<int>(std::floor((r.x0 - tx - X0_) / sx_)), 0, nx_ - 1);
        int ix1 = clampi(static_cast<int>(std::floor((r.x1 + tx - X0_) / sx_)), 0, nx_ - 1);
        int iy0 = clampi(static_cast<int>(std::floor((r.y0 - ty - Y0_) / sy_)), 0, ny_ - 1);
        int iy1 = clampi(static_cast<int>(std::floor((r.y1 + ty - Y0_) / sy_)), 0, ny_ - 1);
        return {ix0, ix1, iy0, iy1};
    }
    template <class F>
    void visit(const RectD& q, const F& f) const
    {
        ++gen_;
        auto [ix0, ix1, iy0, iy1] = range(q);
        for (int ix = ix0; ix <= ix1; ++ix)
            for (int iy = iy0; iy <= iy1; ++iy)
                for (std::uint32_t i : buckets_[static_cast<std::size_t>(ix * ny_ + iy)]) {
                    if (stamp_[i] == gen_)
                        continue;
                    stamp_[i] = gen_;
                    f(i);
                }
    }

    std::vector<const Rect*> rects_;
    std::vector<std::vector<std::uint32_t>> buckets_;
    mutable std::vector<std::uint64_t> stamp_;
    mutable std::uint64_t gen_ = 0;
    double X0_ = 0, Y0_ = 0, sx_ = 1, sy_ = 1;
    int nx_ = 1, ny_ = 1;
};

// ---- conversions -----------------------------------------------------------

inline std::vector<Poly2> affine_polys(const AffineMap& f)
{
    return {Poly2::affine(f.b.x, f.A(0, 0), f.A(0, 1)), Poly2::affine(f.b.y, f.A(1, 0), f.A(1, 1))};
}

inline PPField to_pp(const PAField& f)
{
    PPField g;
    g.domain = f.domain;
    g.ncomp = 2;
    g.cells.reserve(f.cells.size());
    for (const auto& c : f.cells)
        g.cells.push_back({c.r, affine_polys(c.f)});
    return g;
}

// Appends the four constant gradient entries (row-major) as extra components.
inline PPField to_pp_with_gradient(const PAField& f)
{
    PPField g;
    g.domain = f.domain;
    g.ncomp = 6;
    g.cells.reserve(f.cells.size());
    for (const auto& c : f.cells) {
        auto comp = affine_polys(c.f);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                comp.push_back(Poly2::constant(c.f.A(i, j)));
        g.cells.push_back({c.r, std::move(comp)});
    }
    return g;
}

// Affine reading of a PP cell, if every component has degree at most one without the xy term.
inline std::optional<AffineMap> as_affine(const PPCell& c)
{
    AffineMap m;
    for (int k = 0; k < 2; ++k) {
        const Poly2& p = c.comp[k];
        if (p.dx > 1 || p.dy > 1 || p.get(1, 1) != 0)
            return std::nullopt;
        m.A(k, 0) = p.get(1, 0);
        m.A(k, 1) = p.get(0, 1);
        m.b[k] = p.get(0, 0);
    }
    return m;
}

inline PAField to_pa(const PPField& f)
{
    PAField g;
    g.domain = f.domain;
    for (std::size_t i = 0; i < f.cells.size(); ++i) {
        auto m = as_affine(f.cells[i]);
        if (!m)
            throw FieldError("cell " + std::to_string(i) + " is not affine");
        g.cells.push_back({f.cells[i].r, *m});
    }
    return g;
}

// ---- evaluation ------------------------------------------------------------

namespace detail {

template <class Cells>
std::size_t priority_cell(const Rect& domain, const Cells& cells, const VecQ& x)
{
    if (!domain.contains(x))
        throw FieldError("evaluate: point outside domain");
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Rect& r = cells[i].r;
        if (!r.contains(x))
            continue;
        if (!best || r.x0 < cells[*best].r.x0 || (r.x0 == cells[*best].r.x0 && r.y0 < cells[*best].r.y0))
            best = i;
    }
    if (!best)
        throw FieldError("evaluate: point not covered by any cell");
    return *best;
}

} // namespace detail

// Value at x; on shared boundaries the cell with lexicographically smallest lower-left corner wins.
inline VecQ evaluate(const PAField& f, const VecQ& x)
{
    return f.cells[detail::priority_cell(f.domain, f.cells, x)].f(x);
}

inline std::vector<Rat> evaluate_all(const PPField& f, const VecQ& x)
{
    const PPCell& c = f.cells[detail::priority_cell(f.domain, f.cells, x)];
    std::vector<Rat> v;
    for (const auto& p : c.comp)
        v.push_back(p.eval(x.x, x.y));
    return v;
}

inline VecQ evaluate(const PPField& f, const VecQ& x)
{
    auto v = evaluate_all(f, x);
    return {v[0], v[1]};
}

// Same lookup accelerated by an index built over the field.
class Locator {
  public:
    explicit Locator(const PAField& f) : f_(&f), index_(f.domain, f.cells) {}
    VecQ operator()(const VecQ& x) const { return f_->cells[cell_of(x)].f(x); }
    std::size_t cell_of(const VecQ& x) const
    {
        if (!f_->domain.contains(x))
            throw FieldError("evaluate: point outside domain");
        auto ids = index_.containing(x);
        if (ids.empty())
            throw FieldError("evaluate: point not covered by any cell");
        std::size_t best = ids[0];
        for (std::size_t i : ids) {
            const Rect& r = f_->cells[i].r;
            const Rect& b = f_->cells[best].r;
            if (r.x0 < b.x0 || (r.x0 == b.x0 && r.y0 < b.y0))
                best = i;
        }
        return best;
    }

  private:
    const PAField* f_;
    CellIndex index_;
};

// ---- refinement and distances ----------------------------------------------

inline std::pair<PAField, PAField> common_refine(const PAField& f, const PAField& g)
{
    if (f.domain != g.domain)
        throw FieldError("common_refine: domain mismatch");
    CellIndex gi(g.domain, g.cells);
    struct Pair {
        Rect r;
        std::size_t a, b;
    };
    std::vector<Pair> parts;
    for (std::size_t i = 0; i < f.cells.size(); ++i)
        for (std::size_t j : gi.overlapping(f.cells[i].r))
            parts.push_back({f.cells[i].r.intersect(g.cells[j].r), i, j});
    std::sort(parts.begin(), parts.end(), [](const Pair& a, const Pair& b) { return rect_less(a.r, b.r); });
    PAField rf{f.domain, {}}, rg{g.domain, {}};
    rf.cells.reserve(parts.size());
    rg.cells.reserve(parts.size());
    for (const auto& p : parts) {
        rf.cells.push_back({p.r, f.cells[p.a].f});
        rg.cells.push_back({p.r, g.cells[p.b].f});
    }
    return {std::move(rf), std::move(rg)};
}

// Exact squared maximum of |D x + e| over the corners of r.
inline Rat max_corner_norm2(const AffineMap& d, const Rect& r)
{
    Rat best(0);
    for (const auto& c : r.corners()) {
        Rat n2 = d(c).norm2();
        if (n2 > best)
            best = n2;
    }
    return best;
}

inline NormIntegral sup_distance(const PAField& f, const PAField& g)
{
    auto [rf, rg] = common_refine(f, g);
    Rat best(0);
    for (std::size_t i = 0; i < rf.cells.size(); ++i) {
        Rat n2 = max_corner_norm2(rf.cells[i].f - rg.cells[i].f, rf.cells[i].r);
        if (n2 > best)
            best = n2;
    }
    return exact_norm_value(best);
}

inline NormIntegral sup_norm(const PAField& f)
{
    Rat best(0);
    for (const auto& c : f.cells) {
        Rat n2 = max_corner_norm2(c.f, c.r);
        if (n2 > best)
            best = n2;
    }
    return exact_norm_value(best);
}

// ---- one-dimensional piecewise-affine functions ----------------------------

struct Pw1D {
    std::vector<Rat> t;      // breakpoints t_0 < ... < t_n
    std::vector<Rat> slope;  // piece i on [t_i, t_{i+1}]: value(s) = value_at_left[i] + slope[i] (s - t_i)
    std::vector<Rat> left;   // value at t_i from the right
    std::vector<bool> continuous; // flag per interior breakpoint t_1..t_{n-1}

    std::size_t pieces() const { return slope.size(); }
    const Rat& lo() const { return t.front(); }
    const Rat& hi() const { return t.back(); }
    Rat right_value(std::size_t i) const { return left[i] + slope[i] * (t[i + 1] - t[i]); }
    // Global affine form a + b s of piece i.
    std::pair<Rat, Rat> affine(std::size_t i) const { return {left[i] - slope[i] * t[i], slope[i]}; }

    std::size_t piece_of(const Rat& s) const
    {
        if (s < t.front() || s > t.back())
            throw FieldError("Pw1D: argument outside range");
        auto it = std::lower_bound(t.begin() + 1, t.end(), s);
        std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
        return std::min(i, pieces() - 1);
    }
    // Left-piece convention at breakpoints.
    Rat operator()(const Rat& s) const
    {
        std::size_t i = piece_of(s);
        return left[i] + slope[i] * (s - t[i]);
    }
    Rat total_variation() const
    {
        Rat tv(0);
        for (std::size_t i = 0; i < pieces(); ++i)
            tv += abs_rat(slope[i]) * (t[i + 1] - t[i]);
        for (std::size_t i = 1; i < pieces(); ++i)
            tv += abs_rat(left[i] - right_value(i - 1));
        return tv;
    }
    Rat integral() const
    {
        Rat s(0);
        for (std::size_t i = 0; i < pieces(); ++i)
            s += (left[i] + right_value(i)) * (t[i + 1] - t[i]) / 2;
        return s;
    }
    // Measure of the set where the derivative is nonzero.
    Rat rising_measure() const
    {
        Rat m(0);
        for (std::size_t i = 0; i < pieces(); ++i)
            if (slope[i] != 0)
                m += t[i + 1] - t[i];
        return m;
    }
    bool check_continuity() const
    {
        for (std::size_t i = 1; i < pieces(); ++i)
            if (continuous[i - 1] && left[i] != right_value(i - 1))
                return false;
        return true;
    }
    std::pair<Rat, Rat> range() const
    {
        Rat lo = left[0], hi = left[0];
        for (std::size_t i = 0; i < pieces(); ++i)
            for (const Rat& v : {left[i], right_value(i)}) {
                if (v < lo)
                    lo = v;
                if (v > hi)
                    hi = v;
            }
        return {lo, hi};
    }

    // Continuous function through the given nodes (x_i, v_i).
    static Pw1D interpolate(const std::vector<Rat>& xs, const std::vector<Rat>& vs)
    {
        Pw1D p;
        p.t = xs;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            if (!(xs[i] < xs[i + 1]))
                throw FieldError("Pw1D: breakpoints must increase strictly");
            p.left.push_back(vs[i]);
            p.slope.push_back((vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]));
        }
        p.continuous.assign(xs.size() > 2 ? xs.size() - 2 : 0, true);
        return p;
    }

    // Merges adjacent pieces that share one affine expression.
    Pw1D simplified() const
    {
        Pw1D p;
        p.t.push_back(t[0]);
        for (std::size_t i = 0; i < pieces(); ++i) {
            if (!p.slope.empty()) {
                std::size_t k = p.slope.size() - 1;
                Rat end = p.left[k] + p.slope[k] * (p.t[k + 1] - p.t[k]);
                if (p.slope[k] == slope[i] && end == left[i]) {
                    p.t.back() = t[i + 1];
                    continue;
                }
                p.continuous.push_back(continuous[i - 1]);
            }
            p.left.push_back(left[i]);
            p.slope.push_back(slope[i]);
            p.t.push_back(t[i + 1]);
        }
        return p;
    }
};

// psi(x, y) = fx(x) fy(y) on support, zero elsewhere.
struct SepCutoff {
    Rect support;
    Pw1D fx, fy;

    Rat operator()(const VecQ& p) const
    {
        if (!support.contains(p))
            return Rat(0);
        return fx(p.x) * fy(p.y);
    }
};

// ---- blending --------------------------------------------------------------

struct DegreeOverflow : FieldError {
    using FieldError::FieldError;
};

// (1 - psi) f + psi g; rectangles of f away from the support of psi are kept verbatim.
inline PPField blend(const SepCutoff& psi, const PPField& f, const PPField& g, int degree_cap = kDefaultDegreeCap)
{
    if (f.domain != g.domain)
        throw FieldError("blend: domain mismatch");
    if (f.ncomp != g.ncomp)
        throw FieldError("blend: component count mismatch");
    const Rect& R = psi.support;
    if (!f.domain.contains(R))
        throw FieldError("blend: cut-off support leaves the domain");
    if (psi.fx.lo() != R.x0 || psi.fx.hi() != R.x1 || psi.fy.lo() != R.y0 || psi.fy.hi() != R.y1)
        throw FieldError("blend: cut-off factors do not span the support");
    for (const Pw1D* h : {&psi.fx, &psi.fy}) {
        auto [lo, hi] = h->range();
        if (lo < 0 || hi > 1)
            throw FieldError("blend: cut-off values leave [0,1]");
        if (!h->check_continuity())
            throw DegreeOverflow("blend: cut-off factor is not continuous piecewise affine");
    }

    PPField out;
    out.domain = f.domain;
    out.ncomp = f.ncomp;
    auto emit = [&](const Rect& r, std::vector<Poly2> comp) {
        for (const auto& p : comp)
            if (p.degree() > degree_cap)
                throw DegreeOverflow("blend: polynomial degree " + std::to_string(p.degree()) + " exceeds cap " +
                                     std::to_string(degree_cap));
        out.cells.push_back({r, std::move(comp)});
    };

    for (const auto& c : f.cells) {
        if (!c.r.interior_intersects(R)) {
            out.cells.push_back(c);
            continue;
        }
        const Rect& r = c.r;
        if (r.x0 < R.x0)
            out.cells.push_back({Rect(r.x0, R.x0, r.y0, r.y1), c.comp});
        if (r.x1 > R.x1)
            out.cells.push_back({Rect(R.x1, r.x1, r.y0, r.y1), c.comp});
        Rat mx0 = r.x0 < R.x0 ? R.x0 : r.x0, mx1 = r.x1 > R.x1 ? R.x1 : r.x1;
        if (r.y0 < R.y0)
            out.cells.push_back({Rect(mx0, mx1, r.y0, R.y0), c.comp});
        if (r.y1 > R.y1)
            out.cells.push_back({Rect(mx0, mx1, R.y1, r.y1), c.comp});
    }

    CellIndex fi(f.domain, f.cells), gi(g.domain, g.cells);
    Pw1D hx = psi.fx.simplified(), hy = psi.fy.simplified();
    for (std::size_t i = 0; i < hx.pieces(); ++i) {
        auto [ax, bx] = hx.affine(i);
        for (std::size_t j = 0; j < hy.pieces(); ++j) {
            auto [ay, by] = hy.affine(j);
            Rect block(hx.t[i], hx.t[i + 1], hy.t[j], hy.t[j + 1]);
            bool zero = (ax == 0 && bx == 0) || (ay == 0 && by == 0);
            bool one = bx == 0 && by == 0 && ax * ay == 1;
            if (zero) {
                for (std::size_t k : fi.overlapping(block))
                    out.cells.push_back({f.cells[k].r.intersect(block), f.cells[k].comp});
                continue;
            }
            if (one) {
                for (std::size_t k : gi.overlapping(block))
                    out.cells.push_back({g.cells[k].r.intersect(block), g.cells[k].comp});
                continue;
            }
            Poly2 w = Poly2::separable(ax, bx, ay, by);
            for (std::size_t k : fi.overlapping(block)) {
                Rect fb = f.cells[k].r.intersect(block);
                for (std::size_t l : gi.overlapping(fb)) {
                    Rect piece = fb.intersect(g.cells[l].r);
                    std::vector<Poly2> comp;
                    comp.reserve(static_cast<std::size_t>(f.ncomp));
                    for (int m = 0; m < f.ncomp; ++m) {
                        const Poly2& pf = f.cells[k].comp[m];
                        const Poly2& pg = g.cells[l].comp[m];
                        if (pf == pg)
                            comp.push_back(pf);
                        else
                            comp.push_back(pf + w * (pg - pf));
                    }
                    emit(piece, std::move(comp));
                }
            }
        }
    }
    sort_cells(out.cells);
    return out;
}

// Every cell of a lies inside one cell of b with identical polynomials (so a refines b and agrees with it).
inline bool refines_equal(const PPField& a, const PPField& b)
{
    if (a.domain != b.domain || a.ncomp != b.ncomp)
        return false;
    CellIndex bi(b.domain, b.cells);
    for (const auto& c : a.cells) {
        auto ids = bi.overlapping(c.r);
        if (ids.size() != 1 || !b.cells[ids[0]].r.contains(c.r))
            return false;
        for (int m = 0; m < a.ncomp; ++m)
            if (c.comp[m] != b.cells[ids[0]].comp[m])
                return false;
    }
    return true;
}

// ---- grids -----------------------------------------------------------------

// Tensor grid of rectangles with the given increasing coordinate lists.
inline std::vector<Rect> grid_rects(const std::vector<Rat>& xs, const std::vector<Rat>& ys)
{
    std::vector<Rect> out;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j)
            out.emplace_back(xs[i], xs[i + 1], ys[j], ys[j + 1]);
    return out;
}

inline std::vector<Rat> uniform_ticks(const Rat& lo, const Rat& hi, long n)
{
    std::vector<Rat> t;
    for (long i = 0; i <= n; ++i)
        t.push_back(lo + (hi - lo) * Rat(i) / Rat(n));
    return t;
}

inline PAField constant_field(const Rect& domain, const AffineMap& f = {}) { return PAField{domain, {PACell{domain, f}}}; }

// Returns g on the cells of "region" (a subset of the domain covered by cells of f) and f elsewhere.
// f is split along the boundary of every region rectangle.
inline PAField splice(const PAField& f, const std::vector<PACell>& replacement, const std::vector<Rect>& region)
{
    PAField out{f.domain, {}};
    struct RC {
        Rect r;
    };
    std::vector<RC> regs;
    for (const auto& r : region)
        regs.push_back({r});
    CellIndex regi(f.domain, regs);
    for (const auto& c : f.cells) {
        auto hits = regi.overlapping(c.r);
        if (hits.empty()) {
            out.cells.push_back(c);
            continue;
        }
        // Subtract region rectangles from c by recursive slicing.
        std::vector<Rect> pending{c.r};
        for (std::size_t h : hits) {
            const Rect& R = regs[h].r;
            std::vector<Rect> next;
            for (const Rect& r : pending) {
                if (!r.interior_intersects(R)) {
                    next.push_back(r);
                    continue;
                }
                if (r.x0 < R.x0)
                    next.emplace_back(r.x0, R.x0, r.y0, r.y1);
                if (r.x1 > R.x1)
                    next.emplace_back(R.x1, r.x1, r.y0, r.y1);
                Rat mx0 = r.x0 < R.x0 ? R.x0 : r.x0, mx1 = r.x1 > R.x1 ? R.x1 : r.x1;
                if (r.y0 < R.y0)
                    next.emplace_back(mx0, mx1, r.y0, R.y0);
                if (r.y1 > R.y1)
                    next.emplace_back(mx0, mx1, R.y1, r.y1);
            }
            pending = std::move(next);
        }
        for (const Rect& r : pending)
            out.cells.push_back({r, c.f});
    }
    for (const auto& c : replacement)
        out.cells.push_back(c);
    sort_cells(out.cells);
    return out;
}

} // namespace bdforge
