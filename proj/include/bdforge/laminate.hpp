#pragma once

#include "fields.hpp"
#include "measures.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace bdforge {

struct LaminateError : FieldError {
    using FieldError::FieldError;
};

struct LaminatePencil {
    int k = 0;
    MatQ A, B, C;
};

struct RankOneSplit {
    MatQ C, A, B;
    Rat lambda;
    VecQ a;
    int nu_axis = 0; // nu = e_{nu_axis + 1}

    VecQ nu() const { return nu_axis == 0 ? VecQ{Rat(1), Rat(0)} : VecQ{Rat(0), Rat(1)}; }
};

inline LaminatePencil pencil(int k)
{
    if (k < 0)
        throw std::invalid_argument("pencil: level must be nonnegative");
    Rat t = pow2(k);
    LaminatePencil p{k, MatQ(Rat(0), t, t, Rat(0)), MatQ(Rat(0), t, Rat(-t), Rat(0)), MatQ(Rat(0), t, Rat(2 * t), Rat(0))};
    MatQ An(Rat(0), Rat(2 * t), Rat(2 * t), Rat(0)), Bn(Rat(0), Rat(2 * t), Rat(-2 * t), Rat(0));
    if (p.B * rat(1, 3) + p.C * rat(2, 3) != p.A || An * rat(3, 4) + Bn * rat(-1, 4) != p.C)
        throw std::logic_error("pencil identities failed");
    return p;
}

struct SplitError : LaminateError {
    enum class Kind { RankZero, RankTwo, NonAxisNormal, LambdaOutside, NotOnSegment } kind;
    SplitError(Kind k, const std::string& msg) : LaminateError(msg), kind(k) {}
};

// Recovers lambda, a and nu with C = lambda A + (1 - lambda) B and A - B = a (x) nu.
inline RankOneSplit rank_one_split(const MatQ& C, const MatQ& A, const MatQ& B)
{
    MatQ D = A - B;
    if (D.is_zero())
        throw SplitError(SplitError::Kind::RankZero, "rank_one_split: A = B (rank 0 difference)");
    if (D.det() != 0)
        throw SplitError(SplitError::Kind::RankTwo, "rank_one_split: rank(A - B) = 2");
    bool c0 = D(0, 0) != 0 || D(1, 0) != 0, c1 = D(0, 1) != 0 || D(1, 1) != 0;
    if (c0 && c1)
        throw SplitError(SplitError::Kind::NonAxisNormal, "rank_one_split: normal of A - B is not a coordinate axis");
    int axis = c0 ? 0 : 1;
    VecQ a = D.col(axis);
    MatQ E = C - B;
    Rat lambda = a.x != 0 ? Rat(E(0, axis) / a.x) : Rat(E(1, axis) / a.y);
    if (D * lambda != E)
        throw SplitError(SplitError::Kind::NotOnSegment, "rank_one_split: C is not on the segment [A, B]");
    if (!(lambda > 0 && lambda < 1))
        throw SplitError(SplitError::Kind::LambdaOutside, "rank_one_split: lambda = " + to_string(lambda) + " is outside (0,1)");
    return {C, A, B, lambda, a, axis};
}

struct SawtoothProfile {
    Pw1D h;
    VecQ a;
};

// Scaled sawtooth N^{-1} h_lambda(N t) over the given number of periods.
inline SawtoothProfile sawtooth(const Rat& lambda, const Rat& N, const VecQ& a = {Rat(1), Rat(0)}, long periods = 1)
{
    if (!(lambda > 0 && lambda < 1) || !(N > 0) || periods < 1)
        throw std::invalid_argument("sawtooth: need lambda in (0,1), N > 0, periods >= 1");
    Rat P = 1 / N;
    std::vector<Rat> xs, vs;
    for (long p = 0; p < periods; ++p) {
        xs.push_back(P * p);
        vs.push_back(Rat(0));
        xs.push_back(P * p + lambda * P);
        vs.push_back(lambda * (1 - lambda) * P);
    }
    xs.push_back(P * periods);
    vs.push_back(Rat(0));
    return {Pw1D::interpolate(xs, vs), a};
}

struct LaminateCellEntry {
    Rect cell;
    long periods = 0;
    Rat N;
    std::size_t strips = 0;
    double sup_delta = 0, jump_delta = 0;
};

struct LaminateStepReport {
    std::vector<LaminateCellEntry> cells;
    Rat area_omega{0}, area_A{0};
    Rat eps;
    double sup_measured = 0, sup_budget_bound = 0, jump_before = 0, jump_after = 0, jump_delta_bound = 0;
    std::size_t cells_before = 0, cells_after = 0;
};

struct LaminateOptions {
    long fixed_periods = 0;      // > 0 forces this period count in every cell
    std::size_t cell_cap = 200000;
    bool verify = true;          // re-measure sup and jump budgets after the replacement
};

namespace detail {

// Smallest integer m >= 1 with m >= sqrt(s2) * X for rationals s2, X >= 0.
inline long ceil_sqrt_times(const Rat& s2, const Rat& X)
{
    Rat target = s2 * X * X;
    double approx = std::sqrt(s2.get_d()) * X.get_d();
    if (!std::isfinite(approx) || approx > 9e15)
        throw LaminateError("period count overflow");
    long m = std::max(1L, static_cast<long>(std::ceil(approx)) - 2);
    while (Rat(m) * m < target)
        ++m;
    while (m > 1 && Rat(m - 1) * (m - 1) >= target)
        --m;
    return m;
}

} // namespace detail

// Replaces the gradient C by a rank-one laminate of A and B on every cell where grad u = C.
inline std::pair<PAField, LaminateStepReport> laminate_replace(const PAField& u, const RankOneSplit& split, const Rat& eps,
                                                                 const LaminateOptions& opt = {})
{
    if (!(eps > 0))
        throw LaminateError("laminate_replace: eps must be positive");
    std::vector<std::size_t> omega;
    for (std::size_t i = 0; i < u.cells.size(); ++i)
        if (u.cells[i].f.A == split.C)
            omega.push_back(i);
    if (omega.empty())
        throw LaminateError("laminate_replace: empty omega (no cell has gradient C)");

    const int j = split.nu_axis;
    const Rat lam = split.lambda;
    const Rat mu = lam * (1 - lam);
    const Rat a2 = split.a.norm2();
    const double anorm = std::sqrt(a2.get_d());
    const Rat n_cells(static_cast<long>(omega.size()));

    LaminateStepReport rep;
    rep.eps = eps;
    rep.cells_before = u.cells.size();
    std::vector<long> periods(omega.size());
    std::size_t total = u.cells.size() - omega.size();
    for (std::size_t t = 0; t < omega.size(); ++t) {
        const Rect& r = u.cells[omega[t]].r;
        Rat L = r.side(j);
        long m;
        if (opt.fixed_periods > 0) {
            m = opt.fixed_periods;
        } else {
            long m_sup = detail::ceil_sqrt_times(a2, mu * L / eps);
            long m_jump = detail::ceil_sqrt_times(a2, mu * L * L * n_cells / eps);
            m = std::max(m_sup, m_jump);
        }
        periods[t] = m;
        total += static_cast<std::size_t>(2 * m);
        if (total > opt.cell_cap)
            throw LaminateError("laminate_replace: cell cap " + std::to_string(opt.cell_cap) + " exceeded (cell " +
                                std::to_string(omega[t]) + " requires N = " + std::to_string(m) + "/" + to_string(L) +
                                ", " + std::to_string(2 * m) + " strips)");
    }

    PAField v{u.domain, {}};
    v.cells.reserve(total);
    std::vector<char> in_omega(u.cells.size(), 0);
    for (std::size_t i : omega)
        in_omega[i] = 1;
    for (std::size_t i = 0; i < u.cells.size(); ++i)
        if (!in_omega[i])
            v.cells.push_back(u.cells[i]);

    MatQ Ka = MatQ::outer(split.a, split.nu());
    for (std::size_t t = 0; t < omega.size(); ++t) {
        const PACell& c = u.cells[omega[t]];
        const Rect& r = c.r;
        Rat L = r.side(j);
        long m = periods[t];
        Rat P = L / m;
        LaminateCellEntry e;
        e.cell = r;
        e.periods = m;
        e.N = Rat(m) / L;
        e.strips = static_cast<std::size_t>(2 * m);
        e.sup_delta = anorm * Rat(mu * P).get_d();
        e.jump_delta = anorm * Rat(mu * P * L).get_d();
        rep.area_omega += r.area();
        for (long p = 0; p < m; ++p) {
            Rat s = r.lo(j) + P * p;
            Rat sm = s + lam * P, se = s + P;
            // A strip: h = (1 - lam)(x_j - s); B strip: h = lam (s + P - x_j).
            AffineMap fa{c.f.A + Ka * (1 - lam), c.f.b - split.a * ((1 - lam) * s)};
            AffineMap fb{c.f.A - Ka * lam, c.f.b + split.a * (lam * se)};
            Rect ra = j == 0 ? Rect(s, sm, r.y0, r.y1) : Rect(r.x0, r.x1, s, sm);
            Rect rb = j == 0 ? Rect(sm, se, r.y0, r.y1) : Rect(r.x0, r.x1, sm, se);
            if (fa.A != split.A || fb.A != split.B)
                throw std::logic_error("laminate_replace: strip gradients differ from the split");
            rep.area_A += ra.area();
            v.cells.push_back({ra, fa});
            v.cells.push_back({rb, fb});
        }
        rep.jump_delta_bound += e.jump_delta;
        rep.sup_budget_bound = std::max(rep.sup_budget_bound, e.sup_delta);
        rep.cells.push_back(e);
    }
    sort_cells(v.cells);
    rep.cells_after = v.cells.size();
    if (rep.area_A != lam * rep.area_omega)
        throw std::logic_error("laminate_replace: volume fraction is not exact");
    if (opt.verify) {
        rep.sup_measured = sup_distance(u, v).value;
        rep.jump_before = strain_report(u).jump_du.value;
        rep.jump_after = strain_report(v).jump_du.value;
    }
    return {std::move(v), std::move(rep)};
}

} // namespace bdforge
