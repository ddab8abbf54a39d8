#pragma once

#include "counterexamples.hpp"
#include "fields.hpp"
#include "laminate.hpp"
#include "measures.hpp"
#include "quantize.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bdforge {

struct CantorPipelineConfig {
    int kstar = 3;
    int m = 4;
    // Unset: single-period laminates and gamma = 1/N_{k*}. Set: periods chosen from eps_k = 2^{-k} gamma min{1, 1/H^1}.
    std::optional<Rat> gamma;
    Rat delta_divisor{8};
    int degree_cap = kDefaultDegreeCap;
    std::size_t cell_cap = 200000;
    // Kinks of |.| inside cells (where the integrand vanishes on a curve) defeat tight tolerances.
    QuadOptions quad{8, 1e-7, 1e-12, 3, false};
};

struct CantorStepReport {
    int k = 0; // describes U_k, for k >= 1
    std::size_t omega_cells = 0, hat_cells = 0, cells = 0;
    Rat eps{0};
    double laminate_sup = 0;
    NormIntegral sigma;       // sup |U_k - u_k|
    double sigma_budget = 0;  // 4 gamma / max H^1(boundary of hat-Omega_{k-1} components)
    bool sigma_ok = false;
    NormIntegral grad_lower;  // int over Omega_{k-1} \ Omega_k of |grad U_k|
    double grad_lower_bound = 0;
    bool grad_lower_ok = false;
};

struct CantorPipelineReport {
    int kstar = 0, m = 0;
    Rat gamma{1}, delta{0}, delta_q{0};
    std::size_t N = 0; // components of Omega_{k*}
    std::vector<CantorStepReport> steps;
    std::size_t cells = 0;
    bool continuous = false;
    Rat jump_length{0};
    bool boundary_trace_exact = false;
    NormIntegral cantor_mass;     // int |grad w - G|
    double c_measured = 0;        // cantor_mass / (1 + gamma N)
    double mass_bound_form = 0;   // c (1 + gamma N)
    NormIntegral band_strain;     // sum over cut-off factor bands of int |sym G|, with multiplicity
    Rat band_lebesgue{0};
    Rat band_lebesgue_level0{0};  // the same band geometry at m = 0 (full transition width)
    NormIntegral band_strain_literal; // sum over the same bands of int |e(w)|
    NormIntegral leak_strain;     // int |e(w)| over cells outside every rising band
    std::size_t leak_cells = 0;   // non-skew cells outside every rising band
    NormIntegral grad_off_final;  // int over Omega_{k*-1} \ Omega_{k*} of |grad w|
    StrainReport strain;
};

struct CantorPipelineResult {
    PPField w;
    CantorPipelineReport report;
};

// Displacement components only (drops the companion gradient entries).
inline PPField displacement(const PPField& w)
{
    PPField d{w.domain, 2, {}};
    d.cells.reserve(w.cells.size());
    for (const auto& c : w.cells)
        d.cells.push_back({c.r, {c.comp[0], c.comp[1]}});
    return d;
}

namespace detail {

inline PPField zero_gradient_part(PPField f, const std::vector<Rect>& region)
{
    struct RC {
        Rect r;
    };
    std::vector<RC> regs;
    for (const auto& r : region)
        regs.push_back({r});
    CellIndex idx(f.domain, regs);
    for (auto& c : f.cells)
        if (!idx.overlapping(c.r).empty())
            for (int m = 2; m < 6; ++m)
                c.comp[m] = Poly2();
    return f;
}

// sup over the pieces (U cell) x (u cell) of |U - u| in the first two components.
inline NormIntegral sup_difference(const PPField& U, const PAField& u)
{
    CellIndex ui(u.domain, u.cells);
    double lo = 0, hi = 0;
    for (const auto& c : U.cells)
        for (std::size_t k : ui.overlapping(c.r)) {
            Rect piece = c.r.intersect(u.cells[k].r);
            auto a = affine_polys(u.cells[k].f);
            PPCell d{piece, {c.comp[0] - a[0], c.comp[1] - a[1]}};
            LocalJet j(d, piece, 2);
            for (int s = 0; s <= 2; ++s)
                for (int t = 0; t <= 2; ++t)
                    lo = std::max(lo, std::hypot(j.val[0].eval(s / 2.0, t / 2.0), j.val[1].eval(s / 2.0, t / 2.0)));
            hi = std::max(hi, bernstein_sup_bound(j, 2));
        }
    hi = std::max(hi, lo);
    return {lo, hi - lo + 4 * kEps * lo};
}

inline bool same_coeffs(std::vector<Rat> a, std::vector<Rat> b)
{
    a.resize(std::max(a.size(), b.size()), Rat(0));
    b.resize(a.size(), Rat(0));
    return a == b;
}

// Exact comparison of the traces of w and u0 on the four sides of the domain.
inline bool trace_matches(const PPField& w, const AffineMap& u0)
{
    auto ref = affine_polys(u0);
    const Rect& D = w.domain;
    for (const auto& c : w.cells) {
        for (int m = 0; m < 2; ++m) {
            const Poly2& p = c.comp[m];
            const Poly2& q = ref[m];
            if (c.r.x0 == D.x0 && !same_coeffs(p.restrict_x(D.x0), q.restrict_x(D.x0)))
                return false;
            if (c.r.x1 == D.x1 && !same_coeffs(p.restrict_x(D.x1), q.restrict_x(D.x1)))
                return false;
            if (c.r.y0 == D.y0 && !same_coeffs(p.restrict_y(D.y0), q.restrict_y(D.y0)))
                return false;
            if (c.r.y1 == D.y1 && !same_coeffs(p.restrict_y(D.y1), q.restrict_y(D.y1)))
                return false;
        }
    }
    return true;
}

inline double sym_companion_norm(const LocalJet& j, double s, double t) { return norm(jet_matrix(j, s, t, 2).sym()); }
inline double cantor_part_norm(const LocalJet& j, double s, double t)
{
    return norm(jet_gradient(j, s, t) - jet_matrix(j, s, t, 2));
}

// Range [lo, hi] of t - Psi_m(t) on [0, 1], attained at breakpoints.
inline std::pair<Rat, Rat> stair_deviation(const CantorStair& c)
{
    Rat lo(0), hi(0);
    for (std::size_t i = 0; i < c.psi.t.size(); ++i) {
        Rat v = i < c.psi.pieces() ? c.psi.left[i] : c.psi.right_value(i - 1);
        Rat d = c.psi.t[i] - v;
        if (d < lo)
            lo = d;
        if (d > hi)
            hi = d;
    }
    return {lo, hi};
}

// Largest shorter-side/n whose exact sup |A (x - phi(x))| meets eps.
inline Rat cantor_delta(const MatQ& A, const Rect& r, const Rat& eps, const CantorStair& c)
{
    auto [lo, hi] = stair_deviation(c);
    Rat worst(0);
    for (const Rat& a : {lo, hi})
        for (const Rat& b : {lo, hi}) {
            Rat n2 = (A * VecQ{a, b}).norm2();
            if (n2 > worst)
                worst = n2;
        }
    Rat side = r.width() < r.height() ? r.width() : r.height();
    long n = 1;
    while (worst * (side / n) * (side / n) > eps * eps)
        ++n;
    return side / n;
}

} // namespace detail

inline CantorPipelineResult build_pure_cantor(const CantorPipelineConfig& cfg)
{
    if (cfg.m < 1)
        throw std::invalid_argument("pure cantor: level m must be at least 1");
    if (cfg.kstar < 1)
        throw std::invalid_argument("pure cantor: k* must be at least 1");
    if (cfg.gamma && !(*cfg.gamma > 0))
        throw std::invalid_argument("pure cantor: gamma must be positive");

    const Rect D(Rat(0), Rat(1), Rat(0), Rat(1));
    const AffineMap u0{pencil(0).A, VecQ{Rat(0), Rat(0)}};
    CantorPipelineReport rep;
    rep.kstar = cfg.kstar;
    rep.m = cfg.m;

    // Laminate sequence u_0, hat u_0, u_1, ..., u_{k*}.
    LaminateOptions lopt;
    lopt.cell_cap = cfg.cell_cap;
    lopt.verify = true;
    if (!cfg.gamma)
        lopt.fixed_periods = 1;
    Rat gamma = cfg.gamma.value_or(Rat(1));
    std::vector<PAField> u{constant_field(D, u0)}, uh;
    std::vector<std::vector<Rect>> om{{D}}, omh;
    std::vector<Rat> eps_k;
    std::vector<double> lam_sup;
    auto max_perimeter = [](const std::vector<Rect>& rs) {
        Rat p(0);
        for (const auto& r : rs)
            if (r.perimeter() > p)
                p = r.perimeter();
        return p;
    };
    for (int k = 0; k < cfg.kstar; ++k) {
        LaminatePencil p = pencil(k), q = pencil(k + 1);
        Rat per = max_perimeter(om[k]);
        Rat e1 = pow2(-k) * gamma * (per > 1 ? Rat(1 / per) : Rat(1));
        auto [h, r1] = laminate_replace(u[k], rank_one_split(p.A, p.B, p.C), e1, lopt);
        omh.push_back(omega_rects(h, p.C));
        Rat perh = max_perimeter(omh[k]);
        Rat e2 = pow2(-k) * gamma * (perh > 1 ? Rat(1 / perh) : Rat(1));
        auto [n, r2] = laminate_replace(h, rank_one_split(p.C, q.A, -q.B), e2, lopt);
        om.push_back(omega_rects(n, q.A));
        eps_k.push_back(e2);
        lam_sup.push_back(r1.sup_measured + r2.sup_measured);
        uh.push_back(std::move(h));
        u.push_back(std::move(n));
    }
    rep.N = om[cfg.kstar].size();
    if (!cfg.gamma)
        gamma = Rat(1) / Rat(static_cast<long>(rep.N));
    rep.gamma = gamma;

    Rat minside = D.width();
    for (const auto* group : {&om, &omh})
        for (const auto& rs : *group)
            for (const auto& r : rs)
                for (const Rat& s : {r.width(), r.height()})
                    if (s < minside)
                        minside = s;
    const Rat delta = minside / cfg.delta_divisor;
    rep.delta = delta;

    std::vector<SepCutoff> cutoffs;
    auto check_cap = [&](const PPField& f) {
        if (f.cells.size() > cfg.cell_cap)
            throw FieldError("pure cantor: cell cap " + std::to_string(cfg.cell_cap) + " exceeded (" +
                             std::to_string(f.cells.size()) + " cells)");
    };
    auto blend_all = [&](PPField f, const std::vector<Rect>& rects, const PPField& g) {
        for (const auto& R : rects) {
            SepCutoff psi = cutoff_rect(R, delta, cfg.m);
            f = blend(psi, f, g, cfg.degree_cap);
            check_cap(f);
            cutoffs.push_back(std::move(psi));
        }
        return f;
    };

    PPField U = to_pp_with_gradient(u[0]);
    for (int k = 0; k < cfg.kstar; ++k) {
        PPField Uh = blend_all(std::move(U), om[k], to_pp_with_gradient(uh[k]));
        U = blend_all(std::move(Uh), omh[k], to_pp_with_gradient(u[k + 1]));

        CantorStepReport s;
        s.k = k + 1;
        s.omega_cells = om[k + 1].size();
        s.hat_cells = omh[k].size();
        s.cells = U.cells.size();
        s.eps = eps_k[k];
        s.laminate_sup = lam_sup[k];
        s.sigma = detail::sup_difference(U, u[k + 1]);
        s.sigma_budget = 4 * gamma.get_d() / max_perimeter(omh[k]).get_d();
        s.sigma_ok = s.sigma.hi() <= s.sigma_budget;
        // Omega_k \ Omega_{k+1} carries exactly the strips with gradients B_k and -B_{k+1}.
        MatQ Bk = pencil(k).B, Bn = -pencil(k + 1).B;
        std::vector<Rect> region;
        for (const auto& c : u[k + 1].cells)
            if (c.f.A == Bk || c.f.A == Bn)
                region.push_back(c.r);
        s.grad_lower = integrate_over(U, region, grad_norm, true, 2, cfg.quad);
        Rat area(0);
        for (const auto& r : om[k])
            area += r.area();
        s.grad_lower_bound = (norm(Bk) + norm(pencil(k + 1).B)) / 7 * area.get_d();
        s.grad_lower_ok = s.grad_lower.lo() >= s.grad_lower_bound;
        rep.steps.push_back(s);
    }

    // Cantor quantizer on the final Omega_{k*}, then the last blend.
    const int K = cfg.kstar;
    CantorStair stair = cantor_stair(cfg.m);
    std::vector<PACell> qcells;
    std::vector<Rect> qbands;
    Rat eps_q = [&] {
        Rat per = max_perimeter(om[K]) * Rat(static_cast<long>(rep.N));
        return per > 1 ? Rat(1 / per) : Rat(1);
    }();
    MatQ AK = pencil(K).A;
    for (const auto& c : u[K].cells) {
        if (c.f.A != AK)
            continue;
        Rat dq = detail::cantor_delta(c.f.A, c.r, eps_q, stair);
        rep.delta_q = dq;
        CantorQuantized q = cantor_quantize_full(c.f, c.r, dq, cfg.m, cfg.cell_cap);
        for (std::size_t i = 0; i < q.phi_x.pieces(); ++i)
            if (q.phi_x.slope[i] != 0)
                qbands.emplace_back(q.phi_x.t[i], q.phi_x.t[i + 1], c.r.y0, c.r.y1);
        for (std::size_t i = 0; i < q.phi_y.pieces(); ++i)
            if (q.phi_y.slope[i] != 0)
                qbands.emplace_back(c.r.x0, c.r.x1, q.phi_y.t[i], q.phi_y.t[i + 1]);
        for (auto& qc : q.field.cells)
            qcells.push_back(std::move(qc));
    }
    PAField vfield = splice(u[K], qcells, om[K]);
    sort_cells(vfield.cells);
    PPField V = detail::zero_gradient_part(to_pp_with_gradient(vfield), om[K]);
    PPField w = blend_all(std::move(U), om[K], V);

    // Measurements.
    rep.cells = w.cells.size();
    auto jumps = jump_set(w, 2);
    rep.jump_length = Rat(0);
    for (const auto& j : jumps)
        rep.jump_length += j.s1 - j.s0;
    rep.continuous = jumps.empty();
    rep.boundary_trace_exact = detail::trace_matches(w, u0);

    CellIndex wi(w.domain, w.cells);
    std::vector<LocalJet> jets;
    jets.reserve(w.cells.size());
    for (std::size_t i = 0; i < w.cells.size(); ++i) {
        jets.emplace_back(w.cells[i], w.cells[i].r, 6);
        rep.cantor_mass += integrate_jet(jets.back(), detail::cantor_part_norm, true, cfg.quad, i);
    }
    rep.c_measured = rep.cantor_mass.value / (1 + gamma.get_d() * static_cast<double>(rep.N));
    rep.mass_bound_form = rep.c_measured * (1 + gamma.get_d() * static_cast<double>(rep.N));

    std::vector<Rect> bands;
    for (const auto& psi : cutoffs)
        for (int axis = 0; axis < 2; ++axis)
            for (const auto& b : cutoff_bands(psi, axis))
                bands.push_back(b);
    std::vector<std::optional<std::pair<NormIntegral, NormIntegral>>> inside(w.cells.size());
    for (const auto& b : bands) {
        rep.band_lebesgue += b.area();
        for (std::size_t i : wi.overlapping(b)) {
            Rect piece = w.cells[i].r.intersect(b);
            if (piece == w.cells[i].r) {
                if (!inside[i]) {
                    inside[i] = {integrate_jet(jets[i], detail::sym_companion_norm, true, cfg.quad, i),
                                 integrate_jet(jets[i], sym_grad_norm, true, cfg.quad, i)};
                }
                rep.band_strain += inside[i]->first;
                rep.band_strain_literal += inside[i]->second;
                continue;
            }
            LocalJet j(w.cells[i], piece, 6);
            rep.band_strain += integrate_jet(j, detail::sym_companion_norm, true, cfg.quad, i);
            rep.band_strain_literal += integrate_jet(j, sym_grad_norm, true, cfg.quad, i);
        }
    }
    // The same bands at level 0 are the full transition strips of width delta.
    for (const auto& psi : cutoffs) {
        const Rect& R = psi.support;
        rep.band_lebesgue_level0 += 2 * delta * R.height() + 2 * delta * R.width();
    }

    std::vector<Rect> all_bands = bands;
    all_bands.insert(all_bands.end(), qbands.begin(), qbands.end());
    struct RC {
        Rect r;
    };
    std::vector<RC> brc;
    for (const auto& b : all_bands)
        brc.push_back({b});
    CellIndex bi(w.domain, brc);
    for (std::size_t i = 0; i < w.cells.size(); ++i) {
        const auto& c = w.cells[i];
        if (!bi.overlapping(c.r).empty())
            continue;
        const Poly2& p = c.comp[0];
        const Poly2& q = c.comp[1];
        bool skew = p.deriv_x().is_zero() && q.deriv_y().is_zero() && (p.deriv_y() + q.deriv_x()).is_zero();
        if (skew)
            continue;
        ++rep.leak_cells;
        rep.leak_strain += integrate_jet(jets[i], sym_grad_norm, true, cfg.quad, i);
    }

    std::vector<Rect> last_region;
    MatQ Bl = pencil(K - 1).B, Bn = -pencil(K).B;
    for (const auto& c : u[K].cells)
        if (c.f.A == Bl || c.f.A == Bn)
            last_region.push_back(c.r);
    rep.grad_off_final = integrate_over(w, last_region, grad_norm, true, 2, cfg.quad);

    rep.strain = strain_report(displacement(w), cfg.quad);
    return {std::move(w), std::move(rep)};
}

} // namespace bdforge
