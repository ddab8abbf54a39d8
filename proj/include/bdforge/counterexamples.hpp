#pragma once

#include "fields.hpp"
#include "laminate.hpp"
#include "measures.hpp"
#include "quantize.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace bdforge {

// ---- Ornstein iteration -------------------------------------------------------

struct TraceRow {
    int k = 0;
    Rat area_omega{0}, area_hat{0};
    NormIntegral grad_l1;       // over the complement of Omega_k
    double grad_increment = 0;
    NormIntegral jump_du;
    double jump_increment = 0;
    double sup_increment = 0;
    double laminate_budget = 0; // jump increments of the two laminate calls, measured a priori per cell
    double laminate_sup = 0;
    Rat eps{0};
    long max_periods = 0;
    std::size_t cells = 0, omega_cells = 0;
    bool gradients_exact = true; // grad = A_k on Omega_k and skew elsewhere
};

struct IterationTrace {
    std::vector<TraceRow> rows;
    bool cap_reached = false;
    std::string stop_reason;

    static std::string csv_header()
    {
        return "k,area_omega,grad_l1,grad_increment,jump_du,jump_increment,cells,area_hat,sup_increment,laminate_budget,"
               "laminate_sup,eps,max_periods,omega_cells,gradients_exact";
    }
    std::string csv() const
    {
        std::string s = csv_header() + "\n";
        for (const auto& r : rows) {
            s += std::to_string(r.k) + "," + to_string(r.area_omega) + "," + fmt17(r.grad_l1.value) + "," +
                 fmt17(r.grad_increment) + "," + fmt17(r.jump_du.value) + "," + fmt17(r.jump_increment) + "," +
                 std::to_string(r.cells) + "," + to_string(r.area_hat) + "," + fmt17(r.sup_increment) + "," +
                 fmt17(r.laminate_budget) + "," + fmt17(r.laminate_sup) + "," + to_string(r.eps) + "," +
                 std::to_string(r.max_periods) + "," + std::to_string(r.omega_cells) + "," +
                 (r.gradients_exact ? "true" : "false") + "\n";
        }
        return s;
    }
};

struct OrnsteinState {
    PAField u;
    int k = 0;
    Rat area0{0};
};

struct OrnsteinConfig {
    Rect domain{Rat(0), Rat(1), Rat(0), Rat(1)};
    Rect omega0{rat(1, 4), rat(3, 4), rat(1, 4), rat(3, 4)};
    int K = 8;
    std::function<Rat(int)> eps = [](int k) { return pow2(-k); };
    long fixed_periods = 0;
    std::size_t cell_cap = 200000;
};

inline Rat omega_area(const PAField& u, const MatQ& A)
{
    Rat a(0);
    for (const auto& c : u.cells)
        if (c.f.A == A)
            a += c.r.area();
    return a;
}

inline std::vector<Rect> omega_rects(const PAField& u, const MatQ& A)
{
    std::vector<Rect> out;
    for (const auto& c : u.cells)
        if (c.f.A == A)
            out.push_back(c.r);
    return out;
}

// grad = A_k on Omega_k and e(u) = 0 elsewhere, both exact.
inline bool gradients_exact(const PAField& u, int k, const Rect& omega_hull)
{
    MatQ Ak = pencil(k).A;
    for (const auto& c : u.cells) {
        if (c.f.A == Ak) {
            if (!omega_hull.contains(c.r))
                return false;
            continue;
        }
        if (!c.f.A.is_skew())
            return false;
    }
    return true;
}

// Off-Omega gradient mass: sum over cells whose gradient is not A_k.
inline NormIntegral off_omega_gradient(const PAField& u, const MatQ& Ak)
{
    NormIntegral acc;
    for (const auto& c : u.cells) {
        if (c.f.A == Ak)
            continue;
        NormIntegral g = exact_norm_value(c.f.A.frob2(), c.r.area());
        add_term(acc, g.value, g.abs_error_bound);
    }
    return acc;
}

inline OrnsteinState ornstein_initial(const OrnsteinConfig& cfg)
{
    if (!cfg.domain.contains(cfg.omega0) || !cfg.omega0.valid())
        throw FieldError("ornstein: omega0 must be a rectangle inside the domain");
    PAField u = splice(constant_field(cfg.domain), {PACell{cfg.omega0, AffineMap{pencil(0).A, VecQ{Rat(0), Rat(0)}}}},
                       {cfg.omega0});
    return {std::move(u), 0, cfg.omega0.area()};
}

inline TraceRow trace_row(const OrnsteinState& s, const Rect& hull)
{
    TraceRow r;
    r.k = s.k;
    MatQ Ak = pencil(s.k).A;
    r.area_omega = omega_area(s.u, Ak);
    r.grad_l1 = off_omega_gradient(s.u, Ak);
    r.jump_du = strain_report(s.u).jump_du;
    r.cells = s.u.cells.size();
    for (const auto& c : s.u.cells)
        if (c.f.A == Ak)
            ++r.omega_cells;
    r.gradients_exact = gradients_exact(s.u, s.k, hull);
    return r;
}

// One step: A_k = 1/3 B_k + 2/3 C_k on Omega_k, then C_k = 3/4 A_{k+1} + 1/4 (-B_{k+1}) on the C strips.
inline std::pair<OrnsteinState, TraceRow> ornstein_iterate(const OrnsteinState& s, const Rat& eps, const TraceRow& prev,
                                                           const Rect& hull, const LaminateOptions& lopt)
{
    LaminatePencil p = pencil(s.k), q = pencil(s.k + 1);
    if (omega_area(s.u, p.A) == 0)
        throw LaminateError("ornstein_iterate: no cell has gradient A_k");
    RankOneSplit first = rank_one_split(p.A, p.B, p.C);
    RankOneSplit second = rank_one_split(p.C, q.A, -q.B);
    auto [uh, r1] = laminate_replace(s.u, first, eps, lopt);
    auto [un, r2] = laminate_replace(uh, second, eps, lopt);

    OrnsteinState next{std::move(un), s.k + 1, s.area0};
    TraceRow row = trace_row(next, hull);
    row.area_hat = omega_area(uh, p.C);
    row.grad_increment = row.grad_l1.value - prev.grad_l1.value;
    row.jump_increment = row.jump_du.value - prev.jump_du.value;
    row.laminate_budget = r1.jump_delta_bound + r2.jump_delta_bound;
    row.laminate_sup = r1.sup_budget_bound + r2.sup_budget_bound;
    row.sup_increment = sup_distance(s.u, next.u).value;
    row.eps = eps;
    for (const auto& e : r1.cells)
        row.max_periods = std::max(row.max_periods, e.periods);
    for (const auto& e : r2.cells)
        row.max_periods = std::max(row.max_periods, e.periods);
    return {std::move(next), std::move(row)};
}

struct OrnsteinRun {
    OrnsteinState last;
    IterationTrace trace;
};

// Runs up to cfg.K steps; a cell-cap overrun ends the run early and is recorded in the trace.
inline OrnsteinRun ornstein_run(const OrnsteinConfig& cfg, const std::function<void(const OrnsteinState&)>& on_state = {})
{
    LaminateOptions lopt;
    lopt.fixed_periods = cfg.fixed_periods;
    lopt.cell_cap = cfg.cell_cap;
    OrnsteinRun run{ornstein_initial(cfg), {}};
    run.trace.rows.push_back(trace_row(run.last, cfg.omega0));
    if (on_state)
        on_state(run.last);
    for (int k = 0; k < cfg.K; ++k) {
        try {
            auto [next, row] = ornstein_iterate(run.last, cfg.eps(k), run.trace.rows.back(), cfg.omega0, lopt);
            run.last = std::move(next);
            run.trace.rows.push_back(std::move(row));
        } catch (const LaminateError& e) {
            run.trace.cap_reached = true;
            run.trace.stop_reason = "step " + std::to_string(k) + ": " + e.what();
            break;
        }
        if (on_state)
            on_state(run.last);
    }
    return run;
}

struct TraceCheck {
    bool areas = true, hat_areas = true, gradients = true, increments = true, jumps = true;
    double worst_increment_rel = 0, jump_total = 0, jump_allowance = 0;
    bool ok() const { return areas && hat_areas && gradients && increments && jumps; }
};

// Verifies the iteration identities on every computed step of a trace.
inline TraceCheck check_trace(const IterationTrace& t, double rel_tol = 1e-9)
{
    TraceCheck c;
    if (t.rows.empty())
        return c;
    const Rat a0 = t.rows[0].area_omega;
    const double inc = 2.0 / 3.0 * std::sqrt(2.0) * a0.get_d();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const TraceRow& r = t.rows[i];
        if (r.area_omega != a0 * pow2(-r.k))
            c.areas = false;
        if (!r.gradients_exact)
            c.gradients = false;
        if (i == 0)
            continue;
        const TraceRow& p = t.rows[i - 1];
        if (r.area_hat != p.area_omega * rat(2, 3))
            c.hat_areas = false;
        double rel = std::abs(r.grad_increment - inc) / inc;
        c.worst_increment_rel = std::max(c.worst_increment_rel, rel);
        if (rel > rel_tol)
            c.increments = false;
        c.jump_total += r.jump_increment;
        c.jump_allowance += 2 * std::ldexp(1.0, -p.k) + r.laminate_budget;
        double slack = 1e-12 * (r.jump_du.value + p.jump_du.value) + r.jump_du.abs_error_bound + p.jump_du.abs_error_bound;
        if (r.jump_increment > 2 * std::ldexp(1.0, -p.k) + r.laminate_budget + slack)
            c.jumps = false;
    }
    return c;
}

// ---- pure-jump construction ---------------------------------------------------

struct PureJumpConfig {
    Rat M{1};
    OrnsteinConfig iteration{};
    int max_steps = 40;
};

struct PureJumpCandidate {
    int k = 0;
    PAField w;
    StrainReport report;
    double ratio = 0; // int |grad w| / |Ew|
    std::size_t quantized_cells = 0;
};

struct PureJumpSequence {
    std::vector<PureJumpCandidate> candidates;
    IterationTrace trace;
    std::string stop_reason;
};

// Largest grid step side/n with sup |A (x - corner)| <= eps over every grid cell, exact.
inline Rat staircase_delta(const MatQ& A, const Rect& r, const Rat& eps)
{
    Rat side = r.width() < r.height() ? r.width() : r.height();
    auto sup2 = [&](const Rat& d) {
        Rat best(0);
        for (const VecQ& v : {VecQ{d, Rat(0)}, VecQ{Rat(0), d}, VecQ{d, d}}) {
            Rat n2 = (A * v).norm2();
            if (n2 > best)
                best = n2;
        }
        return best;
    };
    double a = std::sqrt(A.frob2().get_d()) * std::sqrt(2.0);
    long n = std::max(1L, static_cast<long>(std::floor(side.get_d() * a / eps.get_d())) - 1);
    if (n > 100000000L)
        throw FieldError("staircase_delta: grid too fine");
    while (sup2(side / n) > eps * eps)
        ++n;
    while (n > 1 && sup2(side / (n - 1)) <= eps * eps)
        --n;
    return side / n;
}

// Replaces u by a piecewise constant staircase on every Omega_k cell; e(w) = 0 exactly afterwards.
inline PAField quantize_omega(const PAField& u, const MatQ& Ak, std::size_t cell_cap, std::size_t* produced = nullptr)
{
    std::vector<PACell> repl;
    std::vector<Rect> region;
    std::size_t N = 0;
    for (const auto& c : u.cells)
        if (c.f.A == Ak)
            ++N;
    std::size_t total = u.cells.size();
    for (const auto& c : u.cells) {
        if (c.f.A != Ak)
            continue;
        Rat per = c.r.perimeter() * Rat(static_cast<long>(N));
        Rat eps = per > 1 ? Rat(1 / per) : Rat(1);
        Rat d = staircase_delta(c.f.A, c.r, eps);
        double nx = std::ceil(Rat(c.r.width() / d).get_d()), ny = std::ceil(Rat(c.r.height() / d).get_d());
        total += static_cast<std::size_t>(nx * ny);
        if (total > cell_cap)
            throw LaminateError("quantize: cell cap " + std::to_string(cell_cap) + " exceeded");
        PAField q = staircase_quantize(c.f, c.r, d);
        for (auto& qc : q.cells)
            repl.push_back(std::move(qc));
        region.push_back(c.r);
    }
    if (produced)
        *produced = repl.size();
    PAField w = splice(u, repl, region);
    sort_cells(w.cells);
    return w;
}

inline PureJumpSequence pure_jump_sequence(const PureJumpConfig& cfg, double stop_ratio = std::numeric_limits<double>::infinity())
{
    PureJumpSequence seq;
    OrnsteinConfig oc = cfg.iteration;
    oc.K = cfg.max_steps;
    LaminateOptions lopt;
    lopt.fixed_periods = oc.fixed_periods;
    lopt.cell_cap = oc.cell_cap;
    OrnsteinState s = ornstein_initial(oc);
    seq.trace.rows.push_back(trace_row(s, oc.omega0));
    for (int k = 0;; ++k) {
        try {
            PureJumpCandidate c;
            c.k = s.k;
            c.w = quantize_omega(s.u, pencil(s.k).A, oc.cell_cap, &c.quantized_cells);
            c.report = strain_report(c.w);
            c.ratio = c.report.bulk_grad_l1.value / c.report.eu_total.value;
            seq.candidates.push_back(std::move(c));
            if (seq.candidates.back().ratio >= stop_ratio) {
                seq.stop_reason = "target ratio reached";
                break;
            }
        } catch (const LaminateError& e) {
            seq.stop_reason = "quantization at k = " + std::to_string(s.k) + ": " + e.what();
            break;
        }
        if (k >= cfg.max_steps) {
            seq.stop_reason = "step limit";
            break;
        }
        try {
            auto [next, row] = ornstein_iterate(s, oc.eps(k), seq.trace.rows.back(), oc.omega0, lopt);
            s = std::move(next);
            seq.trace.rows.push_back(std::move(row));
        } catch (const LaminateError& e) {
            seq.trace.cap_reached = true;
            seq.stop_reason = "iteration at k = " + std::to_string(k) + ": " + e.what();
            break;
        }
    }
    return seq;
}

struct PureJumpResult {
    PAField w;
    StrainReport report;
    IterationTrace trace;
    Rat M{1}, scale{1};
    int k_used = 0;
    bool target_met = false;
    double ratio_needed = 0, ratio_achieved = 0;
    bool strain_zero = false, frame_zero = false;
    std::string status;
};

inline PAField scale_field(const PAField& f, const Rat& s)
{
    PAField out = f;
    for (auto& c : out.cells)
        c.f = c.f * s;
    return out;
}

// Every cell outside the support rectangle of u_0 carries the zero map.
inline bool zero_off(const PAField& w, const Rect& support)
{
    for (const auto& c : w.cells)
        if (!support.contains(c.r) && (!c.f.A.is_zero() || c.f.b != VecQ{Rat(0), Rat(0)}))
            return false;
    return true;
}

// Picks the first candidate meeting ratio >= M^2 (else the best one) and rescales it so |Ew| <= 1/M.
inline PureJumpResult select_pure_jump(const PureJumpSequence& seq, const Rat& M, const Rect& support)
{
    if (!(M >= 1))
        throw std::invalid_argument("pure jump: M must be at least 1");
    if (seq.candidates.empty())
        throw FieldError("pure jump: no candidate fits the cell cap");
    PureJumpResult res;
    res.M = M;
    res.trace = seq.trace;
    const double Md = M.get_d();
    res.ratio_needed = Md * Md;
    const PureJumpCandidate* pick = nullptr;
    for (const auto& c : seq.candidates)
        if (c.ratio >= res.ratio_needed * (1 + 1e-9)) {
            pick = &c;
            break;
        }
    res.target_met = pick != nullptr;
    if (!pick) {
        pick = &seq.candidates[0];
        for (const auto& c : seq.candidates)
            if (c.ratio > pick->ratio)
                pick = &c;
    }
    res.k_used = pick->k;
    res.ratio_achieved = pick->ratio;
    double hi = pick->report.eu_total.hi();
    res.scale = Rat(1.0 / (Md * hi) * (1 - 1e-12));
    res.w = scale_field(pick->w, res.scale);
    res.report = strain_report(res.w);
    res.strain_zero = res.report.bulk_strain_l1.value == 0;
    for (const auto& c : res.w.cells)
        if (!c.f.A.is_skew())
            res.strain_zero = false;
    res.frame_zero = zero_off(res.w, support);
    double inv = 1 / Md;
    bool eu_ok = res.report.eu_total.hi() <= inv;
    bool grad_ok = res.report.bulk_grad_l1.lo() >= Md;
    res.target_met = res.target_met && eu_ok && grad_ok;
    if (res.target_met)
        res.status = "targets met at k = " + std::to_string(res.k_used);
    else
        res.status = "iteration cap reached before the gradient target: best k = " + std::to_string(res.k_used) +
                     ", |Ew| = " + fmt17(res.report.eu_total.value) + ", int|grad w| = " + fmt17(res.report.bulk_grad_l1.value) +
                     " (needs " + fmt17(Md) + "), achieved ratio " + fmt17(res.ratio_achieved) + " < M^2 = " +
                     fmt17(res.ratio_needed) + "; " + seq.stop_reason;
    return res;
}

inline PureJumpResult build_pure_jump(const PureJumpConfig& cfg)
{
    double Md = cfg.M.get_d();
    PureJumpSequence seq = pure_jump_sequence(cfg, Md * Md * (1 + 1e-9));
    return select_pure_jump(seq, cfg.M, cfg.iteration.omega0);
}

// ---- assembly ---------------------------------------------------------------

struct AssemblyBlock {
    int k = 0;
    Rect Q;
    Rat M;
    bool target_met = false;
    NormIntegral eu, grad;
    std::size_t cells = 0;
};

struct AssemblyResult {
    PAField u;
    std::vector<AssemblyBlock> blocks;
    NormIntegral eu_total, grad_total;
    double grad_target = 0;
    bool eu_ok = false, grad_ok = false, strain_zero = false;
};

// Q_k = [a_k, a_k + h_k]^2 with h_k = 2^{-k-1} and a_k = 1/2 - 2^{-k}, stacked along the diagonal.
inline Rect dyadic_square(int k)
{
    Rat h = pow2(-k - 1), a = rat(1, 2) - pow2(-k);
    return Rect(a, a + h, a, a + h);
}

// u(x) = z((x - a)/h) / h keeps both int |grad| and the jump masses unchanged.
inline std::vector<PACell> transplant(const PAField& z, const Rect& Q)
{
    Rat h = Q.width(), ih = 1 / h;
    VecQ a{Q.x0, Q.y0};
    std::vector<PACell> out;
    out.reserve(z.cells.size());
    for (const auto& c : z.cells) {
        Rect r(a.x + h * c.r.x0, a.x + h * c.r.x1, a.y + h * c.r.y0, a.y + h * c.r.y1);
        MatQ A = c.f.A * (ih * ih);
        VecQ b = (c.f.b - c.f.A * a * ih) * ih;
        out.push_back({r, AffineMap{A, b}});
    }
    return out;
}

inline AssemblyResult assemble_pure_jump(int K, const PureJumpConfig& base = {})
{
    if (K < 1)
        throw std::invalid_argument("assemble: K must be at least 1");
    if (K > 30)
        throw FieldError("assemble: K beyond the dyadic placement range");
    PureJumpConfig cfg = base;
    cfg.iteration.cell_cap = std::max<std::size_t>(base.iteration.cell_cap / static_cast<std::size_t>(K), 16);
    PureJumpSequence seq = pure_jump_sequence(cfg, std::ldexp(1.0, 2 * K) * (1 + 1e-9));

    AssemblyResult res;
    PAField u{Rect(Rat(0), Rat(1), Rat(0), Rat(1)), {}};
    for (int k = 1; k <= K; ++k) {
        Rat M = pow2(k);
        PureJumpResult z = select_pure_jump(seq, M, cfg.iteration.omega0);
        Rect Q = dyadic_square(k);
        auto cells = transplant(z.w, Q);
        AssemblyBlock b{k, Q, M, z.target_met, z.report.eu_total, z.report.bulk_grad_l1, cells.size()};
        res.blocks.push_back(b);
        for (auto& c : cells)
            u.cells.push_back(std::move(c));
        // Zero filler left and right of Q_k within its horizontal band.
        if (Q.x0 > 0)
            u.cells.push_back({Rect(Rat(0), Q.x0, Q.y0, Q.y1), {}});
        u.cells.push_back({Rect(Q.x1, Rat(1), Q.y0, Q.y1), {}});
        res.grad_target += std::ldexp(1.0, k);
    }
    Rect top = dyadic_square(K);
    u.cells.push_back({Rect(Rat(0), Rat(1), top.y1, Rat(1)), {}});
    sort_cells(u.cells);
    require_valid(u);
    StrainReport rep = strain_report(u);
    res.eu_total = rep.eu_total;
    res.grad_total = rep.bulk_grad_l1;
    res.strain_zero = rep.bulk_strain_l1.value == 0 && rep.skew_exact;
    res.eu_ok = rep.eu_total.hi() <= 2;
    res.grad_ok = rep.bulk_grad_l1.lo() >= res.grad_target;
    res.u = std::move(u);
    return res;
}

} // namespace bdforge
