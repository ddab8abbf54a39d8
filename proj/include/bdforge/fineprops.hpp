#pragma once

#include "measures.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdforge {

struct QuadFailure {
    int k = 0;
    double err = 0;
};

namespace detail {

// Globally adaptive: split the interval with the largest error estimate until the summed
// estimate meets tol or the interval budget runs out.
template <class F>
NormIntegral adaptive_1d(const F& f, double a, double b, double tol, bool& ok, int max_intervals = 400, int order = 10)
{
    struct Piece {
        double a, b;
        NormIntegral q;
        bool operator<(const Piece& o) const { return q.abs_error_bound < o.q.abs_error_bound; }
    };
    std::priority_queue<Piece> heap;
    NormIntegral total = gauss_quad_1d(f, a, b, order);
    heap.push({a, b, total});
    int count = 1;
    while (total.abs_error_bound > tol) {
        if (count >= max_intervals) {
            ok = false;
            break;
        }
        Piece p = heap.top();
        double m = 0.5 * (p.a + p.b);
        if (!(m > p.a && m < p.b)) {
            ok = false;
            break;
        }
        heap.pop();
        Piece l{p.a, m, gauss_quad_1d(f, p.a, m, order)}, r{m, p.b, gauss_quad_1d(f, m, p.b, order)};
        total.value += l.q.value + r.q.value - p.q.value;
        total.abs_error_bound += l.q.abs_error_bound + r.q.abs_error_bound - p.q.abs_error_bound;
        heap.push(l);
        heap.push(r);
        ++count;
    }
    // Re-sum to drop the drift of the running updates.
    NormIntegral sum{0, 0};
    while (!heap.empty()) {
        sum += heap.top().q;
        heap.pop();
    }
    return sum;
}

// Sorted disjoint complement of a set of intervals inside [0, r].
inline std::vector<std::pair<double, double>> complement_in(double r, std::vector<std::pair<double, double>> cut)
{
    std::sort(cut.begin(), cut.end());
    std::vector<std::pair<double, double>> keep;
    double at = 0;
    for (auto [a, b] : cut) {
        a = std::max(a, 0.0);
        b = std::min(b, r);
        if (b <= a)
            continue;
        if (a > at)
            keep.push_back({at, a});
        at = std::max(at, b);
    }
    if (at < r)
        keep.push_back({at, r});
    return keep;
}

} // namespace detail

// int over B_r(c) minus the excluded rho-intervals of each ray, in polar coordinates around c.
// excluded(theta) lists the rho-intervals of the ray c + rho e(theta) that lie in the excluded set.
template <class F, class Ex>
NormIntegral polar_integral(const F& f, const VecD& c, double r, const Ex& excluded, double tol, bool& ok)
{
    const double two_pi = 2 * std::numbers::pi;
    double inner_tol = tol / (4 * two_pi);
    auto ray = [&](double th) {
        double ex = std::cos(th), ey = std::sin(th);
        double v = 0;
        for (auto [a, b] : detail::complement_in(r, excluded(ex, ey)))
            v += detail::adaptive_1d([&](double rho) { return f(c.x + rho * ex, c.y + rho * ey) * rho; }, a, b,
                                     inner_tol, ok)
                     .value;
        return v;
    };
    NormIntegral out{0, 0};
    // Eight outer panels so that kinks of the exclusion geometry are not missed by a single rule.
    for (int p = 0; p < 8; ++p)
        out += detail::adaptive_1d(ray, two_pi * p / 8, two_pi * (p + 1) / 8, tol / 16, ok);
    out.abs_error_bound += two_pi * inner_tol;
    return out;
}

inline auto no_exclusion()
{
    return [](double, double) { return std::vector<std::pair<double, double>>{}; };
}

// ---- multiscale density functional -------------------------------------------------

enum class ProbeKind { Constant, Bump, Remark };

inline const char* probe_name(ProbeKind k)
{
    switch (k) {
    case ProbeKind::Constant:
        return "const";
    case ProbeKind::Bump:
        return "bump";
    default:
        return "remark";
    }
}

struct DensityProbe {
    ProbeKind kind = ProbeKind::Constant;
    VecD x{0, 0};
    int K = 32;
    int n = 2;
    double p = 4;        // exponent of the reported L^p norm
    double value = 1;    // height of the constant integrand
    double rel_tol = 1e-12; // per ball integral, relative to |B_r| sup|f|
};

// Standard mollifier profile exp(-1/(1 - |y|^2)) on the unit disk.
inline double bump(double x, double y)
{
    double s = x * x + y * y;
    return s < 1 ? std::exp(-1 / (1 - s)) : 0.0;
}

// chi_{B_1/2}(y) / (y_2 ln^2(1/y_2)) for y_2 > 0, zero for y_2 <= 0.
inline double remark_f(double x, double y)
{
    if (y <= 0 || x * x + y * y >= 0.25)
        return 0;
    double l = std::log(1 / y);
    return 1 / (y * l * l);
}

struct DensityResult {
    DensityProbe probe;
    std::vector<NormIntegral> terms, partial; // partial[k-1] = S_k
    std::optional<NormIntegral> norm_p;       // ||f||_p for the bump
    std::vector<QuadFailure> failures;

    static std::string csv_header() { return "probe,K,S_K,err_K"; }
    std::string csv() const
    {
        std::string out = csv_header() + "\n";
        for (std::size_t i = 0; i < partial.size(); ++i)
            out += std::string(probe_name(probe.kind)) + "," + std::to_string(i + 1) + "," + fmt17(partial[i].value) + "," +
                   fmt17(partial[i].abs_error_bound) + "\n";
        return out;
    }
};

namespace detail {

// int_{B_r(x)} remark_f through y_2 = exp(-1/u), which turns dy_2 / (y_2 ln^2(1/y_2)) into du.
inline NormIntegral remark_ball_integral(const VecD& x, double r, double tol, bool& ok)
{
    double lo = std::max(0.0, x.y - r), hi = std::min(0.5, x.y + r);
    if (hi <= lo)
        return {0, 0};
    auto u_of = [](double y) { return y <= 0 ? 0.0 : 1 / std::log(1 / y); };
    auto width = [&](double y2) {
        double a = r * r - (y2 - x.y) * (y2 - x.y), b = 0.25 - y2 * y2;
        if (a <= 0 || b <= 0)
            return 0.0;
        double h1 = std::sqrt(a), h2 = std::sqrt(b);
        double w = std::min(x.x + h1, h2) - std::max(x.x - h1, -h2);
        return std::max(w, 0.0);
    };
    auto g = [&](double u) { return u <= 0 ? 0.0 : width(std::exp(-1 / u)); };
    return adaptive_1d(g, u_of(lo), u_of(hi), tol, ok, 4000);
}

} // namespace detail

inline NormIntegral bump_lp_norm(double p, double rel_tol = 1e-12)
{
    bool ok = true;
    NormIntegral m = detail::adaptive_1d(
        [&](double rho) { return std::pow(bump(rho, 0), p) * 2 * std::numbers::pi * rho; }, 0, 1,
        rel_tol * std::numbers::pi * std::exp(-p), ok);
    if (!ok)
        throw std::runtime_error("bump_lp_norm: quadrature did not converge");
    double v = std::pow(m.value, 1 / p);
    // d(m^{1/p}) = m^{1/p - 1}/p dm.
    return {v, v / (p * m.value) * m.abs_error_bound + 4 * kEps * v};
}

inline DensityResult density_partial_sums(const DensityProbe& probe)
{
    if (probe.n != 2)
        throw std::invalid_argument("density_partial_sums: only n = 2 is supported");
    if (probe.K < 1)
        throw std::invalid_argument("density_partial_sums: K must be positive");
    DensityResult res;
    res.probe = probe;
    NormIntegral S{0, 0};
    for (int k = 1; k <= probe.K; ++k) {
        double r = std::ldexp(1.0, -k);
        bool ok = true;
        NormIntegral ball;
        double area = std::numbers::pi * r * r;
        switch (probe.kind) {
        case ProbeKind::Constant:
            ball = polar_integral([&](double, double) { return std::abs(probe.value); }, probe.x, r, no_exclusion(),
                                  probe.rel_tol * area * std::abs(probe.value) + 1e-300, ok);
            break;
        case ProbeKind::Bump:
            ball = polar_integral([](double a, double b) { return bump(a, b); }, probe.x, r, no_exclusion(),
                                  probe.rel_tol * area * std::exp(-1.0), ok);
            break;
        case ProbeKind::Remark:
            // The u-range has length at most 1/ln(1/(|x_2| + r)) and the chord at most 2r.
            ball = detail::remark_ball_integral(probe.x, r, probe.rel_tol * 2 * r / std::log(1 / std::min(0.5, std::abs(probe.x.y) + r)), ok);
            break;
        }
        if (!ok)
            res.failures.push_back({k, ball.abs_error_bound});
        // r^{1-n} with n = 2.
        NormIntegral term{ball.value / r, ball.abs_error_bound / r};
        res.terms.push_back(term);
        S += term;
        S.abs_error_bound += kEps * S.value;
        res.partial.push_back(S);
    }
    if (probe.kind == ProbeKind::Bump)
        res.norm_p = bump_lp_norm(probe.p);
    return res;
}

struct TailBound {
    double partial = 0;
    std::optional<double> limit; // K -> infinity, only for p > n
    bool divergent = false;
};

// ||f||_p sum_{k=0}^{K-1} 2^{k(n-p)/p}.
inline TailBound lp_tail_bound(double norm_f_p, double p, int n, int K)
{
    if (!(p > 1) || n < 1 || K < 0 || norm_f_p < 0)
        throw std::invalid_argument("lp_tail_bound: need p > 1, n >= 1, K >= 0, norm >= 0");
    TailBound t;
    double q = std::exp2((n - p) / p);
    for (int k = 0; k < K; ++k)
        t.partial += norm_f_p * std::pow(q, k);
    if (p > n)
        t.limit = norm_f_p / (1 - q);
    else
        t.divergent = true;
    return t;
}

// The same comparison with the Hoelder factor |B_1|^{1 - 1/p} kept and k running over 1..K,
// which is the form that bounds S_K for every f in L^p.
inline double holder_tail_bound(double norm_f_p, double p, int n, int K)
{
    if (n != 2)
        throw std::invalid_argument("holder_tail_bound: only n = 2 is supported");
    double q = std::exp2((n - p) / p), s = 0;
    for (int k = 1; k <= K; ++k)
        s += std::pow(q, k);
    return std::pow(std::numbers::pi, 1 - 1 / p) * norm_f_p * s;
}

// ---- affine recovery ----------------------------------------------------------------

struct CapSet {
    VecD normal; // unit
    double t = 0; // {x : x . normal > t}
};

struct ExcludedSet {
    std::vector<RectD> rects; // pairwise interior-disjoint
    std::vector<CapSet> caps;
};

struct AffineRecoveryTrial {
    VecD center{0, 0};
    double r = 1;
    ExcludedSet omega;
    MatD A;
    VecD b{0, 0};
};

struct AffineRecovery {
    double ratio = 0;
    double sup = 0;
    NormIntegral l1;
    double ball_area = 0, omega_area = 0;
    bool quad_ok = true;
};

// Area of {x . n > t} inside B_r(c).
inline double cap_area(const VecD& c, double r, const CapSet& cap)
{
    double s = (cap.t - (c.x * cap.normal.x + c.y * cap.normal.y)) / r;
    if (s >= 1)
        return 0;
    if (s <= -1)
        return std::numbers::pi * r * r;
    return r * r * (std::acos(s) - s * std::sqrt(1 - s * s));
}

// Offset s in [0, 1) with acos(s) - s sqrt(1 - s^2) = a, the cap area of the unit disk beyond distance s.
inline double cap_offset_for_area(double a)
{
    if (!(a > 0 && a < std::numbers::pi / 2))
        throw std::invalid_argument("cap_offset_for_area: area must lie in (0, pi/2)");
    double lo = 0, hi = 1;
    for (int it = 0; it < 200 && hi - lo > 0; ++it) {
        double m = 0.5 * (lo + hi);
        if (m == lo || m == hi)
            break;
        if (std::acos(m) - m * std::sqrt(1 - m * m) > a)
            lo = m;
        else
            hi = m;
    }
    return 0.5 * (lo + hi);
}

inline double omega_area(const AffineRecoveryTrial& t)
{
    double a = 0;
    for (const auto& q : t.omega.rects)
        a += (q.x1 - q.x0) * (q.y1 - q.y0);
    for (const auto& c : t.omega.caps)
        a += cap_area(t.center, t.r, c);
    return a;
}

// Throws unless every rectangle lies in the closed ball and avoids every cap.
inline void validate_omega(const AffineRecoveryTrial& t)
{
    double slack = 1e-12 * t.r;
    for (const auto& q : t.omega.rects) {
        if (!(q.x1 > q.x0 && q.y1 > q.y0))
            throw std::invalid_argument("affine trial: degenerate rectangle in omega");
        for (double x : {q.x0, q.x1})
            for (double y : {q.y0, q.y1}) {
                if (std::hypot(x - t.center.x, y - t.center.y) > t.r + slack)
                    throw std::invalid_argument("affine trial: omega leaves the ball");
                for (const auto& c : t.omega.caps)
                    if (x * c.normal.x + y * c.normal.y > c.t + slack)
                        throw std::invalid_argument("affine trial: rectangle meets a cap");
            }
    }
    for (std::size_t i = 0; i < t.omega.rects.size(); ++i)
        for (std::size_t j = i + 1; j < t.omega.rects.size(); ++j) {
            const auto &p = t.omega.rects[i], &q = t.omega.rects[j];
            if (std::min(p.x1, q.x1) > std::max(p.x0, q.x0) && std::min(p.y1, q.y1) > std::max(p.y0, q.y0))
                throw std::invalid_argument("affine trial: overlapping rectangles in omega");
        }
    if (t.omega.caps.size() > 1)
        throw std::invalid_argument("affine trial: at most one cap");
}

// sup over the ball of |A x + b|: the maximum of a convex function sits on the circle.
inline double affine_sup_on_ball(const MatD& A, const VecD& b, const VecD& c, double r)
{
    auto val = [&](double th) {
        double x = c.x + r * std::cos(th), y = c.y + r * std::sin(th);
        return std::hypot(A.m[0][0] * x + A.m[0][1] * y + b.x, A.m[1][0] * x + A.m[1][1] * y + b.y);
    };
    const int n = 720;
    const double h = 2 * std::numbers::pi / n;
    double best = 0;
    for (int i = 0; i < n; ++i) {
        double lo = (i - 1) * h, hi = (i + 1) * h;
        double v = val(i * h);
        if (v < val(lo) || v < val(hi))
            continue;
        // Golden-section search on the bracketing step.
        const double g = 0.5 * (std::sqrt(5.0) - 1);
        double a = lo, d = hi, x1 = d - g * (d - a), x2 = a + g * (d - a), f1 = val(x1), f2 = val(x2);
        for (int it = 0; it < 100 && d - a > 1e-15; ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (d - a);
                f2 = val(x2);
            } else {
                d = x2;
                x2 = x1;
                f2 = f1;
                x1 = d - g * (d - a);
                f1 = val(x1);
            }
        }
        best = std::max({best, v, f1, f2});
    }
    return best;
}

namespace detail {

inline std::vector<std::pair<double, double>> ray_exclusions(const AffineRecoveryTrial& t, double ex, double ey)
{
    std::vector<std::pair<double, double>> out;
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& q : t.omega.rects) {
        double lo = -inf, hi = inf;
        auto slab = [&](double o, double e, double a, double b) {
            if (e == 0) {
                if (o < a || o > b)
                    hi = -inf;
                return;
            }
            double s0 = (a - o) / e, s1 = (b - o) / e;
            lo = std::max(lo, std::min(s0, s1));
            hi = std::min(hi, std::max(s0, s1));
        };
        slab(t.center.x, ex, q.x0, q.x1);
        slab(t.center.y, ey, q.y0, q.y1);
        if (hi > lo)
            out.push_back({lo, hi});
    }
    for (const auto& c : t.omega.caps) {
        double o = t.center.x * c.normal.x + t.center.y * c.normal.y, e = ex * c.normal.x + ey * c.normal.y;
        if (e > 0)
            out.push_back({(c.t - o) / e, inf});
        else if (e < 0)
            out.push_back({-inf, (c.t - o) / e});
        else if (o > c.t)
            out.push_back({-inf, inf});
    }
    return out;
}

} // namespace detail

inline AffineRecovery affine_recovery_ratio(const AffineRecoveryTrial& t, double rel_tol = 1e-12)
{
    if (!(t.r > 0))
        throw std::invalid_argument("affine trial: radius must be positive");
    validate_omega(t);
    AffineRecovery res;
    res.ball_area = std::numbers::pi * t.r * t.r;
    res.omega_area = omega_area(t);
    if (res.omega_area > 0.25 * res.ball_area * (1 + 1e-12))
        throw std::invalid_argument("affine trial: omega exceeds a quarter of the ball");
    res.sup = affine_sup_on_ball(t.A, t.b, t.center, t.r);
    auto phi = [&](double x, double y) {
        return std::hypot(t.A.m[0][0] * x + t.A.m[0][1] * y + t.b.x, t.A.m[1][0] * x + t.A.m[1][1] * y + t.b.y);
    };
    double scale = res.sup * res.ball_area;
    res.l1 = polar_integral(phi, t.center, t.r, [&](double ex, double ey) { return detail::ray_exclusions(t, ex, ey); },
                            rel_tol * scale, res.quad_ok);
    if (!(res.l1.value > 1e-12))
        throw std::invalid_argument("affine trial: degenerate, ||phi||_L1 below 1e-12");
    res.ratio = res.ball_area * res.sup / res.l1.value;
    return res;
}

// Area of B_1 cap (B_1 + d e) for unit disks.
inline double lens_area(double d)
{
    if (d >= 2)
        return 0;
    return 2 * std::acos(d / 2) - d / 2 * std::sqrt(4 - d * d);
}

struct ChainConstant {
    double delta = 0; // largest shift with |B cap (B + delta e_i)| >= 3/4 |B|
    double c = 0;     // 16 sqrt(n)/delta + 4/3 for n = 2
};

// Constant obtained by chaining the translation estimate for |A| with the estimate for |b|,
// using ||phi||_inf <= |A| + |b| on B_1.
inline ChainConstant affine_chain_constant()
{
    double target = 0.75 * std::numbers::pi, lo = 0, hi = 2;
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (lo + hi);
        if (m == lo || m == hi)
            break;
        if (lens_area(m) >= target)
            lo = m;
        else
            hi = m;
    }
    return {lo, 16 * std::sqrt(2.0) / lo + 4.0 / 3};
}

inline double unit_random(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

// Seeded trial with L^2(omega) = L^2(B)/4: a cap, a split rectangle, or a cap plus a square.
inline AffineRecoveryTrial random_affine_trial(std::mt19937_64& rng)
{
    auto U = [&](double a, double b) { return a + (b - a) * unit_random(rng); };
    AffineRecoveryTrial t;
    t.center = {U(-2, 2), U(-2, 2)};
    t.r = U(0.1, 3);
    const double quarter = 0.25 * std::numbers::pi * t.r * t.r;
    int family = static_cast<int>(rng() % 3);
    double th = U(0, 2 * std::numbers::pi);
    VecD n{std::cos(th), std::sin(th)};
    VecD hole = t.center;
    if (family == 0) {
        double s = cap_offset_for_area(std::numbers::pi / 4);
        t.omega.caps.push_back({n, t.center.x * n.x + t.center.y * n.y + s * t.r});
        hole = {t.center.x + 0.7 * t.r * n.x, t.center.y + 0.7 * t.r * n.y};
    } else if (family == 1) {
        double rho = U(0.25, 4);
        double w = std::sqrt(quarter * rho), h = quarter / w;
        double cx = t.center.x, cy = t.center.y;
        for (int tries = 0; tries < 20; ++tries) {
            double ox = U(-0.3, 0.3) * t.r, oy = U(-0.3, 0.3) * t.r;
            bool inside = true;
            for (double sx : {-1.0, 1.0})
                for (double sy : {-1.0, 1.0})
                    if (std::hypot(ox + sx * w / 2, oy + sy * h / 2) > t.r)
                        inside = false;
            if (inside) {
                cx += ox;
                cy += oy;
                break;
            }
        }
        int pieces = 1 + static_cast<int>(rng() % 3);
        double x0 = cx - w / 2;
        for (int i = 0; i < pieces; ++i) {
            double a = x0 + w * i / pieces, b = i + 1 == pieces ? cx + w / 2 : x0 + w * (i + 1) / pieces;
            t.omega.rects.push_back({a, b, cy - h / 2, cy + h / 2});
        }
        hole = {cx, cy};
    } else {
        double alpha = U(0.3, 0.7);
        double s = cap_offset_for_area(alpha * std::numbers::pi / 4);
        t.omega.caps.push_back({n, t.center.x * n.x + t.center.y * n.y + s * t.r});
        double side = std::sqrt((1 - alpha) * quarter);
        double cx = t.center.x - 0.35 * t.r * n.x, cy = t.center.y - 0.35 * t.r * n.y;
        t.omega.rects.push_back({cx - side / 2, cx + side / 2, cy - side / 2, cy + side / 2});
        hole = {cx, cy};
    }
    if (rng() % 4 == 0) {
        VecD a{U(-1, 1), U(-1, 1)}, c{U(-1, 1), U(-1, 1)};
        t.A = MatD(a.x * c.x, a.x * c.y, a.y * c.x, a.y * c.y);
    } else {
        t.A = MatD(U(-1, 1), U(-1, 1), U(-1, 1), U(-1, 1));
    }
    // Zero of phi inside omega, somewhere in the ball, or no prescribed zero.
    int zero = static_cast<int>(rng() % 3);
    VecD z = hole;
    if (zero == 1) {
        double rr = t.r * std::sqrt(unit_random(rng)), ph = U(0, 2 * std::numbers::pi);
        z = {t.center.x + rr * std::cos(ph), t.center.y + rr * std::sin(ph)};
    }
    if (zero == 2)
        t.b = {U(-1, 1), U(-1, 1)};
    else
        t.b = {-(t.A.m[0][0] * z.x + t.A.m[0][1] * z.y), -(t.A.m[1][0] * z.x + t.A.m[1][1] * z.y)};
    return t;
}

struct AffineTrialRow {
    int trial = 0;
    double ratio = 0;
    double omega_fraction = 0; // L^2(omega) / L^2(B)
    bool quad_ok = true;
};

struct AffineLemmaReport {
    unsigned long long seed = 0;
    std::vector<AffineTrialRow> rows;
    double c_emp = 0;
    ChainConstant chain;
    std::size_t rejected = 0;
    double max_area_defect = 0; // max |L^2(omega)/L^2(B) - 1/4|

    static std::string csv_header() { return "seed,trial,ratio"; }
    std::string csv() const
    {
        std::string out = csv_header() + "\n";
        for (const auto& r : rows)
            out += std::to_string(seed) + "," + std::to_string(r.trial) + "," + fmt17(r.ratio) + "\n";
        return out;
    }
};

inline AffineLemmaReport affine_lemma_trials(int trials, unsigned long long seed)
{
    AffineLemmaReport rep;
    rep.seed = seed;
    rep.chain = affine_chain_constant();
    std::mt19937_64 rng(seed);
    for (int i = 0; i < trials; ++i) {
        AffineRecoveryTrial t = random_affine_trial(rng);
        try {
            AffineRecovery a = affine_recovery_ratio(t);
            double frac = a.omega_area / a.ball_area;
            rep.max_area_defect = std::max(rep.max_area_defect, std::abs(frac - 0.25));
            rep.rows.push_back({i, a.ratio, frac, a.quad_ok});
            rep.c_emp = std::max(rep.c_emp, a.ratio);
        } catch (const std::invalid_argument&) {
            ++rep.rejected;
        }
    }
    return rep;
}

} // namespace bdforge
