#pragma once

#include "fields.hpp"

#include <string>
#include <vector>

namespace bdforge {

struct QuantizeError : FieldError {
    using FieldError::FieldError;
};

struct CantorStair {
    int level = 0;
    Pw1D psi;
};

constexpr int kDefaultCantorCap = 20;

inline CantorStair cantor_stair(int m, int cap = kDefaultCantorCap)
{
    if (m < 0)
        throw QuantizeError("cantor_stair: negative level");
    if (m > cap)
        throw QuantizeError("cantor_stair: level " + std::to_string(m) + " exceeds cap " + std::to_string(cap));
    std::vector<std::pair<Rat, Rat>> iv{{Rat(0), Rat(1)}};
    for (int l = 0; l < m; ++l) {
        std::vector<std::pair<Rat, Rat>> next;
        next.reserve(iv.size() * 2);
        for (const auto& [a, b] : iv) {
            Rat third = (b - a) / 3;
            next.emplace_back(a, a + third);
            next.emplace_back(b - third, b);
        }
        iv = std::move(next);
    }
    Rat step = pow2(-m);
    std::vector<Rat> xs, vs;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (i == 0 || iv[i].first != xs.back()) {
            xs.push_back(iv[i].first);
            vs.push_back(step * static_cast<long>(i));
        }
        xs.push_back(iv[i].second);
        vs.push_back(step * static_cast<long>(i + 1));
    }
    return {m, Pw1D::interpolate(xs, vs)};
}

// Psi_m((s - a) / d) on [a, a + d], optionally mirrored to Psi_m((b - s) / d) on [b - d, b].
inline Pw1D scaled_stair(const CantorStair& c, const Rat& origin, const Rat& d, bool mirrored)
{
    std::vector<Rat> xs, vs;
    const auto& t = c.psi.t;
    std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = mirrored ? n - 1 - i : i;
        Rat v = c.psi.left.size() > k ? c.psi.left[k] : c.psi.right_value(k - 1);
        xs.push_back(mirrored ? Rat(origin - d * t[k]) : Rat(origin + d * t[k]));
        vs.push_back(v);
    }
    return Pw1D::interpolate(xs, vs);
}

// Joins continuous pieces on consecutive ranges into one function.
inline Pw1D concat(const std::vector<Pw1D>& parts)
{
    std::vector<Rat> xs, vs;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.t.size(); ++i) {
            Rat v = i < p.pieces() ? p.left[i] : p.right_value(i - 1);
            if (!xs.empty() && xs.back() == p.t[i]) {
                if (vs.back() != v)
                    throw QuantizeError("concat: discontinuous junction");
                continue;
            }
            xs.push_back(p.t[i]);
            vs.push_back(v);
        }
    }
    return Pw1D::interpolate(xs, vs);
}

// The 1-D cut-off: Psi_m((t - lo)/delta) near lo, 1 in the middle, Psi_m((hi - t)/delta) near hi.
inline Pw1D cutoff_1d(const Rat& lo, const Rat& hi, const Rat& delta, int m)
{
    if (!(delta > 0) || !(2 * delta <= hi - lo))
        throw QuantizeError("cutoff: delta must lie in (0, half the side]");
    CantorStair c = cantor_stair(m);
    std::vector<Pw1D> parts{scaled_stair(c, lo, delta, false)};
    if (lo + delta < hi - delta)
        parts.push_back(Pw1D::interpolate({lo + delta, hi - delta}, {Rat(1), Rat(1)}));
    parts.push_back(scaled_stair(c, hi, delta, true));
    return concat(parts);
}

inline SepCutoff cutoff_rect(const Rect& R, const Rat& delta, int m)
{
    Rat half = (R.width() < R.height() ? R.width() : R.height()) / 2;
    if (!(delta > 0 && delta < half))
        throw QuantizeError("cutoff_rect: delta must lie in (0, half the shorter side)");
    return {R, cutoff_1d(R.x0, R.x1, delta, m), cutoff_1d(R.y0, R.y1, delta, m)};
}

// Rectangles (within R) where one factor of the cut-off has nonzero slope; axis 0 bands are x-intervals.
inline std::vector<Rect> cutoff_bands(const SepCutoff& psi, int axis)
{
    std::vector<Rect> out;
    const Pw1D& f = axis == 0 ? psi.fx : psi.fy;
    for (std::size_t i = 0; i < f.pieces(); ++i) {
        if (f.slope[i] == 0)
            continue;
        if (axis == 0)
            out.emplace_back(f.t[i], f.t[i + 1], psi.support.y0, psi.support.y1);
        else
            out.emplace_back(psi.support.x0, psi.support.x1, f.t[i], f.t[i + 1]);
    }
    return out;
}

// ---- quantizers ------------------------------------------------------------

inline std::vector<Rat> delta_ticks(const Rat& lo, const Rat& hi, const Rat& delta)
{
    std::vector<Rat> t{lo};
    while (t.back() + delta < hi)
        t.push_back(t.back() + delta);
    t.push_back(hi);
    return t;
}

// Piecewise constant v = A (lower-left grid corner) + b on the delta-grid anchored at omega's lower-left corner.
inline PAField staircase_quantize(const AffineMap& u, const Rect& omega, const Rat& delta)
{
    if (!(delta > 0))
        throw QuantizeError("staircase_quantize: delta must be positive");
    if (delta > omega.width() || delta > omega.height())
        throw QuantizeError("staircase_quantize: delta larger than a side of omega");
    auto xs = delta_ticks(omega.x0, omega.x1, delta), ys = delta_ticks(omega.y0, omega.y1, delta);
    PAField v{omega, {}};
    v.cells.reserve((xs.size() - 1) * (ys.size() - 1));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            AffineMap f{MatQ::zero(), u(VecQ{xs[i], ys[j]})};
            v.cells.push_back({Rect(xs[i], xs[i + 1], ys[j], ys[j + 1]), f});
        }
    return v;
}

// phi(s) = o + delta (floor((s - o)/delta) + Psi_m(frac)) on [lo, hi] with o = lo.
inline Pw1D cantor_profile(const Rat& lo, const Rat& hi, const Rat& delta, const CantorStair& c)
{
    auto ticks = delta_ticks(lo, hi, delta);
    std::vector<Rat> xs, vs;
    for (std::size_t g = 0; g + 1 < ticks.size(); ++g) {
        const Rat& a = ticks[g];
        const Rat& b = ticks[g + 1];
        for (std::size_t i = 0; i < c.psi.t.size(); ++i) {
            Rat x = a + delta * c.psi.t[i];
            Rat val = i < c.psi.pieces() ? c.psi.left[i] : c.psi.right_value(i - 1);
            if (x > b) {
                // Truncated last interval: close it at b.
                Rat vb = a + delta * c.psi((b - a) / delta);
                if (xs.back() != b) {
                    xs.push_back(b);
                    vs.push_back(vb);
                }
                break;
            }
            if (!xs.empty() && xs.back() == x)
                continue;
            xs.push_back(x);
            vs.push_back(a + delta * val);
        }
    }
    return Pw1D::interpolate(xs, vs).simplified();
}

struct CantorQuantized {
    PAField field;
    Pw1D phi_x, phi_y;
};

// Continuous v = A (phi(x1), phi(x2)) + b with finite-level Cantor profiles phi; exactly affine per cell.
inline CantorQuantized cantor_quantize_full(const AffineMap& u, const Rect& omega, const Rat& delta, int m,
                                            std::size_t cell_cap = 200000)
{
    if (!(delta > 0))
        throw QuantizeError("cantor_quantize: delta must be positive");
    if (delta > omega.width() || delta > omega.height())
        throw QuantizeError("cantor_quantize: delta larger than a side of omega");
    CantorStair c = cantor_stair(m);
    Pw1D px = cantor_profile(omega.x0, omega.x1, delta, c), py = cantor_profile(omega.y0, omega.y1, delta, c);
    if (px.pieces() * py.pieces() > cell_cap)
        throw QuantizeError("cantor_quantize: breakpoint cap exceeded (" + std::to_string(px.pieces() * py.pieces()) + " cells)");
    CantorQuantized out{PAField{omega, {}}, px, py};
    out.field.cells.reserve(px.pieces() * py.pieces());
    for (std::size_t i = 0; i < px.pieces(); ++i) {
        auto [ax, bx] = px.affine(i);
        for (std::size_t j = 0; j < py.pieces(); ++j) {
            auto [ay, by] = py.affine(j);
            AffineMap f{MatQ(u.A(0, 0) * bx, u.A(0, 1) * by, u.A(1, 0) * bx, u.A(1, 1) * by), u(VecQ{ax, ay})};
            out.field.cells.push_back({Rect(px.t[i], px.t[i + 1], py.t[j], py.t[j + 1]), f});
        }
    }
    return out;
}

inline PAField cantor_quantize(const AffineMap& u, const Rect& omega, const Rat& delta, int m)
{
    return cantor_quantize_full(u, omega, delta, m).field;
}

} // namespace bdforge
