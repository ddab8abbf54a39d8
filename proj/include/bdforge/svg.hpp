#pragma once

#include "fields.hpp"
#include "measures.hpp"

#include <cstdio>
#include <optional>
#include <string>

namespace bdforge {

struct RenderError : FieldError {
    using FieldError::FieldError;
};

struct RenderOptions {
    std::size_t cap = 50000;
    int coarsen = 0;   // > 0: sample an n x n grid of cell colours instead of drawing every cell
    double width = 800;
    int max_level = 24;
};

enum class GradientFamily { A, B, C, MinusB, Zero, Other };

struct GradientTag {
    GradientFamily family = GradientFamily::Other;
    int k = 0;
};

// Identifies grad = A_k, B_k, C_k or -B_k, which are the only gradients the laminate pipeline produces.
inline GradientTag classify_gradient(const MatQ& A, int max_level = 24)
{
    if (A.is_zero())
        return {GradientFamily::Zero, 0};
    if (A(0, 0) != 0 || A(1, 1) != 0)
        return {GradientFamily::Other, 0};
    // |A(0,1)| = 2^k for every family.
    for (int k = 0; k <= max_level; ++k) {
        Rat t = pow2(k);
        if (A(0, 1) == -t && A(1, 0) == t)
            return {GradientFamily::MinusB, k};
        if (A(0, 1) != t)
            continue;
        if (A(1, 0) == t)
            return {GradientFamily::A, k};
        if (A(1, 0) == -t)
            return {GradientFamily::B, k};
        if (A(1, 0) == 2 * t)
            return {GradientFamily::C, k};
    }
    return {GradientFamily::Other, 0};
}

namespace detail {

inline std::string hsl(double h, double s, double l)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "hsl(%.0f,%.0f%%,%.0f%%)", h, s, l);
    return buf;
}

inline std::string fill_for(const AffineMap& f, int max_level)
{
    GradientTag t = classify_gradient(f.A, max_level);
    double l = 70 - 5 * std::min(t.k, 8);
    switch (t.family) {
    case GradientFamily::A:
        return hsl(210, 70, l);
    case GradientFamily::B:
        return hsl(10, 70, l);
    case GradientFamily::C:
        return hsl(130, 55, l);
    case GradientFamily::MinusB:
        return hsl(280, 50, l);
    case GradientFamily::Zero:
        return "#f4f4f4";
    default:
        break;
    }
    double n = norm(f.A);
    double g = 90 - std::min(60.0, 10 * std::log2(1 + n));
    return hsl(45, 15, g);
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace detail

// One <rect> per cell (y axis pointing up), jump segments stroked by mean |[u]|.
inline std::string render_svg(const PAField& f, const RenderOptions& opt = {})
{
    if (opt.coarsen <= 0 && f.cells.size() > opt.cap)
        throw RenderError("render: " + std::to_string(f.cells.size()) + " cells exceed the render cap " +
                          std::to_string(opt.cap) + " (use --coarsen)");
    RectD d = f.domain.to_double();
    double W = opt.width, H = opt.width * (d.y1 - d.y0) / (d.x1 - d.x0);
    double sx = W / (d.x1 - d.x0), sy = H / (d.y1 - d.y0);
    auto X = [&](double x) { return detail::num((x - d.x0) * sx); };
    auto Y = [&](double y) { return detail::num((d.y1 - y) * sy); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(W) + "\" height=\"" + detail::num(H) +
           "\" viewBox=\"0 0 " + detail::num(W) + " " + detail::num(H) + "\">\n";
    out += "<g stroke=\"none\">\n";
    if (opt.coarsen > 0) {
        Locator loc(f);
        int n = opt.coarsen;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Rat px = f.domain.x0 + f.domain.width() * rat(2 * i + 1, 2 * n);
                Rat py = f.domain.y0 + f.domain.height() * rat(2 * j + 1, 2 * n);
                const PACell& c = f.cells[loc.cell_of({px, py})];
                double x0 = d.x0 + (d.x1 - d.x0) * i / n, x1 = d.x0 + (d.x1 - d.x0) * (i + 1) / n;
                double y0 = d.y0 + (d.y1 - d.y0) * j / n, y1 = d.y0 + (d.y1 - d.y0) * (j + 1) / n;
                out += "<rect x=\"" + X(x0) + "\" y=\"" + Y(y1) + "\" width=\"" + detail::num((x1 - x0) * sx) +
                       "\" height=\"" + detail::num((y1 - y0) * sy) + "\" fill=\"" + detail::fill_for(c.f, opt.max_level) +
                       "\"/>\n";
            }
        out += "</g>\n</svg>\n";
        return out;
    }
    for (const auto& c : f.cells) {
        RectD r = c.r.to_double();
        out += "<rect x=\"" + X(r.x0) + "\" y=\"" + Y(r.y1) + "\" width=\"" + detail::num((r.x1 - r.x0) * sx) +
               "\" height=\"" + detail::num((r.y1 - r.y0) * sy) + "\" fill=\"" + detail::fill_for(c.f, opt.max_level) +
               "\"/>\n";
    }
    out += "</g>\n";

    auto jumps = jump_set(f);
    std::vector<double> mean(jumps.size());
    double top = 0;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        mean[i] = jump_integrals(jumps[i]).first.value / jumps[i].length().get_d();
        top = std::max(top, mean[i]);
    }
    if (!jumps.empty()) {
        out += "<g stroke=\"#202020\" stroke-linecap=\"butt\">\n";
        for (std::size_t i = 0; i < jumps.size(); ++i) {
            const auto& j = jumps[i];
            double c = j.c.get_d(), s0 = j.s0.get_d(), s1 = j.s1.get_d();
            double w = top > 0 ? 0.3 + 2.7 * mean[i] / top : 0.3;
            if (j.axis == 0)
                out += "<line x1=\"" + X(c) + "\" y1=\"" + Y(s0) + "\" x2=\"" + X(c) + "\" y2=\"" + Y(s1);
            else
                out += "<line x1=\"" + X(s0) + "\" y1=\"" + Y(c) + "\" x2=\"" + X(s1) + "\" y2=\"" + Y(c);
            out += "\" stroke-width=\"" + detail::num(w) + "\"/>\n";
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace bdforge
