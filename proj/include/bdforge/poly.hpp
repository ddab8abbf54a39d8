#pragma once

#include "numeric.hpp"

#include <algorithm>
#include <vector>

namespace bdforge {

// Bivariate polynomial sum c_ij x^i y^j with exact coefficients.
struct Poly2 {
    int dx = 0, dy = 0;
    std::vector<Rat> c{Rat(0)};

    Poly2() = default;
    Poly2(int dx_, int dy_) : dx(dx_), dy(dy_), c(static_cast<std::size_t>((dx_ + 1) * (dy_ + 1)), Rat(0)) {}

    static Poly2 constant(const Rat& v)
    {
        Poly2 p;
        p.c[0] = v;
        return p;
    }
    // a0 + ax x + ay y
    static Poly2 affine(const Rat& a0, const Rat& ax, const Rat& ay)
    {
        Poly2 p(1, 1);
        p.at(0, 0) = a0;
        p.at(1, 0) = ax;
        p.at(0, 1) = ay;
        p.trim();
        return p;
    }
    // (a0 + a1 x)(b0 + b1 y)
    static Poly2 separable(const Rat& a0, const Rat& a1, const Rat& b0, const Rat& b1)
    {
        Poly2 p(1, 1);
        p.at(0, 0) = a0 * b0;
        p.at(1, 0) = a1 * b0;
        p.at(0, 1) = a0 * b1;
        p.at(1, 1) = a1 * b1;
        p.trim();
        return p;
    }

    Rat& at(int i, int j) { return c[static_cast<std::size_t>(i * (dy + 1) + j)]; }
    const Rat& at(int i, int j) const { return c[static_cast<std::size_t>(i * (dy + 1) + j)]; }
    Rat get(int i, int j) const { return (i <= dx && j <= dy) ? at(i, j) : Rat(0); }

    bool is_zero() const
    {
        for (const auto& v : c)
            if (v != 0)
                return false;
        return true;
    }
    int degree() const { return std::max(dx, dy); }

    void trim()
    {
        auto row_zero = [&](int i) {
            for (int j = 0; j <= dy; ++j)
                if (at(i, j) != 0)
                    return false;
            return true;
        };
        auto col_zero = [&](int j) {
            for (int i = 0; i <= dx; ++i)
                if (at(i, j) != 0)
                    return false;
            return true;
        };
        int ndx = dx, ndy = dy;
        while (ndx > 0 && row_zero(ndx))
            --ndx;
        while (ndy > 0 && col_zero(ndy))
            --ndy;
        if (ndx == dx && ndy == dy)
            return;
        Poly2 r(ndx, ndy);
        for (int i = 0; i <= ndx; ++i)
            for (int j = 0; j <= ndy; ++j)
                r.at(i, j) = at(i, j);
        *this = std::move(r);
    }

    bool operator==(const Poly2& o) const
    {
        int mx = std::max(dx, o.dx), my = std::max(dy, o.dy);
        for (int i = 0; i <= mx; ++i)
            for (int j = 0; j <= my; ++j)
                if (get(i, j) != o.get(i, j))
                    return false;
        return true;
    }
    bool operator!=(const Poly2& o) const { return !(*this == o); }

    Poly2 operator+(const Poly2& o) const
    {
        Poly2 r(std::max(dx, o.dx), std::max(dy, o.dy));
        for (int i = 0; i <= dx; ++i)
            for (int j = 0; j <= dy; ++j)
                r.at(i, j) += at(i, j);
        for (int i = 0; i <= o.dx; ++i)
            for (int j = 0; j <= o.dy; ++j)
                r.at(i, j) += o.at(i, j);
        r.trim();
        return r;
    }
    Poly2 operator-() const
    {
        Poly2 r = *this;
        for (auto& v : r.c)
            v = -v;
        return r;
    }
    Poly2 operator-(const Poly2& o) const { return *this + (-o); }
    Poly2 operator*(const Rat& s) const
    {
        if (s == 0)
            return Poly2();
        Poly2 r = *this;
        for (auto& v : r.c)
            v *= s;
        return r;
    }
    Poly2 operator*(const Poly2& o) const
    {
        Poly2 r(dx + o.dx, dy + o.dy);
        for (int i = 0; i <= dx; ++i)
            for (int j = 0; j <= dy; ++j) {
                const Rat& a = at(i, j);
                if (a == 0)
                    continue;
                for (int k = 0; k <= o.dx; ++k)
                    for (int l = 0; l <= o.dy; ++l) {
                        const Rat& b = o.at(k, l);
                        if (b != 0)
                            r.at(i + k, j + l) += a * b;
                    }
            }
        r.trim();
        return r;
    }

    Poly2 deriv_x() const
    {
        if (dx == 0)
            return Poly2();
        Poly2 r(dx - 1, dy);
        for (int i = 1; i <= dx; ++i)
            for (int j = 0; j <= dy; ++j)
                r.at(i - 1, j) = at(i, j) * i;
        r.trim();
        return r;
    }
    Poly2 deriv_y() const
    {
        if (dy == 0)
            return Poly2();
        Poly2 r(dx, dy - 1);
        for (int i = 0; i <= dx; ++i)
            for (int j = 1; j <= dy; ++j)
                r.at(i, j - 1) = at(i, j) * j;
        r.trim();
        return r;
    }

    Rat eval(const Rat& x, const Rat& y) const
    {
        Rat acc(0);
        for (int i = dx; i >= 0; --i) {
            Rat row(0);
            for (int j = dy; j >= 0; --j)
                row = row * y + at(i, j);
            acc = acc * x + row;
        }
        return acc;
    }

    // Univariate coefficients in y of p(x0, y).
    std::vector<Rat> restrict_x(const Rat& x0) const
    {
        std::vector<Rat> r(static_cast<std::size_t>(dy + 1), Rat(0));
        for (int j = 0; j <= dy; ++j) {
            Rat acc(0);
            for (int i = dx; i >= 0; --i)
                acc = acc * x0 + at(i, j);
            r[j] = acc;
        }
        return r;
    }
    // Univariate coefficients in x of p(x, y0).
    std::vector<Rat> restrict_y(const Rat& y0) const
    {
        std::vector<Rat> r(static_cast<std::size_t>(dx + 1), Rat(0));
        for (int i = 0; i <= dx; ++i) {
            Rat acc(0);
            for (int j = dy; j >= 0; --j)
                acc = acc * y0 + at(i, j);
            r[i] = acc;
        }
        return r;
    }

    // q(s, t) = p(x0 + hx s, y0 + hy t), exact.
    Poly2 reparam(const Rat& x0, const Rat& hx, const Rat& y0, const Rat& hy) const
    {
        auto binom_table = [](int n) {
            std::vector<std::vector<Rat>> b(n + 1, std::vector<Rat>(n + 1, Rat(0)));
            for (int i = 0; i <= n; ++i) {
                b[i][0] = 1;
                for (int k = 1; k <= i; ++k)
                    b[i][k] = b[i - 1][k - 1] + (k <= i - 1 ? b[i - 1][k] : Rat(0));
            }
            return b;
        };
        auto powers = [](const Rat& v, int n) {
            std::vector<Rat> p(n + 1);
            p[0] = 1;
            for (int i = 1; i <= n; ++i)
                p[i] = p[i - 1] * v;
            return p;
        };
        int n = std::max(dx, dy);
        auto B = binom_table(n);
        auto px0 = powers(x0, dx), phx = powers(hx, dx), py0 = powers(y0, dy), phy = powers(hy, dy);
        Poly2 mid(dx, dy);
        for (int i = 0; i <= dx; ++i)
            for (int j = 0; j <= dy; ++j) {
                const Rat& a = at(i, j);
                if (a == 0)
                    continue;
                for (int k = 0; k <= i; ++k)
                    mid.at(k, j) += a * B[i][k] * px0[i - k] * phx[k];
            }
        Poly2 r(dx, dy);
        for (int i = 0; i <= dx; ++i)
            for (int j = 0; j <= dy; ++j) {
                const Rat& a = mid.at(i, j);
                if (a == 0)
                    continue;
                for (int l = 0; l <= j; ++l)
                    r.at(i, l) += a * B[j][l] * py0[j - l] * phy[l];
            }
        r.trim();
        return r;
    }
};

// Double-precision polynomial, typically in cell-local coordinates on [0,1]^2.
struct PolyD {
    int dx = 0, dy = 0;
    std::vector<double> c{0.0};

    explicit PolyD(const Poly2& p) : dx(p.dx), dy(p.dy), c(p.c.size())
    {
        for (std::size_t i = 0; i < p.c.size(); ++i)
            c[i] = p.c[i].get_d();
    }
    PolyD() = default;

    double eval(double x, double y) const
    {
        double acc = 0;
        for (int i = dx; i >= 0; --i) {
            double row = 0;
            for (int j = dy; j >= 0; --j)
                row = row * y + c[static_cast<std::size_t>(i * (dy + 1) + j)];
            acc = acc * x + row;
        }
        return acc;
    }
    double abs_coeff_sum() const
    {
        double s = 0;
        for (double v : c)
            s += std::abs(v);
        return s;
    }
};

} // namespace bdforge
