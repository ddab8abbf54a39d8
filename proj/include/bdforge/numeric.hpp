#pragma once

#include <gmpxx.h>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdforge {

using Rat = mpq_class;

inline Rat rat(long p, long q = 1)
{
    Rat r(p, q);
    r.canonicalize();
    return r;
}

inline Rat pow2(int k)
{
    Rat r(1);
    if (k >= 0)
        mpz_mul_2exp(r.get_num_mpz_t(), r.get_num_mpz_t(), static_cast<unsigned long>(k));
    else
        mpz_mul_2exp(r.get_den_mpz_t(), r.get_den_mpz_t(), static_cast<unsigned long>(-k));
    return r;
}

inline double to_double(const Rat& r) { return r.get_d(); }

// Canonical "p/q" form; zero is "0/1" and integers carry "/1".
inline std::string to_string(const Rat& r)
{
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline Rat parse_rat(const std::string& s)
{
    auto valid_int = [](const std::string& t, bool allow_sign) {
        if (t.empty())
            return false;
        std::size_t i = 0;
        if (allow_sign && (t[0] == '-' || t[0] == '+'))
            i = 1;
        if (i == t.size())
            return false;
        for (; i < t.size(); ++i)
            if (t[i] < '0' || t[i] > '9')
                return false;
        return true;
    };
    auto slash = s.find('/');
    std::string num = slash == std::string::npos ? s : s.substr(0, slash);
    std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
    if (!valid_int(num, true) || !valid_int(den, false))
        throw std::invalid_argument("non-rational literal: \"" + s + "\"");
    if (num[0] == '+')
        num = num.substr(1);
    mpz_class n(num, 10), d(den, 10);
    if (d == 0)
        throw std::invalid_argument("zero denominator: \"" + s + "\"");
    Rat r(n, d);
    r.canonicalize();
    return r;
}

inline Rat floor_rat(const Rat& r)
{
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    return Rat(q);
}

inline Rat abs_rat(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline double sqrt_rat(const Rat& r) { return std::sqrt(r.get_d()); }

template <class T>
struct Vec2 {
    T x{}, y{};

    Vec2() = default;
    Vec2(T a, T b) : x(std::move(a)), y(std::move(b)) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(const T& s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
    bool operator!=(const Vec2& o) const { return !(*this == o); }
    T dot(const Vec2& o) const { return x * o.x + y * o.y; }
    T norm2() const { return x * x + y * y; }
    const T& operator[](int i) const { return i == 0 ? x : y; }
    T& operator[](int i) { return i == 0 ? x : y; }
};

template <class T>
struct Mat2 {
    // Row-major: m[i][j] acts as (M v)_i = sum_j m[i][j] v_j.
    std::array<std::array<T, 2>, 2> m{};

    Mat2() = default;
    Mat2(T a11, T a12, T a21, T a22)
    {
        m[0][0] = std::move(a11);
        m[0][1] = std::move(a12);
        m[1][0] = std::move(a21);
        m[1][1] = std::move(a22);
    }

    static Mat2 zero() { return Mat2(T(0), T(0), T(0), T(0)); }
    static Mat2 outer(const Vec2<T>& a, const Vec2<T>& b) { return Mat2(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y); }

    const T& operator()(int i, int j) const { return m[i][j]; }
    T& operator()(int i, int j) { return m[i][j]; }

    Mat2 operator+(const Mat2& o) const { return Mat2(m[0][0] + o.m[0][0], m[0][1] + o.m[0][1], m[1][0] + o.m[1][0], m[1][1] + o.m[1][1]); }
    Mat2 operator-(const Mat2& o) const { return Mat2(m[0][0] - o.m[0][0], m[0][1] - o.m[0][1], m[1][0] - o.m[1][0], m[1][1] - o.m[1][1]); }
    Mat2 operator-() const { return Mat2(-m[0][0], -m[0][1], -m[1][0], -m[1][1]); }
    Mat2 operator*(const T& s) const { return Mat2(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s); }
    Vec2<T> operator*(const Vec2<T>& v) const { return {m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y}; }
    Mat2 operator*(const Mat2& o) const
    {
        return Mat2(m[0][0] * o.m[0][0] + m[0][1] * o.m[1][0], m[0][0] * o.m[0][1] + m[0][1] * o.m[1][1],
                    m[1][0] * o.m[0][0] + m[1][1] * o.m[1][0], m[1][0] * o.m[0][1] + m[1][1] * o.m[1][1]);
    }
    bool operator==(const Mat2& o) const { return m == o.m; }
    bool operator!=(const Mat2& o) const { return !(*this == o); }

    Mat2 transpose() const { return Mat2(m[0][0], m[1][0], m[0][1], m[1][1]); }
    Mat2 sym() const { return (*this + transpose()) * T(T(1) / T(2)); }
    Mat2 skew() const { return (*this - transpose()) * T(T(1) / T(2)); }
    bool is_skew() const { return m[0][0] == 0 && m[1][1] == 0 && m[0][1] == -m[1][0]; }
    bool is_zero() const { return m[0][0] == 0 && m[0][1] == 0 && m[1][0] == 0 && m[1][1] == 0; }
    T det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
    T frob2() const { return m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]; }
    Vec2<T> col(int j) const { return {m[0][j], m[1][j]}; }
};

using VecQ = Vec2<Rat>;
using MatQ = Mat2<Rat>;
using VecD = Vec2<double>;
using MatD = Mat2<double>;

inline double norm(const VecQ& v) { return sqrt_rat(v.norm2()); }
inline double norm(const MatQ& a) { return sqrt_rat(a.frob2()); }
inline double norm(const VecD& v) { return std::hypot(v.x, v.y); }
inline double norm(const MatD& a) { return std::hypot(std::hypot(a.m[0][0], a.m[0][1]), std::hypot(a.m[1][0], a.m[1][1])); }

inline VecD to_double(const VecQ& v) { return {v.x.get_d(), v.y.get_d()}; }
inline MatD to_double(const MatQ& a) { return MatD(a.m[0][0].get_d(), a.m[0][1].get_d(), a.m[1][0].get_d(), a.m[1][1].get_d()); }

struct NormIntegral {
    double value = 0.0;
    double abs_error_bound = 0.0;

    NormIntegral& operator+=(const NormIntegral& o)
    {
        value += o.value;
        abs_error_bound += o.abs_error_bound;
        return *this;
    }
    NormIntegral operator+(const NormIntegral& o) const
    {
        NormIntegral r = *this;
        r += o;
        return r;
    }
    double lo() const { return value - abs_error_bound; }
    double hi() const { return value + abs_error_bound; }
};

// Accumulates a sum of nonnegative terms with a running roundoff bound.
inline void add_term(NormIntegral& acc, double term, double term_bound)
{
    acc.value += term;
    acc.abs_error_bound += term_bound + 2.0 * std::numeric_limits<double>::epsilon() * std::abs(acc.value);
}

constexpr double kEps = std::numeric_limits<double>::epsilon();

inline NormIntegral exact_norm_value(const Rat& squared, const Rat& factor = Rat(1))
{
    double v = sqrt_rat(squared) * factor.get_d();
    return {v, 4 * kEps * std::abs(v)};
}

namespace detail {

// Integral of sqrt(s^2 + w^2) over [a, b] with 0 <= a <= b and b - a = len given exactly.
inline double half_line_piece(double a, double b, double len, double w)
{
    if (len <= 0)
        return 0.0;
    if (w == 0.0)
        return 0.5 * len * (b + a);
    double ra = std::hypot(a, w), rb = std::hypot(b, w);
    double poly = len * (rb + a * (b + a) / (ra + rb));
    double arg = len * (b + a) / (b * ra + a * rb);
    return 0.5 * (poly + w * w * std::asinh(arg));
}

} // namespace detail

// Closed-form integral of |p + t q| over t in [0, L].
inline NormIntegral seg_norm_integral(const VecD& p, const VecD& q, double L)
{
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(L))
        throw std::invalid_argument("seg_norm_integral: non-finite input");
    if (!(L > 0))
        throw std::invalid_argument("seg_norm_integral: L must be positive");
    double scale = std::abs(p.x) + std::abs(p.y) + L * (std::abs(q.x) + std::abs(q.y));
    double qq = q.norm2();
    double value;
    if (qq == 0.0 || std::sqrt(qq) * L <= 1e-300) {
        value = norm(p) * L;
    } else {
        double qn = std::sqrt(qq);
        double c = p.dot(q) / qq;
        double w = std::abs(p.x * q.y - p.y * q.x) / qq;
        double s0 = c, s1 = c + L;
        double body;
        if (s0 >= 0)
            body = detail::half_line_piece(s0, s1, L, w);
        else if (s1 <= 0)
            body = detail::half_line_piece(-s1, -s0, L, w);
        else
            body = detail::half_line_piece(0.0, s1, s1, w) + detail::half_line_piece(0.0, -s0, -s0, w);
        value = qn * body;
    }
    return {value, 64 * kEps * (std::abs(value) + L * scale)};
}

struct GaussRule {
    std::vector<double> x, w; // nodes and weights on [-1, 1]
};

// Gauss-Legendre nodes by Newton iteration on the three-term recurrence.
inline GaussRule gauss_legendre(int n)
{
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1, p2 = 0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-16)
                break;
        }
        g.x[i] = -z;
        g.x[n - 1 - i] = z;
        g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return g;
}

inline const GaussRule& cached_rule(int n)
{
    static std::mutex mu;
    static std::vector<GaussRule> table;
    std::lock_guard<std::mutex> lock(mu);
    if (table.empty()) {
        table.resize(129);
        for (int k = 1; k <= 128; ++k)
            table[k] = gauss_legendre(k);
    }
    if (n < 1 || n > 128)
        throw std::invalid_argument("gauss rule order out of range");
    return table[n];
}

struct RectD {
    double x0, x1, y0, y1;
};

namespace detail {

template <class F>
std::pair<double, double> tensor_gauss(const F& f, const RectD& r, int n)
{
    const GaussRule& g = cached_rule(n);
    double hx = 0.5 * (r.x1 - r.x0), hy = 0.5 * (r.y1 - r.y0);
    double cx = 0.5 * (r.x1 + r.x0), cy = 0.5 * (r.y1 + r.y0);
    double sum = 0, abs_sum = 0;
    for (int i = 0; i < n; ++i) {
        double x = cx + hx * g.x[i];
        for (int j = 0; j < n; ++j) {
            double v = g.w[i] * g.w[j] * f(x, cy + hy * g.x[j]);
            sum += v;
            abs_sum += std::abs(v);
        }
    }
    return {sum * hx * hy, abs_sum * hx * hy};
}

} // namespace detail

// Tensor Gauss-Legendre with an order-doubling error estimate; the value is the doubled-order sum.
template <class F>
NormIntegral gauss_quad_2d(const F& f, const RectD& r, int order)
{
    if (order < 2 || order > 64)
        throw std::invalid_argument("gauss_quad_2d: order must lie in [2, 64]");
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
        throw std::invalid_argument("gauss_quad_2d: empty rectangle");
    auto [qn, an] = detail::tensor_gauss(f, r, order);
    auto [q2n, a2n] = detail::tensor_gauss(f, r, 2 * order);
    double round = 8 * kEps * (4 * order) * std::max(an, a2n);
    return {q2n, std::abs(q2n - qn) + round};
}

// One-dimensional analogue on [a, b].
template <class F>
NormIntegral gauss_quad_1d(const F& f, double a, double b, int order)
{
    if (order < 2 || order > 64)
        throw std::invalid_argument("gauss_quad_1d: order must lie in [2, 64]");
    auto run = [&](int n) {
        const GaussRule& g = cached_rule(n);
        double h = 0.5 * (b - a), c = 0.5 * (b + a), s = 0, as = 0;
        for (int i = 0; i < n; ++i) {
            double v = g.w[i] * f(c + h * g.x[i]);
            s += v;
            as += std::abs(v);
        }
        return std::pair<double, double>{s * h, as * std::abs(h)};
    };
    auto [qn, an] = run(order);
    auto [q2n, a2n] = run(2 * order);
    return {q2n, std::abs(q2n - qn) + 8 * kEps * (2 * order) * std::max(an, a2n)};
}

} // namespace bdforge
