#pragma once

#include "measures.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdforge {

// Disjoint balls B_{r_k}(x_k) in B_1(0), u = sum_k d_k A (x - x_k) on B_k, with
// r_k = 2^-k, d_k = 2^{nk}/k^2 and A the rotation generator a_12 = -a_21 = 1.
struct BallsSpec {
    int n = 2;
    int K = 20;

    Rat r(int k) const { return Rat(1) / pow2(k); }
    Rat d(int k) const { return pow2(n * k) / (Rat(k) * k); }
};

struct BallsRow {
    int k = 0;
    Rat r, d;
    double hausdorff = 0;  // partial sum of the sphere areas
    double grad_l1 = 0;    // partial sum of int |grad u|
    double grad_lq = 0;    // partial sum of int |grad u|^q
    double lq_term = 0;
    double lq_ratio = 0;   // lq_term(k) / lq_term(k-1), 0 for k = 1
    double sup = 0;        // max_{j <= k} d_j r_j
    double jump = 0;       // partial sum of int_{dB_j} |[u]|
    double du = 0;         // grad_l1 + jump
};

struct BallsReport {
    BallsSpec spec;
    double q = 1;
    double ball_volume = 0, sphere_area = 0, mean_planar = 0;
    std::vector<BallsRow> rows;
    double basel_bound = 0;        // sqrt2 * omega_n * pi^2/6, the K -> infinity limit of grad_l1
    double du_increment_const = 0; // |Du| increments are exactly this constant over k^2
    bool sup_unbounded = false;    // d_k r_k keeps growing, contrary to the L^infty claim

    static std::string csv_header() { return "k,r_k,d_k,hausdorff,grad_l1,grad_lq,lq_term,lq_ratio,sup,jump,du"; }
    std::string csv() const;
};

// Lebesgue measure of the unit ball in R^n.
inline double unit_ball_volume(int n) { return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1); }

// E|P y| for y uniform on S^{n-1} and P the projection onto the first two coordinates;
// |P y|^2 is Beta(1, (n-2)/2) distributed.
inline double mean_planar_projection(int n)
{
    if (n == 2)
        return 1;
    double b = (n - 2) / 2.0;
    return std::tgamma(1.5) * std::tgamma(1 + b) / std::tgamma(1.5 + b);
}

inline BallsReport balls_partial(const BallsSpec& spec, double q)
{
    if (spec.n < 2 || spec.K < 1 || !(q >= 1))
        throw std::invalid_argument("balls_partial: need n >= 2, K >= 1, q >= 1");
    const int n = spec.n;
    BallsReport rep;
    rep.spec = spec;
    rep.q = q;
    rep.ball_volume = unit_ball_volume(n);
    rep.sphere_area = n * rep.ball_volume;
    rep.mean_planar = mean_planar_projection(n);
    rep.basel_bound = std::sqrt(2.0) * rep.ball_volume * std::numbers::pi * std::numbers::pi / 6;
    rep.du_increment_const = std::sqrt(2.0) * rep.ball_volume + rep.sphere_area * rep.mean_planar;

    BallsRow acc;
    double prev_term = 0;
    for (int k = 1; k <= spec.K; ++k) {
        BallsRow row = acc;
        row.k = k;
        row.r = spec.r(k);
        row.d = spec.d(k);
        double rn = std::ldexp(1.0, -n * k);      // r_k^n
        double dr = std::ldexp(1.0, (n - 1) * k) / (double(k) * k); // d_k r_k
        row.hausdorff += rep.sphere_area * std::ldexp(1.0, -(n - 1) * k);
        // |grad u| = sqrt2 d_k and d_k r_k^n = 1/k^2.
        row.grad_l1 += std::sqrt(2.0) * rep.ball_volume / (double(k) * k);
        // (sqrt2 d_k)^q omega_n r_k^n, in logs to stay finite for large k.
        double log_term = q * (0.5 * std::log(2.0) + n * k * std::log(2.0) - 2 * std::log(double(k))) +
                          std::log(rep.ball_volume) - n * k * std::log(2.0);
        row.lq_term = std::exp(log_term);
        row.grad_lq += row.lq_term;
        row.lq_ratio = k == 1 ? 0 : row.lq_term / prev_term;
        prev_term = row.lq_term;
        row.sup = std::max(row.sup, dr);
        // On dB_k, |[u]| = d_k |P (x - x_k)|.
        row.jump += (row.d.get_d() * rn) * rep.sphere_area * rep.mean_planar;
        row.du = row.grad_l1 + row.jump;
        rep.rows.push_back(row);
        acc = row;
    }
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].sup > rep.rows[i - 1].sup)
            rep.sup_unbounded = true;
    return rep;
}

inline std::string BallsReport::csv() const
{
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) {
        out += std::to_string(r.k) + "," + to_string(r.r) + "," + to_string(r.d);
        for (double v : {r.hausdorff, r.grad_l1, r.grad_lq, r.lq_term})
            out += "," + fmt17(v);
        out += "," + (r.k == 1 ? std::string() : fmt17(r.lq_ratio));
        for (double v : {r.sup, r.jump, r.du})
            out += "," + fmt17(v);
        out += "\n";
    }
    return out;
}

} // namespace bdforge
