#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qlattice/arith.hpp"
#include "qlattice/errors.hpp"
#include "qlattice/quadrature.hpp"
#include "qlattice/summation.hpp"

namespace qlattice {

// Smooth bump exp(1/(x^2-1)) on (-1, 1).
inline double eval_w0(double x) {
    if (!(std::abs(x) < 1.0)) return 0.0;
    return std::exp(1.0 / (x * x - 1.0));
}

struct KernelParams {
    double c0;  // integral of w0 over [-1, 1]
};

inline const KernelParams& kernel_params() {
    // Function-local static: initialized once, thread-safe.
    static const KernelParams params = [] {
        auto left = integrate_gk(eval_w0, -1.0, 0.0, 1e-13, 15);
        return KernelParams{2.0 * left.value};
    }();
    return params;
}

// omega(x) = (4/c0) w0(4x - 3): unit mass, supported on (1/2, 1).
inline double eval_omega(double x) {
    if (!(x > 0.5 && x < 1.0)) return 0.0;
    return 4.0 / kernel_params().c0 * eval_w0(4.0 * x - 3.0);
}

namespace detail {

// Integer j-range covering the real interval (lo, hi), padded outward; omega
// vanishes on the boundary so the extra terms contribute exactly zero.
inline std::pair<i64, i64> padded_range(double lo, double hi) {
    i64 a = std::max<i64>(1, static_cast<i64>(std::floor(lo)));
    i64 b = static_cast<i64>(std::ceil(hi));
    return {a, b};
}

}  // namespace detail

// h1(x) = sum over j with xj in (1/2, 1) of omega(xj)/(xj).
inline double eval_h1(double x) {
    if (!(x > 0.0)) throw ValidationError("h kernel: x must be positive");
    if (x >= 2.0) return 0.0;
    auto [a, b] = detail::padded_range(0.5 / x, 1.0 / x);
    KahanSum s;
    for (i64 j = a; j <= b; ++j) {
        double xj = x * static_cast<double>(j);
        s.add(eval_omega(xj) / xj);
    }
    return s.value();
}

// h2(x, y) = sum over j with |y|/(xj) in (1/2, 1) of omega(|y|/(xj))/(xj).
inline double eval_h2(double x, double y) {
    if (!(x > 0.0)) throw ValidationError("h kernel: x must be positive");
    double ay = std::abs(y);
    if (ay * 2.0 <= x) return 0.0;
    auto [a, b] = detail::padded_range(ay / x, 2.0 * ay / x);
    KahanSum s;
    for (i64 j = a; j <= b; ++j) {
        double xj = x * static_cast<double>(j);
        s.add(eval_omega(ay / xj) / xj);
    }
    return s.value();
}

inline double eval_h(double x, double y) { return eval_h1(x) - eval_h2(x, y); }

// Breakpoints of h(x, .) on [lo, hi]: 0 and the summand support edges
// |y| = xj/2, |y| = xj.
inline std::vector<double> h_breakpoints(double x, double lo, double hi) {
    std::vector<double> b{lo, hi};
    if (lo < 0.0 && hi > 0.0) b.push_back(0.0);
    double ymax = std::max(std::abs(lo), std::abs(hi));
    for (i64 j = 1; 0.5 * x * j < ymax; ++j) {
        for (double e : {0.5 * x * j, x * j})
            for (double s : {-e, e})
                if (s > lo && s < hi) b.push_back(s);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

// Integral of y^n h(x, y) over [-X, X]: composite Gauss-Legendre on the
// smooth pieces, orders 24 and 16 compared for the error estimate.
inline QuadResult h_moment(double x, double X, int n) {
    double h1 = eval_h1(x);
    auto pts = refine_breaks(h_breakpoints(x, -X, X), std::max(x, 1e-3) / 32.0);
    auto apply = [&](int order) {
        auto rule = composite_rule(pts, order);
        KahanSum s;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            double y = rule.x[i];
            s.add(rule.w[i] * std::pow(y, n) * (h1 - eval_h2(x, y)));
        }
        return s.value();
    };
    QuadResult out;
    out.value = apply(24);
    out.error = std::abs(out.value - apply(16));
    return out;
}

inline QuadResult h_unit_mass(double x, double X) { return h_moment(x, X, 0); }

namespace detail {

// Q^{-2} sum_{q < max} c_q(n) h(q/Q, n/Q^2), with its absolute-term sum.
struct DeltaSum {
    double value;
    double abs_terms;
};

inline DeltaSum delta_sum(i64 n, double Q) {
    double y = static_cast<double>(n) / (Q * Q);
    double xmax = std::max(1.0, 2.0 * std::abs(y));
    i64 qmax = static_cast<i64>(std::floor(xmax * Q)) + 1;
    KahanSum s;
    double abs_sum = 0.0;
    for (i64 q = 1; q <= qmax; ++q) {
        double x = static_cast<double>(q) / Q;
        double hv = eval_h(x, y);
        if (hv == 0.0) continue;
        double term = static_cast<double>(ramanujan_sum(static_cast<u64>(q), n)) * hv;
        s.add(term);
        abs_sum += std::abs(term);
    }
    return {s.value() / (Q * Q), abs_sum / (Q * Q)};
}

}  // namespace detail

// c_Q = [Q^{-2} sum_{q<Q} phi(q) h1(q/Q)]^{-1}.
inline double compute_cQ(double Q) {
    if (!(Q > 1.0 + 1e-12)) throw ValidationError("compute_cQ: Q too small (need Q > 1)");
    double s = detail::delta_sum(0, Q).value;
    if (!(s > 0.0)) throw ValidationError("compute_cQ: normalizing sum vanished");
    return 1.0 / s;
}

// c_Q Q^{-2} sum_q sum*_a e_q(an) h(q/Q, n/Q^2), the a-sum done by Ramanujan sums.
// Dividing by the n = 0 sum (instead of multiplying by its rounded inverse)
// makes the value at n = 0 exactly 1.
inline double delta_rhs(i64 n, double Q) {
    if (!(Q >= 2.0)) throw ValidationError("delta_rhs: Q must be >= 2");
    double z = detail::delta_sum(0, Q).value;
    if (!(z > 0.0)) throw ValidationError("delta_rhs: normalizing sum vanished at this Q");
    return detail::delta_sum(n, Q).value / z;
}

// Floating-point floor for |delta_rhs(n, Q)|: a multiple of eps times the sum
// of absolute terms.
inline double delta_rounding_floor(i64 n, double Q) {
    auto s = detail::delta_sum(n, Q);
    auto z = detail::delta_sum(0, Q);
    return 64.0 * 2.220446049250313e-16 * s.abs_terms / z.value;
}

}  // namespace qlattice
