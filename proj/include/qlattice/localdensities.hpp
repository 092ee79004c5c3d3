#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "qlattice/arith.hpp"
#include "qlattice/errors.hpp"
#include "qlattice/expsums.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/padic.hpp"
#include "qlattice/parallel.hpp"
#include "qlattice/quadric_integrals.hpp"
#include "qlattice/summation.hpp"

namespace qlattice {

struct PrimeFactor {
    u64 p = 0;
    double value = 1.0;
    int lmax = 0;
    bool converged = true;
};

struct SeriesResult {
    double value = 1.0;
    std::map<u64, int> lmax_used;
    u64 pmax = 0;
    double tail_bound = 0.0;
    bool converged = true;
    bool divergent_risk = false;
    std::vector<PrimeFactor> factors;  // ascending p
};

namespace detail {

// p^{-kd} S_{p^k}(c; A, t): literal sum while it is cheap, Jordan blocks after.
inline std::complex<double> normalized_prime_power(u64 p, int k, const std::vector<i64>& c, const QuadraticForm& f,
                                                   i64 t) {
    if (k == 0) return 1.0;
    const u64 q = checked_pow(p, k);
    const double qd = std::pow(static_cast<double>(q), f.dim());
    if (qd * static_cast<double>(euler_phi(q)) <= 4e6) return S_q_naive(q, c, f, t).value / qd;
    return prime_power_sum_normalized(cached_split(f, p), k, c, t);
}

inline bool pow_fits(u64 p, int k) {
    long double v = std::pow(static_cast<long double>(p), k);
    return v < std::ldexp(1.0L, 62);
}

}  // namespace detail

// sigma_p^c = sum_l p^{-dl} S_{p^l}(c). The tail is geometric with ratio
// r = p^{-(d/2-1)}; the series stops once two consecutive terms are below
// tol r / (1 - r).
inline SeriesResult sigma_p(u64 p, const std::vector<i64>& c, const QuadraticForm& f, i64 t, double tol) {
    if (!is_prime(p)) throw ValidationError("sigma_p: p must be prime");
    if (!(tol > 0)) throw ValidationError("sigma_p: tol must be positive");
    if (static_cast<int>(c.size()) != f.dim()) throw ValidationError("sigma_p: c has wrong dimension");
    const double r = std::pow(static_cast<double>(p), -(0.5 * f.dim() - 1.0));
    const double thresh = tol * r / (1.0 - r);
    SeriesResult out;
    out.pmax = p;
    ComplexKahanSum s;
    s.add(1.0);
    int small = 0, l = 0;
    out.converged = false;
    double last = 1.0;
    while (detail::pow_fits(p, l + 1)) {
        ++l;
        std::complex<double> term;
        try {
            term = detail::normalized_prime_power(p, l, c, f, t);
        } catch (const BudgetExceeded&) {
            --l;
            break;
        }
        s.add(term);
        last = std::abs(term);
        small = last <= thresh ? small + 1 : 0;
        if (small >= 2) {
            out.converged = true;
            break;
        }
    }
    out.value = s.value().real();
    out.lmax_used[p] = l;
    out.tail_bound = last * r / (1.0 - r);
    out.factors.push_back({p, out.value, l, out.converged});
    return out;
}

namespace detail {

// Euler product over p <= pmax of g(p) sigma_p^c, with a tail estimate from a
// fit |factor - 1| ~ C p^{-alpha} over the upper half of the primes.
template <class G>
SeriesResult euler_product(const QuadraticForm& f, const std::vector<i64>& c, i64 t, double tol, u64 pmax, G&& g,
                           int workers) {
    auto primes = primes_upto(pmax);
    SeriesResult out;
    out.pmax = pmax;
    if (primes.empty()) {
        out.tail_bound = std::numeric_limits<double>::infinity();
        out.converged = false;
        return out;
    }
    const double ptol = tol / static_cast<double>(primes.size());
    std::vector<PrimeFactor> fac(primes.size());
    parallel_for(primes.size(), workers, [&](std::size_t i) {
        auto r = sigma_p(primes[i], c, f, t, ptol);
        fac[i] = {primes[i], g(primes[i]) * r.value, r.lmax_used[primes[i]], r.converged};
    });
    double v = 1.0;
    bool all_conv = true;
    for (const auto& x : fac) {
        v *= x.value;
        out.lmax_used[x.p] = x.lmax;
        all_conv = all_conv && x.converged;
    }
    out.value = v;
    out.factors = fac;

    // log |f_p - 1| = log C - alpha log p by least squares
    std::vector<double> X, Y;
    for (std::size_t i = fac.size() / 2; i < fac.size(); ++i) {
        double dev = std::abs(fac[i].value - 1.0);
        if (dev > 0) {
            X.push_back(std::log(static_cast<double>(fac[i].p)));
            Y.push_back(std::log(dev));
        }
    }
    double tail = std::numeric_limits<double>::infinity();
    if (X.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < X.size(); ++i) mx += X[i], my += Y[i];
        mx /= X.size();
        my /= X.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < X.size(); ++i) sxx += (X[i] - mx) * (X[i] - mx), sxy += (X[i] - mx) * (Y[i] - my);
        double alpha = -sxy / sxx;
        double C = std::exp(my + alpha * mx);
        if (alpha > 1.0) {
            double P = static_cast<double>(pmax);
            tail = C * std::pow(P, 1.0 - alpha) / ((alpha - 1.0) * std::log(P)) * std::abs(v);
        }
    } else if (fac.size() >= 2 && X.empty()) {
        tail = 0.0;  // every factor in the upper half is exactly 1
    }
    out.tail_bound = tail;
    out.converged = all_conv && tail <= tol;
    return out;
}

}  // namespace detail

inline u64 default_pmax(int d) { return d >= 8 ? 97 : 199; }

// sigma(A, t) = prod_p sigma_p(A, t), truncated at pmax.
inline SeriesResult sigma(const QuadraticForm& f, i64 t, double tol, u64 pmax = 0, int workers = 1) {
    if (!(tol > 0)) throw ValidationError("sigma: tol must be positive");
    if (pmax == 0) pmax = default_pmax(f.dim());
    std::vector<i64> zero(f.dim(), 0);
    auto out = detail::euler_product(f, zero, t, tol, pmax, [](u64) { return 1.0; }, workers);
    if (f.dim() <= 4) {
        out.divergent_risk = true;
        out.converged = false;
    }
    return out;
}

// sigma*_c(A) = prod_p (1 - 1/p) sigma_p^c(A, 0).
inline SeriesResult sigma_star(const QuadraticForm& f, const std::vector<i64>& c, double tol, u64 pmax = 0,
                               int workers = 1) {
    if (!(tol > 0)) throw ValidationError("sigma_star: tol must be positive");
    if (static_cast<int>(c.size()) != f.dim()) throw ValidationError("sigma_star: c has wrong dimension");
    if (pmax == 0) pmax = default_pmax(f.dim());
    return detail::euler_product(f, c, 0, tol, pmax, [](u64 p) { return 1.0 - 1.0 / static_cast<double>(p); },
                                 workers);
}

// ---------------------------------------------------------------------------
// Counting solutions of F(z) = t mod p^k

// Odometer over the first d-1 coordinates; along the last coordinate F moves
// by g + a_dd/2 (2 z_d + 1), g = sum_{j<d} A_dj z_j.
inline BigInt count_Npk(u64 p, int k, const QuadraticForm& f, i64 t) {
    if (!is_prime(p)) throw ValidationError("count_Npk: p must be prime");
    if (k < 1) throw ValidationError("count_Npk: k must be >= 1");
    const int d = f.dim();
    if (std::pow(static_cast<double>(p), k * d) > 1e9) throw BudgetExceeded("budget exceeded: p^{kd} > 1e9");
    const i64 q = static_cast<i64>(checked_pow(p, k));
    std::vector<i64> A(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A[i * d + j] = mod_floor(static_cast<i64>(f.a(i, j) % q), q);
    std::vector<i64> half(d);
    for (int i = 0; i < d; ++i) half[i] = mod_floor(static_cast<i64>((f.a(i, i) / 2) % q), q);
    const i64 add = half[d - 1];
    const i64 tq = mod_floor(t, q);
    std::vector<i64> z(d - 1, 0);
    u64 count = 0;
    for (;;) {
        // F on the prefix, with z_d = 0
        i64 F = 0, g = 0;
        for (int i = 0; i < d - 1; ++i) {
            if (z[i] == 0) continue;
            F = (F + half[i] * z[i] % q * z[i]) % q;
            for (int j = i + 1; j < d - 1; ++j) F = (F + A[i * d + j] * z[i] % q * z[j]) % q;
            g = (g + A[(d - 1) * d + i] * z[i]) % q;
        }
        for (i64 zd = 0; zd < q; ++zd) {
            if (F == tq) ++count;
            F = (F + g + add * ((2 * zd + 1) % q)) % q;
        }
        int i = 0;
        while (i < d - 1 && ++z[i] == q) z[i++] = 0;
        if (i == d - 1) break;
    }
    return BigInt(count);
}

// N_p(k) / p^{(d-1)k}
inline double sigma_p_from_counts(u64 p, const QuadraticForm& f, i64 t, int kmax) {
    BigInt n = count_Npk(p, kmax, f, t);
    return static_cast<double>(n) / std::pow(static_cast<double>(p), (f.dim() - 1) * kmax);
}

// Closed forms for the split form F_d, d = 2s.
inline BigInt calN_closed(u64 p, int d) {
    if (!is_prime(p)) throw ValidationError("calN_closed: p must be prime");
    if (d < 2 || d % 2) throw ValidationError("closed form only for F_d with d even");
    const int s = d / 2;
    BigInt P = p;
    return boost::multiprecision::pow(P, d - 1) + boost::multiprecision::pow(P, s) -
           boost::multiprecision::pow(P, s - 1);
}

// sigma_p(F_{2s}) = (calN_p - 1) p^{1-d} / (1 - p^{2-d}) = (1 - p^{-s}) / (1 - p^{1-s}).
inline Rational sigma_p_closed(u64 p, int d) {
    if (!is_prime(p)) throw ValidationError("sigma_p_closed: p must be prime");
    if (d < 2 || d % 2) throw ValidationError("closed form only for F_d with d even");
    if (d == 2) throw ValidationError("sigma_p_closed: the local density of F_2 at t = 0 diverges");
    const int s = d / 2;
    Rational ps = boost::multiprecision::pow(BigInt(p), s);
    return (Rational(1) - 1 / ps) / (Rational(1) - Rational(p) / ps);
}

// ---------------------------------------------------------------------------
// d = 4 constants

// 1 iff c.A^{-1}c = 0 and det A is a square.
inline int eta(const std::vector<i64>& c, const QuadraticForm& f) {
    const int d = f.dim();
    if (static_cast<int>(c.size()) != d) throw ValidationError("eta: c has wrong dimension");
    Rational s = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (c[i] && c[j]) s += f.inv(i, j) * c[i] * c[j];
    if (s != 0) return 0;
    return (f.det() >= 0 && is_square(f.det())) ? 1 : 0;
}

inline int jacobi(i64 a, i64 n) {
    if (n <= 0 || n % 2 == 0) throw ValidationError("jacobi: n must be odd and positive");
    a = mod_floor(a, n);
    int res = 1;
    while (a != 0) {
        while (a % 2 == 0) {
            a /= 2;
            i64 r = n % 8;
            if (r == 3 || r == 5) res = -res;
        }
        std::swap(a, n);
        if (a % 4 == 3 && n % 4 == 3) res = -res;
        a %= n;
    }
    return n == 1 ? res : 0;
}

// Kronecker symbol (a/n) for n >= 1: Jacobi on the odd part, and
// (a/2) = 0 for even a, +1 for a = +-1 mod 8, -1 for a = +-3 mod 8.
inline int kronecker(i64 a, i64 n) {
    if (n <= 0) throw ValidationError("kronecker: n must be positive");
    int res = 1;
    while (n % 2 == 0) {
        if (a % 2 == 0) return 0;
        i64 r = mod_floor(a, 8);
        if (r == 3 || r == 5) res = -res;
        n /= 2;
    }
    return res * jacobi(a, n);
}

struct LSeriesResult {
    double value = 0.0;
    double err_estimate = 0.0;
    u64 terms = 0;
};

// L(1, chi) for chi(n) = (Delta/n), a character of period 4|Delta|. Partial
// sums oscillate with period P around the limit; averaging them over one
// period, twice, kills the leading oscillation. Estimates at N and 2N are
// compared.
inline LSeriesResult dirichlet_L1(i64 Delta, double tol, u64 max_terms = 10000000) {
    if (Delta == 0) throw ValidationError("dirichlet_L1: Delta must be nonzero");
    if (Delta > 0 && is_square(BigInt(Delta))) throw ValidationError("dirichlet_L1: Delta is a perfect square");
    if (!(tol > 0)) throw ValidationError("dirichlet_L1: tol must be positive");
    const u64 P = 4 * static_cast<u64>(std::abs(Delta));
    if (P > max_terms) throw BudgetExceeded("budget exceeded: character period exceeds the term cap");
    std::vector<int> chi(P);
    for (u64 n = 1; n <= P; ++n) chi[n % P] = kronecker(Delta, static_cast<i64>(n));

    // Twice period-averaged partial sums starting at N; needs terms up to N + 2P.
    auto averaged = [&](u64 N) {
        std::vector<double> S;
        S.reserve(2 * P);
        KahanSum s;
        for (u64 n = 1; n < N + 2 * P - 1; ++n) {
            int c = chi[n % P];
            if (c) s.add(c / static_cast<double>(n));
            if (n >= N) S.push_back(s.value());
        }
        std::vector<double> A1(P);
        KahanSum w;
        for (u64 j = 0; j < P; ++j) w.add(S[j]);
        for (u64 k = 0; k < P; ++k) {
            A1[k] = w.value() / static_cast<double>(P);
            w.add(S[k + P] - S[k]);
        }
        KahanSum a2;
        for (double v : A1) a2.add(v);
        return a2.value() / static_cast<double>(P);
    };
    u64 N = std::max<u64>(4 * P, 64);
    double prev = averaged(N);
    for (;;) {
        const u64 N2 = 2 * N;
        if (N2 + 2 * P > max_terms) throw NonConvergence("dirichlet_L1: no convergence within the term cap", prev);
        double cur = averaged(N2);
        if (std::abs(cur - prev) < tol) return {cur, std::abs(cur - prev), N2 + 2 * P};
        prev = cur;
        N = N2;
    }
}

struct Sigma1Result {
    double value = 0.0;
    double sigma_inf = 0.0;
    double sigma_inf_err = 0.0;
    double L1 = 0.0;
    double L1_err = 0.0;
    SeriesResult euler;  // prod_p (1 - chi(p)/p) sigma_p(A, 0)
};

// sigma_1 = sigma_inf(w) L(1, chi) prod_p (1 - chi(p)/p) sigma_p(A, 0), chi = (det A / .).
inline Sigma1Result sigma1_nonsquare(const Weight& w, const QuadraticForm& f, double tol, u64 pmax = 0,
                                     int workers = 1) {
    if (f.dim() != 4) throw ValidationError("sigma1_nonsquare: needs d = 4");
    if (f.det() >= 0 && is_square(f.det())) throw ValidationError("sigma1_nonsquare: det A is a square");
    if (boost::multiprecision::abs(f.det()) > BigInt(1) << 40)
        throw ValidationError("sigma1_nonsquare: det A too large");
    const i64 Delta = static_cast<i64>(f.det());
    if (pmax == 0) pmax = default_pmax(4);
    Sigma1Result out;
    auto si = sigma_infinity(w, f, 0.0, IntegralMethod::automatic, tol);
    out.sigma_inf = si.value;
    out.sigma_inf_err = si.err_estimate;
    auto L = dirichlet_L1(Delta, tol);
    out.L1 = L.value;
    out.L1_err = L.err_estimate;
    std::vector<i64> zero(4, 0);
    out.euler = detail::euler_product(
        f, zero, 0, tol, pmax,
        [Delta](u64 p) { return 1.0 - kronecker(Delta, static_cast<i64>(p)) / static_cast<double>(p); }, workers);
    out.value = out.sigma_inf * out.L1 * out.euler.value;
    return out;
}

}  // namespace qlattice
