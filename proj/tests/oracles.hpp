#pragma once

// Reference computations used only by the tests. Each one is written
// independently of the library route it checks: plain loops, closed forms,
// classical series.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

namespace oracle {

using i64 = std::int64_t;

// F(z) = 1/2 z^T A z over the integers, row-major A.
inline i64 form_value(const std::vector<i64>& A, const std::vector<i64>& z) {
    const int d = static_cast<int>(z.size());
    i64 s = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += A[i * d + j] * z[i] * z[j];
    return s / 2;
}

// Calls f(z) for every z in {0..q-1}^d.
template <class F>
void for_each_residue(int d, i64 q, F&& f) {
    std::vector<i64> z(d, 0);
    for (;;) {
        f(z);
        int i = d - 1;
        while (i >= 0 && ++z[i] == q) z[i--] = 0;
        if (i < 0) return;
    }
}

inline i64 mod(i64 a, i64 m) { return ((a % m) + m) % m; }

// #{z mod q : F(z) = t mod q}
inline i64 count_mod(const std::vector<i64>& A, int d, i64 q, i64 t) {
    i64 n = 0;
    for_each_residue(d, q, [&](const std::vector<i64>& z) {
        if (mod(form_value(A, z) - t, q) == 0) ++n;
    });
    return n;
}

// sum over units a and all b mod q of e((a(F(b) - t) + c.b)/q), term by term.
inline std::complex<double> expsum(const std::vector<i64>& A, int d, i64 q, const std::vector<i64>& c, i64 t) {
    std::complex<double> s = 0.0;
    for (i64 a = 1; a <= q; ++a) {
        if (std::gcd(a, q) != 1) continue;
        for_each_residue(d, q, [&](const std::vector<i64>& b) {
            i64 e = a * (form_value(A, b) - t);
            for (int i = 0; i < d; ++i) e += c[i] * b[i];
            const double th = 2.0 * std::numbers::pi * static_cast<double>(mod(e, q)) / static_cast<double>(q);
            s += std::complex<double>(std::cos(th), std::sin(th));
        });
    }
    if (q == 1) s = 1.0;
    return s;
}

// Legendre symbol by Euler's criterion.
inline int legendre_euler(i64 a, i64 p) {
    a = mod(a, p);
    if (a == 0) return 0;
    i64 r = 1, b = a, e = (p - 1) / 2;
    while (e) {
        if (e & 1) r = r * b % p;
        b = b * b % p;
        e >>= 1;
    }
    return r == 1 ? 1 : -1;
}

// Jacobi symbol as the product of Legendre symbols over the factorization of n.
inline int jacobi_by_factoring(i64 a, i64 n) {
    int r = 1;
    for (i64 p = 3; n > 1; p += 2) {
        while (n % p == 0) {
            r *= legendre_euler(a, p);
            n /= p;
        }
    }
    return r;
}

inline double zeta(int s) {
    // direct sum plus the Euler-Maclaurin tail
    const int N = 100000;
    double v = 0.0;
    for (int n = N; n >= 1; --n) v += std::pow(n, -s);
    return v + std::pow(N, 1 - s) / (s - 1) - 0.5 * std::pow(N, -s);
}

// Gaussian weight exp(-|z|^2) on the level sets of the split forms.
inline double split4_gaussian(double t) { return std::numbers::pi * std::numbers::pi * std::exp(-2.0 * std::abs(t)); }

inline double split6_gaussian(double t) {
    const double a = 2.0 * std::abs(t);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return a == 0.0 ? 2.0 * pi2 : 2.0 * pi2 * a * std::cyl_bessel_k(1.0, a);
}

// F = |z|^2 on R^4: the level t is the sphere rho = sqrt(t), |Az| = 2 rho, so the
// integral is (area of S^3 = 2 pi^2) rho^3 e^{-t} / (2 rho) = pi^2 t e^{-t}.
inline double sum_squares4_gaussian(double t) {
    if (t <= 0) return 0.0;
    return std::numbers::pi * std::numbers::pi * t * std::exp(-t);
}

}  // namespace oracle
