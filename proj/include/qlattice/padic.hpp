#pragma once

// Exact evaluation of S_{p^k}(c; A, t) through a Jordan splitting of F over
// the p-adic integers. Every block contributes a quadratic Gauss sum whose
// value depends only on the square class of the unit a, plus a phase
// e_q(-a^{-1} T) from completing the square against the linear term.

#include <complex>
#include <numbers>
#include <vector>

#include "qlattice/arith.hpp"
#include "qlattice/errors.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/summation.hpp"

namespace qlattice {

struct JordanBlock {
    int size = 1;  // 1, or 2 for p = 2 hyperbolic-type blocks
    int e = 0;     // the block is p^e * Qb(y)
    // size 1: Qb(y) = u y^2 with u a p-adic unit.
    // size 2: Qb(y) = alpha y1^2 + beta y1 y2 + gamma y2^2 with beta odd.
    Rational u, alpha, beta, gamma;
    std::vector<int> idx;
};

struct PadicSplitting {
    u64 p = 0;
    int d = 0;
    std::vector<JordanBlock> blocks;
    std::vector<Rational> U;  // b = U y, row-major d x d
};

inline PadicSplitting padic_split(const QuadraticForm& f, u64 p) {
    const int d = f.dim();
    PadicSplitting sp;
    sp.p = p;
    sp.d = d;
    std::vector<Rational> S(d * d), U(d * d, Rational(0));
    for (int i = 0; i < d * d; ++i) S[i] = Rational(f.matrix()[i]);
    for (int i = 0; i < d; ++i) U[i * d + i] = 1;
    auto s = [&](int i, int j) -> Rational& { return S[i * d + j]; };
    // basis change b_k <- b_k + lam b_i
    auto addcol = [&](int k, int i, const Rational& lam) {
        if (lam == 0) return;
        for (int r = 0; r < d; ++r) U[r * d + k] += lam * U[r * d + i];
        for (int c = 0; c < d; ++c) s(k, c) += lam * s(i, c);
        for (int r = 0; r < d; ++r) s(r, k) += lam * s(r, i);
    };
    std::vector<int> live(d);
    for (int i = 0; i < d; ++i) live[i] = i;
    auto drop = [&](int i) { live.erase(std::find(live.begin(), live.end(), i)); };

    while (!live.empty()) {
        int mu = 1 << 20, di = -1, oi = -1, oj = -1;
        for (int i : live)
            for (int j : live) {
                int v = valuation(s(i, j), p);
                if (v < mu) mu = v;
            }
        for (int i : live)
            if (valuation(s(i, i), p) == mu) { di = i; break; }
        if (di < 0)
            for (int i : live)
                for (int j : live)
                    if (oi < 0 && i != j && valuation(s(i, j), p) == mu) { oi = i; oj = j; }
        if (mu >= (1 << 20)) throw ValidationError("padic_split: degenerate form");

        if (di < 0 && p != 2) {
            addcol(oi, oj, Rational(1));
            di = oi;
        }
        if (di >= 0) {
            const Rational piv = s(di, di);
            for (int k : live)
                if (k != di) addcol(k, di, Rational(-s(k, di) / piv));
            JordanBlock b;
            b.size = 1;
            b.idx = {di};
            Rational pmu = Rational(boost::multiprecision::pow(BigInt(p), static_cast<unsigned>(mu)));
            if (p == 2) {
                b.e = mu - 1;  // F-coefficient piv/2 = 2^(mu-1) * (piv / 2^mu)
                b.u = piv / pmu;
            } else {
                b.e = mu;
                b.u = piv / (2 * pmu);
            }
            sp.blocks.push_back(b);
            drop(di);
        } else {
            const int i = oi, j = oj;
            const Rational a11 = s(i, i), a12 = s(i, j), a22 = s(j, j);
            const Rational det = a11 * a22 - a12 * a12;
            for (int k : live) {
                if (k == i || k == j) continue;
                Rational bi = s(i, k), bj = s(j, k);
                Rational x = (a22 * bi - a12 * bj) / det;
                Rational y = (a11 * bj - a12 * bi) / det;
                addcol(k, i, Rational(-x));
                addcol(k, j, Rational(-y));
            }
            JordanBlock b;
            b.size = 2;
            b.idx = {i, j};
            b.e = mu;
            Rational pmu = Rational(boost::multiprecision::pow(BigInt(2), static_cast<unsigned>(mu)));
            b.alpha = s(i, i) / (2 * pmu);
            b.beta = s(i, j) / pmu;
            b.gamma = s(j, j) / (2 * pmu);
            sp.blocks.push_back(b);
            drop(i);
            drop(j);
        }
    }
    sp.U = std::move(U);
    return sp;
}

namespace detail {

inline std::complex<double> unit_root(u64 num, u64 den) {
    // e^{2 pi i num/den} with the angle reduced to [0, 1) before scaling
    long double frac = static_cast<long double>(num % den) / static_cast<long double>(den);
    long double ang = 2.0L * std::numbers::pi_v<long double> * frac;
    return {static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang))};
}

inline int legendre(u64 a, u64 p) {
    a %= p;
    if (a == 0) return 0;
    return powmod(a, (p - 1) / 2, p) == 1 ? 1 : -1;
}

// sum_{y mod p^k} e_{p^k}(A y^2), A a unit, p odd; normalized by p^k.
inline std::complex<double> gauss_odd_normalized(u64 p, int k, u64 A) {
    if (k == 0) return 1.0;
    std::complex<double> base = 1.0;
    if (k % 2 == 1) {
        double s = 1.0 / std::sqrt(static_cast<double>(p));  // g_p / p
        std::complex<double> g = (p % 4 == 1) ? std::complex<double>(s, 0) : std::complex<double>(0, s);
        base = static_cast<double>(legendre(A, p)) * g;
    }
    // G_k = p G_{k-2} for k >= 2; normalized: G_k / p^k = (G_{k-2} / p^{k-2}) / p
    double scale = std::pow(static_cast<double>(p), -(k / 2));
    return base * scale;
}

// sum_{y mod 2^k} e_{2^k}(A y^2), A odd; normalized by 2^k.
inline std::complex<double> gauss_two_normalized(int k, u64 A) {
    if (k == 0) return 1.0;
    if (k == 1) return 0.0;
    std::complex<double> g;
    int base_k;
    if (k % 2 == 0) {
        g = 2.0 * (1.0 + ((A % 4 == 1) ? std::complex<double>(0, 1) : std::complex<double>(0, -1)));
        base_k = 2;
    } else {
        g = 4.0 * unit_root(A % 8, 8);
        base_k = 3;
    }
    // G_k = 2 G_{k-2} for k >= 4
    int steps = (k - base_k) / 2;
    return g / std::pow(2.0, base_k) * std::pow(0.5, steps);
}

// sum_{y mod 2^k} e_{2^k}(a Qb(y)) for a size-2 block (independent of odd a); normalized by 4^k.
inline double gauss_block2_normalized(int k, u64 alpha, u64 beta, u64 gamma) {
    if (k == 0) return 1.0;
    auto sgn = [](u64 v) { return (v & 1) ? -1.0 : 1.0; };
    double g1 = 1.0 + sgn(alpha) + sgn(gamma) + sgn(alpha + beta + gamma);
    // G_k = 4 G_{k-2} for k >= 2
    if (k % 2 == 1) return g1 / 4.0 * std::pow(0.25, (k - 1) / 2);
    return std::pow(0.25, k / 2);
}

// Residues mod p^f representing the square classes of units mod p^k.
struct ClassLayout {
    u64 pf = 1;
    std::vector<std::vector<u64>> classes;
};

inline ClassLayout class_layout(u64 p, int k) {
    ClassLayout cl;
    if (p == 2) {
        int f = std::min(k, 3);
        cl.pf = u64{1} << f;
        for (u64 r = 1; r < cl.pf; r += 2) cl.classes.push_back({r});
    } else {
        cl.pf = p;
        std::vector<u64> qr, nr;
        for (u64 r = 1; r < p; ++r) (legendre(r, p) == 1 ? qr : nr).push_back(r);
        cl.classes = {qr, nr};
    }
    return cl;
}

// sum over units a mod q in the class of e_q(-a x): zero unless p^{k-f} | x.
inline std::complex<double> class_ramanujan(const ClassLayout& cl, const std::vector<u64>& cls, u64 q,
                                            u64 x) {
    u64 blocks = q / cl.pf;  // p^{k-f}
    if (x % blocks != 0) return 0.0;
    u64 xr = x / blocks;
    std::complex<double> s = 0.0;
    for (u64 r : cls) s += unit_root(cl.pf - mulmod(r, xr % cl.pf, cl.pf), cl.pf);
    return s * static_cast<double>(blocks);
}

}  // namespace detail

// S_{p^k}(c; A, t) / p^{kd} via the Jordan splitting.
inline std::complex<double> prime_power_sum_normalized(const PadicSplitting& sp, int k, const std::vector<i64>& c,
                                                       i64 t, u64 loop_budget = 100000000ull) {
    if (k == 0) return 1.0;
    const u64 p = sp.p;
    const int d = sp.d;
    const u64 q = checked_pow(p, k);
    const bool has_c = std::any_of(c.begin(), c.end(), [](i64 v) { return v != 0; });

    // Linear term in the split coordinates: lambda = U^T c mod q.
    std::vector<u64> lam(d, 0);
    if (has_c) {
        for (int j = 0; j < d; ++j) {
            Rational s = 0;
            for (int i = 0; i < d; ++i) s += sp.U[i * d + j] * c[i];
            lam[j] = rational_mod(s, q);
        }
    }

    auto layout = detail::class_layout(p, k);
    const std::size_t ncls = layout.classes.size();
    std::vector<std::complex<double>> scalar(ncls, 1.0);
    u64 T = 0;  // total phase constant mod q; the a-dependent phase is e_q(-a^{-1} T)

    for (const auto& b : sp.blocks) {
        if (b.e >= k) {
            for (int i : b.idx)
                if (lam[i] % q != 0) return 0.0;
            continue;  // p^{k size} / p^{k size} = 1
        }
        const int kp = k - b.e;
        const u64 qk = checked_pow(p, kp);
        const u64 pe = q / qk;
        std::vector<u64> lp;
        for (int i : b.idx) {
            if (lam[i] % pe != 0) return 0.0;
            lp.push_back((lam[i] / pe) % qk);
        }
        // Outer factor p^{e size} against the normalization p^{k size} leaves the
        // inner sum normalized by p^{kp size}.
        u64 Ti = 0;
        if (b.size == 1) {
            const u64 umod = rational_mod(b.u, qk);
            const u64 B = lp[0];
            if (p == 2) {
                if (kp == 1) {
                    // sum_{y mod 2} e_2(A y^2 + B y) = 2 if B odd, else 0
                    if (B % 2 == 0) return 0.0;
                } else {
                    if (B % 2 == 1) return 0.0;
                    u64 Bh = B / 2;
                    Ti = mulmod(mulmod(Bh, Bh, qk), invmod(umod, qk), qk);
                    for (std::size_t ci = 0; ci < ncls; ++ci) {
                        u64 A = mulmod(layout.classes[ci][0], umod % 8, 8);
                        scalar[ci] *= detail::gauss_two_normalized(kp, A);
                    }
                }
            } else {
                u64 inv4u = invmod(mulmod(4 % qk, umod, qk), qk);
                Ti = mulmod(mulmod(B, B, qk), inv4u, qk);
                for (std::size_t ci = 0; ci < ncls; ++ci) {
                    u64 A = mulmod(layout.classes[ci][0], umod % p, p);
                    scalar[ci] *= detail::gauss_odd_normalized(p, kp, A);
                }
            }
        } else {
            const u64 al = rational_mod(b.alpha, qk), be = rational_mod(b.beta, qk), ga = rational_mod(b.gamma, qk);
            // v = M^{-1} lambda', M = [[2al, be], [be, 2ga]]
            const u64 det = (mulmod(4 % qk, mulmod(al, ga, qk), qk) + qk - mulmod(be, be, qk)) % qk;
            const u64 idet = invmod(det, qk);
            const u64 l1 = lp[0], l2 = lp[1];
            u64 v1 = (mulmod(2 * ga % qk, l1, qk) + qk - mulmod(be, l2, qk)) % qk;
            u64 v2 = (mulmod(2 * al % qk, l2, qk) + qk - mulmod(be, l1, qk)) % qk;
            v1 = mulmod(v1, idet, qk);
            v2 = mulmod(v2, idet, qk);
            Ti = (mulmod(al, mulmod(v1, v1, qk), qk) + mulmod(be, mulmod(v1, v2, qk), qk) +
                  mulmod(ga, mulmod(v2, v2, qk), qk)) % qk;
            double g = detail::gauss_block2_normalized(kp, al, be, ga);
            if (g == 0.0) return 0.0;
            for (auto& s : scalar) s *= g;
        }
        T = (T + mulmod(Ti, q / qk, q)) % q;
    }

    const u64 tq = static_cast<u64>(mod_floor(t, static_cast<i64>(q)));
    ComplexKahanSum total;
    if (T == 0 || tq == 0) {
        const u64 x = (T == 0) ? tq : T;
        for (std::size_t ci = 0; ci < ncls; ++ci) {
            if (scalar[ci] == 0.0) continue;
            total.add(scalar[ci] * detail::class_ramanujan(layout, layout.classes[ci], q, x));
        }
        return total.value();
    }
    if (q > loop_budget) throw BudgetExceeded("prime-power sum with t != 0 and c != 0: q exceeds loop budget");
    for (std::size_t ci = 0; ci < ncls; ++ci) {
        if (scalar[ci] == 0.0) continue;
        ComplexKahanSum part;
        for (u64 r : layout.classes[ci]) {
            for (u64 a = r; a < q; a += layout.pf) {
                u64 ainv = invmod(a, q);
                u64 x = (mulmod(a, tq, q) + mulmod(ainv, T, q)) % q;
                part.add(detail::unit_root(q - x, q));
            }
        }
        total.add(scalar[ci] * part.value());
    }
    return total.value();
}

}  // namespace qlattice
