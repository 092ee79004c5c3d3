#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <vector>

#include "qlattice/errors.hpp"

namespace qlattice {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

struct PrimePower {
    u64 p;
    int k;
};

inline std::vector<PrimePower> factorize(u64 n) {
    std::vector<PrimePower> out;
    for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p) continue;
        int k = 0;
        while (n % p == 0) { n /= p; ++k; }
        out.push_back({p, k});
    }
    if (n > 1) out.push_back({n, 1});
    return out;
}

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p = 2; p * p <= n; ++p)
        if (n % p == 0) return false;
    return true;
}

inline std::vector<u64> primes_upto(u64 n) {
    std::vector<u64> out;
    if (n < 2) return out;
    std::vector<bool> comp(n + 1, false);
    for (u64 i = 2; i <= n; ++i) {
        if (comp[i]) continue;
        out.push_back(i);
        for (u64 j = i * i; j <= n; j += i) comp[j] = true;
    }
    return out;
}

inline u64 euler_phi(u64 q) {
    if (q == 0) throw ValidationError("euler_phi: q must be positive");
    u64 r = q;
    for (auto [p, k] : factorize(q)) r = r / p * (p - 1);
    return r;
}

inline int mobius(u64 n) {
    int s = 1;
    for (auto [p, k] : factorize(n)) {
        if (k > 1) return 0;
        s = -s;
    }
    return s;
}

inline std::vector<u64> divisors(u64 n) {
    std::vector<u64> ds{1};
    for (auto [p, k] : factorize(n)) {
        std::size_t m = ds.size();
        u64 pk = 1;
        for (int e = 1; e <= k; ++e) {
            pk *= p;
            for (std::size_t i = 0; i < m; ++i) ds.push_back(ds[i] * pk);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

inline u64 gcd_u(u64 a, u64 b) { return std::gcd(a, b); }

// Ramanujan sum c_q(n) = sum over units a mod q of e_q(an), an integer.
inline i64 ramanujan_sum(u64 q, i64 n) {
    u64 an = n < 0 ? static_cast<u64>(-n) : static_cast<u64>(n);
    u64 g = std::gcd(q, an);  // gcd(q, 0) = q
    i64 s = 0;
    for (u64 d : divisors(g)) s += mobius(q / d) * static_cast<i64>(d);
    return s;
}

inline i64 mod_floor(i64 a, i64 m) {
    i64 r = a % m;
    return r < 0 ? r + m : r;
}

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

inline u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

// Returns (g, x, y) with a x + b y = g = gcd(a, b) >= 0.
inline std::tuple<i64, i64, i64> ext_gcd(i64 a, i64 b) {
    i64 x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        i64 q = a / b;
        std::tie(a, b) = std::make_tuple(b, a - q * b);
        std::tie(x0, x1) = std::make_tuple(x1, x0 - q * x1);
        std::tie(y0, y1) = std::make_tuple(y1, y0 - q * y1);
    }
    if (a < 0) return {-a, -x0, -y0};
    return {a, x0, y0};
}

inline u64 invmod(u64 a, u64 m) {
    auto [g, x, y] = ext_gcd(static_cast<i64>(a % m), static_cast<i64>(m));
    (void)y;
    if (g != 1) throw ValidationError("invmod: not invertible");
    return static_cast<u64>(mod_floor(x, static_cast<i64>(m)));
}

inline u64 ipow(u64 b, int e) {
    u64 r = 1;
    while (e-- > 0) r *= b;
    return r;
}

// p^k with an overflow check against 2^62.
inline u64 checked_pow(u64 p, int k) {
    u64 r = 1;
    for (int i = 0; i < k; ++i) {
        if (r > (u64{1} << 62) / p) throw BudgetExceeded("modulus p^k exceeds 2^62");
        r *= p;
    }
    return r;
}

inline u64 isqrt_u(u64 n) {
    u64 r = static_cast<u64>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

inline bool is_square(const BigInt& n) {
    if (n < 0) return false;
    BigInt r = boost::multiprecision::sqrt(n);
    return r * r == n;
}

inline int valuation(BigInt n, u64 p) {
    if (n == 0) return 1 << 20;
    int v = 0;
    while (n % p == 0) { n /= p; ++v; }
    return v;
}

inline int valuation(const Rational& r, u64 p) {
    if (r == 0) return 1 << 20;
    return valuation(boost::multiprecision::numerator(r), p) -
           valuation(boost::multiprecision::denominator(r), p);
}

// Reduce a p-integral rational modulo m = p^k.
inline u64 rational_mod(const Rational& r, u64 m) {
    BigInt num = boost::multiprecision::numerator(r) % m;
    if (num < 0) num += m;
    BigInt den = boost::multiprecision::denominator(r) % m;
    return mulmod(static_cast<u64>(num), invmod(static_cast<u64>(den), m), m);
}

inline i64 floor_div(i64 a, i64 b) {
    i64 q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

}  // namespace qlattice
