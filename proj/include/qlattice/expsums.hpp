#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "qlattice/arith.hpp"
#include "qlattice/errors.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/padic.hpp"
#include "qlattice/parallel.hpp"
#include "qlattice/summation.hpp"

namespace qlattice {

// naive: literal double sum; crt: product over prime powers (c = 0);
// direct: a-sum collapsed to Ramanujan sums; block: p-adic Jordan splitting.
enum class SumRoute { naive, crt, direct, block };

inline const char* route_name(SumRoute r) {
    switch (r) {
        case SumRoute::naive: return "naive";
        case SumRoute::crt: return "crt";
        case SumRoute::direct: return "direct";
        case SumRoute::block: return "block";
    }
    return "?";
}

struct ExpSumValue {
    u64 q = 1;
    std::vector<i64> c;
    i64 t = 0;
    std::complex<double> value = 1.0;
    SumRoute route = SumRoute::naive;
};

constexpr double kExpSumBudget = 1e9;

namespace detail {

inline std::vector<std::complex<double>> roots_table(u64 q) {
    std::vector<std::complex<double>> r(q);
    for (u64 e = 0; e < q; ++e) r[e] = unit_root(e, q);
    return r;
}

// Joint histogram H[v * q + w] of (F(b) mod q, c.b mod q) over b in (Z/q)^d.
// The odometer advances one coordinate by +1 (mod q) at a time, so F and A b
// are updated incrementally. The top digit is split into one range per worker
// and the integer histograms are merged, which is exact for any worker count.
inline std::vector<u64> form_histogram(const QuadraticForm& f, u64 q, const std::vector<i64>& c, bool joint,
                                       int workers) {
    const int d = f.dim();
    const u64 width = joint ? q : 1;
    std::vector<u64> A(d * d), half(d), cm(d, 0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) A[i * d + j] = static_cast<u64>(mod_floor(static_cast<i64>(f.a(i, j) % q), q));
        half[i] = static_cast<u64>(mod_floor(static_cast<i64>((f.a(i, i) / 2) % q), q));
        if (joint) cm[i] = static_cast<u64>(mod_floor(c[i], q));
    }
    const int top = d - 1;
    const u64 nchunks = std::min<u64>(q, static_cast<u64>(std::max(1, workers)));
    std::vector<std::vector<u64>> parts(nchunks);
    parallel_for(nchunks, workers, [&](std::size_t chunk) {
        const u64 lo = q * chunk / nchunks, hi = q * (chunk + 1) / nchunks;
        std::vector<u64> hist(q * width, 0);
        std::vector<u64> b(d, 0), g(d, 0);
        u64 F = 0, cb = 0;
        auto step = [&](int i) {
            F = (F + g[i] + half[i]) % q;
            for (int k = 0; k < d; ++k) g[k] = (g[k] + A[k * d + i]) % q;
            cb = (cb + cm[i]) % q;
            b[i] = (b[i] + 1 == q) ? 0 : b[i] + 1;
        };
        for (u64 s = 0; s < lo; ++s) step(top);
        const u64 inner = ipow(q, top);
        for (u64 s = lo; s < hi; ++s) {
            for (u64 n = 0; n < inner; ++n) {
                ++hist[F * width + (joint ? cb : 0)];
                for (int i = 0; i < top; ++i) {
                    step(i);
                    if (b[i] != 0) break;
                }
            }
            step(top);
        }
        parts[chunk] = std::move(hist);
    });
    std::vector<u64> total(q * width, 0);
    for (const auto& h : parts)
        for (std::size_t i = 0; i < h.size(); ++i) total[i] += h[i];
    return total;
}

inline bool all_zero(const std::vector<i64>& c) {
    for (i64 v : c)
        if (v != 0) return false;
    return true;
}

}  // namespace detail

// Literal sum over units a and all b mod q with a roots-of-unity table.
inline ExpSumValue S_q_naive(u64 q, const std::vector<i64>& c, const QuadraticForm& f, i64 t,
                             int workers = 1) {
    if (q == 0) throw ValidationError("S_q: q must be >= 1");
    if (static_cast<int>(c.size()) != f.dim()) throw ValidationError("S_q: c has wrong dimension");
    ExpSumValue out{q, c, t, 1.0, SumRoute::naive};
    if (q == 1) return out;
    const double work = std::pow(static_cast<double>(q), f.dim()) * static_cast<double>(euler_phi(q));
    if (work > kExpSumBudget) throw BudgetExceeded("budget exceeded: q^d phi(q) > 1e9");
    const bool joint = !detail::all_zero(c);
    const u64 width = joint ? q : 1;
    auto H = detail::form_histogram(f, q, c, joint, workers);
    const u64 tq = static_cast<u64>(mod_floor(t, static_cast<i64>(q)));
    std::vector<u64> ehist(q, 0);
    for (u64 a = 1; a < q; ++a) {
        if (std::gcd(a, q) != 1) continue;
        for (u64 v = 0; v < q; ++v) {
            const u64 av = mulmod(a, (v + q - tq) % q, q);
            for (u64 w = 0; w < width; ++w) {
                u64 h = H[v * width + w];
                if (h) ehist[(av + w) % q] += h;
            }
        }
    }
    auto roots = detail::roots_table(q);
    ComplexKahanSum s;
    for (u64 e = 0; e < q; ++e)
        if (ehist[e]) s.add(static_cast<double>(ehist[e]) * roots[e]);
    out.value = s.value();
    return out;
}

// S_q(c) = sum_b e_q(c.b) c_q(F(b) - t): the unit sum collapses to a Ramanujan sum.
inline ExpSumValue S_q_direct(u64 q, const std::vector<i64>& c, const QuadraticForm& f, i64 t, int workers = 1) {
    if (q == 0) throw ValidationError("S_q: q must be >= 1");
    ExpSumValue out{q, c, t, 1.0, SumRoute::direct};
    if (q == 1) return out;
    if (std::pow(static_cast<double>(q), f.dim()) > kExpSumBudget)
        throw BudgetExceeded("budget exceeded: q^d > 1e9 on the direct route");
    const bool joint = !detail::all_zero(c);
    const u64 width = joint ? q : 1;
    auto H = detail::form_histogram(f, q, c, joint, workers);
    std::vector<i64> rs(q);
    for (u64 v = 0; v < q; ++v) rs[v] = ramanujan_sum(q, static_cast<i64>(v) - t);
    auto roots = detail::roots_table(q);
    ComplexKahanSum s;
    for (u64 v = 0; v < q; ++v) {
        if (rs[v] == 0) continue;
        for (u64 w = 0; w < width; ++w) {
            u64 h = H[v * width + w];
            if (h) s.add(static_cast<double>(h) * static_cast<double>(rs[v]) * roots[w]);
        }
    }
    out.value = s.value();
    return out;
}

// Cache of p-adic splittings keyed by (form, p).
inline const PadicSplitting& cached_split(const QuadraticForm& f, u64 p) {
    static std::mutex mu;
    static std::map<std::pair<std::string, u64>, std::unique_ptr<PadicSplitting>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_pair(f.canonical(), p);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<PadicSplitting>(padic_split(f, p))).first;
    return *it->second;
}

// S_{p^k}(c; A, t) on the block route.
inline ExpSumValue S_prime_power_block(u64 p, int k, const std::vector<i64>& c, const QuadraticForm& f, i64 t) {
    const u64 q = checked_pow(p, k);
    ExpSumValue out{q, c, t, 1.0, SumRoute::block};
    const auto& sp = cached_split(f, p);
    out.value = prime_power_sum_normalized(sp, k, c, t) * std::pow(static_cast<double>(q), f.dim());
    return out;
}

// Small prime powers go through the literal sum; larger ones use the block route.
inline std::complex<double> prime_power_value(u64 p, int k, const QuadraticForm& f, i64 t) {
    const u64 q = checked_pow(p, k);
    const std::vector<i64> zero(f.dim(), 0);
    const double work = std::pow(static_cast<double>(q), f.dim()) * static_cast<double>(euler_phi(q));
    if (work <= 4e6) return S_q_naive(q, zero, f, t).value;
    return S_prime_power_block(p, k, zero, f, t).value;
}

// Dispatcher. c = 0: product over prime powers. c != 0: direct route, with the
// block route for prime powers beyond the direct budget.
inline ExpSumValue S_q(u64 q, const std::vector<i64>& c, const QuadraticForm& f, i64 t, int workers = 1) {
    if (q == 0) throw ValidationError("S_q: q must be >= 1");
    if (static_cast<int>(c.size()) != f.dim()) throw ValidationError("S_q: c has wrong dimension");
    if (q == 1) return ExpSumValue{1, c, t, 1.0, SumRoute::crt};
    if (detail::all_zero(c)) {
        ExpSumValue out{q, c, t, 1.0, SumRoute::crt};
        std::complex<double> v = 1.0;
        for (auto [p, k] : factorize(q)) v *= prime_power_value(p, k, f, t);
        out.value = {v.real(), 0.0};  // S_q(0) is real
        return out;
    }
    if (std::pow(static_cast<double>(q), f.dim()) <= kExpSumBudget) return S_q_direct(q, c, f, t, workers);
    auto fac = factorize(q);
    if (fac.size() == 1) return S_prime_power_block(fac[0].p, fac[0].k, c, f, t);
    throw BudgetExceeded("budget exceeded: composite q with c != 0 beyond the direct-route budget");
}

}  // namespace qlattice
