#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "qlattice/arith.hpp"
#include "qlattice/errors.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/parallel.hpp"
#include "qlattice/summation.hpp"
#include "qlattice/weight.hpp"

namespace qlattice {

// Integer solutions of F(z') = N inside the ball |z'| <= B.
//   hyperbolic: coordinates y that only meet one partner x (F = sum a x y + G)
//               are solved from a linear equation per fiber;
//   last_coordinate: one coordinate with A_jj != 0 is solved from a quadratic;
//   odometer: every point of the ball is tested.
enum class EnumStrategy { automatic, hyperbolic, last_coordinate, odometer };

inline const char* strategy_name(EnumStrategy s) {
    switch (s) {
        case EnumStrategy::automatic: return "auto";
        case EnumStrategy::hyperbolic: return "hyperbolic";
        case EnumStrategy::last_coordinate: return "last_coordinate";
        case EnumStrategy::odometer: return "odometer";
    }
    return "?";
}

struct EnumPlan {
    EnumStrategy strategy = EnumStrategy::odometer;
    std::vector<int> outer;                  // coordinates iterated over the ball
    std::vector<std::pair<int, int>> pairs;  // (x, y): y enters F only through A_xy x y
    int solved = -1;                         // last_coordinate: the solved index
};

namespace detail {

inline EnumPlan hyperbolic_plan(const std::vector<i64>& A, int d) {
    EnumPlan plan;
    std::vector<int> role(d, 0);  // 0 outer, 1 x, 2 y
    for (int j = 0; j < d; ++j) {
        if (role[j] != 0 || A[j * d + j] != 0) continue;
        int partner = -1, nnz = 0;
        for (int k = 0; k < d; ++k)
            if (A[j * d + k] != 0) ++nnz, partner = k;
        if (nnz != 1 || role[partner] != 0) continue;
        role[j] = 2;
        role[partner] = 1;
        plan.pairs.push_back({partner, j});
    }
    plan.strategy = EnumStrategy::hyperbolic;
    for (int i = 0; i < d; ++i)
        if (role[i] != 2) plan.outer.push_back(i);
    return plan;
}

}  // namespace detail

inline EnumPlan make_enum_plan(const QuadraticForm& f, EnumStrategy s) {
    if (!f.fits_i64()) throw ValidationError("enumeration: matrix entries too large");
    const int d = f.dim();
    std::vector<i64> A(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A[i * d + j] = f.a64(i, j);
    if (s == EnumStrategy::automatic || s == EnumStrategy::hyperbolic) {
        auto plan = detail::hyperbolic_plan(A, d);
        if (!plan.pairs.empty()) return plan;
        if (s == EnumStrategy::hyperbolic) throw ValidationError("enumeration: form has no hyperbolic pair");
    }
    if (s == EnumStrategy::automatic || s == EnumStrategy::last_coordinate) {
        for (int j = d - 1; j >= 0; --j) {
            if (A[j * d + j] == 0) continue;
            EnumPlan plan;
            plan.strategy = EnumStrategy::last_coordinate;
            plan.solved = j;
            for (int i = 0; i < d; ++i)
                if (i != j) plan.outer.push_back(i);
            return plan;
        }
        if (s == EnumStrategy::last_coordinate) throw ValidationError("enumeration: no coordinate with A_jj != 0");
    }
    EnumPlan plan;
    plan.strategy = EnumStrategy::odometer;
    for (int i = 0; i < d; ++i) plan.outer.push_back(i);
    return plan;
}

// Enumerates the solutions of F(z') = N with |z'|^2 <= R2 for one value of the
// first outer coordinate; points are emitted in a fixed order.
class SolutionEnumerator {
public:
    SolutionEnumerator(const QuadraticForm& f, EnumPlan plan, i64 N, i64 R2)
        : d_(f.dim()), plan_(std::move(plan)), N_(N), R2_(R2), A_(d_ * d_) {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) A_[i * d_ + j] = f.a64(i, j);
    }

    i64 box() const { return static_cast<i64>(isqrt_u(static_cast<u64>(R2_))); }
    const EnumPlan& plan() const { return plan_; }

    template <class Emit>
    void run_partition(i64 v0, Emit&& emit) const {
        if (v0 * v0 > R2_) return;
        std::vector<i64> z(d_, 0);
        z[plan_.outer[0]] = v0;
        outer(1, z, R2_ - v0 * v0, emit);
    }

    template <class Emit>
    void run(Emit&& emit) const {
        const i64 B = box();
        for (i64 v = -B; v <= B; ++v) run_partition(v, emit);
    }

private:
    i128 F(const std::vector<i64>& z) const {
        i128 s = 0;
        for (int i = 0; i < d_; ++i) {
            if (z[i] == 0) continue;
            i128 row = 0;
            for (int j = 0; j < d_; ++j) row += static_cast<i128>(A_[i * d_ + j]) * z[j];
            s += row * z[i];
        }
        return s / 2;
    }

    template <class Emit>
    void outer(std::size_t k, std::vector<i64>& z, i64 rem, Emit& emit) const {
        if (k == plan_.outer.size()) {
            leaf(z, rem, emit);
            return;
        }
        const int i = plan_.outer[k];
        const i64 b = static_cast<i64>(isqrt_u(static_cast<u64>(rem)));
        for (i64 v = -b; v <= b; ++v) {
            z[i] = v;
            outer(k + 1, z, rem - v * v, emit);
        }
        z[i] = 0;
    }

    template <class Emit>
    void leaf(std::vector<i64>& z, i64 rem, Emit& emit) const {
        switch (plan_.strategy) {
            case EnumStrategy::odometer:
                if (F(z) == N_) emit(z);
                return;
            case EnumStrategy::last_coordinate: solve_quadratic(z, rem, emit); return;
            default: {
                // y's are zero here, so F(z) is the outer part G.
                i128 M = static_cast<i128>(N_) - F(z);
                std::vector<i64> b(plan_.pairs.size());
                for (std::size_t k = 0; k < b.size(); ++k) {
                    auto [x, y] = plan_.pairs[k];
                    b[k] = A_[x * d_ + y] * z[x];
                }
                // zero coefficients first, then the rest; the last two are solved together
                std::vector<std::size_t> order;
                for (std::size_t k = 0; k < b.size(); ++k)
                    if (b[k] == 0) order.push_back(k);
                const std::size_t nzero = order.size();
                for (std::size_t k = 0; k < b.size(); ++k)
                    if (b[k] != 0) order.push_back(k);
                fiber(0, nzero, order, b, z, M, rem, emit);
            }
        }
    }

    template <class Emit>
    void fiber(std::size_t k, std::size_t nzero, const std::vector<std::size_t>& order, const std::vector<i64>& b,
               std::vector<i64>& z, i128 M, i64 rem, Emit& emit) const {
        const std::size_t n = order.size();
        const std::size_t nnz = n - nzero;
        if (k == n) {
            if (M == 0) emit(z);
            return;
        }
        const int yk = plan_.pairs[order[k]].second;
        const bool nonzero = k >= nzero;
        if (nonzero && k + 1 == n) {
            // b y = M
            const i64 bk = b[order[k]];
            if (M % bk != 0) return;
            i128 y = M / bk;
            if (y * y > rem) return;
            z[yk] = static_cast<i64>(y);
            emit(z);
            z[yk] = 0;
            return;
        }
        if (nonzero && k + 2 == n && nnz >= 2) {
            solve_pair(order[k], order[k + 1], b, z, M, rem, emit);
            return;
        }
        const i64 B = static_cast<i64>(isqrt_u(static_cast<u64>(rem)));
        const i64 bk = b[order[k]];
        for (i64 v = -B; v <= B; ++v) {
            z[yk] = v;
            fiber(k + 1, nzero, order, b, z, M - static_cast<i128>(bk) * v, rem - v * v, emit);
        }
        z[yk] = 0;
    }

    // b_i y_i + b_j y_j = M through one extended-gcd step:
    // y_i = y_i0 + s b_j/g, y_j = y_j0 - s b_i/g.
    template <class Emit>
    void solve_pair(std::size_t ki, std::size_t kj, const std::vector<i64>& b, std::vector<i64>& z, i128 M, i64 rem,
                    Emit& emit) const {
        const i64 bi = b[ki], bj = b[kj];
        auto [g, u, v] = ext_gcd(bi, bj);
        if (g < 0) g = -g, u = -u, v = -v;
        if (M % g != 0) return;
        const i128 m = M / g;
        const i128 yi0 = static_cast<i128>(u) * m, yj0 = static_cast<i128>(v) * m;
        const i128 si = bj / g, sj = -(bi / g);
        const i128 R = static_cast<i128>(isqrt_u(static_cast<u64>(rem)));
        auto fdiv = [](i128 a, i128 b) { i128 q = a / b; return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q; };
        auto cdiv = [&](i128 a, i128 b) { return -fdiv(-a, b); };
        // -R <= y0 + s step <= R
        auto range = [&](i128 y0, i128 step, i128& lo, i128& hi) {
            i128 a = -R - y0, c = R - y0;
            if (step < 0) std::swap(a, c);
            lo = cdiv(a, step);
            hi = fdiv(c, step);
        };
        i128 lo1, hi1, lo2, hi2;
        range(yi0, si, lo1, hi1);
        range(yj0, sj, lo2, hi2);
        const i128 lo = std::max(lo1, lo2), hi = std::min(hi1, hi2);
        const int yi = plan_.pairs[ki].second, yj = plan_.pairs[kj].second;
        // emit in increasing y_i
        std::vector<std::pair<i64, i64>> sols;
        for (i128 s = lo; s <= hi; ++s) {
            i128 a = yi0 + s * si, c = yj0 + s * sj;
            if (a * a + c * c <= rem) sols.push_back({static_cast<i64>(a), static_cast<i64>(c)});
        }
        std::sort(sols.begin(), sols.end());
        for (auto [a, c] : sols) {
            z[yi] = a;
            z[yj] = c;
            emit(z);
        }
        z[yi] = z[yj] = 0;
    }

    // a z_j^2 + beta z_j + gamma = 0 with a = A_jj/2, beta = sum_i A_ji z_i, gamma = G - N.
    template <class Emit>
    void solve_quadratic(std::vector<i64>& z, i64 rem, Emit& emit) const {
        const int j = plan_.solved;
        const i128 a = A_[j * d_ + j] / 2;
        i128 beta = 0;
        for (int i = 0; i < d_; ++i)
            if (i != j) beta += static_cast<i128>(A_[j * d_ + i]) * z[i];
        const i128 gamma = F(z) - N_;
        const i128 D = beta * beta - 4 * a * gamma;
        if (D < 0) return;
        if (D > static_cast<i128>(std::numeric_limits<u64>::max())) throw BudgetExceeded("discriminant overflow");
        const i128 s = static_cast<i128>(isqrt_u(static_cast<u64>(D)));
        if (s * s != D) return;
        i128 roots[2];
        int nr = 0;
        for (i128 num : {-beta - s, -beta + s}) {
            if (num % (2 * a) != 0) continue;
            i128 r = num / (2 * a);
            if (nr == 1 && roots[0] == r) continue;
            roots[nr++] = r;
        }
        if (nr == 2 && roots[0] > roots[1]) std::swap(roots[0], roots[1]);
        for (int k = 0; k < nr; ++k) {
            if (roots[k] * roots[k] > rem) continue;
            z[j] = static_cast<i64>(roots[k]);
            emit(z);
        }
        z[j] = 0;
    }

    int d_;
    EnumPlan plan_;
    i64 N_;
    i64 R2_;
    std::vector<i64> A_;
};

inline double ball_volume(int k, double r) {
    return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0) * std::pow(r, k);
}

// Points z' in Z^d with F(z') = N and |z'| <= radius, sorted lexicographically.
inline std::vector<std::vector<i64>> enumerate_solutions(const QuadraticForm& f, i64 N, double radius,
                                                         EnumStrategy s = EnumStrategy::automatic,
                                                         double budget = 1e9) {
    if (!(radius >= 0)) throw ValidationError("enumerate_solutions: radius must be >= 0");
    auto plan = make_enum_plan(f, s);
    if (ball_volume(static_cast<int>(plan.outer.size()), radius + 1) > budget)
        throw BudgetExceeded("budget exceeded: enumeration box too large");
    const i64 R2 = static_cast<i64>(std::floor(radius * radius));
    SolutionEnumerator en(f, plan, N, R2);
    std::vector<std::vector<i64>> out;
    en.run([&](const std::vector<i64>& z) { out.push_back(z); });
    std::sort(out.begin(), out.end());
    return out;
}

struct CountResult {
    double value = 0.0;
    u64 points = 0;
    double radius = 0.0;  // z-units
    double truncation_bound = 0.0;
    EnumStrategy strategy = EnumStrategy::odometer;
    u64 partitions = 0;
};

// N_L(w; A, m) = sum over z' in Z^d with F(z') = L^2 m of w(z'/L).
// Partitions are the values of the first outer coordinate; each is summed
// in enumeration order and the partials are merged in partition order, so
// the result does not depend on the worker count.
inline CountResult N_L_brute(const Weight& w, const QuadraticForm& f, const Rational& m, const Rational& L,
                             double tol = 1e-10, int workers = 1, EnumStrategy s = EnumStrategy::automatic,
                             double budget = 1e10) {
    auto lp = make_lattice_problem(f, m, L);
    if (boost::multiprecision::abs(lp.mL2) > BigInt(1) << 60) throw ValidationError("L^2 m too large");
    const i64 N = static_cast<i64>(lp.mL2);
    const double Ld = static_cast<double>(L);
    const int d = f.dim();
    CountResult out;
    // w below eps on the discarded region; eps shrinks with the expected number of points.
    const double eps = tol / (1.0 + std::pow(Ld, std::max(1, d - 2)));
    out.radius = w.support_radius(eps);
    auto plan = make_enum_plan(f, s);
    out.strategy = plan.strategy;
    const double rz = out.radius * Ld;
    if (ball_volume(static_cast<int>(plan.outer.size()), rz + 1) > budget)
        throw BudgetExceeded("budget exceeded: enumeration box too large");
    const i64 R2 = static_cast<i64>(std::floor(rz * rz));
    SolutionEnumerator en(f, plan, N, R2);
    const i64 B = en.box();
    const std::size_t np = static_cast<std::size_t>(2 * B + 1);
    std::vector<double> part(np, 0.0);
    std::vector<u64> cnt(np, 0);
    parallel_for(np, workers, [&](std::size_t i) {
        KahanSum acc;
        u64 c = 0;
        std::vector<double> zr(d);
        en.run_partition(static_cast<i64>(i) - B, [&](const std::vector<i64>& z) {
            for (int k = 0; k < d; ++k) zr[k] = static_cast<double>(z[k]) / Ld;
            acc.add(w(zr.data()));
            ++c;
        });
        part[i] = acc.value();
        cnt[i] = c;
    });
    KahanSum total;
    for (std::size_t i = 0; i < np; ++i) {
        total.add(part[i]);
        out.points += cnt[i];
    }
    out.value = total.value();
    out.partitions = np;
    // Heuristic: points in the next shell out number about 2^{d-2} times those
    // inside, each weighted below eps.
    out.truncation_bound = eps * std::ldexp(static_cast<double>(out.points + 1), d - 2);
    return out;
}

}  // namespace qlattice
