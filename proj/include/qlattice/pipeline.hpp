#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qlattice/errors.hpp"
#include "qlattice/expsums.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/hkernel.hpp"
#include "qlattice/lattice_enum.hpp"
#include "qlattice/localdensities.hpp"
#include "qlattice/parallel.hpp"
#include "qlattice/quadric_integrals.hpp"
#include "qlattice/summation.hpp"
#include "qlattice/weight.hpp"

namespace qlattice {

// ---------------------------------------------------------------------------
// Symmetry reduction of the c-sum. For a signed permutation P with
// P^T A P = A and w o P = w, substituting b -> P b and z -> P z gives
// S_q(P^T c) = S_q(c) and I_q(P^T c) = I_q(c).

struct SignedPerm {
    std::vector<int> perm;  // (P z)_i = sign_i z_{perm_i}
    std::vector<int> sign;
};

inline std::vector<SignedPerm> form_automorphisms(const QuadraticForm& f, WeightSymmetry sym) {
    const int d = f.dim();
    std::vector<SignedPerm> out;
    SignedPerm id{std::vector<int>(d), std::vector<int>(d, 1)};
    std::iota(id.perm.begin(), id.perm.end(), 0);
    out.push_back(id);
    if (sym == WeightSymmetry::none) return out;
    if (sym == WeightSymmetry::even || d > 6) {
        out.push_back({id.perm, std::vector<int>(d, -1)});
        return out;
    }
    std::vector<int> perm = id.perm;
    do {
        for (int mask = 0; mask < (1 << d); ++mask) {
            std::vector<int> sign(d);
            for (int i = 0; i < d; ++i) sign[i] = (mask >> i & 1) ? -1 : 1;
            bool ok = true;
            // (P^T A P)_{ij} = sign_i sign_j A_{perm_i perm_j}
            for (int i = 0; i < d && ok; ++i)
                for (int j = 0; j < d && ok; ++j)
                    ok = f.a(perm[i], perm[j]) * (sign[i] * sign[j]) == f.a(i, j);
            if (ok && !(mask == 0 && perm == id.perm)) out.push_back({perm, sign});
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

// Lexicographically smallest image of c; P^T c has entries sign_i c_{perm_i}
// up to relabeling, and the group is closed under inverses.
inline std::vector<i64> orbit_representative(const std::vector<i64>& c, const std::vector<SignedPerm>& G) {
    std::vector<i64> best = c;
    std::vector<i64> img(c.size());
    for (const auto& g : G) {
        for (std::size_t i = 0; i < c.size(); ++i) img[i] = g.sign[i] * c[g.perm[i]];
        if (img < best) best = img;
    }
    return best;
}

// ---------------------------------------------------------------------------

struct PipelineRow {
    std::vector<i64> c;
    u64 q = 1;
    std::complex<double> S = 0.0;
    std::complex<double> I = 0.0;
    double I_err = 0.0;
    double contribution = 0.0;  // Re q^{-d} S_q(c) I_q(c)
    std::string status = "ok";  // ok | budget_exceeded | failed
    std::vector<i64> orbit;     // representative the values were computed at
};

struct PipelineParams {
    u64 q_max = 0;
    int c_max = 0;
    double Q = 0.0;
    double tol = 1e-4;
    double node_budget = 3e8;
    int workers = 1;
};

struct PipelineReport {
    double N_brute = std::numeric_limits<double>::quiet_NaN();
    double N_circle = 0.0;
    double leading = 0.0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    double c_L = 1.0;
    double L = 1.0;
    int d = 0;
    PipelineParams params;
    std::vector<PipelineRow> rows;
    bool complete = true;  // false when some term was skipped
    std::size_t skipped = 0;
    double q_tail_estimate = 0.0;
    double c_shell_magnitude = 0.0;  // c_L L^-2 sum |contribution| over |c|_inf = c_max, c != 0
    std::size_t orbits = 0;
};

// Leading term: sigma_inf sigma(A, L^2 m) L^{d-2}, or for d = 4 and m = 0
// sigma_inf sigma* L^2 log L.
inline double leading_term(const Weight& w, const QuadraticForm& f, const Rational& m, double L, double tol,
                           int workers = 1) {
    const int d = f.dim();
    auto lp = make_lattice_problem(f, m, Rational(L));
    const double mr = static_cast<double>(m);
    double si = sigma_infinity(w, f, mr, IntegralMethod::automatic, tol).value;
    if (d == 4) {
        if (m != 0) throw ValidationError("d = 4 leading term is available for m = 0 only");
        auto st = sigma_star(f, std::vector<i64>(4, 0), tol, 0, workers);
        return si * st.value * L * L * std::log(L);
    }
    auto s = sigma(f, static_cast<i64>(lp.mL2), tol, 0, workers);
    return si * s.value * std::pow(L, d - 2);
}

// c_L L^{-2} sum_{|c|_inf <= c_max} sum_{q <= q_max} q^{-d} S_q(c) I_q(c), Q = L.
inline PipelineReport circle_rhs(const Weight& w, const QuadraticForm& f, const Rational& m, const Rational& Lr,
                                 PipelineParams P) {
    const int d = f.dim();
    auto lp = make_lattice_problem(f, m, Lr);
    const double L = static_cast<double>(Lr);
    if (!(L >= 2.0)) throw ValidationError("circle_rhs: L must be >= 2");
    if (P.q_max == 0) P.q_max = static_cast<u64>(std::ceil(2 * L));
    if (P.c_max < 0) throw ValidationError("circle_rhs: c_max must be >= 0");
    if (P.c_max > 0 && d > 5) throw ValidationError("circle_rhs: c != 0 terms need d <= 5");
    if (boost::multiprecision::abs(lp.mL2) > BigInt(1) << 60) throw ValidationError("L^2 m too large");
    const i64 t = static_cast<i64>(lp.mL2);
    const double mr = static_cast<double>(m);
    P.Q = L;

    PipelineReport rep;
    rep.params = P;
    rep.L = L;
    rep.d = d;
    rep.c_L = compute_cQ(L);

    // Jobs ordered by (|c|_inf, c lexicographic, q).
    std::vector<std::vector<i64>> cs;
    {
        const int n = 2 * P.c_max + 1;
        std::vector<i64> c(d);
        const u64 total = ipow(static_cast<u64>(n), d);
        for (u64 k = 0; k < total; ++k) {
            u64 r = k;
            for (int i = d - 1; i >= 0; --i) {
                c[i] = static_cast<i64>(r % n) - P.c_max;
                r /= n;
            }
            cs.push_back(c);
        }
        auto norm = [](const std::vector<i64>& v) {
            i64 mx = 0;
            for (i64 x : v) mx = std::max<i64>(mx, std::abs(x));
            return mx;
        };
        std::stable_sort(cs.begin(), cs.end(), [&](const auto& a, const auto& b) {
            i64 na = norm(a), nb = norm(b);
            return na != nb ? na < nb : a < b;
        });
    }
    auto G = form_automorphisms(f, w.symmetry);

    // Distinct (orbit, q) values are computed once.
    std::map<std::vector<i64>, std::size_t> orbit_index;
    std::vector<std::vector<i64>> reps;
    std::vector<std::size_t> row_orbit;
    for (const auto& c : cs) {
        auto r = orbit_representative(c, G);
        auto it = orbit_index.find(r);
        if (it == orbit_index.end()) {
            it = orbit_index.emplace(r, reps.size()).first;
            reps.push_back(r);
        }
        row_orbit.push_back(it->second);
    }
    rep.orbits = reps.size();

    struct Cell {
        std::complex<double> S = 0.0, I = 0.0;
        double err = 0.0;
        std::string status = "ok";
    };
    const std::size_t nq = P.q_max;
    std::vector<Cell> cells(reps.size() * nq);
    // c = 0 cells share one profile and are cheap; c != 0 cells each build
    // their own oscillatory profile.
    parallel_for(cells.size(), P.workers, [&](std::size_t k) {
        const auto& c = reps[k / nq];
        const u64 q = k % nq + 1;
        Cell& cell = cells[k];
        try {
            cell.S = S_q(q, c, f, t).value;
            if (std::abs(cell.S) == 0.0) return;  // the integral is not needed
            auto r = I_qc(q, c, f, mr, L, w, P.tol, P.node_budget);
            cell.I = {r.value, r.imag};
            cell.err = r.err_estimate;
        } catch (const BudgetExceeded&) {
            cell.status = "budget_exceeded";
        } catch (const std::exception&) {
            cell.status = "failed";
        }
    });

    KahanSum total;
    i64 shell_norm = P.c_max;
    double shell = 0.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        for (u64 q = 1; q <= P.q_max; ++q) {
            const Cell& cell = cells[row_orbit[i] * nq + (q - 1)];
            PipelineRow row;
            row.c = cs[i];
            row.q = q;
            row.orbit = reps[row_orbit[i]];
            row.S = cell.S;
            row.I = cell.I;
            row.I_err = cell.err;
            row.status = cell.status;
            if (cell.status == "ok") {
                row.contribution = (cell.S * cell.I).real() / std::pow(static_cast<double>(q), d);
                total.add(row.contribution);
            } else {
                ++rep.skipped;
            }
            bool on_shell = false;
            for (i64 x : row.c) on_shell = on_shell || std::abs(x) == shell_norm;
            if (shell_norm > 0 && on_shell) shell += std::abs(row.contribution);
            rep.rows.push_back(std::move(row));
        }
    }
    rep.complete = rep.skipped == 0;
    const double scale = rep.c_L / (L * L);
    rep.N_circle = scale * total.value();
    rep.c_shell_magnitude = scale * shell;

    // q-tail: the last c = 0 term continued with the envelope (q_max/q)^{d/2}
    // up to the q beyond which h vanishes on the profile's support.
    {
        const std::size_t zero = orbit_index.at(std::vector<i64>(d, 0));
        const Cell& last = cells[zero * nq + (nq - 1)];
        const double a = std::abs(last.S * last.I) / std::pow(static_cast<double>(P.q_max), d);
        const double T = cached_profile(w, f, P.tol)->T();
        const u64 q_hi = static_cast<u64>(std::ceil(L * std::max(1.0, 2.0 * (T + std::abs(mr)))));
        KahanSum tail;
        for (u64 q = P.q_max + 1; q <= q_hi; ++q)
            tail.add(a * std::pow(static_cast<double>(P.q_max) / static_cast<double>(q), 0.5 * d));
        rep.q_tail_estimate = scale * tail.value();
    }
    try {
        rep.leading = leading_term(w, f, m, L, std::max(P.tol, 1e-6), P.workers);
    } catch (const ValidationError&) {
        rep.leading = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

// Sum of the rows times c_L L^{-2}, in row order.
inline double reconcile(const PipelineReport& rep) {
    KahanSum s;
    for (const auto& r : rep.rows) s.add(r.contribution);
    return rep.c_L / (rep.L * rep.L) * s.value();
}

struct JBuckets {
    double J0 = 0.0;
    double J_less = 0.0;
    double J_greater = 0.0;
};

// J0: c = 0; J_<: 0 < |c| <= L^gamma1; J_>: the rest. Sums of the raw
// contributions, so J0 + J_< + J_> = N_circle L^2 / c_L.
inline JBuckets J_decomposition(const PipelineReport& rep, double gamma1) {
    KahanSum j0, jl, jg;
    const double cut = std::pow(rep.L, gamma1);
    for (const auto& r : rep.rows) {
        double n2 = 0.0;
        for (i64 x : r.c) n2 += static_cast<double>(x) * static_cast<double>(x);
        if (n2 == 0.0)
            j0.add(r.contribution);
        else if (std::sqrt(n2) <= cut)
            jl.add(r.contribution);
        else
            jg.add(r.contribution);
    }
    return {j0.value(), jl.value(), jg.value()};
}

// ---------------------------------------------------------------------------

struct LogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least squares y = slope x + intercept.
inline LogFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("fit: x and y differ in length");
    if (x.size() < 3) throw ValidationError("fit: need at least 3 rows");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ValidationError("fit: x values are all equal");
    LogFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (out.slope * x[i] + out.intercept);
        ss_res += e * e;
    }
    out.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    return out;
}

struct AsymptoticRow {
    double L = 0.0;
    double N_brute = 0.0;
    double truncation_bound = 0.0;
    double leading = 0.0;
    double residual = 0.0;
    double residual_norm = 0.0;  // residual / L^{d-2}
    double residual_q25 = 0.0;   // residual / L^{d/2 + 1/4}
    double residual_q50 = 0.0;   // residual / L^{d/2 + 1/2}
    double N_over_L2 = 0.0;      // d = 4
    double logL = 0.0;
    u64 points = 0;
};

struct AsymptoticTable {
    int d = 0;
    double sigma_inf = 0.0;
    double sigma_inf_err = 0.0;
    double arithmetic = 0.0;  // sigma(A, L^2 m) at the first L, or sigma* for d = 4
    double arithmetic_tail = 0.0;
    std::vector<AsymptoticRow> rows;
    std::optional<LogFit> fit;  // d = 4 with >= 3 rows
};

inline LogFit fit_log_coefficient(const AsymptoticTable& tab) {
    std::vector<double> x, y;
    for (const auto& r : tab.rows) {
        x.push_back(std::log(r.L));
        y.push_back(r.N_brute / std::pow(r.L, tab.d - 2));
    }
    return fit_line(x, y);
}

inline AsymptoticTable asymptotic_table(const Weight& w, const QuadraticForm& f, const Rational& m,
                                        const std::vector<Rational>& L_list, double tol, int workers = 1) {
    const int d = f.dim();
    if (L_list.empty()) throw ValidationError("asymptotic_table: empty L list");
    if (d == 4 && m != 0) throw ValidationError("asymptotic_table: d = 4 needs m = 0");
    AsymptoticTable tab;
    tab.d = d;
    const double mr = static_cast<double>(m);
    auto si = sigma_infinity(w, f, mr, IntegralMethod::automatic, std::max(tol, 1e-7));
    tab.sigma_inf = si.value;
    tab.sigma_inf_err = si.err_estimate;
    if (d == 4) {
        auto st = sigma_star(f, std::vector<i64>(4, 0), 1e-6, 0, workers);
        tab.arithmetic = st.value;
        tab.arithmetic_tail = st.tail_bound;
    }
    std::map<BigInt, SeriesResult> sig_cache;
    for (const auto& Lr : L_list) {
        auto lp = make_lattice_problem(f, m, Lr);
        const double L = static_cast<double>(Lr);
        AsymptoticRow row;
        row.L = L;
        auto cnt = N_L_brute(w, f, m, Lr, tol, workers);
        row.N_brute = cnt.value;
        row.truncation_bound = cnt.truncation_bound;
        row.points = cnt.points;
        row.logL = std::log(L);
        if (d == 4) {
            row.leading = tab.sigma_inf * tab.arithmetic * L * L * row.logL;
            row.N_over_L2 = row.N_brute / (L * L);
        } else {
            auto it = sig_cache.find(lp.mL2);
            if (it == sig_cache.end())
                it = sig_cache.emplace(lp.mL2, sigma(f, static_cast<i64>(lp.mL2), 1e-6, 0, workers)).first;
            if (tab.rows.empty()) {
                tab.arithmetic = it->second.value;
                tab.arithmetic_tail = it->second.tail_bound;
            }
            row.leading = tab.sigma_inf * it->second.value * std::pow(L, d - 2);
        }
        row.residual = row.N_brute - row.leading;
        row.residual_norm = row.residual / std::pow(L, d - 2);
        row.residual_q25 = row.residual / std::pow(L, 0.5 * d + 0.25);
        row.residual_q50 = row.residual / std::pow(L, 0.5 * d + 0.5);
        tab.rows.push_back(row);
    }
    if (d == 4 && tab.rows.size() >= 3) tab.fit = fit_log_coefficient(tab);
    return tab;
}

}  // namespace qlattice
