#pragma once

// Integrals over the level sets Sigma_t = {F = t} against |A z|^{-1} dS:
// the singular integral I(t), its profile in t, and the oscillatory
// integrals I_q(c) of the circle method.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "qlattice/errors.hpp"
#include "qlattice/forms.hpp"
#include "qlattice/hkernel.hpp"
#include "qlattice/parallel.hpp"
#include "qlattice/quadrature.hpp"
#include "qlattice/summation.hpp"
#include "qlattice/weight.hpp"

namespace qlattice {

enum class IntegralMethod { automatic, sphere_closed, fibration, thin_shell_mc, coarea_1d, tensor_quadrature };

inline const char* method_name(IntegralMethod m) {
    switch (m) {
        case IntegralMethod::automatic: return "auto";
        case IntegralMethod::sphere_closed: return "sphere_closed";
        case IntegralMethod::fibration: return "fibration";
        case IntegralMethod::thin_shell_mc: return "thin_shell_mc";
        case IntegralMethod::coarea_1d: return "coarea_1d";
        case IntegralMethod::tensor_quadrature: return "tensor_quadrature";
    }
    return "?";
}

inline IntegralMethod parse_method(const std::string& s) {
    if (s == "auto") return IntegralMethod::automatic;
    if (s == "sphere" || s == "sphere_closed") return IntegralMethod::sphere_closed;
    if (s == "fibration") return IntegralMethod::fibration;
    if (s == "mc" || s == "thin_shell_mc") return IntegralMethod::thin_shell_mc;
    throw ValidationError("unknown method '" + s + "' (expected auto, sphere, fibration or mc)");
}

struct IntegralResult {
    double value = 0.0;
    double imag = 0.0;  // only I_q(c) with c != 0 is complex
    double err_estimate = 0.0;
    IntegralMethod method = IntegralMethod::automatic;
    long long samples_or_nodes = 0;
    std::optional<u64> seed;
    bool converged = true;
};

// ---------------------------------------------------------------------------
// Rules on spheres

struct SphereRule {
    int m = 1;  // points lie on S^{m-1} in R^m
    std::vector<double> pts;
    std::vector<double> w;
    std::size_t size() const { return w.size(); }
    const double* point(std::size_t i) const { return pts.data() + i * m; }
};

// Product rule: Gauss-Legendre in each polar angle (with its sine Jacobian),
// trapezoid with 2n nodes in the azimuth. S^0 is the pair {+1, -1}.
inline SphereRule sphere_rule(int m, int n) {
    SphereRule s;
    s.m = m;
    if (m == 1) {
        s.pts = {1.0, -1.0};
        s.w = {1.0, 1.0};
        return s;
    }
    if (m == 2) {
        const int k = 2 * n;
        for (int i = 0; i < k; ++i) {
            double a = 2.0 * std::numbers::pi * (i + 0.5) / k;
            s.pts.push_back(std::cos(a));
            s.pts.push_back(std::sin(a));
            s.w.push_back(2.0 * std::numbers::pi / k);
        }
        return s;
    }
    SphereRule sub = sphere_rule(m - 1, n);
    Rule1D g = gauss_legendre(n);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double phi = 0.5 * std::numbers::pi * (1.0 + g.x[i]);
        double wphi = 0.5 * std::numbers::pi * g.w[i] * std::pow(std::sin(phi), m - 2);
        for (std::size_t j = 0; j < sub.size(); ++j) {
            s.pts.push_back(std::cos(phi));
            for (int k = 0; k < m - 1; ++k) s.pts.push_back(std::sin(phi) * sub.point(j)[k]);
            s.w.push_back(wphi * sub.w[j]);
        }
    }
    return s;
}

inline double unit_sphere_area(int m) {
    // |S^{m-1}| = 2 pi^{m/2} / Gamma(m/2)
    return 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
}

namespace detail {

// Orthonormal completion of theta: columns 1..m-1 of the Householder
// reflection sending e1 to theta (identity when theta = e1).
inline std::vector<double> householder_frame(const double* theta, int m) {
    std::vector<double> v(theta, theta + m);
    v[0] -= 1.0;
    double nv = 0.0;
    for (double x : v) nv += x * x;
    std::vector<double> frame((m - 1) * m, 0.0);
    for (int c = 1; c < m; ++c)
        for (int r = 0; r < m; ++r) {
            double h = (r == c ? 1.0 : 0.0);
            if (nv > 1e-28) h -= 2.0 * v[r] * v[c] / nv;
            frame[(c - 1) * m + r] = h;
        }
    return frame;
}

template <class T>
struct Accum;
template <>
struct Accum<double> {
    KahanSum s;
    void add(double v) { s.add(v); }
    double value() const { return s.value(); }
};
template <>
struct Accum<std::complex<double>> {
    ComplexKahanSum s;
    void add(std::complex<double> v) { s.add(v); }
    std::complex<double> value() const { return s.value(); }
};

// Breakpoints on [a, b] with width <= h, graded geometrically toward each
// point in `grade` (kinks of the integrand).
inline std::vector<double> graded_breaks(double a, double b, double h, const std::vector<double>& grade,
                                         int levels) {
    std::vector<double> pts{a, b};
    for (double g : grade) {
        if (!(g > a && g < b)) continue;
        pts.push_back(g);
        for (int k = 1; k <= levels; ++k) {
            double e = h * std::ldexp(1.0, -k);
            if (g - e > a) pts.push_back(g - e);
            if (g + e < b) pts.push_back(g + e);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return refine_breaks(pts, h);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fibration of the normal-form quadric
//
// With Q(u, x, y) = |u|^2/2 + x.y and s = t - |u|^2/2, the fiber over (u, x)
// is the hyperplane x.y = s. Writing x = r theta and y = (s/r) theta + ybar
// with ybar orthogonal to theta,
//   int g dmu_t = int du int dr r^{d1-2} int dtheta int dybar g(u, x, y).

struct FibrationParams {
    double R = 5.0;       // radius in normal coordinates beyond which g is negligible
    double h = 1.0;       // panel width
    int order = 6;        // Gauss-Legendre order per panel
    int ntheta = 12;      // sphere resolution for x-directions
    int ntheta_u = 8;     // sphere resolution for u-directions (n >= 2)
    int geo = 24;         // geometric panels toward r = 0
    double node_budget = 4e8;
};

namespace detail {

inline std::vector<double> r_breaks(double s, const FibrationParams& P) {
    const double top = std::min(P.h, P.R);
    double lo = std::max(std::abs(s) / P.R, top * std::ldexp(1.0, -P.geo));
    if (lo >= P.R) return {};
    std::vector<double> b{lo};
    while (b.back() * 2.0 < top) b.push_back(b.back() * 2.0);
    const double cur = b.back();
    const int n = std::max(1, static_cast<int>(std::ceil((P.R - cur) / P.h)));
    for (int j = 1; j <= n; ++j) b.push_back(cur + (P.R - cur) * j / n);
    return b;
}

struct FibrationLayout {
    std::vector<std::vector<double>> u;  // u-nodes
    std::vector<double> uw;
    SphereRule theta;
    std::vector<std::vector<double>> frames;
    Rule1D ybar1;  // d1 == 2: line rule
    Rule1D yrad;   // d1 >= 3: radial rule
    SphereRule ydir;
};

inline FibrationLayout fibration_layout(int n, int d1, double t, const FibrationParams& P) {
    FibrationLayout lay;
    if (n == 0) {
        lay.u.push_back({});
        lay.uw.push_back(1.0);
    } else if (n == 1) {
        std::vector<double> grade{0.0};
        if (t > 0) grade.push_back(std::sqrt(2.0 * t)), grade.push_back(-std::sqrt(2.0 * t));
        Rule1D r = composite_rule(graded_breaks(-P.R, P.R, P.h, grade, 8), P.order);
        for (std::size_t i = 0; i < r.size(); ++i) {
            lay.u.push_back({r.x[i]});
            lay.uw.push_back(r.w[i]);
        }
    } else {
        std::vector<double> grade;
        if (t > 0) grade.push_back(std::sqrt(2.0 * t));
        Rule1D r = composite_rule(graded_breaks(0.0, P.R, P.h, grade, 8), P.order);
        SphereRule dir = sphere_rule(n, P.ntheta_u);
        for (std::size_t i = 0; i < r.size(); ++i)
            for (std::size_t j = 0; j < dir.size(); ++j) {
                std::vector<double> u(n);
                for (int k = 0; k < n; ++k) u[k] = r.x[i] * dir.point(j)[k];
                lay.u.push_back(u);
                lay.uw.push_back(r.w[i] * std::pow(r.x[i], n - 1) * dir.w[j]);
            }
    }
    lay.theta = sphere_rule(d1, P.ntheta);
    if (d1 >= 2)
        for (std::size_t i = 0; i < lay.theta.size(); ++i)
            lay.frames.push_back(householder_frame(lay.theta.point(i), d1));
    if (d1 == 2) lay.ybar1 = composite_rule(refine_breaks({-P.R, P.R}, P.h), P.order);
    if (d1 >= 3) {
        lay.yrad = composite_rule(refine_breaks({0.0, P.R}, P.h), P.order);
        for (std::size_t i = 0; i < lay.yrad.size(); ++i) lay.yrad.w[i] *= std::pow(lay.yrad.x[i], d1 - 2);
        lay.ydir = sphere_rule(d1 - 1, P.ntheta);
    }
    return lay;
}

inline double fibration_node_estimate(int n, int d1, const FibrationLayout& lay, const FibrationParams& P) {
    double nr = static_cast<double>(r_breaks(0.0, P).size()) * P.order;
    double ny = d1 == 1 ? 1.0
                        : (d1 == 2 ? static_cast<double>(lay.ybar1.size())
                                   : static_cast<double>(lay.yrad.size() * lay.ydir.size()));
    (void)n;
    return static_cast<double>(lay.u.size()) * nr * static_cast<double>(lay.theta.size()) * ny;
}

}  // namespace detail

// g receives normal coordinates Z = (u, x, y) and must already include 1/|det L|.
template <class T, class G>
T fibration_integral(int n, int d1, double t, G&& g, const FibrationParams& P, long long* nodes = nullptr,
                     int workers = 1) {
    const int d = n + 2 * d1;
    auto lay = detail::fibration_layout(n, d1, t, P);
    if (detail::fibration_node_estimate(n, d1, lay, P) > P.node_budget)
        throw BudgetExceeded("budget exceeded: fibration rule needs more than the node budget");
    std::vector<T> part(lay.u.size(), T{});
    std::vector<long long> cnt(lay.u.size(), 0);
    parallel_for(lay.u.size(), workers, [&](std::size_t iu) {
        std::vector<double> Z(d, 0.0);
        const auto& u = lay.u[iu];
        double u2 = 0.0;
        for (int k = 0; k < n; ++k) {
            Z[k] = u[k];
            u2 += u[k] * u[k];
        }
        const double s = t - 0.5 * u2;
        auto rb = detail::r_breaks(s, P);
        if (rb.empty()) return;
        Rule1D rr = composite_rule(rb, P.order);
        detail::Accum<T> acc;
        long long c = 0;
        for (std::size_t ir = 0; ir < rr.size(); ++ir) {
            const double r = rr.x[ir];
            const double wr = rr.w[ir] * std::pow(r, d1 - 2);
            const double sr = s / r;
            if (std::abs(sr) >= P.R) continue;
            for (std::size_t it = 0; it < lay.theta.size(); ++it) {
                const double* th = lay.theta.point(it);
                const double wt = wr * lay.theta.w[it];
                for (int k = 0; k < d1; ++k) {
                    Z[n + k] = r * th[k];
                    Z[n + d1 + k] = sr * th[k];
                }
                if (d1 == 1) {
                    acc.add(wt * g(Z.data()));
                    ++c;
                    continue;
                }
                const double* fr = lay.frames[it].data();
                if (d1 == 2) {
                    for (std::size_t iy = 0; iy < lay.ybar1.size(); ++iy) {
                        const double yb = lay.ybar1.x[iy];
                        for (int k = 0; k < 2; ++k) Z[n + 2 + k] = sr * th[k] + yb * fr[k];
                        acc.add(wt * lay.ybar1.w[iy] * g(Z.data()));
                    }
                    c += static_cast<long long>(lay.ybar1.size());
                    continue;
                }
                for (std::size_t iy = 0; iy < lay.yrad.size(); ++iy) {
                    const double rho = lay.yrad.x[iy];
                    for (std::size_t jy = 0; jy < lay.ydir.size(); ++jy) {
                        const double* dir = lay.ydir.point(jy);
                        for (int k = 0; k < d1; ++k) {
                            double v = sr * th[k];
                            for (int e = 0; e < d1 - 1; ++e) v += rho * dir[e] * fr[e * d1 + k];
                            Z[n + d1 + k] = v;
                        }
                        acc.add(wt * lay.yrad.w[iy] * lay.ydir.w[jy] * g(Z.data()));
                    }
                }
                c += static_cast<long long>(lay.yrad.size() * lay.ydir.size());
            }
        }
        part[iu] = lay.uw[iu] * acc.value();
        cnt[iu] = c;
    });
    detail::Accum<T> total;
    long long c = 0;
    for (std::size_t i = 0; i < part.size(); ++i) {
        total.add(part[i]);
        c += cnt[i];
    }
    if (nodes) *nodes += c;
    return total.value();
}

// ---------------------------------------------------------------------------
// Singular integral I(t) = int_{Sigma_t} w |Az|^{-1} dS

namespace detail {

// Integrand in normal coordinates: w(L^{-1} Z) e(-xi . L^{-1} Z) / |det L|.
struct NormalIntegrand {
    const Weight* w;
    const NormalFormMap* nf;
    std::vector<double> xi;  // empty: no phase
    mutable std::vector<double> z;

    std::complex<double> operator()(const double* Z) const {
        const int d = nf->dim();
        z.assign(d, 0.0);
        for (int i = 0; i < d; ++i) {
            double v = 0.0;
            for (int j = 0; j < d; ++j) v += nf->L_inv(i, j) * Z[j];
            z[i] = v;
        }
        double val = (*w)(z.data()) / nf->detAbs;
        if (xi.empty() || val == 0.0) return val;
        double ph = 0.0;
        for (int i = 0; i < d; ++i) ph += xi[i] * z[i];
        return std::polar(val, -2.0 * std::numbers::pi * ph);
    }
    double real(const double* Z) const {
        const int d = nf->dim();
        z.assign(d, 0.0);
        for (int i = 0; i < d; ++i) {
            double v = 0.0;
            for (int j = 0; j < d; ++j) v += nf->L_inv(i, j) * Z[j];
            z[i] = v;
        }
        return (*w)(z.data()) / nf->detAbs;
    }
};

inline FibrationParams fibration_params(const Weight& w, const NormalFormMap& nf, double tol,
                                        const std::vector<double>& xi = {}) {
    FibrationParams P;
    const double eps = std::min(1e-4, tol * 1e-2);
    const double nL = nf.L_map.operatorNorm();
    const double nLi = nf.L_inv.operatorNorm();
    P.R = std::max(1e-12, w.support_radius(eps * w.magnitude) * nL);
    P.h = w.length_scale / nLi;
    P.order = tol < 1e-7 ? 8 : 6;
    P.ntheta = tol < 1e-7 ? 16 : 12;
    P.ntheta_u = tol < 1e-7 ? 12 : 8;
    if (!xi.empty()) {
        // Resolve e(-eta . Z), eta = L^{-T} xi: about one wavelength per panel.
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
        const double eta = (nf.L_inv.transpose() * x).norm();
        if (eta > 0) {
            P.h = std::min(P.h, 1.0 / eta);
            const int need = static_cast<int>(std::ceil(0.5 * (2.0 * std::numbers::pi * eta * P.R * 1.3))) + 8;
            P.ntheta = std::max(P.ntheta, need);
            P.ntheta_u = std::max(P.ntheta_u, need / 2);
        }
    }
    return P;
}

inline bool is_definite(const NormalFormMap& nf) { return nf.d1 == 0; }

}  // namespace detail

// Level t_eff of the normalized quadric; the set is empty when t_eff < 0.
// Sphere of radius rho = sqrt(2 t_eff): int g dmu = rho^{d-2} int_{S^{d-1}} g(rho theta) dtheta.
inline IntegralResult sigma_infinity_sphere(const Weight& w, const NormalFormMap& nf, double t, double tol,
                                            const std::vector<double>& xi = {}) {
    IntegralResult res;
    res.method = IntegralMethod::sphere_closed;
    if (!detail::is_definite(nf)) throw ValidationError("sphere route needs a sign-definite form");
    const double te = nf.flipped ? -t : t;
    const int d = nf.dim();
    if (te <= 0.0) return res;  // empty set (t_eff < 0) or a single point of zero measure
    const double rho = std::sqrt(2.0 * te);
    detail::NormalIntegrand g{&w, &nf, xi, {}};
    auto eval = [&](int n) {
        SphereRule sr = sphere_rule(d, n);
        ComplexKahanSum s;
        std::vector<double> Z(d);
        for (std::size_t i = 0; i < sr.size(); ++i) {
            for (int k = 0; k < d; ++k) Z[k] = rho * sr.point(i)[k];
            s.add(sr.w[i] * g(Z.data()));
        }
        res.samples_or_nodes += static_cast<long long>(sr.size());
        return std::pow(rho, d - 2) * s.value();
    };
    int n = 8;
    std::complex<double> prev = eval(n);
    for (;;) {
        if (std::pow(2.0 * n, d - 1) * 2.0 > 2e7) {
            res.converged = false;
            break;
        }
        n *= 2;
        std::complex<double> cur = eval(n);
        res.err_estimate = std::abs(cur - prev);
        prev = cur;
        if (res.err_estimate <= tol * std::max(1e-300, std::abs(cur))) break;
    }
    res.value = prev.real();
    res.imag = prev.imag();
    return res;
}

inline IntegralResult sigma_infinity_fibration(const Weight& w, const NormalFormMap& nf, double t, double tol,
                                               const std::vector<double>& xi = {}, bool estimate_error = true,
                                               double node_budget = 4e8) {
    IntegralResult res;
    res.method = IntegralMethod::fibration;
    if (detail::is_definite(nf)) throw ValidationError("fibration route needs an indefinite form");
    const double te = nf.flipped ? -t : t;
    if (w.support_radius(1e-300) == 0.0) return res;
    auto P = detail::fibration_params(w, nf, tol, xi);
    P.node_budget = node_budget;
    detail::NormalIntegrand g{&w, &nf, xi, {}};
    long long nodes = 0;
    std::complex<double> v;
    if (xi.empty()) {
        auto gr = [&](const double* Z) { return g.real(Z); };
        v = fibration_integral<double>(nf.n, nf.d1, te, gr, P, &nodes);
        if (estimate_error) {
            auto Pc = P;
            Pc.order -= 2;
            double vc = fibration_integral<double>(nf.n, nf.d1, te, gr, Pc, &nodes);
            res.err_estimate = std::abs(v.real() - vc);
        }
    } else {
        v = fibration_integral<std::complex<double>>(nf.n, nf.d1, te, g, P, &nodes);
        if (estimate_error) {
            auto Pc = P;
            Pc.order -= 2;
            auto vc = fibration_integral<std::complex<double>>(nf.n, nf.d1, te, g, Pc, &nodes);
            res.err_estimate = std::abs(v - vc);
        }
    }
    res.value = v.real();
    res.imag = v.imag();
    res.samples_or_nodes = nodes;
    res.converged = !estimate_error || res.err_estimate <= tol * std::max(std::abs(v), 1e-300);
    return res;
}

// (1/2eps) int w 1{|F - t| <= eps} dz with a Gaussian proposal stratified on
// the first coordinate, combined as 2 I(eps/2) - I(eps) from the same samples.
// Each stratum draws from its own generator seeded by (seed, stratum), so the
// estimate does not depend on the worker count.
inline IntegralResult sigma_infinity_mc(const Weight& w, const QuadraticForm& f, double t, double tol, u64 seed,
                                        long long samples = 0, int workers = 1) {
    IntegralResult res;
    res.method = IntegralMethod::thin_shell_mc;
    res.seed = seed;
    const int d = f.dim();
    const auto [np, nm] = f.signature();
    if ((nm == 0 && t < 0) || (np == 0 && t > 0)) return res;
    if (samples <= 0) samples = static_cast<long long>(std::clamp(1e5 / tol, 2e5, 2e7));
    const int K = 64;
    const long long per = std::max<long long>(1, samples / K);
    // The extrapolated bias is O(eps^2) and the variance O(1/(N eps)); below
    // eps ~ N^{-1/5} the noise dominates, so a tighter tol does not shrink eps further.
    const double eps = std::max(std::sqrt(tol), std::pow(static_cast<double>(per * K), -0.2)) *
                       std::pow(1.0 + t * t, 0.25);
    const double sigma = std::max(1e-6, w.support_radius(1e-3 * w.magnitude) / 3.0);
    const Eigen::MatrixXd A = f.real_matrix();
    const double lognorm = -0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma);
    boost::math::normal_distribution<double> stdn;
    std::vector<double> mean(K, 0.0), var(K, 0.0);
    parallel_for(K, workers, [&](std::size_t k) {
        std::seed_seq sq{static_cast<u64>(seed & 0xffffffffu), static_cast<u64>(seed >> 32), static_cast<u64>(k),
                         static_cast<u64>(0x51a7u)};
        std::mt19937_64 gen(sq);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::normal_distribution<double> nrm(0.0, 1.0);
        std::vector<double> z(d);
        double s1 = 0.0, s2 = 0.0;
        for (long long i = 0; i < per; ++i) {
            double u = (static_cast<double>(k) + uni(gen)) / K;
            u = std::clamp(u, 1e-300, 1.0 - 1e-16);
            z[0] = sigma * boost::math::quantile(stdn, u);
            for (int j = 1; j < d; ++j) z[j] = sigma * nrm(gen);
            double F = 0.0, r2 = 0.0;
            for (int a = 0; a < d; ++a) {
                r2 += z[a] * z[a];
                double row = 0.0;
                for (int b = 0; b < d; ++b) row += A(a, b) * z[b];
                F += 0.5 * z[a] * row;
            }
            double dev = std::abs(F - t);
            double val = 0.0;
            if (dev <= eps) {
                double ind = (dev <= 0.5 * eps ? 4.0 : 0.0) - 1.0;
                double logp = lognorm - 0.5 * r2 / (sigma * sigma);
                val = ind * w(z.data()) * std::exp(-logp) / (2.0 * eps);
            }
            s1 += val;
            s2 += val * val;
        }
        const double m = s1 / per;
        mean[k] = m;
        var[k] = per > 1 ? std::max(0.0, (s2 / per - m * m) * per / (per - 1)) : 0.0;
    });
    KahanSum tot, v;
    for (int k = 0; k < K; ++k) {
        tot.add(mean[k] / K);
        v.add(var[k] / (static_cast<double>(K) * K * per));
    }
    res.value = tot.value();
    res.err_estimate = std::sqrt(v.value());
    res.samples_or_nodes = per * K;
    res.converged = res.err_estimate <= tol * std::max(1e-300, std::abs(res.value));
    return res;
}

inline IntegralResult sigma_infinity(const Weight& w, const QuadraticForm& f, double t,
                                     IntegralMethod method = IntegralMethod::automatic, double tol = 1e-6,
                                     std::optional<u64> seed = std::nullopt) {
    if (w.dim != f.dim()) throw ValidationError("weight dimension does not match the form");
    if (!(tol > 0)) throw ValidationError("tol must be positive");
    auto nf = normalize_form(f);
    if (method == IntegralMethod::automatic)
        method = detail::is_definite(nf) ? IntegralMethod::sphere_closed : IntegralMethod::fibration;
    switch (method) {
        case IntegralMethod::sphere_closed: return sigma_infinity_sphere(w, nf, t, tol);
        case IntegralMethod::fibration: return sigma_infinity_fibration(w, nf, t, tol);
        case IntegralMethod::thin_shell_mc:
            if (!seed) throw ValidationError("thin_shell_mc needs a seed");
            return sigma_infinity_mc(w, f, t, tol, *seed);
        default: throw ValidationError("method not available for sigma_infinity");
    }
}

// ---------------------------------------------------------------------------
// Profile t -> I_xi(t) = int_{Sigma_t} w e(-xi . z) dmu_t
//
// I is smooth away from t = 0, where the level set passes through the
// origin. Nodes are a uniform grid with geometric refinement toward 0;
// interpolation is cubic Lagrange on nodes from one side of 0 only.

class Profile {
public:
    Profile(const Weight& w, const QuadraticForm& f, double tol, std::vector<double> xi = {},
            double node_budget = 4e8)
        : w_(w), nf_(normalize_form(f)), tol_(tol), xi_(std::move(xi)), budget_(node_budget) {
        const double eps = std::min(1e-4, tol * 1e-2);
        const double rz = w.support_radius(eps * w.magnitude);
        T_ = 0.5 * f.real_matrix().operatorNorm() * rz * rz;
        double xin = 0.0;
        for (double v : xi_) xin += v * v;
        xin = std::sqrt(xin);
        step_ = xin > 0 ? std::min(0.1, 0.15 / xin) : 0.1;
        const double g = 4.0 * step_;
        side_.push_back(0.0);
        for (int k = 10; k >= 1; --k) side_.push_back(g * std::ldexp(1.0, -k));
        for (double v = g; v < T_ + 3 * step_; v += step_) side_.push_back(v);
    }

    double T() const { return T_; }
    double step() const { return step_; }
    bool oscillatory() const { return !xi_.empty(); }

    // Exact evaluation at t, memoized.
    std::complex<double> exact(double t) {
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto it = vals_.find(t);
            if (it != vals_.end()) return it->second;
        }
        IntegralResult r;
        if (detail::is_definite(nf_))
            r = sigma_infinity_sphere(w_, nf_, t, tol_, xi_);
        else
            r = sigma_infinity_fibration(w_, nf_, t, tol_, xi_, false, budget_);
        std::complex<double> v{r.value, r.imag};
        std::lock_guard<std::mutex> lk(mu_);
        vals_[t] = v;
        nodes_ += r.samples_or_nodes;
        return v;
    }

    std::complex<double> operator()(double t) {
        const double a = std::abs(t);
        if (a > T_) return 0.0;
        const double sgn = t < 0 ? -1.0 : 1.0;
        auto it = std::upper_bound(side_.begin(), side_.end(), a);
        long i = static_cast<long>(it - side_.begin()) - 1;
        long lo = std::clamp<long>(i - 1, 0, static_cast<long>(side_.size()) - 4);
        std::complex<double> v = 0.0;
        for (long j = lo; j < lo + 4; ++j) {
            double lj = 1.0;
            for (long k = lo; k < lo + 4; ++k)
                if (k != j) lj *= (a - side_[k]) / (side_[j] - side_[k]);
            v += lj * exact(sgn * side_[j]);
        }
        return v;
    }

    // Error of the nodes themselves, measured at one point with a coarser rule.
    double node_error(double t) const {
        IntegralResult r = detail::is_definite(nf_) ? sigma_infinity_sphere(w_, nf_, t, tol_, xi_)
                                                     : sigma_infinity_fibration(w_, nf_, t, tol_, xi_, true, budget_);
        return r.err_estimate;
    }

    // Interpolation nodes inside [lo, hi]; the interpolant is a polynomial between them.
    std::vector<double> grid_in(double lo, double hi) const {
        std::vector<double> out;
        for (double v : side_) {
            if (v > T_) break;
            if (v >= lo && v <= hi) out.push_back(v);
            if (v > 0 && -v >= lo && -v <= hi) out.push_back(-v);
        }
        return out;
    }

    long long nodes() const { return nodes_; }
    std::size_t evaluated() const { return vals_.size(); }

    double estimated_cost() const {
        if (detail::is_definite(nf_)) return 0.0;
        auto P = detail::fibration_params(w_, nf_, tol_, xi_);
        auto lay = detail::fibration_layout(nf_.n, nf_.d1, 0.0, P);
        return detail::fibration_node_estimate(nf_.n, nf_.d1, lay, P) * 2.0 * side_.size();
    }

private:
    Weight w_;
    NormalFormMap nf_;
    double tol_;
    std::vector<double> xi_;
    double budget_;
    double T_ = 0.0, step_ = 0.1;
    std::vector<double> side_;
    std::map<double, std::complex<double>> vals_;
    long long nodes_ = 0;
    std::mutex mu_;
};

// Shared profiles keyed by (form, weight, tol, frequency).
inline std::shared_ptr<Profile> cached_profile(const Weight& w, const QuadraticForm& f, double tol,
                                               const std::vector<double>& xi = {}, double node_budget = 4e8) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<Profile>> cache;
    std::string key = f.hash() + "|" + w.name + "|" + std::to_string(tol);
    for (double v : xi) key += "|" + std::to_string(v);
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto p = std::make_shared<Profile>(w, f, tol, xi, node_budget);
    cache.emplace(key, p);
    return p;
}

inline std::vector<IntegralResult> profile_I(const Weight& w, const QuadraticForm& f, const std::vector<double>& t_grid,
                                             IntegralMethod method = IntegralMethod::automatic, double tol = 1e-6) {
    std::vector<IntegralResult> out;
    if (method == IntegralMethod::automatic) {
        auto prof = cached_profile(w, f, tol);
        for (double t : t_grid) {
            IntegralResult r;
            r.method = detail::is_definite(normalize_form(f)) ? IntegralMethod::sphere_closed
                                                               : IntegralMethod::fibration;
            r.value = prof->exact(t).real();
            out.push_back(r);
        }
        return out;
    }
    for (double t : t_grid) out.push_back(sigma_infinity(w, f, t, method, tol));
    return out;
}

// ---------------------------------------------------------------------------
// I_q(c; A, m, L) = int w(z/L) h(q/L, F^{L^2 m}(z)/L^2) e_q(-z.c) dz
//                 = L^d int I_xi(m + t) h(q/L, t) dt,  xi = L c / q.

namespace detail {

// int I(m + t) h(x, t) dt on the pieces between the kinks of h, the profile's
// kink at t = -m and the interpolation nodes; Gauss-Legendre of two orders,
// the difference serving as the error estimate.
inline std::complex<double> h_against_profile(Profile& prof, double x, double m, int order, long long* nodes,
                                              double* err) {
    const double T = prof.T();
    const double lo = -m - T, hi = -m + T;
    auto br = h_breakpoints(x, lo, hi);
    for (double g : prof.grid_in(-T, T)) br.push_back(g - m);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    auto run = [&](int ord) {
        Rule1D r = composite_rule(br, ord);
        ComplexKahanSum s;
        for (std::size_t i = 0; i < r.size(); ++i) {
            double hv = eval_h(x, r.x[i]);
            if (hv == 0.0) continue;
            s.add(r.w[i] * hv * prof(m + r.x[i]));
        }
        if (nodes) *nodes += static_cast<long long>(r.size());
        return s.value();
    };
    auto hi_v = run(order);
    if (err) *err = std::abs(hi_v - run(order * 2 / 3));
    return hi_v;
}

inline double h_abs_mass(double x, double m, double T) {
    auto br = h_breakpoints(x, -m - T, -m + T);
    Rule1D r = composite_rule(br, 8);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * std::abs(eval_h(x, r.x[i]));
    return s;
}

}  // namespace detail

inline IntegralResult I_q0(double q, const QuadraticForm& f, double m, double L, const Weight& w, double tol = 1e-6) {
    if (!(q > 0) || !(L > 0)) throw ValidationError("I_q0: q and L must be positive");
    IntegralResult res;
    res.method = IntegralMethod::coarea_1d;
    if (w.support_radius(1e-300) == 0.0) return res;
    auto prof = cached_profile(w, f, tol);
    const double x = q / L;
    const double Ld = std::pow(L, f.dim());
    long long nodes = 0;
    double qerr = 0.0;
    auto v = detail::h_against_profile(*prof, x, m, 12, &nodes, &qerr);
    res.value = Ld * v.real();
    const double node_err = prof->node_error(m) * detail::h_abs_mass(x, m, prof->T());
    res.err_estimate = Ld * (qerr + node_err);
    res.samples_or_nodes = nodes;
    res.converged = res.err_estimate <= tol * std::max(std::abs(res.value), 1e-300) * 10.0;
    return res;
}

inline IntegralResult I_qc(u64 q, const std::vector<i64>& c, const QuadraticForm& f, double m, double L,
                           const Weight& w, double tol = 1e-4, double node_budget = 2e9) {
    if (q == 0 || !(L > 0)) throw ValidationError("I_qc: q and L must be positive");
    if (static_cast<int>(c.size()) != f.dim()) throw ValidationError("I_qc: c has wrong dimension");
    bool zero = std::all_of(c.begin(), c.end(), [](i64 v) { return v == 0; });
    if (zero) return I_q0(static_cast<double>(q), f, m, L, w, tol);
    if (f.dim() > 5) throw ValidationError("I_qc: the oscillatory route is limited to d <= 5");
    IntegralResult res;
    res.method = IntegralMethod::tensor_quadrature;
    if (w.support_radius(1e-300) == 0.0) return res;
    std::vector<double> xi(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) xi[i] = L * static_cast<double>(c[i]) / static_cast<double>(q);
    auto prof = cached_profile(w, f, tol, xi, node_budget);
    if (prof->estimated_cost() > node_budget)
        throw BudgetExceeded("budget exceeded: oscillatory profile for I_q(c) needs more than the node budget");
    const double x = static_cast<double>(q) / L;
    const double Ld = std::pow(L, f.dim());
    long long nodes = 0;
    double qerr = 0.0;
    auto v = detail::h_against_profile(*prof, x, m, 12, &nodes, &qerr);
    res.value = Ld * v.real();
    res.imag = Ld * v.imag();
    const double node_err = prof->node_error(m) * detail::h_abs_mass(x, m, prof->T());
    res.err_estimate = Ld * (qerr + node_err);
    res.samples_or_nodes = nodes + prof->nodes();
    res.converged = res.err_estimate <= tol * std::max(std::abs(v) * Ld, 1e-300) * 10.0;
    return res;
}

}  // namespace qlattice
