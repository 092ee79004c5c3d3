#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace qlattice {

struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
    std::size_t size() const { return x.size(); }
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n.
inline Rule1D gauss_legendre(int n) {
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

// Composite Gauss-Legendre rule over consecutive panels given by breakpoints.
inline Rule1D composite_rule(const std::vector<double>& breaks, int order) {
    static thread_local std::vector<Rule1D> cache(64);
    if (cache[order].x.empty()) cache[order] = gauss_legendre(order);
    const Rule1D& g = cache[order];
    Rule1D r;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double a = breaks[i], b = breaks[i + 1];
        if (!(b > a)) continue;
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (std::size_t j = 0; j < g.size(); ++j) {
            r.x.push_back(c + h * g.x[j]);
            r.w.push_back(h * g.w[j]);
        }
    }
    return r;
}

// Uniform panels of width at most `h` between consecutive breakpoints.
inline std::vector<double> refine_breaks(const std::vector<double>& breaks, double h) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double a = breaks[i], b = breaks[i + 1];
        int n = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
        for (int j = 0; j < n; ++j) out.push_back(a + (b - a) * j / n);
    }
    if (!breaks.empty()) out.push_back(breaks.back());
    return out;
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

// Adaptive 15-point Gauss-Kronrod on [a, b].
template <class F>
QuadResult integrate_gk(F&& f, double a, double b, double tol, unsigned max_depth = 30) {
    QuadResult r;
    if (!(b > a)) return r;
    double l1 = 0.0;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, tol, &r.error, &l1);
    return r;
}

}  // namespace qlattice
