#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlattice/errors.hpp"

namespace qlattice {

// Linear maps known to leave w unchanged: none, z -> -z, signed coordinate
// permutations, or all orthogonal maps.
enum class WeightSymmetry { none, even, signed_permutation, orthogonal };

// A weight w: R^d -> R with a declared decay |w(z)| <= C <z>^{-d-gamma},
// <z> = sqrt(1 + |z|^2).
struct Weight {
    std::string name;
    int dim = 0;
    std::function<double(const double*)> eval;
    double gamma = 2.0;
    double C = 1.0;
    // Panel width for tensor rules: the scale on which w varies.
    double length_scale = 1.0;
    // Size of |w| near its peak; integral cutoffs are taken relative to it.
    double magnitude = 1.0;
    bool even = true;  // w(-z) = w(z)
    WeightSymmetry symmetry = WeightSymmetry::even;
    // Radius beyond which |w| < eps; defaults to the declared-decay radius.
    std::function<double(double)> radius_fn;

    double operator()(const double* z) const { return eval(z); }
    double operator()(const std::vector<double>& z) const { return eval(z.data()); }

    double support_radius(double eps) const {
        if (radius_fn) return radius_fn(eps);
        return std::pow(C / eps, 1.0 / (dim + gamma));
    }

    double declared_bound(const double* z) const {
        double r2 = 0.0;
        for (int i = 0; i < dim; ++i) r2 += z[i] * z[i];
        return C * std::pow(1.0 + r2, -0.5 * (dim + gamma));
    }
};

// amp * exp(-|z|^2). sup (1+r^2)^k e^{-r^2} = e^{1-k} k^k at 1 + r^2 = k = (d+2)/2.
inline Weight gaussian_weight(int d, double amp = 1.0) {
    Weight w;
    w.name = amp == 1.0 ? "gaussian" : std::to_string(amp) + "*gaussian";
    w.dim = d;
    w.eval = [d, amp](const double* z) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) r2 += z[i] * z[i];
        return amp * std::exp(-r2);
    };
    const double k = 0.5 * (d + 2);
    w.gamma = 2.0;
    w.C = std::abs(amp) * std::exp(1.0 - k) * std::pow(k, k);
    w.length_scale = 1.0;
    w.magnitude = std::abs(amp);
    w.symmetry = WeightSymmetry::orthogonal;
    w.radius_fn = [amp](double eps) {
        double a = std::abs(amp);
        return a > eps ? std::sqrt(std::log(a / eps)) : 0.0;
    };
    return w;
}

// amp * prod_i e * w0(z_i / R), with w0(x) = exp(1/(x^2-1)); equals amp at 0.
inline Weight bump_weight(int d, double R = 2.0, double amp = 1.0) {
    Weight w;
    w.name = amp == 1.0 ? "bump" : std::to_string(amp) + "*bump";
    w.dim = d;
    w.eval = [d, R, amp](const double* z) {
        double e = 0.0;
        for (int i = 0; i < d; ++i) {
            double x = z[i] / R;
            if (!(x * x < 1.0)) return 0.0;
            e += 1.0 + 1.0 / (x * x - 1.0);
        }
        return amp * std::exp(e);
    };
    w.gamma = 2.0;
    w.C = std::abs(amp) * std::pow(1.0 + d * R * R, 0.5 * (d + 2));
    w.length_scale = R / 2.0;
    w.magnitude = std::abs(amp);
    w.symmetry = WeightSymmetry::signed_permutation;
    w.radius_fn = [d, R](double) { return R * std::sqrt(static_cast<double>(d)); };
    return w;
}

inline Weight zero_weight(int d) {
    Weight w;
    w.name = "zero";
    w.dim = d;
    w.symmetry = WeightSymmetry::orthogonal;
    w.eval = [](const double*) { return 0.0; };
    w.C = 0.0;
    w.magnitude = 0.0;
    w.radius_fn = [](double) { return 0.0; };
    return w;
}

inline Weight scaled_weight(const Weight& base, double a) {
    Weight w = base;
    w.name = std::to_string(a) + "*(" + base.name + ")";
    auto f = base.eval;
    w.eval = [f, a](const double* z) { return a * f(z); };
    w.C = std::abs(a) * base.C;
    w.magnitude = std::abs(a) * base.magnitude;
    auto rf = base.radius_fn;
    if (rf) w.radius_fn = [rf, a](double eps) { return a == 0.0 ? 0.0 : rf(eps / std::abs(a)); };
    return w;
}

// z -> base(M z). Since |M z| >= |z| / |M^{-1}|, the radius grows by |M^{-1}|.
inline Weight pullback_weight(const Weight& base, const Eigen::MatrixXd& M, const std::string& tag = "M") {
    const int d = base.dim;
    if (M.rows() != d || M.cols() != d) throw ValidationError("pullback_weight: matrix has wrong size");
    Weight w = base;
    w.name = base.name + "o" + tag;
    const double nM = M.operatorNorm();
    const double nMi = M.inverse().operatorNorm();
    auto f = base.eval;
    w.eval = [f, M, d](const double* z) {
        Eigen::Map<const Eigen::VectorXd> zv(z, d);
        Eigen::VectorXd y = M * zv;
        return f(y.data());
    };
    w.C = base.C * std::pow(std::max(1.0, nMi), d + base.gamma);
    w.symmetry = base.even ? WeightSymmetry::even : WeightSymmetry::none;
    w.length_scale = base.length_scale / nM;
    auto rf = base.radius_fn;
    w.radius_fn = [rf, nMi, base](double eps) { return nMi * (rf ? rf(eps) : base.support_radius(eps)); };
    return w;
}

inline Weight make_weight(const std::string& name, int d) {
    if (name == "gaussian") return gaussian_weight(d);
    if (name == "bump") return bump_weight(d);
    throw ValidationError("unknown weight '" + name + "' (expected gaussian or bump)");
}

}  // namespace qlattice
