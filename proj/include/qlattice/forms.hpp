#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qlattice/arith.hpp"
#include "qlattice/errors.hpp"

namespace qlattice {

using RationalVec = std::vector<Rational>;

namespace detail {

// Bareiss fraction-free determinant.
inline BigInt bareiss_det(std::vector<BigInt> m, int n) {
    int sign = 1;
    BigInt prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m[k * n + k] == 0) {
            int r = k + 1;
            while (r < n && m[r * n + k] == 0) ++r;
            if (r == n) return 0;
            for (int j = 0; j < n; ++j) std::swap(m[k * n + j], m[r * n + j]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
        prev = m[k * n + k];
    }
    return sign * m[(n - 1) * n + (n - 1)];
}

// Exact inertia of a symmetric rational matrix by symmetric elimination.
// When every remaining diagonal entry vanishes, e_i -> e_i + e_j creates a
// nonzero pivot 2 S_ij.
inline std::pair<int, int> rational_inertia(std::vector<Rational> s, int n) {
    std::vector<int> live(n);
    for (int i = 0; i < n; ++i) live[i] = i;
    int np = 0, nm = 0;
    auto at = [&](int i, int j) -> Rational& { return s[i * n + j]; };
    while (!live.empty()) {
        int piv = -1;
        for (int i : live)
            if (at(i, i) != 0) { piv = i; break; }
        if (piv < 0) {
            int pi = -1, pj = -1;
            for (int i : live)
                for (int j : live)
                    if (i != j && at(i, j) != 0 && pi < 0) { pi = i; pj = j; }
            if (pi < 0) throw ValidationError("degenerate form: zero pivot chain exhausted (non-degeneracy violated)");
            for (int k = 0; k < n; ++k) at(pi, k) += at(pj, k);
            for (int k = 0; k < n; ++k) at(k, pi) += at(k, pj);
            piv = pi;
        }
        const Rational d = at(piv, piv);
        (d > 0 ? np : nm) += 1;
        for (int i : live) {
            if (i == piv || at(i, piv) == 0) continue;
            Rational f = at(i, piv) / d;
            for (int k : live) at(i, k) -= f * at(piv, k);
        }
        for (int i : live) if (i != piv) at(piv, i) = 0;
        live.erase(std::find(live.begin(), live.end(), piv));
    }
    return {np, nm};
}

inline std::vector<Rational> rational_inverse(const std::vector<BigInt>& a, int n) {
    std::vector<Rational> m(n * 2 * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m[i * 2 * n + j] = Rational(a[i * n + j]);
        m[i * 2 * n + n + i] = 1;
    }
    for (int c = 0; c < n; ++c) {
        int r = c;
        while (r < n && m[r * 2 * n + c] == 0) ++r;
        if (r == n) throw ValidationError("singular matrix");
        if (r != c)
            for (int j = 0; j < 2 * n; ++j) std::swap(m[r * 2 * n + j], m[c * 2 * n + j]);
        Rational inv = 1 / m[c * 2 * n + c];
        for (int j = 0; j < 2 * n; ++j) m[c * 2 * n + j] *= inv;
        for (int i = 0; i < n; ++i) {
            if (i == c || m[i * 2 * n + c] == 0) continue;
            Rational f = m[i * 2 * n + c];
            for (int j = 0; j < 2 * n; ++j) m[i * 2 * n + j] -= f * m[c * 2 * n + j];
        }
    }
    std::vector<Rational> out(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i * n + j] = m[i * 2 * n + n + j];
    return out;
}

}  // namespace detail

// F(z) = 1/2 z^T A z with A integral, symmetric, even diagonal, det != 0.
class QuadraticForm {
public:
    QuadraticForm(int dim, std::vector<BigInt> matrix) : d_(dim), a_(std::move(matrix)) {
        if (d_ < 3) throw ValidationError("dim: forms must have dimension d >= 3");
        if (static_cast<int>(a_.size()) != d_ * d_)
            throw ValidationError("matrix: expected dim*dim entries");
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < i; ++j)
                if (a_[i * d_ + j] != a_[j * d_ + i])
                    throw ValidationError("symmetry violated: A[" + std::to_string(i) + "][" +
                                          std::to_string(j) + "] != A[" + std::to_string(j) + "][" +
                                          std::to_string(i) + "]");
        for (int i = 0; i < d_; ++i)
            if (a_[i * d_ + i] % 2 != 0)
                throw ValidationError("even diagonal violated: A[" + std::to_string(i) + "][" +
                                      std::to_string(i) + "] is odd");
        det_ = detail::bareiss_det(a_, d_);
        if (det_ == 0) throw ValidationError("non-degeneracy violated: det A = 0");
        std::vector<Rational> s(a_.begin(), a_.end());
        sig_ = detail::rational_inertia(std::move(s), d_);
        inv_ = detail::rational_inverse(a_, d_);
    }

    int dim() const { return d_; }
    const BigInt& a(int i, int j) const { return a_[i * d_ + j]; }
    const std::vector<BigInt>& matrix() const { return a_; }
    const BigInt& det() const { return det_; }
    std::pair<int, int> signature() const { return sig_; }
    const Rational& inv(int i, int j) const { return inv_[i * d_ + j]; }

    i64 a64(int i, int j) const { return static_cast<i64>(a_[i * d_ + j]); }

    bool fits_i64() const {
        for (const auto& x : a_)
            if (boost::multiprecision::abs(x) > BigInt(1) << 40) return false;
        return true;
    }

    Eigen::MatrixXd real_matrix() const {
        Eigen::MatrixXd m(d_, d_);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) m(i, j) = static_cast<double>(a_[i * d_ + j]);
        return m;
    }

    // Canonical text used for hashing and provenance.
    std::string canonical() const {
        std::ostringstream os;
        os << d_ << ':';
        for (const auto& x : a_) os << x << ',';
        return os.str();
    }

    // FNV-1a over the canonical text, hex encoded.
    std::string hash() const {
        u64 h = 1469598103934665603ull;
        for (unsigned char ch : canonical()) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        std::ostringstream os;
        os << std::hex;
        os.width(16);
        os.fill('0');
        os << h;
        return os.str();
    }

private:
    int d_;
    std::vector<BigInt> a_;
    BigInt det_;
    std::pair<int, int> sig_;
    std::vector<Rational> inv_;
};

inline QuadraticForm form_from_rows(const std::vector<std::vector<i64>>& rows) {
    int d = static_cast<int>(rows.size());
    std::vector<BigInt> m;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != d) throw ValidationError("matrix: rows must be square");
        for (i64 v : r) m.emplace_back(v);
    }
    return QuadraticForm(d, std::move(m));
}

// F_{2s} = x_1 y_1 + ... + x_s y_s in coordinates (x_1..x_s, y_1..y_s).
inline QuadraticForm split_form(int s) {
    int d = 2 * s;
    std::vector<BigInt> m(d * d, 0);
    for (int i = 0; i < s; ++i) m[i * d + s + i] = m[(s + i) * d + i] = 1;
    return QuadraticForm(d, std::move(m));
}

// Diagonal form with the given (even) Hessian entries, e.g. {2,2,2,2} is |z|^2.
inline QuadraticForm diagonal_form(const std::vector<i64>& diag) {
    int d = static_cast<int>(diag.size());
    std::vector<BigInt> m(d * d, 0);
    for (int i = 0; i < d; ++i) m[i * d + i] = diag[i];
    return QuadraticForm(d, std::move(m));
}

inline Rational eval_form(const QuadraticForm& f, const RationalVec& z) {
    const int d = f.dim();
    if (static_cast<int>(z.size()) != d) throw ValidationError("eval_form: dimension mismatch");
    Rational s = 0;
    for (int i = 0; i < d; ++i) {
        if (z[i] == 0) continue;
        Rational row = 0;
        for (int j = 0; j < d; ++j)
            if (f.a(i, j) != 0) row += Rational(f.a(i, j)) * z[j];
        s += z[i] * row;
    }
    return s / 2;
}

inline BigInt eval_form_int(const QuadraticForm& f, const std::vector<i64>& z) {
    const int d = f.dim();
    if (static_cast<int>(z.size()) != d) throw ValidationError("eval_form: dimension mismatch");
    BigInt s = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += f.a(i, j) * z[i] * z[j];
    return s / 2;
}

inline std::pair<int, int> signature(const QuadraticForm& f) { return f.signature(); }

// ---------------------------------------------------------------------------
// Real normal form Q(u, x, y) = 1/2 |u|^2 + x . y

struct NormalFormMap {
    Eigen::MatrixXd L_map;  // Z = L_map z, Q(Z) = +-F(z)
    Eigen::MatrixXd L_inv;
    int n = 0;   // u-coordinates
    int d1 = 0;  // hyperbolic pairs
    double detAbs = 1.0;
    bool flipped = false;

    int dim() const { return n + 2 * d1; }

    double Q(const Eigen::VectorXd& Z) const {
        double s = 0.5 * Z.head(n).squaredNorm();
        s += Z.segment(n, d1).dot(Z.segment(n + d1, d1));
        return s;
    }
};

namespace detail {

// Cyclic Jacobi eigen-decomposition of a symmetric matrix: A = V diag(lam) V^T.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& lam, Eigen::MatrixXd& v) {
    const int n = static_cast<int>(a.rows());
    v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, scale = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) (i == j ? scale : off) += a(i, j) * a(i, j);
        if (off <= 1e-30 * scale) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    lam = a.diagonal();
}

inline bool is_normal_hessian(const Eigen::MatrixXd& a, int n, int d1) {
    const int d = static_cast<int>(a.rows());
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) ref(i, i) = 1.0;
    for (int i = 0; i < d1; ++i) ref(n + i, n + d1 + i) = ref(n + d1 + i, n + i) = 1.0;
    return (a - ref).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace detail

// Normal form of the real form F(z) = 1/2 z^T a z (a symmetric, non-singular).
inline NormalFormMap normalize_real(const Eigen::MatrixXd& a_in) {
    const int d = static_cast<int>(a_in.rows());
    Eigen::VectorXd lam;
    Eigen::MatrixXd v;
    detail::jacobi_eigen(a_in, lam, v);
    int np = 0, nm = 0;
    double amax = lam.cwiseAbs().maxCoeff();
    for (int i = 0; i < d; ++i) {
        if (std::abs(lam[i]) <= 1e-13 * amax) throw ValidationError("degenerate form: zero eigenvalue");
        (lam[i] > 0 ? np : nm) += 1;
    }
    NormalFormMap nf;
    nf.flipped = nm > np;
    Eigen::MatrixXd a = nf.flipped ? Eigen::MatrixXd(-a_in) : a_in;
    if (nf.flipped) lam = -lam;
    nf.d1 = std::min(np, nm);
    nf.n = d - 2 * nf.d1;

    if (detail::is_normal_hessian(a, nf.n, nf.d1)) {
        nf.L_map = Eigen::MatrixXd::Identity(d, d);
        nf.L_inv = nf.L_map;
        nf.detAbs = 1.0;
        return nf;
    }

    // Order eigenpairs: positives by index, negatives by index.
    std::vector<int> pos, neg;
    for (int i = 0; i < d; ++i) (lam[i] > 0 ? pos : neg).push_back(i);
    Eigen::MatrixXd L(d, d);
    auto coord = [&](int i) -> Eigen::RowVectorXd { return std::sqrt(std::abs(lam[i])) * v.col(i).transpose(); };
    const double r2 = 1.0 / std::sqrt(2.0);
    int row = 0;
    for (int k = nf.d1; k < static_cast<int>(pos.size()); ++k) L.row(row++) = coord(pos[k]);
    for (int k = 0; k < nf.d1; ++k) {
        Eigen::RowVectorXd p = coord(pos[k]), q = coord(neg[k]);
        L.row(nf.n + k) = r2 * (p + q);
        L.row(nf.n + nf.d1 + k) = r2 * (p - q);
    }
    nf.L_map = L;
    nf.L_inv = L.inverse();
    nf.detAbs = std::abs(L.determinant());
    return nf;
}

inline NormalFormMap normalize_form(const QuadraticForm& f) { return normalize_real(f.real_matrix()); }

// ---------------------------------------------------------------------------
// Lattice problems and the affine reduction

struct LatticeProblem {
    QuadraticForm form;
    Rational m;
    Rational L;
    BigInt mL2;
};

inline LatticeProblem make_lattice_problem(const QuadraticForm& f, const Rational& m, const Rational& L) {
    if (L < 1) throw ValidationError("L must be >= 1");
    Rational t = L * L * m;
    if (boost::multiprecision::denominator(t) != 1)
        throw ValidationError("L^2 m must be an integer");
    return LatticeProblem{f, m, L, boost::multiprecision::numerator(t)};
}

struct AffineReduction {
    Rational m;
    RationalVec shift;
};

// The non-homogeneous form F(z) - z_star . z + tau vanishes exactly on
// F(z - s) = m with s = A^{-1} z_star and m = F(s) - tau.
inline AffineReduction reduce_affine(const QuadraticForm& f, const RationalVec& z_star, const Rational& tau,
                                     const Rational& L) {
    const int d = f.dim();
    if (static_cast<int>(z_star.size()) != d) throw ValidationError("reduce_affine: dimension mismatch");
    RationalVec s(d, Rational(0));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s[i] += f.inv(i, j) * z_star[j];
    for (int i = 0; i < d; ++i)
        if (boost::multiprecision::denominator(Rational(L * s[i])) != 1)
            throw ValidationError("reduce_affine: shift A^{-1} z_star is not in Z^d / L");
    if (boost::multiprecision::denominator(Rational(tau * L * L)) != 1)
        throw ValidationError("reduce_affine: tau L^2 is not an integer");
    return {eval_form(f, s) - tau, s};
}

// ---------------------------------------------------------------------------
// Form description files: {"dim": d, "matrix": [row-major integers]}

// Decimal integer literal; rejects anything but an optional sign and digits.
inline BigInt parse_bigint(const std::string& s) {
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
    if (i == s.size()) throw ValidationError("not an integer: '" + s + "'");
    BigInt v = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw ValidationError("not an integer: '" + s + "'");
        v = v * 10 + (s[i] - '0');
    }
    return neg ? BigInt(-v) : v;
}

// Accepts "p/q", decimal "1.25" or integer text.
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        BigInt den = parse_bigint(s.substr(slash + 1));
        if (den == 0) throw ValidationError("zero denominator in '" + s + "'");
        return Rational(parse_bigint(s.substr(0, slash))) / Rational(den);
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        std::string frac = s.substr(dot + 1);
        BigInt den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        std::string head = s.substr(0, dot);
        bool neg = !head.empty() && head[0] == '-';
        BigInt ip = (head.empty() || head == "-" || head == "+") ? BigInt(0) : parse_bigint(head);
        BigInt fp = frac.empty() ? BigInt(0) : parse_bigint(frac);
        if (fp < 0) throw ValidationError("not a rational number: '" + s + "'");
        Rational r = Rational(boost::multiprecision::abs(ip)) + Rational(fp) / Rational(den);
        return neg ? Rational(-r) : r;
    }
    return Rational(parse_bigint(s));
}

inline QuadraticForm parse_form_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("form file is not valid JSON: ") + e.what());
    }
    if (!j.contains("dim") || !j["dim"].is_number_integer()) throw ValidationError("dim: missing or not an integer");
    if (!j.contains("matrix") || !j["matrix"].is_array()) throw ValidationError("matrix: missing or not an array");
    int d = j["dim"].get<int>();
    if (d < 3) throw ValidationError("dim: forms must have dimension d >= 3");
    std::vector<BigInt> m;
    for (const auto& e : j["matrix"]) {
        if (e.is_number_integer())
            m.emplace_back(e.get<i64>());
        else if (e.is_string())
            m.emplace_back(parse_bigint(e.get<std::string>()));
        else
            throw ValidationError("matrix: entries must be integers");
    }
    if (static_cast<int>(m.size()) != d * d) throw ValidationError("matrix: expected dim*dim entries");
    return QuadraticForm(d, std::move(m));
}

inline QuadraticForm load_form(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open form file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_form_json(ss.str());
}

}  // namespace qlattice
