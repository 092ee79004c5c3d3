#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "qlattice/lattice_enum.hpp"

using namespace qlattice;

namespace {

using Points = std::vector<std::vector<i64>>;

std::vector<i64> flat(const QuadraticForm& f) {
    std::vector<i64> A;
    for (int i = 0; i < f.dim(); ++i)
        for (int j = 0; j < f.dim(); ++j) A.push_back(static_cast<i64>(f.a(i, j)));
    return A;
}

// Every z in the cube [-B, B]^d with F(z) = N and |z|^2 <= R2.
Points brute_points(const QuadraticForm& f, i64 N, i64 B, i64 R2) {
    const auto A = flat(f);
    const int d = f.dim();
    Points out;
    oracle::for_each_residue(d, 2 * B + 1, [&](const std::vector<i64>& u) {
        std::vector<i64> z(d);
        i64 r2 = 0;
        for (int i = 0; i < d; ++i) {
            z[i] = u[i] - B;
            r2 += z[i] * z[i];
        }
        if (r2 <= R2 && oracle::form_value(A, z) == N) out.push_back(z);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<QuadraticForm> forms() {
    return {split_form(2), diagonal_form({2, 2, 2, 2}),
            form_from_rows({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, -4}}),
            form_from_rows({{-2, 1, 0}, {1, -4, 0}, {0, 0, -2}}),
            form_from_rows({{0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 0, 2}}),
            form_from_rows({{2, 1, 0, 0}, {1, 0, 3, 0}, {0, 3, -2, 1}, {0, 0, 1, 0}})};
}

}  // namespace

TEST(Enumeration, StrategiesMatchBruteForce) {
    for (const auto& f : forms()) {
        const double radius = f.dim() == 5 ? 4.5 : 6.2;
        const i64 R2 = static_cast<i64>(std::floor(radius * radius));
        const i64 B = static_cast<i64>(std::floor(radius));
        for (i64 N : {0, 1, -3, 6}) {
            auto ref = brute_points(f, N, B, R2);
            for (auto s : {EnumStrategy::automatic, EnumStrategy::hyperbolic, EnumStrategy::last_coordinate,
                           EnumStrategy::odometer}) {
                Points got;
                try {
                    got = enumerate_solutions(f, N, radius, s);
                } catch (const ValidationError&) {
                    continue;  // strategy not applicable to this form
                }
                EXPECT_EQ(got, ref) << f.canonical() << " N=" << N << " " << strategy_name(s);
            }
        }
    }
}

TEST(Enumeration, AutomaticPicksStructuredRoutes) {
    EXPECT_EQ(make_enum_plan(split_form(2), EnumStrategy::automatic).strategy, EnumStrategy::hyperbolic);
    EXPECT_EQ(make_enum_plan(diagonal_form({2, 2, 2, 2}), EnumStrategy::automatic).strategy,
              EnumStrategy::last_coordinate);
}

TEST(Enumeration, SphereExamples) {
    auto f = diagonal_form({2, 2, 2, 2});
    auto unit = enumerate_solutions(f, 1, 3.0);
    EXPECT_EQ(unit.size(), 8u);
    for (const auto& z : unit) {
        i64 s = 0;
        for (i64 v : z) s += std::abs(v);
        EXPECT_EQ(s, 1);
    }
    auto three = enumerate_solutions(f, 3, 3.0);
    EXPECT_EQ(three.size(), 32u);
    for (const auto& z : three) EXPECT_EQ(std::count(z.begin(), z.end(), 0), 1);
}

TEST(Enumeration, SplitFormSmallBox) {
    auto pts = enumerate_solutions(split_form(2), 0, 2.0);
    EXPECT_TRUE(std::binary_search(pts.begin(), pts.end(), std::vector<i64>{0, 0, 0, 0}));
    EXPECT_TRUE(std::binary_search(pts.begin(), pts.end(), std::vector<i64>{1, 0, 0, 0}));
    EXPECT_FALSE(std::binary_search(pts.begin(), pts.end(), std::vector<i64>{1, 0, 1, 0}));
    EXPECT_EQ(pts, enumerate_solutions(split_form(2), 0, 2.0, EnumStrategy::odometer));
}

TEST(Enumeration, BudgetAndValidation) {
    EXPECT_THROW(enumerate_solutions(split_form(2), 0, -1.0), ValidationError);
    EXPECT_THROW(enumerate_solutions(split_form(3), 0, 1e4, EnumStrategy::odometer), BudgetExceeded);
}

TEST(Counting, OriginAndLinearity) {
    auto f = split_form(2);
    auto a = N_L_brute(gaussian_weight(4), f, 0, 1);
    EXPECT_GE(a.value, 1.0);
    auto b = N_L_brute(gaussian_weight(4, 2.0), f, 0, 1);
    EXPECT_EQ(b.value, 2.0 * a.value);
    EXPECT_EQ(b.points, a.points);
    EXPECT_GE(a.truncation_bound, 0.0);
    EXPECT_EQ(N_L_brute(zero_weight(4), f, 0, 4).value, 0.0);
}

TEST(Counting, WorkerCountIsInvisible) {
    auto f = split_form(3);
    auto a = N_L_brute(gaussian_weight(6), f, 0, 8, 1e-8, 1);
    auto b = N_L_brute(gaussian_weight(6), f, 0, 8, 1e-8, 4);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.partitions, b.partitions);
}

// N_L(w; A, m) = N_1(w(./L); A, L^2 m), the right side from the brute box.
TEST(Counting, ScalingIdentity) {
    auto f = form_from_rows({{0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 0, 2}});
    for (int L : {2, 3}) {
        for (i64 mL2 : {0, 4, 9}) {
            if (mL2 % (L * L)) continue;
            Rational m = Rational(mL2) / (L * L);
            auto lhs = N_L_brute(gaussian_weight(5), f, m, L, 1e-10);
            const double rz = lhs.radius * L;
            const i64 B = static_cast<i64>(std::floor(rz));
            double rhs = 0.0;
            for (const auto& z : brute_points(f, mL2, B, static_cast<i64>(std::floor(rz * rz)))) {
                double r2 = 0.0;
                for (i64 v : z) r2 += static_cast<double>(v * v) / (L * L);
                rhs += std::exp(-r2);
            }
            EXPECT_NEAR(lhs.value, rhs, 1e-12 * rhs) << L << " " << mL2;
        }
    }
}

// Whole-lattice sum against a wider radius: the reported bound covers the gap.
TEST(Counting, TruncationBoundCovers) {
    auto f = split_form(2);
    for (int L : {2, 4}) {
        auto r = N_L_brute(gaussian_weight(4), f, 0, L, 1e-6);
        auto wide = N_L_brute(gaussian_weight(4), f, 0, L, 1e-14);
        EXPECT_LE(std::abs(wide.value - r.value), r.truncation_bound) << L;
    }
}

TEST(Counting, PointsGrowWithL) {
    auto f = split_form(2);
    u64 prev = 0;
    for (int L : {2, 4, 8, 16}) {
        auto r = N_L_brute(gaussian_weight(4), f, 0, L, 1e-8);
        EXPECT_GT(r.points, prev) << L;
        prev = r.points;
    }
}
