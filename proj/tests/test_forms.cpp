#include <gtest/gtest.h>

#include <random>

#include "qlattice/forms.hpp"

using namespace qlattice;

TEST(QuadraticForm, RejectsOddDiagonal) {
    try {
        form_from_rows({{1, 0, 0}, {0, 2, 0}, {0, 0, 2}});
        FAIL() << "accepted an odd diagonal";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("even diagonal"), std::string::npos);
    }
}

TEST(QuadraticForm, RejectsAsymmetricAndSingular) {
    EXPECT_THROW(form_from_rows({{0, 1, 0}, {2, 0, 0}, {0, 0, 2}}), ValidationError);
    EXPECT_THROW(form_from_rows({{2, 2, 0}, {2, 2, 0}, {0, 0, 2}}), ValidationError);
    EXPECT_THROW(form_from_rows({{0, 1}, {1, 0}}), ValidationError);  // d < 3
}

TEST(QuadraticForm, SplitFormInvariants) {
    auto f4 = split_form(2);
    EXPECT_EQ(f4.dim(), 4);
    EXPECT_EQ(f4.det(), 1);
    EXPECT_EQ(f4.signature(), std::make_pair(2, 2));
    auto f6 = split_form(3);
    EXPECT_EQ(f6.det(), -1);
    EXPECT_EQ(f6.signature(), std::make_pair(3, 3));
    // F_4(x, y) = x1 y1 + x2 y2
    EXPECT_EQ(eval_form_int(f4, {1, 2, 3, 4}), 1 * 3 + 2 * 4);
}

TEST(QuadraticForm, InverseIsExact) {
    auto f = form_from_rows({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, -4}});
    EXPECT_EQ(f.det(), 8);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            Rational s = 0;
            for (int k = 0; k < 4; ++k) s += Rational(f.a(i, k)) * f.inv(k, j);
            EXPECT_EQ(s, Rational(i == j ? 1 : 0));
        }
}

TEST(QuadraticForm, HashIsStableAndDistinguishes) {
    EXPECT_EQ(split_form(2).hash(), split_form(2).hash());
    EXPECT_NE(split_form(2).hash(), diagonal_form({2, 2, 2, 2}).hash());
    EXPECT_EQ(split_form(2).hash().size(), 16u);
}

class NormalForm : public ::testing::TestWithParam<std::vector<std::vector<i64>>> {};

// Q(L z) = +-F(z) on random points.
TEST_P(NormalForm, MapsFormToNormalShape) {
    auto f = form_from_rows(GetParam());
    auto nf = normalize_form(f);
    EXPECT_EQ(nf.dim(), f.dim());
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd z(f.dim());
        for (int i = 0; i < f.dim(); ++i) z[i] = nd(gen);
        const double F = 0.5 * z.dot(f.real_matrix() * z);
        const double Q = nf.Q(nf.L_map * z);
        EXPECT_NEAR(nf.flipped ? -Q : Q, F, 1e-10 * (1 + std::abs(F)));
    }
    EXPECT_NEAR(nf.detAbs, std::abs(nf.L_map.determinant()), 1e-9 * nf.detAbs);
    EXPECT_LT((nf.L_map * nf.L_inv - Eigen::MatrixXd::Identity(f.dim(), f.dim())).norm(), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(
    Forms, NormalForm,
    ::testing::Values(std::vector<std::vector<i64>>{{0, 0, 1, 0}, {0, 0, 0, 1}, {1, 0, 0, 0}, {0, 1, 0, 0}},
                      std::vector<std::vector<i64>>{{2, 0, 0, 0}, {0, 2, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, 2}},
                      std::vector<std::vector<i64>>{{-2, 1, 0}, {1, -4, 0}, {0, 0, -2}},
                      std::vector<std::vector<i64>>{
                          {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 0, 2}},
                      std::vector<std::vector<i64>>{{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, -4}}));

TEST(NormalForm, SignatureCounts) {
    auto nf = normalize_form(form_from_rows({{0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 1, 0, 0},
                                             {0, 0, 0, 0, 2}}));
    EXPECT_EQ(nf.d1, 2);
    EXPECT_EQ(nf.n, 1);
    auto neg = normalize_form(diagonal_form({-2, -2, -2}));
    EXPECT_EQ(neg.d1, 0);
    EXPECT_TRUE(neg.flipped);
}

TEST(Parsing, Rationals) {
    EXPECT_EQ(parse_rational("3/2"), Rational(3) / 2);
    EXPECT_EQ(parse_rational("-1.25"), Rational(-5) / 4);
    EXPECT_EQ(parse_rational("16"), Rational(16));
    EXPECT_THROW(parse_rational("1/0"), ValidationError);
    EXPECT_THROW(parse_rational("abc"), ValidationError);
}

TEST(Parsing, FormJson) {
    auto f = parse_form_json(R"({"dim": 3, "matrix": [2,1,0, 1,2,0, 0,0,"-2"]})");
    EXPECT_EQ(f.a(2, 2), -2);
    EXPECT_THROW(parse_form_json("{"), ValidationError);
    EXPECT_THROW(parse_form_json(R"({"dim": 3, "matrix": [2,0,0]})"), ValidationError);
    auto g = load_form(std::string(QLATTICE_DATA) + "/forms/f4.json");
    EXPECT_EQ(g.canonical(), split_form(2).canonical());
}

TEST(LatticeProblem, NeedsIntegralL2m) {
    auto f = split_form(2);
    auto lp = make_lattice_problem(f, Rational(1) / 4, Rational(2));
    EXPECT_EQ(lp.mL2, 1);
    EXPECT_THROW(make_lattice_problem(f, Rational(1) / 3, Rational(2)), ValidationError);
    EXPECT_THROW(make_lattice_problem(f, 0, Rational(1) / 2), ValidationError);
}

// F(z) - z*.z + tau vanishes exactly where F(z - s) = m.
TEST(AffineReduction, ShiftsToHomogeneous) {
    auto f = diagonal_form({2, 2, 2});
    RationalVec zs{Rational(2), Rational(0), Rational(4)};
    auto r = reduce_affine(f, zs, Rational(1), Rational(1));
    EXPECT_EQ(r.shift[0], 1);
    EXPECT_EQ(r.shift[2], 2);
    EXPECT_EQ(r.m, Rational(5 - 1));
    RationalVec z{Rational(3), Rational(1), Rational(-1)};
    Rational lhs = eval_form(f, z) - (zs[0] * z[0] + zs[1] * z[1] + zs[2] * z[2]) + 1;
    RationalVec zm{z[0] - r.shift[0], z[1] - r.shift[1], z[2] - r.shift[2]};
    EXPECT_EQ(lhs, eval_form(f, zm) - r.m);
}
