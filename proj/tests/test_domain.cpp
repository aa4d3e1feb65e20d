#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace catseg;
using Catch::Approx;

TEST_CASE("encode produces one-hot columns") {
    auto x = encode(CategoricalSequence({1, 2, 1}, 2));
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 3);
    CHECK(x(0, 0) == 1.0);
    CHECK(x(1, 0) == 0.0);
    CHECK(x(0, 1) == 0.0);
    CHECK(x(1, 1) == 1.0);
    CHECK(x(0, 2) == 1.0);

    auto y = encode(CategoricalSequence({3}, 4));
    CHECK(y(0, 0) == 0.0);
    CHECK(y(1, 0) == 0.0);
    CHECK(y(2, 0) == 1.0);
    CHECK(y(3, 0) == 0.0);
}

TEST_CASE("encode/decode round-trips for random sequences") {
    SplitMix64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        int r = 2 + static_cast<int>(rng.uniform() * 7);
        std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 64);
        std::vector<int> vals(n);
        for (auto& v : vals) v = 1 + static_cast<int>(rng.uniform() * r) % r;
        CategoricalSequence seq(vals, r);
        auto back = decode(encode(seq));
        REQUIRE(back.values == seq.values);
        REQUIRE(back.r == seq.r);
    }
}

TEST_CASE("sequence invariants are enforced") {
    CHECK_THROWS_AS(CategoricalSequence({1, 2}, 1), std::invalid_argument);
    CHECK_THROWS_AS(CategoricalSequence({}, 2), std::invalid_argument);
    CHECK_THROWS_AS(CategoricalSequence({0, 1}, 2), std::invalid_argument);
    CHECK_THROWS_AS(CategoricalSequence({1, 3}, 2), std::invalid_argument);
}

TEST_CASE("frobenius_sq_diff") {
    auto a = test::random_real(3, 5, 7);
    CHECK(frobenius_sq_diff(a, a) == 0.0);

    auto x = test::random_one_hot(3, 17, 11);
    RealMatrix zero(3, 17);
    CHECK(frobenius_sq_diff(x.matrix(), zero) == Approx(17.0));

    RealMatrix id(2, 2);
    id(0, 0) = 1.0;
    id(1, 1) = 1.0;
    RealMatrix z(2, 2);
    CHECK(frobenius_sq_diff(id, z) == Approx(2.0));

    CHECK_THROWS_AS(frobenius_sq_diff(RealMatrix(2, 3), RealMatrix(3, 2)),
                    std::invalid_argument);
}

namespace {

// dense grid search over the 2-simplex: the projection referee
std::pair<double, double> grid_project_2d(double a, double b) {
    double best_d = std::numeric_limits<double>::infinity();
    std::pair<double, double> best{0.0, 0.0};
    const int steps = 20000;
    for (int k = 0; k <= steps; ++k) {
        double p = static_cast<double>(k) / steps;
        double d = (p - a) * (p - a) + (1.0 - p - b) * (1.0 - p - b);
        if (d < best_d) {
            best_d = d;
            best = {p, 1.0 - p};
        }
    }
    return best;
}

}  // namespace

TEST_CASE("simplex_project matches the grid-search referee") {
    RealMatrix m(2, 3);
    m(0, 0) = 0.3; m(1, 0) = 0.7;   // already on the simplex
    m(0, 1) = 0.6; m(1, 1) = 0.6;
    m(0, 2) = 1.2; m(1, 2) = -0.2;
    auto p = simplex_project(m);

    CHECK(p(0, 0) == Approx(0.3));
    CHECK(p(1, 0) == Approx(0.7));
    CHECK(p(0, 1) == Approx(0.5));
    CHECK(p(1, 1) == Approx(0.5));
    CHECK(p(0, 2) == Approx(1.0));
    CHECK(p(1, 2) == Approx(0.0).margin(1e-12));

    SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        double a = -1.5 + 3.0 * rng.uniform();
        double b = -1.5 + 3.0 * rng.uniform();
        RealMatrix col(2, 1);
        col(0, 0) = a;
        col(1, 0) = b;
        auto proj = simplex_project(col);
        auto ref = grid_project_2d(a, b);
        CHECK(proj(0, 0) == Approx(ref.first).margin(1e-3));
        CHECK(proj(1, 0) == Approx(ref.second).margin(1e-3));
    }
}

TEST_CASE("simplex_project is idempotent and non-expansive") {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t r = 2 + static_cast<std::size_t>(rng.uniform() * 5);
        auto a = test::random_real(r, 8, rng.next(), -2.0, 2.0);
        auto b = test::random_real(r, 8, rng.next(), -2.0, 2.0);
        auto pa = simplex_project(a);
        auto pb = simplex_project(b);

        auto paa = simplex_project(pa.matrix());
        CHECK(frobenius_sq_diff(pa.matrix(), paa.matrix()) < 1e-20);
        CHECK(frobenius_sq_diff(pa.matrix(), pb.matrix()) <=
              frobenius_sq_diff(a, b) + 1e-12);

        for (std::size_t i = 0; i < 8; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < r; ++j) {
                CHECK(pa(j, i) >= 0.0);
                CHECK(pa(j, i) <= 1.0);
                sum += pa(j, i);
            }
            CHECK(sum == Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("simplex_project rejects non-finite input") {
    RealMatrix bad(2, 1);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    bad(1, 0) = 0.5;
    CHECK_THROWS_AS(simplex_project(bad), std::invalid_argument);
}
