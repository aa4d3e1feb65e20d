#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace catseg;
using Catch::Approx;

TEST_CASE("eh_select with zero penalty reproduces the data") {
    auto x = test::random_one_hot(2, 8, 5);
    auto coeffs = transform_matrix(x);
    auto res = eh_select(coeffs, PenaltySpec::two_constant(0.0, 0.0));
    // zero-norm coefficients tie; the smallest-dimension tie break may drop
    // them, but the criterion and the reconstruction are those of the full model
    CHECK(res.criterion == Approx(-8.0));  // -||X||^2 for one-hot columns
    CHECK(frobenius_sq_diff(res.estimate, x.matrix()) < 1e-18);
}

TEST_CASE("eh_select on a constant sequence keeps only the root") {
    auto x = encode(CategoricalSequence(std::vector<int>(16, 1), 2));
    auto res = eh_select(transform_matrix(x), PenaltySpec::two_constant(1.0, 2.0));
    CHECK(res.dimension == 1);
    REQUIRE(res.selected.size() == 1);
    CHECK(res.selected[0] == HaarIndex{-1, 0});
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(res.estimate(0, i) == Approx(1.0));
        CHECK(res.estimate(1, i) == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("eh_select matches the exhaustive subset referee") {
    SplitMix64 rng(77);
    for (std::size_t n : {2u, 4u, 8u}) {
        for (int seed = 0; seed < 50; ++seed) {
            auto x = test::random_one_hot(2, n, rng.next());
            auto coeffs = transform_matrix(x);
            auto pen = PenaltySpec::two_constant(1.0, 2.0);
            auto res = eh_select(coeffs, pen);
            auto [best, subset] = oracle_subset_select(coeffs, pen);
            CHECK(res.criterion == Approx(best).margin(1e-10));
        }
    }
}

TEST_CASE("eh_select rejects a linear penalty") {
    auto x = test::random_one_hot(2, 4, 1);
    CHECK_THROWS_AS(eh_select(transform_matrix(x), PenaltySpec::linear(1.0)),
                    std::invalid_argument);
}

TEST_CASE("neh_collection_dimension") {
    CHECK(neh_collection_dimension(0, 3) == 2);
    CHECK(neh_collection_dimension(1, 4) == 4);
    for (std::size_t N : {1u, 3u, 6u, 10u})
        CHECK(neh_collection_dimension(N - 1, N) == (std::size_t{1} << N));
    CHECK_THROWS_AS(neh_collection_dimension(3, 3), std::invalid_argument);
}

TEST_CASE("neh_select with zero penalty saturates") {
    auto x = test::random_one_hot(2, 8, 13);
    auto res = neh_select(transform_matrix(x), PenaltySpec::linear(0.0));
    CHECK(res.level == 2);
    CHECK(frobenius_sq_diff(res.estimate, x.matrix()) < 1e-18);
}

TEST_CASE("neh_select on a constant sequence picks J=0") {
    auto x = encode(CategoricalSequence(std::vector<int>(32, 2), 3));
    auto res = neh_select(transform_matrix(x), PenaltySpec::linear(0.5));
    CHECK(res.level == 0);
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(res.estimate(1, i) == Approx(1.0));
        CHECK(res.estimate(0, i) == Approx(0.0).margin(1e-12));
    }
}

namespace {

// exhaustive referee for one NEH level: best crit over every admissible
// choice of per-level subsets with the mandated cardinalities
double neh_level_oracle(const CoefficientMatrix& coeffs, std::size_t J, double c) {
    std::size_t n = coeffs.cols();
    std::size_t N = log2_exact(n);
    const auto& norms = coeffs.norms();
    double sum = norms[0];
    for (std::size_t j = 0; j < J; ++j) {
        std::size_t begin = std::size_t{1} << j;
        for (std::size_t l = begin; l < 2 * begin; ++l) sum += norms[l];
    }
    for (std::size_t k = 0; J + k < N; ++k) {
        double cube = static_cast<double>(k + 1);
        auto q = static_cast<std::size_t>(
            std::floor(std::exp2(static_cast<double>(J)) / (cube * cube * cube)));
        std::size_t begin = std::size_t{1} << (J + k);
        std::size_t width = begin;
        q = std::min(q, width);
        // best subset of size q by enumeration
        double best = -std::numeric_limits<double>::infinity();
        for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << width); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != q) continue;
            double s = 0.0;
            for (std::size_t b = 0; b < width; ++b)
                if (mask & (std::uint32_t{1} << b)) s += norms[begin + b];
            best = std::max(best, s);
        }
        sum += best;
    }
    return -sum + c * static_cast<double>(neh_collection_dimension(J, N));
}

}  // namespace

TEST_CASE("neh per-level greedy choice is optimal") {
    SplitMix64 rng(101);
    for (int seed = 0; seed < 20; ++seed) {
        auto x = test::random_one_hot(2, 16, rng.next());
        auto coeffs = transform_matrix(x);
        double c = 1.0;
        auto res = neh_select(coeffs, PenaltySpec::linear(c));
        for (const auto& [J, crit] : res.criterion_path)
            CHECK(crit == Approx(neh_level_oracle(coeffs, J, c)).margin(1e-10));
    }
}

TEST_CASE("neh selected dimension is non-increasing in c") {
    auto x = test::random_one_hot(3, 64, 2024);
    auto coeffs = transform_matrix(x);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double c = 0.0; c <= 4.0; c += 0.1) {
        auto res = neh_select(coeffs, PenaltySpec::linear(c));
        CHECK(res.dimension <= prev);
        prev = res.dimension;
    }
}

TEST_CASE("EH model counts match the binomial formula at n=8") {
    // number of subsets of Lambda containing (-1,0) with dimension D
    std::size_t n = 8;
    std::vector<std::size_t> counts(n + 1, 0);
    for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask)
        counts[1 + std::popcount(mask)]++;
    auto binom = [](std::size_t a, std::size_t b) {
        double v = 1.0;
        for (std::size_t t = 0; t < b; ++t)
            v = v * static_cast<double>(a - t) / static_cast<double>(t + 1);
        return static_cast<std::size_t>(v + 0.5);
    };
    for (std::size_t d = 1; d <= n; ++d) CHECK(counts[d] == binom(n - 1, d - 1));
}

TEST_CASE("reconstruct on the stated models") {
    auto x = test::random_one_hot(2, 4, 99);
    auto coeffs = transform_matrix(x);

    SECTION("full basis reproduces X") {
        std::vector<std::uint8_t> all(4, 1);
        auto est = reconstruct(coeffs, all);
        CHECK(frobenius_sq_diff(est, x.matrix()) < 1e-20);
    }
    SECTION("root only gives global frequencies") {
        std::vector<HaarIndex> sel{{-1, 0}};
        auto est = reconstruct(coeffs, sel);
        double freq1 = (x(0, 0) + x(0, 1) + x(0, 2) + x(0, 3)) / 4.0;
        for (std::size_t i = 0; i < 4; ++i) CHECK(est(0, i) == Approx(freq1).margin(1e-12));
    }
    SECTION("root plus (0,0) gives per-half frequencies") {
        std::vector<HaarIndex> sel{{-1, 0}, {0, 0}};
        auto est = reconstruct(coeffs, sel);
        double left = (x(0, 0) + x(0, 1)) / 2.0;
        double right = (x(0, 2) + x(0, 3)) / 2.0;
        CHECK(est(0, 0) == Approx(left).margin(1e-12));
        CHECK(est(0, 1) == Approx(left).margin(1e-12));
        CHECK(est(0, 2) == Approx(right).margin(1e-12));
        CHECK(est(0, 3) == Approx(right).margin(1e-12));
    }
}

TEST_CASE("reconstructions containing the root conserve column sums") {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = std::size_t{1} << (2 + static_cast<int>(rng.uniform() * 5));
        std::size_t r = 2 + static_cast<std::size_t>(rng.uniform() * 3);
        auto x = test::random_one_hot(r, n, rng.next());
        auto coeffs = transform_matrix(x);
        auto res = trial % 2 == 0
                       ? eh_select(coeffs, PenaltySpec::two_constant(rng.uniform(), rng.uniform()))
                       : neh_select(coeffs, PenaltySpec::linear(2.0 * rng.uniform()));
        REQUIRE(res.mask[0] == 1);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < r; ++j) sum += res.estimate(j, i);
            CHECK(sum == Approx(1.0).margin(1e-9));
        }
    }
}
