#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace catseg;
using Catch::Approx;

TEST_CASE("segment_cost closed form") {
    auto x = encode(CategoricalSequence({1, 1, 1, 2, 1, 2}, 2));
    SegmentStats stats(x);

    CHECK(segment_cost(stats, 1, 3) == 0.0);                     // pure segment
    CHECK(segment_cost(stats, 1, 4) == Approx(4.0 - 10.0 / 4));  // counts (3,1)
    CHECK(segment_cost(stats, 3, 4) == Approx(1.0));             // counts (1,1)
    CHECK_THROWS_AS(segment_cost(stats, 4, 3), std::invalid_argument);
}

TEST_CASE("segment_cost equals the direct sum of squares") {
    SplitMix64 rng(55);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 4 + static_cast<std::size_t>(rng.uniform() * 60);
        std::size_t r = 2 + static_cast<std::size_t>(rng.uniform() * 3);
        auto x = test::random_one_hot(r, n, rng.next());
        SegmentStats stats(x);
        std::size_t a = 1 + static_cast<std::size_t>(rng.uniform() * n);
        std::size_t b = a + static_cast<std::size_t>(rng.uniform() * (n - a + 1));
        b = std::min(b, n);

        std::vector<double> mean(r, 0.0);
        for (std::size_t i = a; i <= b; ++i)
            for (std::size_t j = 0; j < r; ++j) mean[j] += x(j, i - 1);
        for (auto& m : mean) m /= static_cast<double>(b - a + 1);
        double direct = 0.0;
        for (std::size_t i = a; i <= b; ++i)
            for (std::size_t j = 0; j < r; ++j) {
                double d = x(j, i - 1) - mean[j];
                direct += d * d;
            }
        CHECK(segment_cost(stats, a, b) == Approx(direct).margin(1e-10));
    }
}

TEST_CASE("dp_optimal_partitions endpoints") {
    auto x = test::random_one_hot(2, 8, 3);
    SegmentStats stats(x);
    auto path = dp_optimal_partitions(stats, 8);
    CHECK(path.sse[0] == Approx(segment_cost(stats, 1, 8)));
    CHECK(path.partitions[0].breakpoints == std::vector<std::size_t>{1});
    CHECK(path.sse[7] == Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(dp_optimal_partitions(stats, 9), std::invalid_argument);
}

TEST_CASE("dp matches the exhaustive partition referee") {
    SplitMix64 rng(20);
    for (int seed = 0; seed < 20; ++seed) {
        std::size_t n = 4 + static_cast<std::size_t>(rng.uniform() * 7);
        auto x = test::random_one_hot(2, n, rng.next());
        SegmentStats stats(x);
        auto path = dp_optimal_partitions(stats, n);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t d = 1; d <= n; ++d) {
            auto oracle = oracle_partition_select(stats, d);
            CHECK(path.sse[d - 1] == Approx(oracle.sse).margin(1e-10));
            CHECK(path.sse[d - 1] <= prev + 1e-12);  // SSE(D) non-increasing
            prev = path.sse[d - 1];
        }
    }
}

TEST_CASE("restricting candidates to the full set changes nothing") {
    auto x = test::random_one_hot(3, 12, 8);
    SegmentStats stats(x);
    std::vector<std::size_t> all;
    for (std::size_t i = 2; i <= 12; ++i) all.push_back(i);
    auto unrestricted = dp_optimal_partitions(stats, 12);
    auto restricted = dp_optimal_partitions(stats, 12, all);
    for (std::size_t d = 0; d < 12; ++d) {
        CHECK(restricted.sse[d] == Approx(unrestricted.sse[d]).margin(1e-12));
        CHECK(restricted.partitions[d].breakpoints == unrestricted.partitions[d].breakpoints);
    }
}

TEST_CASE("ei_select selects by penalized SSE") {
    SECTION("large constant forces a single segment") {
        auto s = make_signal(1, 64);
        auto x = sample(s, 7);
        auto res = ei_select(x, PenaltySpec::linear(1000.0), 32);
        CHECK(res.dimension == 1);
        SegmentStats stats(x);
        double freq1 = static_cast<double>(stats.count(0, 1, 64)) / 64.0;
        for (std::size_t i = 0; i < 64; ++i)
            CHECK(res.estimate(0, i) == Approx(freq1));
    }
    SECTION("zero penalty saturates") {
        auto x = test::random_one_hot(2, 10, 15);
        auto res = ei_select(x, PenaltySpec::linear(0.0), 10);
        // repeated categories let fewer segments reach zero SSE, so only the
        // criterion and the reconstruction are pinned
        CHECK(res.criterion == Approx(0.0).margin(1e-12));
        CHECK(frobenius_sq_diff(res.estimate.matrix(), x.matrix()) < 1e-18);
    }
    SECTION("matches brute force over all partitions at n=10") {
        SplitMix64 rng(31);
        for (int seed = 0; seed < 10; ++seed) {
            auto x = test::random_one_hot(2, 10, rng.next());
            SegmentStats stats(x);
            auto res = ei_select(x, PenaltySpec::linear(1.0), 10);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t d = 1; d <= 10; ++d) {
                auto oracle = oracle_partition_select(stats, d);
                best = std::min(best, oracle.sse + static_cast<double>(d));
            }
            CHECK(res.criterion == Approx(best).margin(1e-10));
        }
    }
    SECTION("estimates are exact probability matrices") {
        SplitMix64 rng(47);
        for (int trial = 0; trial < 20; ++trial) {
            auto x = test::random_one_hot(4, 32, rng.next());
            auto res = ei_select(x, PenaltySpec::linear(0.5), 16);
            for (std::size_t i = 0; i < 32; ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < 4; ++j) {
                    CHECK(res.estimate(j, i) >= 0.0);
                    CHECK(res.estimate(j, i) <= 1.0);
                    sum += res.estimate(j, i);
                }
                CHECK(sum == Approx(1.0).margin(1e-12));
            }
        }
    }
}

TEST_CASE("jump_set") {
    SECTION("constant estimate has no jumps") {
        RealMatrix m(2, 8, 0.5);
        CHECK(jump_set(m).empty());
    }
    SECTION("NEH estimate with root and (0,0) jumps at the midpoint") {
        auto x = encode(CategoricalSequence({1, 1, 2, 2}, 2));
        auto coeffs = transform_matrix(x);
        std::vector<HaarIndex> sel{{-1, 0}, {0, 0}};
        auto est = reconstruct(coeffs, sel);
        CHECK(jump_set(est) == std::vector<std::size_t>{3});
    }
    SECTION("step at i=5") {
        RealMatrix m(2, 8, 0.2);
        for (std::size_t i = 4; i < 8; ++i) {
            m(0, i) = 0.9;
            m(1, i) = 0.1;
        }
        CHECK(jump_set(m) == std::vector<std::size_t>{5});
    }
}

TEST_CASE("hybrid_detect") {
    SECTION("constant signal collapses to one segment") {
        RealMatrix m(2, 256, 0.5);
        auto s = ProbabilityMatrix(std::move(m));
        auto x = sample(s, 11);
        auto res = hybrid_detect(x, PenaltySpec::linear(2.0), PenaltySpec::linear(4.0));
        CHECK(res.partition.dimension() == 1);
    }
    SECTION("clear two-segment signal is recovered (single seed smoke)") {
        RealMatrix m(2, 1024);
        for (std::size_t i = 0; i < 1024; ++i) {
            double p = i < 512 ? 0.2 : 0.8;
            m(0, i) = p;
            m(1, i) = 1.0 - p;
        }
        auto s = ProbabilityMatrix(std::move(m));
        auto x = sample(s, 5);
        auto coeffs = transform_matrix(x);
        auto cal = calibrate_neh(coeffs, 7);
        auto res = hybrid_detect(x, PenaltySpec::linear(cal.retained), PenaltySpec::linear(8.0));
        REQUIRE(res.partition.dimension() >= 2);
        bool near = false;
        for (std::size_t bp : res.partition.breakpoints)
            if (bp >= 505 && bp <= 521) near = true;
        CHECK(near);
    }
}
