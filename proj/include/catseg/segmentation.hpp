#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "catseg/domain.hpp"
#include "catseg/selection.hpp"

namespace catseg {

/// Partition of {1..n} into intervals, stored as 1-based segment start
/// indices; the first breakpoint is always 1.
struct Partition {
    std::vector<std::size_t> breakpoints;
    std::size_t n = 0;

    Partition() = default;
    Partition(std::vector<std::size_t> bps, std::size_t length)
        : breakpoints(std::move(bps)), n(length) {
        if (breakpoints.empty() || breakpoints.front() != 1)
            throw std::invalid_argument("Partition: first breakpoint must be 1");
        for (std::size_t t = 1; t < breakpoints.size(); ++t)
            if (breakpoints[t] <= breakpoints[t - 1] || breakpoints[t] > n)
                throw std::invalid_argument("Partition: breakpoints must be increasing in {1..n}");
    }

    std::size_t dimension() const { return breakpoints.size(); }

    /// 1-based inclusive end of segment t.
    std::size_t segment_end(std::size_t t) const {
        return t + 1 < breakpoints.size() ? breakpoints[t + 1] - 1 : n;
    }
};

/// Cumulative category counts; gives O(1) segment costs.
class SegmentStats {
public:
    explicit SegmentStats(const MultinomialMatrix& x) : n_(x.cols()), r_(x.rows()) {
        cum_.assign((n_ + 1) * r_, 0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < r_; ++j)
                cum_[(i + 1) * r_ + j] = cum_[i * r_ + j] + (x(j, i) == 1.0 ? 1 : 0);
    }

    std::size_t n() const { return n_; }
    std::size_t r() const { return r_; }

    /// Count of category j (0-based) on the 1-based inclusive range [a,b].
    std::int64_t count(std::size_t j, std::size_t a, std::size_t b) const {
        return cum_[b * r_ + j] - cum_[(a - 1) * r_ + j];
    }

private:
    std::size_t n_;
    std::size_t r_;
    std::vector<std::int64_t> cum_;
};

/// Within-segment sum of squares: L - sum_j n_j^2 / L.
inline double segment_cost(const SegmentStats& stats, std::size_t a, std::size_t b) {
    if (a < 1 || a > b || b > stats.n())
        throw std::invalid_argument("segment_cost: bad range");
    double len = static_cast<double>(b - a + 1);
    double sq = 0.0;
    for (std::size_t j = 0; j < stats.r(); ++j) {
        double c = static_cast<double>(stats.count(j, a, b));
        sq += c * c;
    }
    return len - sq / len;
}

struct DpPath {
    std::vector<double> sse;            // sse[d-1] = best SSE with d segments
    std::vector<Partition> partitions;  // achieving partition per d
};

/// Best partitions into 1..D_max intervals by dynamic programming.
/// When `candidates` is given, breakpoints beyond 1 are restricted to it.
inline DpPath dp_optimal_partitions(const SegmentStats& stats, std::size_t d_max,
                                    std::optional<std::vector<std::size_t>> candidates = {}) {
    std::size_t n = stats.n();
    std::vector<std::size_t> pos{1};
    if (candidates) {
        for (std::size_t c : *candidates) {
            if (c < 2 || c > n)
                throw std::invalid_argument("dp_optimal_partitions: candidate out of {2..n}");
            pos.push_back(c);
        }
        std::sort(pos.begin() + 1, pos.end());
        pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    } else {
        for (std::size_t i = 2; i <= n; ++i) pos.push_back(i);
    }
    std::size_t q = pos.size();
    if (d_max < 1 || d_max > q)
        throw std::invalid_argument("dp_optimal_partitions: D_max exceeds admissible segments");

    // ends[i]: inclusive end of a segment starting at pos[i] and running to
    // the next candidate (or n).
    auto end_at = [&](std::size_t i) { return i + 1 < q ? pos[i + 1] - 1 : n; };

    constexpr double inf = std::numeric_limits<double>::infinity();
    // best[d][i]: min SSE covering [1, end_at(i)] with d+1 segments... d is 0-based
    std::vector<std::vector<double>> best(d_max, std::vector<double>(q, inf));
    std::vector<std::vector<std::size_t>> from(d_max, std::vector<std::size_t>(q, 0));
    for (std::size_t i = 0; i < q; ++i) best[0][i] = segment_cost(stats, 1, end_at(i));
    for (std::size_t d = 1; d < d_max; ++d) {
        for (std::size_t i = d; i < q; ++i) {
            double lo = inf;
            std::size_t arg = d - 1;
            for (std::size_t p = d - 1; p < i; ++p) {
                double v = best[d - 1][p] + segment_cost(stats, pos[p + 1], end_at(i));
                if (v < lo) {
                    lo = v;
                    arg = p;
                }
            }
            best[d][i] = lo;
            from[d][i] = arg;
        }
    }

    DpPath path;
    path.sse.resize(d_max);
    path.partitions.reserve(d_max);
    for (std::size_t d = 0; d < d_max; ++d) {
        path.sse[d] = best[d][q - 1];
        std::vector<std::size_t> bps(d + 1);
        std::size_t i = q - 1;
        for (std::size_t t = d; t > 0; --t) {
            std::size_t p = from[t][i];
            bps[t] = pos[p + 1];
            i = p;
        }
        bps[0] = 1;
        path.partitions.emplace_back(std::move(bps), n);
    }
    return path;
}

/// Piecewise-constant estimate whose columns are segment frequency vectors.
inline ProbabilityMatrix segment_means(const SegmentStats& stats, const Partition& part) {
    RealMatrix est(stats.r(), stats.n());
    for (std::size_t t = 0; t < part.dimension(); ++t) {
        std::size_t a = part.breakpoints[t];
        std::size_t b = part.segment_end(t);
        double len = static_cast<double>(b - a + 1);
        for (std::size_t j = 0; j < stats.r(); ++j) {
            double p = static_cast<double>(stats.count(j, a, b)) / len;
            for (std::size_t i = a; i <= b; ++i) est(j, i - 1) = p;
        }
    }
    return ProbabilityMatrix(std::move(est));
}

struct SegmentationResult {
    Partition partition;
    std::size_t dimension = 0;
    std::vector<std::pair<std::size_t, double>> criterion_path;  // (D, SSE + pen'(D))
    double criterion = 0.0;
    ProbabilityMatrix estimate;

    SegmentationResult(Partition p, ProbabilityMatrix e)
        : partition(std::move(p)), estimate(std::move(e)) {}
};

/// Exhaustive/Indicator strategy: penalized least squares over interval
/// partitions. `log_scale` overrides the n inside the two-constant penalty
/// (the hybrid passes |jump set| there).
inline SegmentationResult ei_select(const MultinomialMatrix& x, const PenaltySpec& pen,
                                    std::size_t d_max,
                                    std::optional<std::vector<std::size_t>> candidates = {},
                                    std::optional<std::size_t> log_scale = {}) {
    SegmentStats stats(x);
    auto path = dp_optimal_partitions(stats, d_max, std::move(candidates));
    std::size_t scale = log_scale.value_or(x.cols());
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_d = 1;
    std::vector<std::pair<std::size_t, double>> crit_path;
    crit_path.reserve(d_max);
    for (std::size_t d = 1; d <= d_max; ++d) {
        double crit = path.sse[d - 1] + pen.prime(d, scale);
        crit_path.emplace_back(d, crit);
        if (crit < best) {
            best = crit;
            best_d = d;
        }
    }
    SegmentationResult res(path.partitions[best_d - 1],
                           segment_means(stats, path.partitions[best_d - 1]));
    res.dimension = best_d;
    res.criterion = best;
    res.criterion_path = std::move(crit_path);
    return res;
}

/// Positions i in {2..n} where column i differs from column i-1.
inline std::vector<std::size_t> jump_set(const RealMatrix& estimate, double tol = 1e-9) {
    std::vector<std::size_t> jumps;
    for (std::size_t i = 1; i < estimate.cols(); ++i) {
        for (std::size_t j = 0; j < estimate.rows(); ++j) {
            if (std::abs(estimate(j, i) - estimate(j, i - 1)) > tol) {
                jumps.push_back(i + 1);  // 1-based
                break;
            }
        }
    }
    return jumps;
}

struct HybridResult {
    std::vector<std::size_t> jumps;                 // candidate change points from NEH
    SelectionResult neh;                            // first-stage result
    Partition partition;                            // final partition
    ProbabilityMatrix estimate;                     // final piecewise-constant estimate

    HybridResult(Partition p, ProbabilityMatrix e)
        : partition(std::move(p)), estimate(std::move(e)) {}
};

/// NEH first, then EI restricted to the jump set of the NEH estimate.
inline HybridResult hybrid_detect(const MultinomialMatrix& x, const PenaltySpec& neh_pen,
                                  const PenaltySpec& ei_pen,
                                  std::optional<std::size_t> d_max = {}) {
    auto coeffs = transform_matrix(x);
    auto neh = neh_select(coeffs, neh_pen);
    auto jumps = jump_set(neh.estimate);

    SegmentStats stats(x);
    if (jumps.empty()) {
        Partition single({1}, x.cols());
        HybridResult res(single, segment_means(stats, single));
        res.neh = std::move(neh);
        return res;
    }
    std::size_t cap = d_max.value_or(std::min(x.cols(), 4 * jumps.size() + 1));
    cap = std::min(cap, jumps.size() + 1);
    auto ei = ei_select(x, ei_pen, cap, jumps, jumps.size());
    HybridResult res(std::move(ei.partition), std::move(ei.estimate));
    res.jumps = std::move(jumps);
    res.neh = std::move(neh);
    return res;
}

}  // namespace catseg
