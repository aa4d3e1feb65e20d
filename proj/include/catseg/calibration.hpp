#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "catseg/segmentation.hpp"
#include "catseg/selection.hpp"

namespace catseg {

/// Dimension-jump sweep: selected dimension against the penalty constant c.
struct CalibrationPath {
    std::vector<double> grid;
    std::vector<std::size_t> dims;
    double c_hat = 0.0;
    double retained = 0.0;  // always 2 * c_hat
};

namespace detail {

inline constexpr std::size_t kCalibrationStepCap = 1'000'000;

/// Shared jump rule: c_hat sits on the grid point immediately after the
/// largest drop in dimension; ties take the first occurrence.
inline void locate_jump(CalibrationPath& path) {
    std::size_t best_drop = 0;
    std::size_t best_t = 0;
    for (std::size_t t = 1; t < path.dims.size(); ++t) {
        std::size_t drop = path.dims[t - 1] - path.dims[t];
        if (drop > best_drop) {
            best_drop = drop;
            best_t = t;
        }
    }
    path.c_hat = path.grid[best_t];
    path.retained = 2.0 * path.c_hat;
}

}  // namespace detail

/// Sweep the NEH penalty constant from 0 until the selected level hits 0.
inline CalibrationPath calibrate_neh(const CoefficientMatrix& coeffs, std::size_t j_max = 7,
                                     double grid_step = 0.02) {
    if (grid_step <= 0.0)
        throw std::invalid_argument("calibrate_neh: grid_step must be positive");
    std::size_t N = log2_exact(coeffs.cols());
    std::size_t cap = std::min(j_max, N - 1);

    CalibrationPath path;
    for (std::size_t step = 0;; ++step) {
        if (step > detail::kCalibrationStepCap)
            throw std::runtime_error("calibrate_neh: sweep did not reach J=0 (degenerate data)");
        double c = grid_step * static_cast<double>(step);
        auto sel = neh_select(coeffs, PenaltySpec::linear(c), cap);
        path.grid.push_back(c);
        path.dims.push_back(sel.dimension);
        if (sel.level == 0) break;
    }
    detail::locate_jump(path);
    return path;
}

/// Same jump heuristic on the segmentation criterion SSE(D) + c D.
inline CalibrationPath calibrate_segmentation(const MultinomialMatrix& x,
                                              const std::vector<std::size_t>& candidates,
                                              std::size_t d_max, double grid_step = 0.02) {
    if (grid_step <= 0.0)
        throw std::invalid_argument("calibrate_segmentation: grid_step must be positive");
    SegmentStats stats(x);
    auto dp = dp_optimal_partitions(
        stats, d_max,
        candidates.empty() ? std::nullopt : std::optional(candidates));

    auto select_dim = [&](double c) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_d = 1;
        for (std::size_t d = 1; d <= d_max; ++d) {
            double crit = dp.sse[d - 1] + c * static_cast<double>(d);
            if (crit < best) {
                best = crit;
                best_d = d;
            }
        }
        return best_d;
    };

    CalibrationPath path;
    for (std::size_t step = 0;; ++step) {
        if (step > detail::kCalibrationStepCap)
            throw std::runtime_error(
                "calibrate_segmentation: sweep did not reach D=1 (degenerate data)");
        double c = grid_step * static_cast<double>(step);
        std::size_t d = select_dim(c);
        path.grid.push_back(c);
        path.dims.push_back(d);
        if (d == 1) break;
    }
    detail::locate_jump(path);
    return path;
}

/// Penalty constant for the EI stage of the hybrid. The dimension-jump
/// heuristic needs a noise regime to locate the cliff, and a clean jump set
/// has none (its only drop removes the genuine breakpoints and the retained
/// constant then wipes them out). So the sweep runs on the full candidate
/// set, decimated to at most 512 positions to keep the DP bounded at any n.
inline CalibrationPath calibrate_hybrid_ei(const MultinomialMatrix& x, double grid_step = 0.02) {
    std::size_t n = x.cols();
    constexpr std::size_t kCandidateCap = 512;
    std::vector<std::size_t> candidates;
    if (n > kCandidateCap) {
        double stride = static_cast<double>(n) / static_cast<double>(kCandidateCap);
        for (std::size_t k = 1; k <= kCandidateCap; ++k) {
            auto pos = static_cast<std::size_t>(static_cast<double>(k) * stride);
            if (pos >= 2 && pos <= n && (candidates.empty() || pos > candidates.back()))
                candidates.push_back(pos);
        }
    }
    return calibrate_segmentation(x, candidates, std::min<std::size_t>(n, 16), grid_step);
}

}  // namespace catseg
