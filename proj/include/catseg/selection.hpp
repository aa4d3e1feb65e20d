#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "catseg/haar.hpp"

namespace catseg {

enum class PenaltyFamily {
    TwoConstantLog,  // pen'(D) = D * (c1 * log(scale/D) + c2)
    Linear,          // pen'(D) = c * D
};

struct PenaltySpec {
    PenaltyFamily family = PenaltyFamily::Linear;
    double c1 = 0.0;
    double c2 = 0.0;
    double c = 0.0;

    static PenaltySpec two_constant(double c1, double c2) {
        if (c1 < 0.0 || c2 < 0.0)
            throw std::invalid_argument("PenaltySpec: constants must be >= 0");
        return {PenaltyFamily::TwoConstantLog, c1, c2, 0.0};
    }
    static PenaltySpec linear(double c) {
        if (c < 0.0)
            throw std::invalid_argument("PenaltySpec: constants must be >= 0");
        return {PenaltyFamily::Linear, 0.0, 0.0, c};
    }

    /// pen'(D). `scale` is the n inside the log term (replaced by |jump set|
    /// in the hybrid's restricted step).
    double prime(std::size_t dim, std::size_t scale) const {
        double d = static_cast<double>(dim);
        switch (family) {
            case PenaltyFamily::TwoConstantLog:
                return d * (c1 * std::log(static_cast<double>(scale) / d) + c2);
            case PenaltyFamily::Linear:
                return c * d;
        }
        throw std::invalid_argument("PenaltySpec: unknown family");
    }
};

struct SelectionResult {
    std::vector<HaarIndex> selected;  // the model, canonical order
    std::vector<std::uint8_t> mask;   // selected flag per canonical position
    std::size_t dimension = 0;
    std::size_t level = 0;  // selected J (NEH only)
    std::vector<std::pair<std::size_t, double>> criterion_path;  // (candidate, value)
    double criterion = 0.0;
    RealMatrix estimate;
};

/// Inverse transform of the coefficients restricted to a model.
inline RealMatrix reconstruct(const CoefficientMatrix& coeffs,
                              const std::vector<std::uint8_t>& mask) {
    std::size_t r = coeffs.rows();
    std::size_t n = coeffs.cols();
    if (mask.size() != n)
        throw std::invalid_argument("reconstruct: mask size mismatch");
    RealMatrix est(r, n);
    std::vector<double> kept(n);
    for (std::size_t j = 0; j < r; ++j) {
        auto line = coeffs.coeffs().line(j);
        for (std::size_t l = 0; l < n; ++l) kept[l] = mask[l] ? line[l] : 0.0;
        auto back = inverse(kept);
        std::copy(back.begin(), back.end(), est.line(j).begin());
    }
    return est;
}

inline RealMatrix reconstruct(const CoefficientMatrix& coeffs,
                              const std::vector<HaarIndex>& selected) {
    std::vector<std::uint8_t> mask(coeffs.cols(), 0);
    for (const auto& lam : selected) mask[canonical_order(lam, coeffs.cols()) - 1] = 1;
    return reconstruct(coeffs, mask);
}

namespace detail {

inline std::vector<HaarIndex> indices_from_mask(const std::vector<std::uint8_t>& mask,
                                                std::size_t n) {
    std::vector<HaarIndex> sel;
    for (std::size_t l = 0; l < n; ++l)
        if (mask[l]) sel.push_back(index_at_position(l, n));
    return sel;
}

}  // namespace detail

/// Exhaustive/Haar strategy: sort squared norms, scan all dimensions D.
/// (-1,0) is pinned to rank 1 since every admissible model contains it.
inline SelectionResult eh_select(const CoefficientMatrix& coeffs, const PenaltySpec& pen) {
    if (pen.family != PenaltyFamily::TwoConstantLog)
        throw std::invalid_argument("eh_select: penalty must be TwoConstantLog");
    std::size_t n = coeffs.cols();
    const auto& norms = coeffs.norms();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin() + 1, order.end(), [&](std::size_t a, std::size_t b) {
        return norms[a] > norms[b];  // ties keep canonical order
    });

    SelectionResult res;
    res.criterion_path.reserve(n);
    double running = 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_d = 1;
    for (std::size_t d = 1; d <= n; ++d) {
        running += norms[order[d - 1]];
        double crit = -running + pen.prime(d, n);
        res.criterion_path.emplace_back(d, crit);
        if (crit < best) {
            best = crit;
            best_d = d;
        }
    }
    res.criterion = best;
    res.dimension = best_d;
    res.mask.assign(n, 0);
    for (std::size_t k = 0; k < best_d; ++k) res.mask[order[k]] = 1;
    res.selected = detail::indices_from_mask(res.mask, n);
    res.estimate = reconstruct(coeffs, res.mask);
    return res;
}

/// Common cardinality of the level-J models:
/// 2^J coarse indices plus floor(2^J (k+1)^-3) per fine level J+k.
inline std::size_t neh_collection_dimension(std::size_t J, std::size_t N) {
    if (N == 0 || J > N - 1)
        throw std::invalid_argument("neh_collection_dimension: level out of range");
    std::size_t dim = std::size_t{1} << J;
    for (std::size_t k = 0; k + J + 1 <= N; ++k) {
        double cube = static_cast<double>(k + 1);
        dim += static_cast<std::size_t>(std::floor(std::exp2(static_cast<double>(J)) /
                                                   (cube * cube * cube)));
    }
    return dim;
}

/// Non-exhaustive/Haar strategy: per fine level keep only the largest norms,
/// scan the resolution level J.
inline SelectionResult neh_select(const CoefficientMatrix& coeffs, const PenaltySpec& pen,
                                  std::optional<std::size_t> j_max = std::nullopt) {
    if (pen.family != PenaltyFamily::Linear)
        throw std::invalid_argument("neh_select: penalty must be Linear");
    std::size_t n = coeffs.cols();
    std::size_t N = log2_exact(n);
    std::size_t cap = j_max.value_or(N - 1);
    if (cap > N - 1)
        throw std::invalid_argument("neh_select: J_max out of range");
    const auto& norms = coeffs.norms();

    // Per level: positions sorted by norm descending (ties: smaller shift),
    // plus prefix sums of the sorted norms.
    std::vector<std::vector<std::size_t>> level_order(N);
    std::vector<std::vector<double>> level_prefix(N);
    for (std::size_t j = 0; j < N; ++j) {
        std::size_t begin = std::size_t{1} << j;
        std::size_t width = begin;
        auto& ord = level_order[j];
        ord.resize(width);
        std::iota(ord.begin(), ord.end(), begin);
        std::stable_sort(ord.begin(), ord.end(),
                         [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
        auto& pre = level_prefix[j];
        pre.resize(width + 1, 0.0);
        for (std::size_t t = 0; t < width; ++t) pre[t + 1] = pre[t] + norms[ord[t]];
    }

    // Prefix sums over whole levels: full[j] = sum of norms on levels -1..j-1.
    std::vector<double> full(N + 1, 0.0);
    full[0] = norms[0];
    for (std::size_t j = 0; j < N; ++j) full[j + 1] = full[j] + level_prefix[j].back();

    auto keep_count = [&](std::size_t J, std::size_t k) {
        double cube = static_cast<double>(k + 1);
        auto q = static_cast<std::size_t>(
            std::floor(std::exp2(static_cast<double>(J)) / (cube * cube * cube)));
        return std::min(q, std::size_t{1} << (J + k));
    };

    SelectionResult res;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t J = 0; J <= cap; ++J) {
        double sum = full[J];
        for (std::size_t k = 0; J + k < N; ++k) sum += level_prefix[J + k][keep_count(J, k)];
        double crit = -sum + pen.prime(neh_collection_dimension(J, N), n);
        res.criterion_path.emplace_back(J, crit);
        if (crit < best) {
            best = crit;
            best_j = J;
        }
    }

    res.criterion = best;
    res.level = best_j;
    res.dimension = neh_collection_dimension(best_j, N);
    res.mask.assign(n, 0);
    res.mask[0] = 1;
    for (std::size_t j = 0; j < best_j; ++j) {
        std::size_t begin = std::size_t{1} << j;
        std::fill(res.mask.begin() + begin, res.mask.begin() + 2 * begin, 1);
    }
    for (std::size_t k = 0; best_j + k < N; ++k) {
        std::size_t q = keep_count(best_j, k);
        const auto& ord = level_order[best_j + k];
        for (std::size_t t = 0; t < q; ++t) res.mask[ord[t]] = 1;
    }
    res.selected = detail::indices_from_mask(res.mask, n);
    res.estimate = reconstruct(coeffs, res.mask);
    return res;
}

}  // namespace catseg
