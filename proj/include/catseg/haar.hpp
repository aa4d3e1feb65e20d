#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "catseg/domain.hpp"

namespace catseg {

/// Index into the discrete Haar basis: the constant vector is (-1,0),
/// a detail vector at level j >= 0 has shift k in {0 .. 2^j - 1}.
struct HaarIndex {
    int level = -1;
    int shift = 0;

    friend bool operator==(const HaarIndex&, const HaarIndex&) = default;
    friend auto operator<=>(const HaarIndex&, const HaarIndex&) = default;
};

inline bool is_power_of_two(std::size_t n) { return n > 0 && std::has_single_bit(n); }

inline std::size_t log2_exact(std::size_t n) {
    if (!is_power_of_two(n))
        throw std::invalid_argument("length must be a power of two");
    return static_cast<std::size_t>(std::countr_zero(n));
}

/// Lexical rank of an index, 1-based: (-1,0) -> 1, (j,k) -> 1 + 2^j + k.
inline std::size_t canonical_order(HaarIndex lambda, std::size_t n) {
    std::size_t N = log2_exact(n);
    if (lambda.level == -1) {
        if (lambda.shift != 0)
            throw std::invalid_argument("canonical_order: shift must be 0 at level -1");
        return 1;
    }
    if (lambda.level < 0 || static_cast<std::size_t>(lambda.level) >= N)
        throw std::invalid_argument("canonical_order: level out of range");
    std::size_t w = std::size_t{1} << lambda.level;
    if (lambda.shift < 0 || static_cast<std::size_t>(lambda.shift) >= w)
        throw std::invalid_argument("canonical_order: shift out of range");
    return 1 + w + static_cast<std::size_t>(lambda.shift);
}

/// Inverse of canonical_order for 0-based positions 0..n-1.
inline HaarIndex index_at_position(std::size_t pos, std::size_t n) {
    if (pos >= n)
        throw std::invalid_argument("index_at_position: position out of range");
    if (pos == 0) return {-1, 0};
    int level = static_cast<int>(std::bit_width(pos)) - 1;
    std::size_t w = std::size_t{1} << level;
    return {level, static_cast<int>(pos - w)};
}

/// Explicit Haar vector: unit norm, piecewise constant on dyadic blocks,
/// +1 sign on the first half of its support.
inline std::vector<double> haar_vector(HaarIndex lambda, std::size_t n) {
    std::size_t N = log2_exact(n);
    (void)canonical_order(lambda, n);  // validates
    std::vector<double> v(n, 0.0);
    double root_n = std::sqrt(static_cast<double>(n));
    if (lambda.level == -1) {
        for (double& x : v) x = 1.0 / root_n;
        return v;
    }
    (void)N;
    // support: i with k*n/2^j < i <= (k+1)*n/2^j (1-based samples at i/n)
    std::size_t block = n >> lambda.level;
    std::size_t begin = static_cast<std::size_t>(lambda.shift) * block;  // 0-based
    double amp = std::exp2(0.5 * lambda.level) / root_n;
    for (std::size_t t = 0; t < block; ++t)
        v[begin + t] = (t < block / 2) ? amp : -amp;
    return v;
}

/// Fast forward Haar transform of one line, O(n).
/// Output is in canonical order: position 0 holds the (-1,0) coefficient,
/// positions 2^j..2^{j+1}-1 hold level j.
inline std::vector<double> forward(std::span<const double> line) {
    std::size_t n = line.size();
    std::size_t N = log2_exact(n);
    std::vector<double> out(n, 0.0);
    std::vector<double> sums(line.begin(), line.end());  // block sums, finest first
    double root_n = std::sqrt(static_cast<double>(n));
    for (std::size_t level = N; level-- > 0;) {
        std::size_t blocks = std::size_t{1} << level;
        double amp = std::exp2(0.5 * static_cast<double>(level)) / root_n;
        for (std::size_t k = 0; k < blocks; ++k) {
            double a = sums[2 * k];
            double b = sums[2 * k + 1];
            out[blocks + k] = amp * (a - b);
            sums[k] = a + b;
        }
    }
    out[0] = sums[0] / root_n;
    return out;
}

/// Inverse of forward, O(n).
inline std::vector<double> inverse(std::span<const double> coeffs) {
    std::size_t n = coeffs.size();
    std::size_t N = log2_exact(n);
    double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> sums(n, 0.0);
    sums[0] = coeffs[0] * root_n;
    for (std::size_t level = 0; level < N; ++level) {
        std::size_t blocks = std::size_t{1} << level;
        double scale = root_n / std::exp2(0.5 * static_cast<double>(level));
        for (std::size_t k = blocks; k-- > 0;) {
            double diff = coeffs[blocks + k] * scale;
            double sum = sums[k];
            sums[2 * k] = 0.5 * (sum + diff);
            sums[2 * k + 1] = 0.5 * (sum - diff);
        }
    }
    return sums;  // singleton block sums are the samples themselves
}

/// Haar coefficients of all r lines plus the per-index squared norms.
class CoefficientMatrix {
public:
    CoefficientMatrix(RealMatrix coeffs, std::vector<double> norms)
        : coeffs_(std::move(coeffs)), norms_(std::move(norms)) {}

    std::size_t rows() const { return coeffs_.rows(); }
    std::size_t cols() const { return coeffs_.cols(); }
    const RealMatrix& coeffs() const { return coeffs_; }
    const std::vector<double>& norms() const { return norms_; }

private:
    RealMatrix coeffs_;
    std::vector<double> norms_;  // ||beta_lambda||_r^2 in canonical order
};

inline CoefficientMatrix transform_matrix(const RealMatrix& x) {
    std::size_t r = x.rows();
    std::size_t n = x.cols();
    log2_exact(n);
    RealMatrix coeffs(r, n);
    for (std::size_t j = 0; j < r; ++j) {
        auto c = forward(x.line(j));
        std::copy(c.begin(), c.end(), coeffs.line(j).begin());
    }
    std::vector<double> norms(n, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        auto line = coeffs.line(j);
        for (std::size_t l = 0; l < n; ++l) norms[l] += line[l] * line[l];
    }
    return {std::move(coeffs), std::move(norms)};
}

inline CoefficientMatrix transform_matrix(const MultinomialMatrix& x) {
    return transform_matrix(x.matrix());
}

}  // namespace catseg
