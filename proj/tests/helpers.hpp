#pragma once

#include <cstdint>
#include <vector>

#include "catseg/catseg.hpp"

namespace catseg::test {

/// Random one-hot matrix with uniform category draws.
inline MultinomialMatrix random_one_hot(std::size_t r, std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    RealMatrix m(r, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(r));
        if (j >= r) j = r - 1;
        m(j, i) = 1.0;
    }
    return MultinomialMatrix(std::move(m));
}

inline RealMatrix random_real(std::size_t r, std::size_t n, std::uint64_t seed, double lo = -1.0,
                              double hi = 1.0) {
    SplitMix64 rng(seed);
    RealMatrix m(r, n);
    for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = 0; i < n; ++i) m(j, i) = lo + (hi - lo) * rng.uniform();
    return m;
}

/// Naive O(n^2) Haar analysis via explicit basis vectors; the transform's
/// independent referee.
inline std::vector<double> naive_forward(std::span<const double> line) {
    std::size_t n = line.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t pos = 0; pos < n; ++pos) {
        auto v = haar_vector(index_at_position(pos, n), n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += line[i] * v[i];
        out[pos] = acc;
    }
    return out;
}

}  // namespace catseg::test
