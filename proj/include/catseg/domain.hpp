#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace catseg {

/// Dense r x n matrix of doubles, stored row-major so that each category
/// line j is contiguous (the Haar transform runs per line).
class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t j, std::size_t i) const { return data_[j * cols_ + i]; }
    double& operator()(std::size_t j, std::size_t i) { return data_[j * cols_ + i]; }

    std::span<const double> line(std::size_t j) const {
        return {data_.data() + j * cols_, cols_};
    }
    std::span<double> line(std::size_t j) {
        return {data_.data() + j * cols_, cols_};
    }

    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double x) { return std::isfinite(x); });
    }

    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// A sequence of n labels in {1..r}.
struct CategoricalSequence {
    std::vector<int> values;  // 1-based labels
    int r = 0;

    CategoricalSequence() = default;
    CategoricalSequence(std::vector<int> vals, int alphabet) : values(std::move(vals)), r(alphabet) {
        if (r < 2)
            throw std::invalid_argument("CategoricalSequence: alphabet size must be >= 2");
        if (values.empty())
            throw std::invalid_argument("CategoricalSequence: sequence must be non-empty");
        for (int v : values)
            if (v < 1 || v > r)
                throw std::invalid_argument("CategoricalSequence: label out of {1..r}");
    }

    std::size_t n() const { return values.size(); }
};

/// One-hot r x n observation matrix X: every column has a single 1.
class MultinomialMatrix {
public:
    explicit MultinomialMatrix(RealMatrix m) : m_(std::move(m)) {
        for (std::size_t i = 0; i < m_.cols(); ++i) {
            int ones = 0;
            for (std::size_t j = 0; j < m_.rows(); ++j) {
                double v = m_(j, i);
                if (v == 1.0)
                    ++ones;
                else if (v != 0.0)
                    throw std::invalid_argument("MultinomialMatrix: entries must be 0 or 1");
            }
            if (ones != 1)
                throw std::invalid_argument("MultinomialMatrix: column is not one-hot");
        }
    }

    std::size_t rows() const { return m_.rows(); }
    std::size_t cols() const { return m_.cols(); }
    double operator()(std::size_t j, std::size_t i) const { return m_(j, i); }
    const RealMatrix& matrix() const { return m_; }

private:
    RealMatrix m_;
};

inline constexpr double kSimplexTol = 1e-12;

/// r x n matrix whose columns are probability vectors.
class ProbabilityMatrix {
public:
    explicit ProbabilityMatrix(RealMatrix m) : m_(std::move(m)) {
        for (std::size_t i = 0; i < m_.cols(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m_.rows(); ++j) {
                double v = m_(j, i);
                if (v < 0.0 || v > 1.0)
                    throw std::invalid_argument("ProbabilityMatrix: entry outside [0,1]");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("ProbabilityMatrix: column sum != 1");
        }
    }

    std::size_t rows() const { return m_.rows(); }
    std::size_t cols() const { return m_.cols(); }
    double operator()(std::size_t j, std::size_t i) const { return m_(j, i); }
    const RealMatrix& matrix() const { return m_; }

private:
    RealMatrix m_;
};

inline MultinomialMatrix encode(const CategoricalSequence& seq) {
    RealMatrix m(static_cast<std::size_t>(seq.r), seq.n());
    for (std::size_t i = 0; i < seq.n(); ++i)
        m(static_cast<std::size_t>(seq.values[i] - 1), i) = 1.0;
    return MultinomialMatrix(std::move(m));
}

/// Argmax per column; well defined by the one-hot invariant.
inline CategoricalSequence decode(const MultinomialMatrix& x) {
    std::vector<int> vals(x.cols());
    for (std::size_t i = 0; i < x.cols(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < x.rows(); ++j)
            if (x(j, i) > x(best, i)) best = j;
        vals[i] = static_cast<int>(best) + 1;
    }
    return CategoricalSequence(std::move(vals), static_cast<int>(x.rows()));
}

inline double frobenius_sq_diff(const RealMatrix& a, const RealMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("frobenius_sq_diff: shape mismatch");
    double acc = 0.0;
    const auto& da = a.data();
    const auto& db = b.data();
    for (std::size_t k = 0; k < da.size(); ++k) {
        double d = da[k] - db[k];
        acc += d * d;
    }
    return acc;
}

/// Sort-based Euclidean projection of a vector onto the probability simplex.
inline void project_column_to_simplex(std::span<double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) {
            rho = k + 1;
            theta = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(x - theta, 0.0);
}

/// Column-wise Euclidean projection onto the probability simplex.
inline ProbabilityMatrix simplex_project(const RealMatrix& m) {
    if (!m.all_finite())
        throw std::invalid_argument("simplex_project: non-finite input");
    RealMatrix out = m;
    std::vector<double> col(out.rows());
    for (std::size_t i = 0; i < out.cols(); ++i) {
        for (std::size_t j = 0; j < out.rows(); ++j) col[j] = out(j, i);
        project_column_to_simplex(col);
        double sum = std::accumulate(col.begin(), col.end(), 0.0);
        // renormalize away rounding so the column passes the 1e-12 membership check
        for (std::size_t j = 0; j < out.rows(); ++j) out(j, i) = col[j] / sum;
    }
    return ProbabilityMatrix(std::move(out));
}

}  // namespace catseg
