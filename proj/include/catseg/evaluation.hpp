#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "catseg/calibration.hpp"
#include "catseg/domain.hpp"
#include "catseg/haar.hpp"
#include "catseg/segmentation.hpp"
#include "catseg/selection.hpp"

namespace catseg {

// ---------------------------------------------------------------------------
// Seeded randomness. splitmix64 gives replay determinism independent of the
// standard library's distribution implementations.
// ---------------------------------------------------------------------------

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate) {
    SplitMix64 g(master ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(replicate + 1)));
    return g.next();
}

inline unsigned env_thread_cap() {
    if (const char* v = std::getenv("CATSEG_THREADS")) {
        long t = std::strtol(v, nullptr, 10);
        if (t >= 1) return static_cast<unsigned>(t);
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Test signals. The shapes follow the three classes used in the benchmark:
// piecewise constant (s1, s2), smooth (s3, s4), piecewise linear (s5, s6);
// s7 and s8 stack two binary signals into four product lines.
// ---------------------------------------------------------------------------

namespace detail {

inline ProbabilityMatrix binary_signal(const std::vector<double>& first_line) {
    RealMatrix m(2, first_line.size());
    for (std::size_t i = 0; i < first_line.size(); ++i) {
        m(0, i) = first_line[i];
        m(1, i) = 1.0 - first_line[i];
    }
    return ProbabilityMatrix(std::move(m));
}

inline std::vector<double> first_line(int id, std::size_t n) {
    std::vector<double> f(n);
    auto frac = [n](std::size_t i) { return static_cast<double>(i + 1) / static_cast<double>(n); };
    switch (id) {
        case 1: {  // 4 segments; off-dyadic breakpoints so no basis is favored
            const double levels[] = {0.2, 0.7, 0.4, 0.8};
            const double edges[] = {0.22, 0.51, 0.78};
            for (std::size_t i = 0; i < n; ++i) {
                double u = static_cast<double>(i) / static_cast<double>(n);
                std::size_t seg = 0;
                while (seg < 3 && u >= edges[seg]) ++seg;
                f[i] = levels[seg];
            }
            break;
        }
        case 2: {  // 11 equal segments alternating between the band edges
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t seg = std::min<std::size_t>(11 * i / n, 10);
                f[i] = (seg % 2 == 0) ? 0.15 : 0.85;
            }
            break;
        }
        case 3:
            for (std::size_t i = 0; i < n; ++i)
                f[i] = 0.5 + 0.35 * std::sin(2.0 * std::numbers::pi * frac(i));
            break;
        case 4:
            for (std::size_t i = 0; i < n; ++i)
                f[i] = 0.5 + 0.3 * std::sin(6.0 * std::numbers::pi * frac(i)) *
                                 std::exp(-2.0 * frac(i));
            break;
        case 5: {  // 3-piece ramp
            for (std::size_t i = 0; i < n; ++i) {
                double t = 3.0 * frac(i);
                std::size_t piece = std::min<std::size_t>(static_cast<std::size_t>(t), 2);
                double u = t - static_cast<double>(piece);
                f[i] = (piece % 2 == 0) ? 0.1 + 0.8 * u : 0.9 - 0.8 * u;
            }
            break;
        }
        case 6: {  // 6-piece sawtooth
            for (std::size_t i = 0; i < n; ++i) {
                double t = 6.0 * frac(i);
                std::size_t piece = std::min<std::size_t>(static_cast<std::size_t>(t), 5);
                double u = t - static_cast<double>(piece);
                f[i] = (piece % 2 == 0) ? 0.2 + 0.6 * u : 0.8 - 0.6 * u;
            }
            break;
        }
        default:
            throw std::invalid_argument("first_line: id must be 1..6");
    }
    return f;
}

}  // namespace detail

/// Benchmark signal l = 1..8; r = 2 for 1..6 and r = 4 for 7..8.
inline ProbabilityMatrix make_signal(int id, std::size_t n = 1024) {
    if (id >= 1 && id <= 6) return detail::binary_signal(detail::first_line(id, n));
    if (id == 7 || id == 8) {
        auto a = detail::first_line(id == 7 ? 1 : 2, n);
        auto b = detail::first_line(id == 7 ? 3 : 5, n);
        RealMatrix m(4, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(0, i) = a[i] * b[i];
            m(1, i) = a[i] * (1.0 - b[i]);
            m(2, i) = (1.0 - a[i]) * b[i];
            m(3, i) = (1.0 - a[i]) * (1.0 - b[i]);
        }
        return ProbabilityMatrix(std::move(m));
    }
    throw std::invalid_argument("make_signal: id must be 1..8");
}

/// Draw one observation matrix: column i sampled from the distribution s_i.
inline MultinomialMatrix sample(const ProbabilityMatrix& s, std::uint64_t seed) {
    SplitMix64 rng(seed);
    RealMatrix x(s.rows(), s.cols());
    for (std::size_t i = 0; i < s.cols(); ++i) {
        double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = s.rows() - 1;
        for (std::size_t j = 0; j < s.rows(); ++j) {
            acc += s(j, i);
            if (u < acc) {
                pick = j;
                break;
            }
        }
        x(pick, i) = 1.0;
    }
    return MultinomialMatrix(std::move(x));
}

// ---------------------------------------------------------------------------
// Monte Carlo risk with the successive-averages stopping rule.
// ---------------------------------------------------------------------------

inline constexpr double kMcStoppingTol = 1e-2;

struct RiskEstimate {
    double value = 0.0;
    std::size_t replicates = 0;
    std::vector<double> history;  // running averages, one per replicate
    bool converged = false;
};

/// Estimator closure: observation matrix -> estimate of s.
using Estimator = std::function<RealMatrix(const MultinomialMatrix&)>;

/// Average of ||s - estimate||^2 over replicates, stopping once two
/// successive averages differ by less than 1e-2 (after min_reps).
/// Replicates are seeded from (seed, index) so parallel execution is
/// bit-identical to sequential.
inline RiskEstimate monte_carlo_risk(const ProbabilityMatrix& s, const Estimator& estimator,
                                     std::uint64_t seed, std::size_t min_reps = 10,
                                     std::size_t max_reps = 100'000) {
    if (min_reps < 2 || max_reps < min_reps)
        throw std::invalid_argument("monte_carlo_risk: need max_reps >= min_reps >= 2");
    unsigned threads = env_thread_cap();

    RiskEstimate res;
    double total = 0.0;
    std::size_t h = 0;
    std::vector<double> batch;
    while (h < max_reps) {
        std::size_t batch_n = std::min<std::size_t>(threads, max_reps - h);
        batch.assign(batch_n, 0.0);
        auto work = [&](std::size_t t) {
            std::size_t rep = h + t;
            auto x = sample(s, replicate_seed(seed, rep));
            RealMatrix est;
            try {
                est = estimator(x);
            } catch (const std::exception& e) {
                throw std::runtime_error("monte_carlo_risk: estimator failed at replicate " +
                                         std::to_string(rep + 1) + ": " + e.what());
            }
            batch[t] = frobenius_sq_diff(s.matrix(), est);
        };
        if (batch_n == 1) {
            work(0);
        } else {
            std::vector<std::exception_ptr> errors(batch_n);
            std::vector<std::thread> pool;
            pool.reserve(batch_n);
            for (std::size_t t = 0; t < batch_n; ++t)
                pool.emplace_back([&, t] {
                    try {
                        work(t);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            for (auto& th : pool) th.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        for (std::size_t t = 0; t < batch_n; ++t) {
            total += batch[t];
            ++h;
            double avg = total / static_cast<double>(h);
            res.history.push_back(avg);
            if (h >= min_reps && h >= 2 &&
                std::abs(avg - res.history[h - 2]) < kMcStoppingTol) {
                res.value = avg;
                res.replicates = h;
                res.converged = true;
                return res;
            }
        }
    }
    res.value = res.history.back();
    res.replicates = h;
    res.converged = false;
    return res;
}

// ---------------------------------------------------------------------------
// Grid sweeps over penalty constants. One replicate stream feeds the whole
// grid; each grid point applies the stopping rule to its own running average.
// ---------------------------------------------------------------------------

enum class Strategy { EH, NEH, EI };

struct GridPoint {
    double c1 = 0.0;
    double c2 = 0.0;
    double c = 0.0;
    double risk = 0.0;
    std::size_t replicates = 0;
    bool converged = false;
};

struct GridSweepResult {
    std::vector<GridPoint> points;
    std::size_t best = 0;  // index of minimal risk
};

struct GridSweepOptions {
    std::size_t min_reps = 10;
    std::size_t max_reps = 100'000;
    std::size_t ei_d_max = 48;
    std::optional<std::size_t> neh_j_max;
};

namespace detail {

/// Per-replicate losses for every grid point, computed in the coefficient
/// domain: with sigma the transform of s, selecting model m gives
/// ||s - estimate||^2 = sum_{m} ||sigma - beta||^2 + sum_{not m} ||sigma||^2.
struct HaarGridEval {
    const ProbabilityMatrix& s;
    CoefficientMatrix sigma;

    explicit HaarGridEval(const ProbabilityMatrix& sig)
        : s(sig), sigma(transform_matrix(sig.matrix())) {}

    /// delta[l] = ||sigma_l - beta_l||^2 - ||sigma_l||^2; adding delta over
    /// the selected set to ||s||^2-in-coefficients gives the loss.
    std::vector<double> deltas(const CoefficientMatrix& beta) const {
        std::size_t n = beta.cols();
        std::vector<double> d(n, 0.0);
        for (std::size_t j = 0; j < beta.rows(); ++j) {
            auto bl = beta.coeffs().line(j);
            auto sl = sigma.coeffs().line(j);
            for (std::size_t l = 0; l < n; ++l) {
                double miss = sl[l] - bl[l];
                d[l] += miss * miss - sl[l] * sl[l];
            }
        }
        return d;
    }

    double base() const {
        double b = 0.0;
        for (double v : sigma.norms()) b += v;
        return b;
    }
};

}  // namespace detail

/// Risk surface over penalty constants. EH sweeps (c1, c2) pairs; NEH and EI
/// sweep c. Deterministic per seed.
inline GridSweepResult grid_sweep(const ProbabilityMatrix& s, Strategy strategy,
                                  const std::vector<double>& c1_grid,
                                  const std::vector<double>& c2_grid,
                                  const std::vector<double>& c_grid, std::uint64_t seed,
                                  const GridSweepOptions& opt = {}) {
    std::size_t n = s.cols();
    // EH always sweeps (c1, c2); EI may sweep either family; NEH sweeps c.
    bool two_const = strategy == Strategy::EH ||
                     (strategy == Strategy::EI && !c1_grid.empty() && !c2_grid.empty());
    std::vector<GridPoint> points;
    if (two_const) {
        if (c1_grid.empty() || c2_grid.empty())
            throw std::invalid_argument("grid_sweep: empty grid");
        for (double c1 : c1_grid)
            for (double c2 : c2_grid) points.push_back({c1, c2, 0.0, 0.0, 0, false});
    } else {
        if (c_grid.empty())
            throw std::invalid_argument("grid_sweep: empty grid");
        for (double c : c_grid) points.push_back({0.0, 0.0, c, 0.0, 0, false});
    }
    std::size_t np = points.size();

    detail::HaarGridEval ev(s);
    double base = ev.base();
    std::size_t N = log2_exact(n);
    std::size_t d_max = std::min(opt.ei_d_max, n);

    // One replicate -> loss per grid point.
    auto losses_for = [&](std::size_t rep) {
        auto x = sample(s, replicate_seed(seed, rep));
        std::vector<double> losses(np, 0.0);
        if (strategy == Strategy::EH) {
            auto beta = transform_matrix(x);
            auto delta = ev.deltas(beta);
            const auto& norms = beta.norms();
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin() + 1, order.end(),
                             [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
            std::vector<double> pre_norm(n + 1, 0.0), pre_delta(n + 1, 0.0);
            for (std::size_t d = 0; d < n; ++d) {
                pre_norm[d + 1] = pre_norm[d] + norms[order[d]];
                pre_delta[d + 1] = pre_delta[d] + delta[order[d]];
            }
            for (std::size_t p = 0; p < np; ++p) {
                auto pen = PenaltySpec::two_constant(points[p].c1, points[p].c2);
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_d = 1;
                for (std::size_t d = 1; d <= n; ++d) {
                    double crit = -pre_norm[d] + pen.prime(d, n);
                    if (crit < best) {
                        best = crit;
                        best_d = d;
                    }
                }
                losses[p] = base + pre_delta[best_d];
            }
        } else if (strategy == Strategy::NEH) {
            auto beta = transform_matrix(x);
            auto delta = ev.deltas(beta);
            const auto& norms = beta.norms();
            std::size_t cap = std::min(opt.neh_j_max.value_or(N - 1), N - 1);
            // per level: prefix sums of norms and deltas in norm-descending order
            std::vector<std::vector<double>> pre_norm(N), pre_delta(N);
            for (std::size_t j = 0; j < N; ++j) {
                std::size_t begin = std::size_t{1} << j;
                std::vector<std::size_t> ord(begin);
                std::iota(ord.begin(), ord.end(), begin);
                std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
                    return norms[a] > norms[b];
                });
                pre_norm[j].assign(begin + 1, 0.0);
                pre_delta[j].assign(begin + 1, 0.0);
                for (std::size_t t = 0; t < begin; ++t) {
                    pre_norm[j][t + 1] = pre_norm[j][t] + norms[ord[t]];
                    pre_delta[j][t + 1] = pre_delta[j][t] + delta[ord[t]];
                }
            }
            std::vector<double> sum_j(cap + 1), del_j(cap + 1);
            for (std::size_t J = 0; J <= cap; ++J) {
                double sum = norms[0];
                double del = delta[0];
                for (std::size_t j = 0; j < J; ++j) {
                    sum += pre_norm[j].back();
                    del += pre_delta[j].back();
                }
                for (std::size_t k = 0; J + k < N; ++k) {
                    double cube = static_cast<double>(k + 1);
                    auto q = static_cast<std::size_t>(
                        std::floor(std::exp2(static_cast<double>(J)) / (cube * cube * cube)));
                    q = std::min(q, pre_norm[J + k].size() - 1);
                    sum += pre_norm[J + k][q];
                    del += pre_delta[J + k][q];
                }
                sum_j[J] = sum;
                del_j[J] = del;
            }
            for (std::size_t p = 0; p < np; ++p) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_J = 0;
                for (std::size_t J = 0; J <= cap; ++J) {
                    double crit = -sum_j[J] + points[p].c *
                                                  static_cast<double>(neh_collection_dimension(J, N));
                    if (crit < best) {
                        best = crit;
                        best_J = J;
                    }
                }
                losses[p] = base + del_j[best_J];
            }
        } else {  // EI
            SegmentStats stats(x);
            auto dp = dp_optimal_partitions(stats, d_max);
            std::vector<double> loss_d(d_max);
            for (std::size_t d = 1; d <= d_max; ++d)
                loss_d[d - 1] =
                    frobenius_sq_diff(s.matrix(), segment_means(stats, dp.partitions[d - 1]).matrix());
            for (std::size_t p = 0; p < np; ++p) {
                auto pen = two_const ? PenaltySpec::two_constant(points[p].c1, points[p].c2)
                                     : PenaltySpec::linear(points[p].c);
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_d = 1;
                for (std::size_t d = 1; d <= d_max; ++d) {
                    double crit = dp.sse[d - 1] + pen.prime(d, n);
                    if (crit < best) {
                        best = crit;
                        best_d = d;
                    }
                }
                losses[p] = loss_d[best_d - 1];
            }
        }
        return losses;
    };

    unsigned threads = env_thread_cap();
    std::vector<double> totals(np, 0.0), prev_avg(np, 0.0);
    std::vector<std::uint8_t> frozen(np, 0);
    std::size_t h = 0;
    while (h < opt.max_reps) {
        std::size_t live = std::count(frozen.begin(), frozen.end(), std::uint8_t{0});
        if (live == 0) break;
        std::size_t batch_n = std::min<std::size_t>(threads, opt.max_reps - h);
        std::vector<std::vector<double>> batch(batch_n);
        auto work = [&](std::size_t t) { batch[t] = losses_for(h + t); };
        if (batch_n == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < batch_n; ++t) pool.emplace_back(work, t);
            for (auto& th : pool) th.join();
        }
        for (std::size_t t = 0; t < batch_n; ++t) {
            ++h;
            for (std::size_t p = 0; p < np; ++p) {
                if (frozen[p]) continue;
                totals[p] += batch[t][p];
                double avg = totals[p] / static_cast<double>(h);
                if (h >= opt.min_reps && std::abs(avg - prev_avg[p]) < kMcStoppingTol) {
                    points[p].risk = avg;
                    points[p].replicates = h;
                    points[p].converged = true;
                    frozen[p] = 1;
                }
                prev_avg[p] = avg;
            }
        }
    }
    for (std::size_t p = 0; p < np; ++p) {
        if (!frozen[p]) {
            points[p].risk = prev_avg[p];
            points[p].replicates = h;
            points[p].converged = false;
        }
    }

    GridSweepResult res;
    res.points = std::move(points);
    res.best = 0;
    for (std::size_t p = 1; p < np; ++p)
        if (res.points[p].risk < res.points[res.best].risk) res.best = p;
    return res;
}

// ---------------------------------------------------------------------------
// Brute-force referees.
// ---------------------------------------------------------------------------

/// Exhaustive minimum of -sum of selected norms + pen'(D) over all subsets
/// of Haar indices containing (-1,0). Referee for eh_select.
inline std::pair<double, std::vector<std::size_t>> oracle_subset_select(
    const CoefficientMatrix& coeffs, const PenaltySpec& pen) {
    std::size_t n = coeffs.cols();
    if (n > 16)
        throw std::invalid_argument("oracle_subset_select: n too large for enumeration");
    const auto& norms = coeffs.norms();
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    std::uint32_t limit = std::uint32_t{1} << (n - 1);
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
        double sum = norms[0];
        std::size_t dim = 1;
        for (std::size_t b = 0; b + 1 < n; ++b) {
            if (mask & (std::uint32_t{1} << b)) {
                sum += norms[b + 1];
                ++dim;
            }
        }
        double crit = -sum + pen.prime(dim, n);
        if (crit < best) {
            best = crit;
            best_mask = mask;
        }
    }
    std::vector<std::size_t> subset{0};
    for (std::size_t b = 0; b + 1 < n; ++b)
        if (best_mask & (std::uint32_t{1} << b)) subset.push_back(b + 1);
    return {best, subset};
}

/// Exhaustive minimum SSE over all partitions of {1..n} into D intervals.
/// Also reports how many partitions were enumerated (= C(n-1, D-1)).
struct OraclePartition {
    double sse = 0.0;
    Partition partition;
    std::size_t enumerated = 0;
};

inline OraclePartition oracle_partition_select(const SegmentStats& stats, std::size_t d) {
    std::size_t n = stats.n();
    if (n > 12)
        throw std::invalid_argument("oracle_partition_select: n too large for enumeration");
    if (d < 1 || d > n)
        throw std::invalid_argument("oracle_partition_select: bad segment count");

    OraclePartition out;
    out.sse = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> bps(d);
    bps[0] = 1;

    // choose d-1 additional breakpoints from {2..n}
    std::vector<std::size_t> pick(d - 1);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t slot, std::size_t from) {
        if (slot == d - 1) {
            ++out.enumerated;
            std::vector<std::size_t> all{1};
            all.insert(all.end(), pick.begin(), pick.end());
            double sse = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                std::size_t a = all[t];
                std::size_t b = t + 1 < d ? all[t + 1] - 1 : n;
                sse += segment_cost(stats, a, b);
            }
            if (sse < out.sse) {
                out.sse = sse;
                out.partition = Partition(all, n);
            }
            return;
        }
        for (std::size_t v = from; v <= n - (d - 2 - slot); ++v) {
            pick[slot] = v;
            rec(slot + 1, v + 1);
        }
    };
    if (d == 1) {
        out.enumerated = 1;
        out.sse = segment_cost(stats, 1, n);
        out.partition = Partition({1}, n);
    } else {
        rec(0, 2);
    }
    return out;
}

}  // namespace catseg
