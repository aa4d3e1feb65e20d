#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "catseg/calibration.hpp"
#include "catseg/domain.hpp"
#include "catseg/evaluation.hpp"
#include "catseg/segmentation.hpp"
#include "catseg/selection.hpp"

namespace catseg {

// Error categories mapped to distinct CLI exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FastaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LengthPolicyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitFasta = 4;
inline constexpr int kExitLengthPolicy = 5;
inline constexpr int kExitCompute = 6;

// ---------------------------------------------------------------------------
// FASTA ingestion: alphabet {A,C,G,T} mapped to {1,2,3,4}.
// ---------------------------------------------------------------------------

struct FastaOptions {
    bool drop_invalid = false;           // skip non-ACGT symbols instead of erroring
    std::optional<std::string> record;   // pick a record by header prefix; default first
};

struct FastaResult {
    CategoricalSequence seq;
    std::string header;
    std::size_t dropped = 0;
    std::size_t records_skipped = 0;
};

inline FastaResult read_fasta(const std::string& path, const FastaOptions& opts = {}) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open FASTA file: " + path);

    std::vector<int> values;
    std::string header;
    std::size_t dropped = 0;
    std::size_t records_seen = 0;
    std::size_t position = 0;
    bool in_target = false;
    bool target_done = false;

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            ++records_seen;
            if (in_target) {
                target_done = true;
                in_target = false;
                continue;
            }
            if (target_done) continue;
            std::string h = line.substr(1);
            if (!opts.record || h.rfind(*opts.record, 0) == 0) {
                in_target = true;
                header = h;
            }
            continue;
        }
        if (!in_target) continue;
        for (char ch : line) {
            ++position;
            switch (std::toupper(static_cast<unsigned char>(ch))) {
                case 'A': values.push_back(1); break;
                case 'C': values.push_back(2); break;
                case 'G': values.push_back(3); break;
                case 'T': values.push_back(4); break;
                default:
                    if (opts.drop_invalid) {
                        ++dropped;
                    } else {
                        throw FastaError("invalid character '" + std::string(1, ch) +
                                         "' at position " + std::to_string(position) + " in " +
                                         path);
                    }
            }
        }
    }
    if (records_seen == 0)
        throw FastaError("no FASTA record found in " + path);
    if (opts.record && header.empty())
        throw FastaError("no record matching header '" + *opts.record + "' in " + path);
    if (values.empty())
        throw FastaError("empty sequence in " + path);

    FastaResult res{CategoricalSequence(std::move(values), 4), header, dropped,
                    records_seen > 1 && !opts.record ? records_seen - 1 : 0};
    return res;
}

// ---------------------------------------------------------------------------
// Dyadic-length policy.
// ---------------------------------------------------------------------------

enum class LengthPolicy { Truncate, PadRepeatLast, Reject };

inline LengthPolicy parse_length_policy(const std::string& s) {
    if (s == "truncate") return LengthPolicy::Truncate;
    if (s == "pad-repeat-last") return LengthPolicy::PadRepeatLast;
    if (s == "reject") return LengthPolicy::Reject;
    throw ConfigError("unknown n-policy: " + s);
}

struct LengthAdjusted {
    CategoricalSequence seq;
    std::size_t original_n = 0;  // crop marker when padded
    bool changed = false;
};

inline LengthAdjusted apply_length_policy(const CategoricalSequence& seq, LengthPolicy policy) {
    std::size_t n = seq.n();
    if (n < 2)
        throw LengthPolicyError("sequence too short for a dyadic length");
    if (is_power_of_two(n)) return {seq, n, false};

    switch (policy) {
        case LengthPolicy::Reject:
            throw LengthPolicyError("sequence length " + std::to_string(n) +
                                    " is not a power of two");
        case LengthPolicy::Truncate: {
            std::size_t m = std::bit_floor(n);
            std::vector<int> vals(seq.values.begin(), seq.values.begin() + m);
            return {CategoricalSequence(std::move(vals), seq.r), n, true};
        }
        case LengthPolicy::PadRepeatLast: {
            std::size_t m = std::bit_ceil(n);
            std::vector<int> vals = seq.values;
            vals.resize(m, seq.values.back());
            return {CategoricalSequence(std::move(vals), seq.r), n, true};
        }
    }
    throw ConfigError("unknown length policy");
}

// ---------------------------------------------------------------------------
// On-disk formats.
// ---------------------------------------------------------------------------

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw ConfigError("unknown format: " + s);
}

inline void write_estimate(const RealMatrix& est, const std::string& path, OutputFormat format,
                           std::optional<std::size_t> crop = {}) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path);
    std::size_t n = crop.value_or(est.cols());
    n = std::min(n, est.cols());
    if (format == OutputFormat::Csv) {
        out << "i";
        for (std::size_t j = 0; j < est.rows(); ++j) out << ",p" << j + 1;
        out << '\n';
        out.precision(12);
        for (std::size_t i = 0; i < n; ++i) {
            out << i + 1;
            for (std::size_t j = 0; j < est.rows(); ++j) out << ',' << est(j, i);
            out << '\n';
        }
    } else {
        nlohmann::json doc;
        doc["n"] = n;
        doc["r"] = est.rows();
        auto cols = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            auto col = nlohmann::json::array();
            for (std::size_t j = 0; j < est.rows(); ++j) col.push_back(est(j, i));
            cols.push_back(std::move(col));
        }
        doc["columns"] = std::move(cols);
        out << doc.dump() << '\n';
    }
    if (!out)
        throw IoError("write failed: " + path);
}

inline void write_estimate(const ProbabilityMatrix& est, const std::string& path,
                           OutputFormat format, std::optional<std::size_t> crop = {}) {
    write_estimate(est.matrix(), path, format, crop);
}

inline RealMatrix read_estimate(const std::string& path, OutputFormat format) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    if (format == OutputFormat::Json) {
        nlohmann::json doc;
        in >> doc;
        std::size_t n = doc.at("n");
        std::size_t r = doc.at("r");
        RealMatrix m(r, n);
        const auto& cols = doc.at("columns");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < r; ++j) m(j, i) = cols.at(i).at(j).get<double>();
        return m;
    }
    std::string line;
    if (!std::getline(in, line))
        throw IoError("empty file: " + path);
    std::size_t r = std::count(line.begin(), line.end(), ',');
    std::vector<double> values;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');  // index column
        for (std::size_t j = 0; j < r; ++j) {
            std::getline(row, cell, ',');
            values.push_back(std::stod(cell));
        }
        ++n;
    }
    RealMatrix m(r, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < r; ++j) m(j, i) = values[i * r + j];
    return m;
}

inline void write_segments(const Partition& part, const ProbabilityMatrix& est,
                           const std::string& path) {
    if (part.n != est.cols())
        throw ConfigError("write_segments: partition and estimate disagree on n");
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path);
    out.precision(12);
    for (std::size_t t = 0; t < part.dimension(); ++t) {
        std::size_t a = part.breakpoints[t];
        std::size_t b = part.segment_end(t);
        out << a << '\t' << b;
        for (std::size_t j = 0; j < est.rows(); ++j) out << '\t' << est(j, a - 1);
        out << '\n';
    }
    if (!out)
        throw IoError("write failed: " + path);
}

inline void write_calibration(const CalibrationPath& path, const std::string& file) {
    std::ofstream out(file);
    if (!out)
        throw IoError("cannot write " + file);
    out.precision(12);
    out << "c,dimension\n";
    for (std::size_t t = 0; t < path.grid.size(); ++t)
        out << path.grid[t] << ',' << path.dims[t] << '\n';
    out << "# c_hat," << path.c_hat << "\n# retained," << path.retained << '\n';
}

inline void write_risk_table(const GridSweepResult& sweep, const std::string& file) {
    std::ofstream out(file);
    if (!out)
        throw IoError("cannot write " + file);
    out.precision(12);
    out << "c1,c2,c,risk,replicates,converged\n";
    for (const auto& p : sweep.points)
        out << p.c1 << ',' << p.c2 << ',' << p.c << ',' << p.risk << ',' << p.replicates << ','
            << (p.converged ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Command orchestration.
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string command;   // estimate | segment | calibrate | simulate | risk
    std::string strategy = "NEH";  // EH | NEH | EI | HYBRID
    std::string penalty = "linear";  // log2const | linear
    double c1 = 1.0;
    double c2 = 2.0;
    double c = 1.0;
    bool c_given = false;  // when false, segment/hybrid calibrates from the data
    std::size_t j_max = 0;  // 0 = N-1
    std::size_t d_max = 0;  // 0 = derived default
    std::string n_policy = "truncate";
    std::uint64_t seed = 1;
    double grid_step = 0.02;
    std::string format = "csv";
    std::string input;      // FASTA path
    std::string out = "out";  // output path prefix
    int signal = 1;           // simulate/risk: test-signal id
    std::size_t n = 1024;     // simulate/risk: signal length
    bool fasta_drop_invalid = false;
    std::optional<std::string> fasta_record;
    std::ostream* diag = &std::cerr;
};

namespace detail {

inline PenaltySpec penalty_from_config(const RunConfig& cfg) {
    if (cfg.penalty == "log2const") return PenaltySpec::two_constant(cfg.c1, cfg.c2);
    if (cfg.penalty == "linear") return PenaltySpec::linear(cfg.c);
    throw ConfigError("unknown penalty family: " + cfg.penalty);
}

inline LengthAdjusted load_sequence(const RunConfig& cfg) {
    if (cfg.input.empty())
        throw ConfigError("an input FASTA path is required");
    auto fasta = read_fasta(cfg.input, {cfg.fasta_drop_invalid, cfg.fasta_record});
    if (fasta.dropped > 0)
        (*cfg.diag) << "note: dropped " << fasta.dropped << " non-ACGT symbols\n";
    if (fasta.records_skipped > 0)
        (*cfg.diag) << "warning: using first record only (" << fasta.records_skipped
                    << " further records ignored)\n";
    auto adj = apply_length_policy(fasta.seq, parse_length_policy(cfg.n_policy));
    if (adj.changed)
        (*cfg.diag) << "note: length adjusted from " << adj.original_n << " to " << adj.seq.n()
                    << " (" << cfg.n_policy << ")\n";
    return adj;
}

inline void write_criterion_path(const std::vector<std::pair<std::size_t, double>>& path,
                                 const std::string& file) {
    std::ofstream out(file);
    if (!out)
        throw IoError("cannot write " + file);
    out.precision(12);
    out << "candidate,criterion\n";
    for (const auto& [cand, crit] : path) out << cand << ',' << crit << '\n';
}

inline int run_estimate(const RunConfig& cfg) {
    auto adj = load_sequence(cfg);
    auto x = encode(adj.seq);
    auto format = parse_format(cfg.format);
    std::optional<std::size_t> crop;
    if (adj.changed && adj.original_n < adj.seq.n()) crop = adj.original_n;

    if (cfg.strategy == "EI") {
        std::size_t d_max = cfg.d_max ? cfg.d_max : std::min<std::size_t>(x.cols(), 64);
        auto res = ei_select(x, penalty_from_config(cfg), d_max);
        write_estimate(res.estimate, cfg.out + ".estimate." + cfg.format, format, crop);
        write_criterion_path(res.criterion_path, cfg.out + ".criterion.csv");
        return kExitOk;
    }

    auto coeffs = transform_matrix(x);
    SelectionResult res;
    if (cfg.strategy == "EH") {
        auto pen = cfg.penalty == "linear" ? PenaltySpec::two_constant(cfg.c1, cfg.c2)
                                           : penalty_from_config(cfg);
        res = eh_select(coeffs, pen);
    } else if (cfg.strategy == "NEH") {
        auto pen = PenaltySpec::linear(cfg.c);
        std::optional<std::size_t> cap;
        if (cfg.j_max) cap = cfg.j_max;
        res = neh_select(coeffs, pen, cap);
    } else {
        throw ConfigError("estimate: strategy must be EH, NEH or EI");
    }
    auto projected = simplex_project(res.estimate);
    write_estimate(projected, cfg.out + ".estimate." + cfg.format, format, crop);
    write_criterion_path(res.criterion_path, cfg.out + ".criterion.csv");
    return kExitOk;
}

inline int run_segment(const RunConfig& cfg) {
    auto adj = load_sequence(cfg);
    auto x = encode(adj.seq);
    auto format = parse_format(cfg.format);
    std::optional<std::size_t> crop;
    if (adj.changed && adj.original_n < adj.seq.n()) crop = adj.original_n;

    if (cfg.strategy == "EI") {
        std::size_t d_max = cfg.d_max ? cfg.d_max : std::min<std::size_t>(x.cols(), 64);
        auto res = ei_select(x, penalty_from_config(cfg), d_max);
        write_segments(res.partition, res.estimate, cfg.out + ".segments.tsv");
        write_estimate(res.estimate, cfg.out + ".estimate." + cfg.format, format, crop);
        return kExitOk;
    }
    if (cfg.strategy != "HYBRID")
        throw ConfigError("segment: strategy must be EI or HYBRID");

    auto coeffs = transform_matrix(x);
    std::size_t N = log2_exact(x.cols());
    std::size_t j_cap = cfg.j_max ? cfg.j_max : std::min<std::size_t>(7, N - 1);

    // NEH penalty 2*c_hat from the dimension-jump sweep unless -c was given.
    double neh_c;
    if (cfg.c_given) {
        neh_c = cfg.c;
    } else {
        auto cal = calibrate_neh(coeffs, j_cap, cfg.grid_step);
        neh_c = cal.retained;
        (*cfg.diag) << "note: NEH penalty constant calibrated to " << neh_c << "\n";
    }

    // Pilot NEH run to get the jump set; the EI constant comes from the
    // dimension-jump sweep on the decimated full candidate set.
    auto neh = neh_select(coeffs, PenaltySpec::linear(neh_c),
                          cfg.j_max ? std::optional<std::size_t>(cfg.j_max) : std::nullopt);
    auto jumps = jump_set(neh.estimate);
    std::size_t d_max =
        cfg.d_max ? cfg.d_max : std::min<std::size_t>(x.cols(), 4 * jumps.size() + 1);
    d_max = std::max<std::size_t>(1, std::min(d_max, jumps.size() + 1));
    double ei_c = calibrate_hybrid_ei(x, cfg.grid_step).retained;
    (*cfg.diag) << "note: EI penalty constant calibrated to " << ei_c << "\n";

    auto res = hybrid_detect(x, PenaltySpec::linear(neh_c), PenaltySpec::linear(ei_c), d_max);
    write_segments(res.partition, res.estimate, cfg.out + ".segments.tsv");
    write_estimate(res.estimate, cfg.out + ".estimate." + cfg.format, format, crop);
    return kExitOk;
}

inline int run_calibrate(const RunConfig& cfg) {
    auto adj = load_sequence(cfg);
    auto x = encode(adj.seq);
    std::size_t N = log2_exact(x.cols());
    if (cfg.strategy == "EI") {
        std::size_t d_max = cfg.d_max ? cfg.d_max : std::min<std::size_t>(x.cols(), 64);
        auto cal = calibrate_segmentation(x, {}, d_max, cfg.grid_step);
        write_calibration(cal, cfg.out + ".calibration.csv");
        return kExitOk;
    }
    auto coeffs = transform_matrix(x);
    std::size_t j_cap = cfg.j_max ? cfg.j_max : std::min<std::size_t>(7, N - 1);
    auto cal = calibrate_neh(coeffs, j_cap, cfg.grid_step);
    write_calibration(cal, cfg.out + ".calibration.csv");
    return kExitOk;
}

inline int run_simulate(const RunConfig& cfg) {
    auto s = make_signal(cfg.signal, cfg.n);
    auto x = sample(s, cfg.seed);
    auto seq = decode(x);
    std::ofstream out(cfg.out + ".fasta");
    if (!out)
        throw IoError("cannot write " + cfg.out + ".fasta");
    out << ">signal" << cfg.signal << " n=" << cfg.n << " seed=" << cfg.seed << '\n';
    const char* alphabet = "ACGT";
    for (std::size_t i = 0; i < seq.n(); ++i) {
        out << alphabet[(seq.values[i] - 1) % 4];
        if ((i + 1) % 70 == 0) out << '\n';
    }
    out << '\n';
    write_estimate(s, cfg.out + ".signal." + cfg.format, parse_format(cfg.format));
    return kExitOk;
}

inline int run_risk(const RunConfig& cfg) {
    auto s = make_signal(cfg.signal, cfg.n);
    Strategy strat;
    if (cfg.strategy == "EH")
        strat = Strategy::EH;
    else if (cfg.strategy == "NEH")
        strat = Strategy::NEH;
    else if (cfg.strategy == "EI")
        strat = Strategy::EI;
    else
        throw ConfigError("risk: strategy must be EH, NEH or EI");

    auto grid = [](double lo, double hi, double step) {
        std::vector<double> g;
        for (double v = lo; v <= hi + 1e-12; v += step) g.push_back(v);
        return g;
    };
    double step = cfg.grid_step;
    GridSweepOptions opt;
    if (cfg.d_max) opt.ei_d_max = cfg.d_max;
    if (cfg.j_max) opt.neh_j_max = cfg.j_max;
    auto sweep = strat == Strategy::EH
                     ? grid_sweep(s, strat, grid(0.0, 1.0, step), grid(0.0, 6.0, step), {},
                                  cfg.seed, opt)
                     : grid_sweep(s, strat, {}, {}, grid(0.0, 4.0, step), cfg.seed, opt);
    write_risk_table(sweep, cfg.out + ".risk.csv");
    const auto& best = sweep.points[sweep.best];
    (*cfg.diag) << "minimal risk " << best.risk << " at c1=" << best.c1 << " c2=" << best.c2
                << " c=" << best.c << "\n";
    return kExitOk;
}

}  // namespace detail

/// Dispatch a parsed configuration; returns a process exit status.
inline int run(const RunConfig& cfg) {
    try {
        if (cfg.command == "estimate") return detail::run_estimate(cfg);
        if (cfg.command == "segment") return detail::run_segment(cfg);
        if (cfg.command == "calibrate") return detail::run_calibrate(cfg);
        if (cfg.command == "simulate") return detail::run_simulate(cfg);
        if (cfg.command == "risk") return detail::run_risk(cfg);
        throw ConfigError("unknown command: " + cfg.command);
    } catch (const ConfigError& e) {
        (*cfg.diag) << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FastaError& e) {
        (*cfg.diag) << "error: " << e.what() << '\n';
        return kExitFasta;
    } catch (const LengthPolicyError& e) {
        (*cfg.diag) << "error: " << e.what() << '\n';
        return kExitLengthPolicy;
    } catch (const IoError& e) {
        (*cfg.diag) << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        (*cfg.diag) << "error: " << e.what() << '\n';
        return kExitCompute;
    }
}

}  // namespace catseg
