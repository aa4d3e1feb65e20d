// catseg: penalized least-squares estimation and change-point detection for
// categorical sequences (Haar wavelet and interval-partition model
// collections).

#include <CLI11.hpp>

#include "catseg/catseg.hpp"

int main(int argc, char** argv) {
    CLI::App app{"categorical sequence estimation and segmentation"};
    app.require_subcommand(1);

    catseg::RunConfig cfg;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--strategy", cfg.strategy, "EH | NEH | EI | HYBRID");
        cmd->add_option("--penalty", cfg.penalty, "log2const | linear");
        cmd->add_option("--c1", cfg.c1, "first constant of the log2const penalty");
        cmd->add_option("--c2", cfg.c2, "second constant of the log2const penalty");
        cmd->add_option("--c", cfg.c, "constant of the linear penalty")
            ->each([&](const std::string&) { cfg.c_given = true; });
        cmd->add_option("--jmax", cfg.j_max, "cap on the NEH level J");
        cmd->add_option("--dmax", cfg.d_max, "cap on the number of segments");
        cmd->add_option("--n-policy", cfg.n_policy, "truncate | pad-repeat-last | reject");
        cmd->add_option("--seed", cfg.seed, "random seed");
        cmd->add_option("--grid-step", cfg.grid_step, "calibration / risk grid step");
        cmd->add_option("--format", cfg.format, "csv | json");
        cmd->add_option("--out", cfg.out, "output path prefix");
    };

    auto* estimate = app.add_subcommand("estimate", "estimate the distribution of a sequence");
    estimate->add_option("input", cfg.input, "FASTA file")->required();
    add_common(estimate);
    estimate->add_flag("--drop-invalid", cfg.fasta_drop_invalid,
                       "drop non-ACGT symbols instead of failing");

    auto* segment = app.add_subcommand("segment", "detect change points (HYBRID or EI)");
    segment->add_option("input", cfg.input, "FASTA file")->required();
    add_common(segment);
    segment->add_flag("--drop-invalid", cfg.fasta_drop_invalid,
                      "drop non-ACGT symbols instead of failing");

    auto* calibrate = app.add_subcommand("calibrate", "dimension-jump penalty calibration");
    calibrate->add_option("input", cfg.input, "FASTA file")->required();
    add_common(calibrate);
    calibrate->add_flag("--drop-invalid", cfg.fasta_drop_invalid,
                        "drop non-ACGT symbols instead of failing");

    auto* simulate = app.add_subcommand("simulate", "sample a sequence from a test signal");
    simulate->add_option("--signal", cfg.signal, "test signal id, 1..8");
    simulate->add_option("--n", cfg.n, "sequence length (power of two)");
    add_common(simulate);

    auto* risk = app.add_subcommand("risk", "Monte Carlo risk surface over penalty constants");
    risk->add_option("--signal", cfg.signal, "test signal id, 1..8");
    risk->add_option("--n", cfg.n, "sequence length (power of two)");
    add_common(risk);

    // risk grids default to the benchmark's 0.1 step
    cfg.grid_step = 0.02;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (estimate->parsed()) cfg.command = "estimate";
    if (segment->parsed()) {
        cfg.command = "segment";
        if (!segment->count("--strategy")) cfg.strategy = "HYBRID";
    }
    if (calibrate->parsed()) cfg.command = "calibrate";
    if (simulate->parsed()) cfg.command = "simulate";
    if (risk->parsed()) {
        cfg.command = "risk";
        if (!risk->count("--grid-step")) cfg.grid_step = 0.1;
    }

    return catseg::run(cfg);
}
