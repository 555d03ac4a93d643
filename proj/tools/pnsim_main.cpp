// pnsim: pilotless phase-noise link simulator.
//
// Subcommands map one to one onto the experiment kinds (plus
// `constellation` for inspecting/saving signal sets). Every experiment
// writes a CSV whose header echoes the full configuration and master
// seed; identical config + seed reproduces the file byte for byte.

#include "pnsim/constellation.hpp"
#include "pnsim/harness.hpp"
#include "pnsim/ldpc.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using pnsim::ExperimentConfig;

struct CommonFlags {
    std::string config_path;
    bool pilotless = false;
};

void add_common_options(CLI::App* sub, ExperimentConfig& cfg, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "JSON config file; flags override its keys");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--out", cfg.out_path, "output CSV path (default stdout)");
    sub->add_option("--m-order", cfg.m_order, "constellation order M");
    sub->add_option("--skew", cfg.skew, "skew parameter of the skewed-MPSK constellation");
    sub->add_option("--constellation-file", cfg.constellation_file,
                    "load the constellation from a text file instead");
    sub->add_option("--snr-db", cfg.snr_db, "Es/N0 list in dB")->delimiter(',');
    sub->add_option("--sigma-delta", cfg.sigma_delta, "phase-increment std [rad/symbol]");
    sub->add_option("--demod", cfg.demod, "demodulator: dp or mixture");
    sub->add_option("--grid", cfg.grid_size, "phase grid size L for the dp demodulator");
    sub->add_option("--order", cfg.order, "mixture order N for the mixture demodulator");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    sub->add_option("--pilot-period", cfg.pilot_period, "pilot every n-th symbol (0 = pilotless)");
    sub->add_flag("--pilotless", flags.pilotless, "force pilotless operation");
}

// flags override config-file values: reparse the file first, then let CLI11
// overwrite whatever was given on the command line
ExperimentConfig merge_config(const CLI::App* sub, const ExperimentConfig& cli_cfg,
                              const CommonFlags& flags) {
    ExperimentConfig cfg = cli_cfg;
    if (!flags.config_path.empty()) {
        ExperimentConfig from_file = pnsim::config_from_json_file(flags.config_path);
        from_file.kind = cfg.kind;
        // apply CLI values on top of the file for every option the user set
        ExperimentConfig merged = from_file;
        auto seen = [&](const std::string& name) { return sub->count(name) > 0; };
        if (seen("--seed")) merged.seed = cfg.seed;
        if (seen("--out")) merged.out_path = cfg.out_path;
        if (seen("--m-order")) merged.m_order = cfg.m_order;
        if (seen("--skew")) merged.skew = cfg.skew;
        if (seen("--constellation-file")) merged.constellation_file = cfg.constellation_file;
        if (seen("--snr-db")) merged.snr_db = cfg.snr_db;
        if (seen("--sigma-delta")) merged.sigma_delta = cfg.sigma_delta;
        if (seen("--demod")) merged.demod = cfg.demod;
        if (seen("--grid")) merged.grid_size = cfg.grid_size;
        if (seen("--order")) merged.order = cfg.order;
        if (seen("--threads")) merged.threads = cfg.threads;
        if (seen("--pilot-period")) merged.pilot_period = cfg.pilot_period;
        if (seen("--code")) merged.code_file = cfg.code_file;
        if (seen("--frames")) merged.n_frames = cfg.n_frames;
        if (seen("--frame-len")) merged.frame_len = cfg.frame_len;
        if (seen("--max-frames")) merged.max_frames = cfg.max_frames;
        if (seen("--min-bit-errors")) merged.min_bit_errors = cfg.min_bit_errors;
        if (seen("--samples")) merged.n_samples = cfg.n_samples;
        if (seen("--skew-list")) merged.skew_list = cfg.skew_list;
        if (seen("--phi-steps")) merged.phi_steps = cfg.phi_steps;
        if (seen("--decay-rule")) merged.decay_rule = cfg.decay_rule;
        if (seen("--n-outer")) merged.n_outer = cfg.n_outer;
        if (seen("--n-inner")) merged.n_inner = cfg.n_inner;
        cfg = merged;
    }
    if (flags.pilotless) cfg.pilot_period = 0;
    return cfg;
}

void emit(const ExperimentConfig& cfg) {
    const std::string csv = pnsim::run_experiment(cfg);
    if (cfg.out_path.empty()) {
        std::cout << csv;
        return;
    }
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + cfg.out_path);
    out << csv;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pilotless Wiener phase-noise link simulator"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    CommonFlags flags;

    auto* c_const = app.add_subcommand("constellation", "construct and inspect a constellation");
    add_common_options(c_const, cfg, flags);

    auto* c_decay = app.add_subcommand("decay", "decay-factor sweep over skew and SNR");
    add_common_options(c_decay, cfg, flags);
    c_decay->add_option("--skew-list", cfg.skew_list, "skew values to sweep")->delimiter(',');
    c_decay->add_option("--samples", cfg.n_samples, "Monte Carlo samples per point");
    c_decay->add_option("--phi-steps", cfg.phi_steps, "ambiguity in units of the angular spacing");
    c_decay->add_option("--decay-rule", cfg.decay_rule, "symbol rule: full_sum or dominant");

    auto* c_trace = app.add_subcommand("trace", "two-trajectory weight trace vs the decay model");
    add_common_options(c_trace, cfg, flags);
    c_trace->add_option("--frames", cfg.n_frames, "Monte Carlo frames");
    c_trace->add_option("--frame-len", cfg.frame_len, "symbols per frame");
    c_trace->add_option("--samples", cfg.n_samples, "samples for the decay-factor estimate");
    c_trace->add_option("--phi-steps", cfg.phi_steps, "ambiguity in units of the angular spacing");
    c_trace->add_option("--decay-rule", cfg.decay_rule, "symbol rule: full_sum or dominant");

    auto* c_ber = app.add_subcommand("ber", "coded BER curve over an SNR list");
    add_common_options(c_ber, cfg, flags);
    c_ber->add_option("--code", cfg.code_file, "parity-check matrix (alist)")->required(false);
    c_ber->add_option("--min-bit-errors", cfg.min_bit_errors, "stop rule per SNR point");
    c_ber->add_option("--max-frames", cfg.max_frames, "frame cap per SNR point");
    c_ber->add_option("--n-outer", cfg.n_outer, "outer demod/decoder passes");
    c_ber->add_option("--n-inner", cfg.n_inner, "BP iterations per pass");

    auto* c_mi = app.add_subcommand("mi", "AWGN mutual information curve");
    add_common_options(c_mi, cfg, flags);
    c_mi->add_option("--samples", cfg.n_samples, "Monte Carlo samples per SNR");

    auto* c_track = app.add_subcommand("track", "per-component tracking trace of one frame");
    add_common_options(c_track, cfg, flags);
    c_track->add_option("--frame-len", cfg.frame_len, "symbols in the frame");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_const->parsed()) {
            cfg.kind = "mi_curve"; // reuse config plumbing for constellation selection
            ExperimentConfig merged = merge_config(c_const, cfg, flags);
            const auto c = merged.constellation_file.empty()
                               ? pnsim::make_skewed_mpsk(merged.m_order, merged.skew)
                               : pnsim::load_constellation_file(merged.constellation_file);
            const auto sym = pnsim::rotational_symmetries(c);
            std::fprintf(stderr,
                         "M=%d  skew=%s  min_distance=%.6f  avg_energy=%.6f  "
                         "rotational_symmetries=%zu%s\n",
                         c.m_order, c.skew ? std::to_string(*c.skew).c_str() : "n/a",
                         pnsim::min_distance(c), c.avg_energy(), sym.size(),
                         sym.empty() ? " (asymmetric)" : "");
            if (merged.out_path.empty()) {
                pnsim::save_constellation(c, std::cout);
            } else {
                pnsim::save_constellation_file(c, merged.out_path);
            }
            return 0;
        }
        if (c_decay->parsed()) cfg.kind = "decay_sweep";
        if (c_trace->parsed()) cfg.kind = "trajectory_trace";
        if (c_ber->parsed()) cfg.kind = "ber_curve";
        if (c_mi->parsed()) cfg.kind = "mi_curve";
        if (c_track->parsed()) cfg.kind = "track_demo";
        const CLI::App* sub = app.get_subcommands().front();
        emit(merge_config(sub, cfg, flags));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pnsim: %s\n", e.what());
        return 1;
    }
    return 0;
}
