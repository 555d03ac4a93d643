#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pnsim {

// Flat experiment configuration. Every field is echoed into the output CSV
// header, and identical config + seed reproduces the output byte for byte.
// Flags in the CLI mirror these keys one to one; a JSON config file (flat
// object, same keys) can set any of them, with flags taking precedence.
struct ExperimentConfig {
    std::string kind;                     // ber_curve | decay_sweep | trajectory_trace |
                                          // track_demo | mi_curve
    int m_order = 4;
    double skew = 0.0;
    std::string constellation_file;       // optional; overrides m_order/skew
    std::vector<double> snr_db{4.0};
    double sigma_delta = 0.1;
    std::string demod = "mixture";        // mixture | dp
    int grid_size = 512;
    int order = 4;                        // mixture order, both directions
    std::string code_file;                // alist path (BER experiment)
    int pilot_period = 0;                 // 0 = pilotless
    int frame_len = 200;                  // K for trace/track experiments
    int n_frames = 500;                   // trace/track frame count
    int max_frames = 100000;              // BER per-point cap
    int min_bit_errors = 100;             // BER stop rule
    std::int64_t n_samples = 100000;      // decay / MI sample count
    std::vector<double> skew_list{0.0, 0.1, 0.3, 0.5, 0.7};
    int phi_steps = 1;                    // ambiguity, in units of the angular spacing
    std::string decay_rule = "full_sum";  // full_sum | dominant
    int n_outer = 10;
    int n_inner = 25;
    std::uint64_t seed = 1;
    int threads = 0;                      // 0 = hardware concurrency
    std::string out_path;                 // empty = stdout (CLI)

    void validate() const;
};

// Parses a flat JSON object; unknown keys are rejected with their name.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);

// Runs the configured experiment and returns the full CSV text, config
// header included.
std::string run_experiment(const ExperimentConfig& cfg);

std::string run_ber_curve(const ExperimentConfig& cfg);
std::string run_decay_sweep(const ExperimentConfig& cfg);
std::string run_trajectory_trace(const ExperimentConfig& cfg);
std::string run_track_demo(const ExperimentConfig& cfg);
std::string run_mi_curve(const ExperimentConfig& cfg);

} // namespace pnsim
