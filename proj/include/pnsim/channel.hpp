#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pnsim {

using cdouble = std::complex<double>;

// SNR convention, used everywhere in this project:
//
//   snr_db is Es/N0 with unit symbol energy (Es = 1), and noise_var is the
//   noise variance per REAL dimension, so N0 = 2 * noise_var and
//
//     noise_var = 10^(-snr_db / 10) / 2.
//
// The observation likelihood exp(-|r - c e^{j theta}|^2 / (2 sigma^2)) is
// then literally correct with sigma^2 = noise_var.
struct ChannelParams {
    double sigma_delta = 0.0; // std of the per-symbol phase increment [rad]
    double snr_db = 0.0;      // Es/N0 [dB]
    double noise_var = 0.5;   // sigma^2 per real dimension

    static ChannelParams from_snr_db(double snr_db, double sigma_delta);
};

double noise_var_from_snr_db(double snr_db);

// One simulated transmission: r_k = c_k e^{j theta_k} + n_k with the phase
// following a Wiener walk theta_k = theta_{k-1} + delta_k,
// delta_k ~ N(0, sigma_delta^2). theta is stored unwrapped.
struct FrameRecord {
    std::vector<cdouble> symbols;
    std::vector<double> theta;
    std::vector<cdouble> received;
    std::vector<std::uint8_t> tx_bits;    // optional, filled by bit-level framing
    std::vector<std::uint8_t> pilot_mask; // 1 where the symbol is a known pilot
    int length() const { return static_cast<int>(symbols.size()); }
};

// Simulates one frame. theta0 unset draws the initial phase uniformly on
// [0, 2pi), the pilotless worst case. Deterministic given seed: the draw
// order is theta0 (if random), then per symbol the phase increment
// followed by the complex noise sample.
FrameRecord simulate_frame(std::vector<cdouble> symbols, const ChannelParams& params,
                           std::optional<double> theta0, std::uint64_t seed);

// Inserts a known pilot at indices 0, period, 2*period, ... of the output
// stream, preserving data order. period = nullopt means pilotless: the
// stream is returned unchanged with an all-false mask. period < 2 is
// rejected.
struct PilotedStream {
    std::vector<cdouble> symbols;
    std::vector<std::uint8_t> pilot_mask;
};
PilotedStream insert_pilots(const std::vector<cdouble>& data_symbols, cdouble pilot_symbol,
                            std::optional<int> period);

// Regression-fixture dump: CSV with columns k, re(c), im(c), theta, re(r),
// im(r), pilot.
void dump_frame_csv(const FrameRecord& frame, std::ostream& out);

} // namespace pnsim
