#pragma once

#include "pnsim/channel.hpp"
#include "pnsim/constellation.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace pnsim {

// How the per-trajectory likelihood factor treats the symbol hypotheses.
//   full_sum: sum over all symbols with uniform weights, the factor used
//             by the exact two-trajectory weight recursion.
//   dominant: keep only each trajectory's strongest symbol hypothesis
//             (hard-decision approximation).
enum class DecaySymbolRule { full_sum, dominant };

struct DecayEstimate {
    double delta = 0.0;   // nats/symbol; <= 0 means the wrong trajectory decays
    double stderr_ = 0.0; // Monte Carlo standard error
    std::int64_t n_trials = 0;
    double skew = 0.0;
    double snr_db = 0.0;
    double sigma_delta = 0.0;
    double phi = 0.0;
    double concentration = 0.0;
};

// Steady-state tracking concentration: a single correct-trajectory loop
// (genie symbol decisions) is run for n_warmup symbols and |z| is then
// averaged over another n_warmup symbols. Throws if sigma_delta = 0 (the
// loop is a perfect integrator, |z| grows without bound) or if the loop
// cannot acquire (mean |z| stays near zero).
//
// For unit-energy PSK-type constellations the result depends only on the
// channel parameters. The deterministic fixed point of
//   a -> (a + 1/sigma^2) / (1 + sigma_delta^2 (a + 1/sigma^2))
// is a useful cross-check.
double steady_state_concentration(const Constellation& c, const ChannelParams& params,
                                  int n_warmup, std::uint64_t seed);

// Monte Carlo estimate of the decay factor
//
//   delta = -E[ ln F1 / F2 ]
//
// where F_t aggregates ln I0(|C e^{j phi_t} + (c + n) conj(s_l) / sigma^2|)
// over symbol hypotheses l according to `rule`, phi_1 = 0 for the correct
// trajectory and phi_2 = phi for the wrong one, c is drawn uniformly from
// the constellation and n is the channel noise. phi should be a multiple
// of the constellation's angular spacing. Requires n_samples >= 10^4.
//
// For skew = 0 with phi a spacing multiple the two factors are identical
// by symmetry; term sets are summed in sorted order so the estimate is
// exactly zero rather than rounding noise.
DecayEstimate decay_factor(const Constellation& c, const ChannelParams& params, double phi,
                           double concentration, std::int64_t n_samples, std::uint64_t seed,
                           DecaySymbolRule rule = DecaySymbolRule::full_sum);

// Two-trajectory tracking state: one loop locked on the true phase, a
// second offset by the ambiguity phi, sharing the concentration of the
// correct loop. Weights are kept as a log ratio so they sum to 1 exactly.
struct TwoTrajectoryState {
    cdouble z_correct{0.0, 0.0};
    double phi = 0.0;
    double log_weight_ratio = 0.0; // ln(alpha_correct / alpha_wrong)

    cdouble z_wrong() const;
    double alpha_wrong() const;
    std::pair<double, double> weights() const;
};

// Advances the exact two-trajectory weight recursion by one observation:
// both weights multiply by their full-sum symbol-averaged Bessel factors,
// and the correct loop's z is updated with the (genie) transmitted symbol
// and shrunk by the phase-increment convolution.
void two_trajectory_step(TwoTrajectoryState& state, cdouble r, cdouble tx_symbol,
                         const Constellation& c, const ChannelParams& params);

struct TrajectoryTrace {
    std::vector<double> mean_alpha_wrong; // index k = weight after k observations
    std::vector<double> stderr_;
    std::vector<double> mean_log_alpha_wrong;
    int n_frames = 0;
};

// Runs the two-trajectory recursion over n_frames independent frames of K
// symbols (after a 200-symbol acquisition run-in) and averages the wrong
// trajectory's weight at each step. Requires K >= 50 and n_frames >= 100.
TrajectoryTrace simulate_two_trajectories(const Constellation& c, const ChannelParams& params,
                                          double phi, int k_len, int n_frames, std::uint64_t seed,
                                          std::pair<double, double> initial_weights = {0.5, 0.5});

} // namespace pnsim
