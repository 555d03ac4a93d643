#pragma once

#include "pnsim/channel.hpp"
#include "pnsim/constellation.hpp"
#include "pnsim/posterior.hpp"

#include <iosfwd>
#include <vector>

namespace pnsim {

// Log-density over the L-point phase grid theta_l = 2 pi l / L. Normalized
// so the rectangle-rule integral is 1: logsumexp(log_density) + ln(2pi/L) = 0.
struct GridMessage {
    std::vector<double> log_density;
    int grid_size() const { return static_cast<int>(log_density.size()); }
};

GridMessage normalize_grid(GridMessage m);

// Downward phase factor at one step: sum over symbols of
// prior(m) * f(s_m, theta_l), evaluated on the grid and normalized in the
// log domain. `priors` points at M probabilities summing to 1.
GridMessage dp_pd(cdouble r, const double* priors, const Constellation& c, double noise_var,
                  int grid_size);

struct DpDiagnostics {
    std::vector<GridMessage> forward;  // forward[k] excludes observations >= k
    std::vector<GridMessage> backward; // backward[k] excludes observations <= k
};

// Discrete-phase forward/backward demodulation: the exact phase-chain
// message recursion quantized to an L-point grid, with the phase-increment
// density applied as a circular convolution with a precomputed kernel
// (truncated where it falls below 1e-12 of its peak). Boundary messages
// are uniform. Returns extrinsic per-step symbol posteriors; each output
// row excludes that step's own prior. Pilot positions must carry delta
// priors in `priors`.
//
// Requires grid_size >= 64.
SymbolPosterior dp_forward_backward(const FrameRecord& frame, const SymbolPosterior& priors,
                                    const Constellation& c, const ChannelParams& params,
                                    int grid_size, DpDiagnostics* diag = nullptr);

// Per-step combined phase posteriors (forward * backward, renormalized) to
// CSV with columns k, theta, density. For trajectory visualization.
void dump_grid_posteriors_csv(const DpDiagnostics& diag, std::ostream& out);

} // namespace pnsim
