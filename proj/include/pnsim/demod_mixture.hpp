#pragma once

#include "pnsim/channel.hpp"
#include "pnsim/constellation.hpp"
#include "pnsim/posterior.hpp"
#include "pnsim/tikhonov.hpp"

#include <iosfwd>
#include <vector>

namespace pnsim {

struct MixtureComponent {
    double log_weight;
    cdouble z;
};

// Weighted Tikhonov mixture, the bounded-order representation of a phase
// message. Weights are kept in the log domain and normalized to
// logsumexp = 0.
struct TikhonovMixture {
    std::vector<MixtureComponent> comps;

    int order() const { return static_cast<int>(comps.size()); }
    void normalize();
    static TikhonovMixture uniform();
    double log_pdf(double theta) const;
};

// Default merge threshold. Reduction picks hypotheses by merge cost, so
// the threshold only has to fold (near-)coincident children together:
// children of different parents that land on the same trajectory. Distinct
// trajectory hypotheses for any constellation sit far above this value.
double default_merge_threshold(int m_order);

// One forward chain step, before reduction: every component spawns one
// child per symbol with
//   z_child  = shrink(z + r conj(s_m) / sigma^2)
//   w_child ~ w * prior(m) * exp(-|s_m|^2/(2 sigma^2))
//                * I0(|z + r conj(s_m)/sigma^2|) / I0(|z|)
// and the result is renormalized. Children with zero prior are dropped, so
// the output order is at most order * M. The same update serves the
// backward recursion on a time-reversed frame (the increment density is
// symmetric).
TikhonovMixture mixture_step_forward(const TikhonovMixture& msg, cdouble r, const double* priors,
                                     const Constellation& c, const ChannelParams& params);

// Greedy mixture reduction: repeatedly take the heaviest unmerged
// component as a cluster seed, absorb every component whose mean direction
// lies within merge_threshold of it, and moment-match the cluster (the
// merged component keeps the cluster's weight, circular mean and mean
// resultant length). Passes repeat until no merge fires, then the heaviest
// target_order clusters are kept and weights renormalized. Pruning ties
// keep the larger |z|, then the earlier component.
TikhonovMixture mixture_reduce(TikhonovMixture mix, int target_order, double merge_threshold);

struct MixtureDiagnostics {
    std::vector<TikhonovMixture> forward;  // forward[k] excludes observations >= k
    std::vector<TikhonovMixture> backward; // backward[k] excludes observations <= k
};

// Full low-complexity demodulation: forward and backward mixture
// recursions with reduction after every step, then extrinsic symbol
// posteriors computed in closed form from Bessel ratios over all
// (forward component, backward component, symbol) triples. Pilot
// positions must carry delta priors. merge_threshold <= 0 selects
// default_merge_threshold(M).
SymbolPosterior mixture_demodulate(const FrameRecord& frame, const SymbolPosterior& priors,
                                   const Constellation& c, const ChannelParams& params,
                                   int order_fwd, int order_bwd,
                                   MixtureDiagnostics* diag = nullptr,
                                   double merge_threshold = -1.0);

// Per-step forward-message trace: CSV columns k, theta_true, comp, weight,
// abs_z, arg_z. Reproduces the multi-trajectory picture.
void dump_mixture_trace_csv(const MixtureDiagnostics& diag, const FrameRecord& frame,
                            std::ostream& out);

} // namespace pnsim
