#include "pnsim/demod_mixture.hpp"

#include "pnsim/logsum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace pnsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double circular_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), kTwoPi);
    return std::min(d, kTwoPi - d);
}
} // namespace

void TikhonovMixture::normalize() {
    std::vector<double> lw(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) lw[i] = comps[i].log_weight;
    const double lse = logsumexp(lw.data(), static_cast<int>(lw.size()));
    for (auto& c : comps) c.log_weight -= lse;
}

TikhonovMixture TikhonovMixture::uniform() {
    TikhonovMixture m;
    m.comps.push_back({0.0, cdouble{0.0, 0.0}});
    return m;
}

double TikhonovMixture::log_pdf(double theta) const {
    std::vector<double> terms(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i)
        terms[i] = comps[i].log_weight + tikhonov_log_pdf(theta, Tikhonov{comps[i].z});
    return logsumexp(terms.data(), static_cast<int>(terms.size()));
}

double default_merge_threshold(int m_order) {
    (void)m_order;
    return 0.05;
}

TikhonovMixture mixture_step_forward(const TikhonovMixture& msg, cdouble r, const double* priors,
                                     const Constellation& c, const ChannelParams& params) {
    if (msg.comps.empty()) throw std::invalid_argument("mixture_step_forward: empty mixture");
    const int m_order = static_cast<int>(c.points.size());
    const double nv = params.noise_var;

    TikhonovMixture out;
    out.comps.reserve(msg.comps.size() * m_order);
    for (const auto& parent : msg.comps) {
        const double log_i0_parent = log_bessel_i0(std::abs(parent.z));
        for (int m = 0; m < m_order; ++m) {
            if (priors[m] <= 0.0) continue;
            const cdouble z_pre = parent.z + r * std::conj(c.points[m]) / nv;
            const double lw = parent.log_weight + std::log(priors[m]) -
                              std::norm(c.points[m]) / (2.0 * nv) +
                              log_bessel_i0(std::abs(z_pre)) - log_i0_parent;
            const cdouble z_child =
                tikhonov_convolve_wrapped_gaussian(Tikhonov{z_pre}, params.sigma_delta).z;
            out.comps.push_back({lw, z_child});
        }
    }
    if (out.comps.empty())
        throw std::invalid_argument("mixture_step_forward: priors sum to zero");
    out.normalize();
    return out;
}

namespace {

// merged component of a member set: total weight with the cluster's
// circular mean and mean resultant length (single members and identical
// members pass through exactly)
MixtureComponent merge_cluster(const std::vector<MixtureComponent>& members) {
    if (members.size() == 1) return members.front();
    bool all_same = true;
    for (const auto& m : members)
        if (m.z != members.front().z) {
            all_same = false;
            break;
        }
    std::vector<double> lw(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) lw[i] = members[i].log_weight;
    const double total = logsumexp(lw.data(), static_cast<int>(lw.size()));
    if (all_same) return {total, members.front().z};

    cdouble resultant{0.0, 0.0};
    for (const auto& m : members) {
        const double w = std::exp(m.log_weight - total);
        const double a = std::abs(m.z);
        if (a > 0.0) resultant += w * bessel_i1_i0_ratio(a) * (m.z / a);
    }
    const double r = std::min(std::abs(resultant), 1.0 - 1e-14);
    if (r <= 1e-14) return {total, cdouble{0.0, 0.0}};
    const double kappa = concentration_for_resultant(r);
    return {total, kappa * (resultant / std::abs(resultant))};
}

// working view of a cluster during reduction
struct Cluster {
    std::vector<int> members; // indices into the input component list
    MixtureComponent rep;     // merged representative
    double lin_weight;        // exp(rep.log_weight), 0 on deep underflow
    double res_re, res_im;    // linear-weighted resultant vector of members
};

double entropy_of_resultant(double w, double re, double im) {
    if (w <= 0.0) return 0.0;
    const double r = std::min(std::hypot(re, im) / w, 1.0 - 1e-14);
    const double kappa = r < 1e-14 ? 0.0 : concentration_for_resultant(r);
    if (kappa <= 0.0) return std::log(kTwoPi);
    return std::log(kTwoPi) + log_bessel_i0(kappa) - kappa * bessel_i1_i0_ratio(kappa);
}


Cluster make_cluster(const std::vector<MixtureComponent>& comps, std::vector<int> members) {
    Cluster cl;
    cl.members = std::move(members);
    std::vector<MixtureComponent> mem;
    mem.reserve(cl.members.size());
    for (int i : cl.members) mem.push_back(comps[i]);
    cl.rep = merge_cluster(mem);
    cl.lin_weight = std::exp(cl.rep.log_weight);
    cl.res_re = cl.res_im = 0.0;
    for (int i : cl.members) {
        const double w = std::exp(comps[i].log_weight);
        const double a = std::abs(comps[i].z);
        if (a > 0.0 && w > 0.0) {
            const double r = bessel_i1_i0_ratio(a);
            cl.res_re += w * r * comps[i].z.real() / a;
            cl.res_im += w * r * comps[i].z.imag() / a;
        }
    }
    return cl;
}

// threshold pass: greedily merge clusters whose representative mean
// directions differ by less than merge_threshold; repeats to fixpoint
void threshold_merge(std::vector<Cluster>& clusters, const std::vector<MixtureComponent>& comps,
                     double merge_threshold) {
    bool merged_any = true;
    while (merged_any && clusters.size() > 1) {
        merged_any = false;
        std::vector<int> order(clusters.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return clusters[a].rep.log_weight > clusters[b].rep.log_weight;
        });
        std::vector<char> used(clusters.size(), 0);
        std::vector<Cluster> next;
        for (int idx : order) {
            if (used[idx]) continue;
            used[idx] = 1;
            std::vector<int> members = clusters[idx].members;
            const double seed_arg = std::arg(clusters[idx].rep.z);
            bool grew = false;
            for (int j : order) {
                if (used[j]) continue;
                if (circular_distance(std::arg(clusters[j].rep.z), seed_arg) < merge_threshold) {
                    used[j] = 1;
                    grew = true;
                    members.insert(members.end(), clusters[j].members.begin(),
                                   clusters[j].members.end());
                }
            }
            if (grew) {
                merged_any = true;
                next.push_back(make_cluster(comps, std::move(members)));
            } else {
                next.push_back(std::move(clusters[idx]));
            }
        }
        clusters = std::move(next);
    }
}

} // namespace

// Reduction pipeline: (1) threshold clustering of near-identical mean
// directions, to fixpoint; (2) while above target order, merge the pair
// with the smallest weighted entropy cost (Runnalls-style bound, so
// negligible-weight clusters fold into neighbors before strong hypotheses
// lose resolution); (3) two reassignment passes of the input components to
// the surviving clusters by KL divergence, re-matching moments; (4) a
// final threshold pass so the fixpoint property, and with it idempotence,
// holds for the output. Every merge is moment-matched via merge_cluster.
TikhonovMixture mixture_reduce(TikhonovMixture mix, int target_order, double merge_threshold) {
    if (target_order < 1) throw std::invalid_argument("mixture_reduce: target_order must be >= 1");
    if (mix.comps.empty()) throw std::invalid_argument("mixture_reduce: empty mixture");
    if (!(merge_threshold > 0.0))
        throw std::invalid_argument("mixture_reduce: merge_threshold must be > 0");

    const std::vector<MixtureComponent> comps = std::move(mix.comps);
    std::vector<Cluster> clusters;
    clusters.reserve(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i)
        clusters.push_back(make_cluster(comps, {static_cast<int>(i)}));

    threshold_merge(clusters, comps, merge_threshold);

    // consolidate to the target order, cheapest merges first
    while (static_cast<int>(clusters.size()) > target_order) {
        const int n = static_cast<int>(clusters.size());
        std::vector<double> ent(n);
        for (int i = 0; i < n; ++i)
            ent[i] = entropy_of_resultant(clusters[i].lin_weight, clusters[i].res_re,
                                          clusters[i].res_im);
        double best = std::numeric_limits<double>::infinity();
        int bi = 0, bj = 1;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double w = clusters[i].lin_weight + clusters[j].lin_weight;
                const double cost = w * entropy_of_resultant(w, clusters[i].res_re + clusters[j].res_re,
                                                             clusters[i].res_im + clusters[j].res_im) -
                                    clusters[i].lin_weight * ent[i] - clusters[j].lin_weight * ent[j];
                if (cost < best) {
                    best = cost;
                    bi = i;
                    bj = j;
                }
            }
        std::vector<int> members = clusters[bi].members;
        members.insert(members.end(), clusters[bj].members.begin(), clusters[bj].members.end());
        clusters[bi] = make_cluster(comps, std::move(members));
        clusters.erase(clusters.begin() + bj);
    }

    // Reassignment polish over the original components. Assignment is by
    // mean direction only: components belong to the trajectory hypothesis
    // they sit on, and a divergence-based assignment would instead funnel
    // every diffuse component into the flattest cluster regardless of
    // angle.
    if (clusters.size() > 1 && comps.size() > clusters.size()) {
        for (int pass = 0; pass < 4; ++pass) {
            std::vector<std::vector<int>> assign(clusters.size());
            for (std::size_t i = 0; i < comps.size(); ++i) {
                const double ang1 = std::arg(comps[i].z);
                int best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < clusters.size(); ++j) {
                    const double d = circular_distance(ang1, std::arg(clusters[j].rep.z));
                    if (d < best_d) {
                        best_d = d;
                        best = static_cast<int>(j);
                    }
                }
                assign[best].push_back(static_cast<int>(i));
            }
            std::vector<Cluster> next;
            for (auto& members : assign)
                if (!members.empty()) next.push_back(make_cluster(comps, std::move(members)));
            clusters = std::move(next);
        }
        threshold_merge(clusters, comps, merge_threshold);
    }

    mix.comps.clear();
    for (auto& cl : clusters) mix.comps.push_back(cl.rep);
    mix.normalize();
    return mix;
}

SymbolPosterior mixture_demodulate(const FrameRecord& frame, const SymbolPosterior& priors,
                                   const Constellation& c, const ChannelParams& params,
                                   int order_fwd, int order_bwd, MixtureDiagnostics* diag,
                                   double merge_threshold) {
    const int k_len = frame.length();
    const int m_order = static_cast<int>(c.points.size());
    if (order_fwd < 1 || order_bwd < 1)
        throw std::invalid_argument("mixture_demodulate: mixture orders must be >= 1");
    if (priors.m_order != m_order || priors.steps() != k_len)
        throw std::invalid_argument("mixture_demodulate: priors shape mismatch");

    const double threshold =
        merge_threshold > 0.0 ? merge_threshold : default_merge_threshold(m_order);
    const double nv = params.noise_var;

    // The bounded-order recursion propagates the reduced messages (those
    // are the messages proper, and what diagnostics expose). The posterior
    // combination below uses each step's grown pre-reduction mixture,
    // which approximates the same density one reduction closer to exact at
    // no extra recursion cost.
    std::vector<TikhonovMixture> fwd(k_len), bwd(k_len);
    std::vector<TikhonovMixture> grown_f(k_len), grown_b(k_len);
    fwd[0] = TikhonovMixture::uniform();
    grown_f[0] = fwd[0];
    for (int k = 1; k < k_len; ++k) {
        grown_f[k] =
            mixture_step_forward(fwd[k - 1], frame.received[k - 1], priors.row(k - 1), c, params);
        fwd[k] = mixture_reduce(grown_f[k], order_fwd, threshold);
    }
    bwd[k_len - 1] = TikhonovMixture::uniform();
    grown_b[k_len - 1] = bwd[k_len - 1];
    for (int k = k_len - 2; k >= 0; --k) {
        grown_b[k] =
            mixture_step_forward(bwd[k + 1], frame.received[k + 1], priors.row(k + 1), c, params);
        bwd[k] = mixture_reduce(grown_b[k], order_bwd, threshold);
    }

    SymbolPosterior up(k_len, m_order);
    std::vector<double> terms;
    std::vector<double> lse_m(m_order);
    for (int k = 0; k < k_len; ++k) {
        for (int m = 0; m < m_order; ++m) {
            const cdouble z_obs = frame.received[k] * std::conj(c.points[m]) / nv;
            const double lp = -std::norm(c.points[m]) / (2.0 * nv);
            terms.clear();
            for (const auto& fc : grown_f[k].comps)
                for (const auto& bc : grown_b[k].comps) {
                    const double t = fc.log_weight + bc.log_weight +
                                     log_bessel_i0(std::abs(fc.z + bc.z + z_obs)) -
                                     log_bessel_i0(std::abs(fc.z)) -
                                     log_bessel_i0(std::abs(bc.z));
                    terms.push_back(t);
                }
            lse_m[m] = lp + logsumexp(terms.data(), static_cast<int>(terms.size()));
        }
        const double total = logsumexp(lse_m.data(), m_order);
        for (int m = 0; m < m_order; ++m) up.at(k, m) = std::exp(lse_m[m] - total);
    }

    if (diag) {
        diag->forward = std::move(fwd);
        diag->backward = std::move(bwd);
    }
    return up;
}

void dump_mixture_trace_csv(const MixtureDiagnostics& diag, const FrameRecord& frame,
                            std::ostream& out) {
    out << "k,theta_true,comp,weight,abs_z,arg_z\n";
    char buf[160];
    for (std::size_t k = 0; k < diag.forward.size(); ++k) {
        const double theta = k < frame.theta.size() ? frame.theta[k] : 0.0;
        const auto& mix = diag.forward[k];
        for (int i = 0; i < mix.order(); ++i) {
            const auto& comp = mix.comps[i];
            std::snprintf(buf, sizeof(buf), "%zu,%.10g,%d,%.10g,%.10g,%.10g\n", k, theta, i,
                          std::exp(comp.log_weight), std::abs(comp.z), std::arg(comp.z));
            out << buf;
        }
    }
}

} // namespace pnsim
