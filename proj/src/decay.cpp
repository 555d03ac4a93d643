#include "pnsim/decay.hpp"

#include "pnsim/logsum.hpp"
#include "pnsim/rng.hpp"
#include "pnsim/tikhonov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pnsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Per-trajectory symbol rotation tables conj(s_l) e^{-j phi_t}. When the
// constellation is skewed MPSK and phi is an integer number of angular
// steps, both tables are built from the same fractional-index expression
// -2 pi frac((l + p) / (M + skew)); at skew = 0 the two tables are then
// the same set of floating-point values, which lets symmetric estimates
// cancel exactly instead of leaving rounding residue.
struct RotationTables {
    std::vector<cdouble> correct, wrong;
};

RotationTables make_rotation_tables(const Constellation& c, double phi) {
    const int m = static_cast<int>(c.points.size());
    RotationTables t;
    t.correct.reserve(m);
    t.wrong.reserve(m);

    if (c.skew) {
        const double denom = static_cast<double>(m) + *c.skew;
        const double spacing = kTwoPi / denom;
        const double steps = phi / spacing;
        const long p = std::lround(steps);
        if (std::abs(steps - static_cast<double>(p)) < 1e-6) {
            for (int l = 0; l < m; ++l) {
                double u = static_cast<double>(l) / denom;
                u -= std::floor(u);
                t.correct.push_back(std::polar(1.0, -kTwoPi * u));
                double v = static_cast<double>(l + p) / denom;
                v -= std::floor(v);
                t.wrong.push_back(std::polar(1.0, -kTwoPi * v));
            }
            return t;
        }
    }
    const cdouble rot = std::polar(1.0, -phi);
    for (int l = 0; l < m; ++l) {
        t.correct.push_back(std::conj(c.points[l]));
        t.wrong.push_back(std::conj(c.points[l]) * rot);
    }
    return t;
}

// ln of the symbol-aggregated Bessel factor for one trajectory, up to
// terms common to both trajectories (uniform priors, the I0(|z|)
// denominator). `base` is the trajectory's tracker value, `obs` the scaled
// observation (c + n)/sigma^2.
double log_factor(cdouble base, cdouble obs, const std::vector<cdouble>& rots,
                  DecaySymbolRule rule, std::vector<double>& scratch) {
    const int m = static_cast<int>(rots.size());
    scratch.resize(m);
    for (int l = 0; l < m; ++l) scratch[l] = log_bessel_i0(std::abs(base + obs * rots[l]));
    if (rule == DecaySymbolRule::dominant) return *std::max_element(scratch.begin(), scratch.end());
    return logsumexp_sorted(scratch.data(), m);
}

} // namespace

double steady_state_concentration(const Constellation& c, const ChannelParams& params,
                                  int n_warmup, std::uint64_t seed) {
    if (n_warmup < 100)
        throw std::invalid_argument("steady_state_concentration: n_warmup must be >= 100");
    if (params.sigma_delta <= 0.0)
        throw std::runtime_error(
            "steady_state_concentration: sigma_delta = 0 has no steady state "
            "(the tracking loop is a perfect integrator)");

    Rng rng(seed);
    const int m = static_cast<int>(c.points.size());
    const double nv = params.noise_var;

    cdouble z{0.0, 0.0};
    double theta = rng.uniform(0.0, kTwoPi);
    double acc = 0.0;
    for (int k = 0; k < 2 * n_warmup; ++k) {
        if (k > 0) theta += params.sigma_delta * rng.normal();
        const cdouble sym = c.points[rng.uniform_int(m)];
        const cdouble r = sym * std::polar(1.0, theta) + rng.cnormal(nv);
        z = tikhonov_convolve_wrapped_gaussian(Tikhonov{z + r * std::conj(sym) / nv},
                                               params.sigma_delta)
                .z;
        if (k >= n_warmup) acc += std::abs(z);
    }
    const double mean = acc / n_warmup;
    if (mean < 0.5)
        throw std::runtime_error("steady_state_concentration: tracking loop failed to acquire "
                                 "(parameters untrackable)");
    return mean;
}

DecayEstimate decay_factor(const Constellation& c, const ChannelParams& params, double phi,
                           double concentration, std::int64_t n_samples, std::uint64_t seed,
                           DecaySymbolRule rule) {
    if (n_samples < 10000)
        throw std::invalid_argument("decay_factor: n_samples must be >= 10^4");
    if (!(concentration > 0.0))
        throw std::invalid_argument("decay_factor: concentration must be > 0");

    const int m = static_cast<int>(c.points.size());
    const double nv = params.noise_var;
    const RotationTables rots = make_rotation_tables(c, phi);
    const cdouble base{concentration, 0.0};

    Rng rng(seed);
    std::vector<double> scratch;
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const cdouble sym = c.points[rng.uniform_int(m)];
        const cdouble obs = (sym + rng.cnormal(nv)) / nv;
        const double x = log_factor(base, obs, rots.correct, rule, scratch) -
                         log_factor(base, obs, rots.wrong, rule, scratch);
        sum += x;
        sum_sq += x * x;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);

    DecayEstimate est;
    est.delta = -mean;
    est.stderr_ = std::max(std::sqrt(var / n), 1e-300); // floor for the exactly-symmetric case
    est.n_trials = n_samples;
    est.skew = c.skew.value_or(0.0);
    est.snr_db = params.snr_db;
    est.sigma_delta = params.sigma_delta;
    est.phi = phi;
    est.concentration = concentration;
    return est;
}

cdouble TwoTrajectoryState::z_wrong() const { return z_correct * std::polar(1.0, phi); }

double TwoTrajectoryState::alpha_wrong() const { return 1.0 / (1.0 + std::exp(log_weight_ratio)); }

std::pair<double, double> TwoTrajectoryState::weights() const {
    const double wrong = alpha_wrong();
    return {1.0 - wrong, wrong};
}

namespace {

void advance_two_trajectory(TwoTrajectoryState& state, cdouble r, cdouble tx_symbol,
                            const RotationTables& rots, const ChannelParams& params,
                            std::vector<double>& scratch) {
    const double nv = params.noise_var;
    const cdouble obs = r / nv;
    const double lf_correct =
        log_factor(state.z_correct, obs, rots.correct, DecaySymbolRule::full_sum, scratch);
    const double lf_wrong =
        log_factor(state.z_correct, obs, rots.wrong, DecaySymbolRule::full_sum, scratch);
    state.log_weight_ratio += lf_correct - lf_wrong;
    state.z_correct = tikhonov_convolve_wrapped_gaussian(
                          Tikhonov{state.z_correct + r * std::conj(tx_symbol) / nv},
                          params.sigma_delta)
                          .z;
}

} // namespace

void two_trajectory_step(TwoTrajectoryState& state, cdouble r, cdouble tx_symbol,
                         const Constellation& c, const ChannelParams& params) {
    const RotationTables rots = make_rotation_tables(c, state.phi);
    std::vector<double> scratch;
    advance_two_trajectory(state, r, tx_symbol, rots, params, scratch);
}

TrajectoryTrace simulate_two_trajectories(const Constellation& c, const ChannelParams& params,
                                          double phi, int k_len, int n_frames, std::uint64_t seed,
                                          std::pair<double, double> initial_weights) {
    if (k_len < 50) throw std::invalid_argument("simulate_two_trajectories: K must be >= 50");
    if (n_frames < 100)
        throw std::invalid_argument("simulate_two_trajectories: n_frames must be >= 100");
    if (!(initial_weights.first > 0.0) || !(initial_weights.second > 0.0))
        throw std::invalid_argument("simulate_two_trajectories: initial weights must be > 0");

    const int m = static_cast<int>(c.points.size());
    const double nv = params.noise_var;
    const int warmup = 200;
    const double log_ratio0 = std::log(initial_weights.first / initial_weights.second);

    TrajectoryTrace trace;
    trace.mean_alpha_wrong.assign(k_len + 1, 0.0);
    trace.stderr_.assign(k_len + 1, 0.0);
    trace.mean_log_alpha_wrong.assign(k_len + 1, 0.0);
    trace.n_frames = n_frames;
    std::vector<double> sum_sq(k_len + 1, 0.0);
    const RotationTables rots = make_rotation_tables(c, phi);
    std::vector<double> scratch;

    for (int f = 0; f < n_frames; ++f) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(f)));
        double theta = rng.uniform(0.0, kTwoPi);
        TwoTrajectoryState state;
        state.phi = phi;
        state.log_weight_ratio = log_ratio0;

        for (int k = 0; k < warmup + k_len; ++k) {
            if (k > 0) theta += params.sigma_delta * rng.normal();
            const cdouble sym = c.points[rng.uniform_int(m)];
            const cdouble r = sym * std::polar(1.0, theta) + rng.cnormal(nv);
            if (k < warmup) {
                // acquisition: track only, weights untouched
                state.z_correct = tikhonov_convolve_wrapped_gaussian(
                                      Tikhonov{state.z_correct + r * std::conj(sym) / nv},
                                      params.sigma_delta)
                                      .z;
                continue;
            }
            const int step = k - warmup;
            if (step == 0) {
                const double a0 = state.alpha_wrong();
                trace.mean_alpha_wrong[0] += a0;
                sum_sq[0] += a0 * a0;
                trace.mean_log_alpha_wrong[0] += std::log(a0);
            }
            advance_two_trajectory(state, r, sym, rots, params, scratch);
            const double a = state.alpha_wrong();
            trace.mean_alpha_wrong[step + 1] += a;
            sum_sq[step + 1] += a * a;
            trace.mean_log_alpha_wrong[step + 1] += std::log(a);
        }
    }

    const double n = static_cast<double>(n_frames);
    for (int k = 0; k <= k_len; ++k) {
        const double mean = trace.mean_alpha_wrong[k] / n;
        trace.mean_alpha_wrong[k] = mean;
        const double var = std::max(0.0, sum_sq[k] / n - mean * mean);
        trace.stderr_[k] = std::sqrt(var / n);
        trace.mean_log_alpha_wrong[k] /= n;
    }
    return trace;
}

} // namespace pnsim
