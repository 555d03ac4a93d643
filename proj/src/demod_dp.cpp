#include "pnsim/demod_dp.hpp"

#include "pnsim/logsum.hpp"
#include "pnsim/tikhonov.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace pnsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLogFloor = -745.0; // below exp() underflow

struct GridTables {
    std::vector<double> cos_t, sin_t;
    explicit GridTables(int l_size) : cos_t(l_size), sin_t(l_size) {
        for (int l = 0; l < l_size; ++l) {
            const double th = kTwoPi * l / l_size;
            cos_t[l] = std::cos(th);
            sin_t[l] = std::sin(th);
        }
    }
};

// log f(s_m, theta_l) for all l, up to the common -|r|^2/(2 sigma^2) term
// which normalization removes anyway.
void log_obs_row(const GridTables& tab, cdouble r, cdouble s, double noise_var, double* out) {
    const auto obs = observation_factor(r, s, noise_var);
    const double lp = -std::norm(s) / (2.0 * noise_var);
    const int l_size = static_cast<int>(tab.cos_t.size());
    for (int l = 0; l < l_size; ++l)
        out[l] = lp + obs.z.real() * tab.cos_t[l] + obs.z.imag() * tab.sin_t[l];
}

// Phase-increment kernel sampled on the grid, truncated at 1e-12 of peak.
// kernel[0] is the zero-lag tap; taps run over lags -half..half.
struct ConvKernel {
    std::vector<double> taps; // size 2*half+1, taps[half + d] = p_delta(2 pi d / L)
    int half = 0;
};

ConvKernel make_kernel(double sigma_delta, int l_size) {
    ConvKernel k;
    if (sigma_delta <= 0.0) return k;
    const WrappedGaussian wg{sigma_delta, 5};
    const double step = kTwoPi / l_size;
    const double radius = sigma_delta * std::sqrt(2.0 * std::log(1e12));
    k.half = std::min(l_size / 2, static_cast<int>(std::ceil(radius / step)));
    k.taps.resize(2 * k.half + 1);
    for (int d = -k.half; d <= k.half; ++d) k.taps[k.half + d] = wrapped_gaussian_pdf(step * d, wg);
    return k;
}

// One chain step: out(theta) = normalize(conv(exp(a + b), kernel)).
// a and b are log-domain grid messages.
GridMessage chain_step(const GridMessage& msg, const GridMessage& pd, const ConvKernel& kernel) {
    const int l_size = msg.grid_size();
    std::vector<double> w(l_size);
    double maxw = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < l_size; ++l) {
        w[l] = msg.log_density[l] + pd.log_density[l];
        maxw = std::max(maxw, w[l]);
    }
    std::vector<double> v(l_size);
    for (int l = 0; l < l_size; ++l) v[l] = std::exp(w[l] - maxw);

    GridMessage out;
    out.log_density.resize(l_size);
    if (kernel.half == 0) {
        for (int l = 0; l < l_size; ++l)
            out.log_density[l] = v[l] > 0.0 ? std::log(v[l]) : kLogFloor;
        return normalize_grid(std::move(out));
    }
    for (int l = 0; l < l_size; ++l) {
        double acc = 0.0;
        for (int d = -kernel.half; d <= kernel.half; ++d) {
            int src = l - d;
            if (src < 0) src += l_size;
            else if (src >= l_size) src -= l_size;
            acc += v[src] * kernel.taps[kernel.half + d];
        }
        out.log_density[l] = acc > 0.0 ? std::log(acc) : kLogFloor;
    }
    return normalize_grid(std::move(out));
}

} // namespace

GridMessage normalize_grid(GridMessage m) {
    const int l_size = m.grid_size();
    const double lse = logsumexp(m.log_density.data(), l_size);
    const double shift = lse + std::log(kTwoPi / l_size);
    for (double& x : m.log_density) x = std::max(x - shift, kLogFloor);
    return m;
}

GridMessage dp_pd(cdouble r, const double* priors, const Constellation& c, double noise_var,
                  int grid_size) {
    if (grid_size < 64) throw std::invalid_argument("dp_pd: grid_size must be >= 64");
    const GridTables tab(grid_size);
    const int m_order = static_cast<int>(c.points.size());

    GridMessage out;
    out.log_density.assign(grid_size, -std::numeric_limits<double>::infinity());
    std::vector<double> row(grid_size);
    for (int m = 0; m < m_order; ++m) {
        if (priors[m] <= 0.0) continue;
        const double lw = std::log(priors[m]);
        log_obs_row(tab, r, c.points[m], noise_var, row.data());
        for (int l = 0; l < grid_size; ++l) {
            const double x = lw + row[l];
            double& acc = out.log_density[l];
            // incremental logaddexp
            if (x > acc) {
                acc = std::isfinite(acc) ? x + std::log1p(std::exp(acc - x)) : x;
            } else {
                acc += std::log1p(std::exp(x - acc));
            }
        }
    }
    return normalize_grid(std::move(out));
}

SymbolPosterior dp_forward_backward(const FrameRecord& frame, const SymbolPosterior& priors,
                                    const Constellation& c, const ChannelParams& params,
                                    int grid_size, DpDiagnostics* diag) {
    const int k_len = frame.length();
    const int m_order = static_cast<int>(c.points.size());
    if (grid_size < 64)
        throw std::invalid_argument("dp_forward_backward: grid_size must be >= 64");
    if (priors.m_order != m_order || priors.steps() != k_len)
        throw std::invalid_argument("dp_forward_backward: priors shape mismatch");

    const GridTables tab(grid_size);
    const ConvKernel kernel = make_kernel(params.sigma_delta, grid_size);

    std::vector<GridMessage> pd(k_len);
    for (int k = 0; k < k_len; ++k)
        pd[k] = dp_pd(frame.received[k], priors.row(k), c, params.noise_var, grid_size);

    GridMessage uniform;
    uniform.log_density.assign(grid_size, -std::log(kTwoPi));

    std::vector<GridMessage> fwd(k_len), bwd(k_len);
    fwd[0] = uniform;
    for (int k = 1; k < k_len; ++k) fwd[k] = chain_step(fwd[k - 1], pd[k - 1], kernel);
    bwd[k_len - 1] = uniform;
    for (int k = k_len - 2; k >= 0; --k) bwd[k] = chain_step(bwd[k + 1], pd[k + 1], kernel);

    SymbolPosterior up(k_len, m_order);
    std::vector<double> row(grid_size), lse_m(m_order);
    for (int k = 0; k < k_len; ++k) {
        for (int m = 0; m < m_order; ++m) {
            log_obs_row(tab, frame.received[k], c.points[m], params.noise_var, row.data());
            for (int l = 0; l < grid_size; ++l)
                row[l] += fwd[k].log_density[l] + bwd[k].log_density[l];
            lse_m[m] = logsumexp(row.data(), grid_size);
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

void dump_grid_posteriors_csv(const DpDiagnostics& diag, std::ostream& out) {
    out << "k,theta,density\n";
    char buf[128];
    const int k_len = static_cast<int>(diag.forward.size());
    for (int k = 0; k < k_len; ++k) {
        const int l_size = diag.forward[k].grid_size();
        std::vector<double> post(l_size);
        for (int l = 0; l < l_size; ++l)
            post[l] = diag.forward[k].log_density[l] + diag.backward[k].log_density[l];
        const double lse = logsumexp(post.data(), l_size) + std::log(kTwoPi / l_size);
        for (int l = 0; l < l_size; ++l) {
            std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", k, kTwoPi * l / l_size,
                          std::exp(post[l] - lse));
            out << buf;
        }
    }
}

} // namespace pnsim
