#include "pnsim/tikhonov.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pnsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ln of the power series sum_k (x^2/4)^k / (k!)^2, accurate for x < ~60
// before intermediate terms grow large; used below the asymptotic crossover.
double log_i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double rest = 0.0; // sum - 1, kept separate so log1p keeps precision near 0
    for (int k = 1; k < 90; ++k) {
        term *= q / (static_cast<double>(k) * k);
        rest += term;
        if (term < (1.0 + rest) * 1e-18) break;
    }
    return std::log1p(rest);
}

// ln I_nu(x) from the large-x expansion
//   I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k t_k,
//   t_0 = 1,  t_k = t_{k-1} * ((2k-1)^2 - 4 nu^2) / (8 k x)
// truncated at the smallest term (the series is asymptotic).
double log_i_asymptotic(double x, double mu /* = 4 nu^2 */) {
    double term = 1.0;
    double rest = 0.0;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k <= 30; ++k) {
        const double f = (2.0 * k - 1.0) * (2.0 * k - 1.0) - mu;
        term *= f / (8.0 * k * x);
        if (std::abs(term) >= prev) break;
        prev = std::abs(term);
        rest += term;
        if (std::abs(term) < 1e-18) break;
    }
    return x - 0.5 * std::log(kTwoPi * x) + std::log1p(rest);
}

} // namespace

double log_bessel_i0(double x) {
    if (std::isnan(x) || x < 0.0)
        throw std::invalid_argument("log_bessel_i0: argument must be >= 0");
    if (x < 15.0) return log_i0_series(x);
    return log_i_asymptotic(x, 0.0);
}

double log_bessel_i1(double x) {
    if (std::isnan(x) || x < 0.0)
        throw std::invalid_argument("log_bessel_i1: argument must be >= 0");
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    if (x < 15.0) {
        // I1(x) = (x/2) sum_k (x^2/4)^k / (k! (k+1)!)
        const double q = 0.25 * x * x;
        double term = 1.0;
        double rest = 0.0;
        for (int k = 1; k < 90; ++k) {
            term *= q / (static_cast<double>(k) * (k + 1));
            rest += term;
            if (term < (1.0 + rest) * 1e-18) break;
        }
        return std::log(0.5 * x) + std::log1p(rest);
    }
    return log_i_asymptotic(x, 4.0);
}

double bessel_i1_i0_ratio(double x) {
    if (std::isnan(x) || x < 0.0)
        throw std::invalid_argument("bessel_i1_i0_ratio: argument must be >= 0");
    if (x < 1e-8) return 0.5 * x; // leading order, avoids -inf - (-inf)
    return std::exp(log_bessel_i1(x) - log_bessel_i0(x));
}

double concentration_for_resultant(double r) {
    if (std::isnan(r) || r < 0.0 || r >= 1.0 + 1e-12)
        throw std::invalid_argument("concentration_for_resultant: r must be in [0, 1)");
    if (r <= 0.0) return 0.0;
    if (r > 1.0 - 1e-14) r = 1.0 - 1e-14;

    // Best-Fisher starting guess, then Newton on A(k) - r with
    // A'(k) = 1 - A/k - A^2.
    double k;
    if (r < 0.53)
        k = 2.0 * r + r * r * r + 5.0 * r * r * r * r * r / 6.0;
    else if (r < 0.85)
        k = -0.4 + 1.39 * r + 0.43 / (1.0 - r);
    else
        k = 1.0 / (r * r * r - 4.0 * r * r + 3.0 * r);
    k = std::max(k, 1e-12);

    for (int it = 0; it < 50; ++it) {
        const double a = bessel_i1_i0_ratio(k);
        const double err = a - r;
        if (std::abs(err) < 1e-14) break;
        const double da = 1.0 - a / k - a * a;
        if (da <= 0.0) break;
        double step = err / da;
        if (step >= k) step = 0.5 * k; // stay positive
        k -= step;
    }
    return k;
}

TikhonovProduct tikhonov_multiply(Tikhonov a, Tikhonov b) {
    const cdouble z = a.z + b.z;
    const double log_scale = log_bessel_i0(std::abs(z)) - log_bessel_i0(std::abs(a.z)) -
                             log_bessel_i0(std::abs(b.z)) - std::log(kTwoPi);
    return {Tikhonov{z}, log_scale};
}

Tikhonov tikhonov_convolve_wrapped_gaussian(Tikhonov t, double sigma_delta) {
    if (std::isnan(sigma_delta) || sigma_delta < 0.0)
        throw std::invalid_argument("tikhonov_convolve_wrapped_gaussian: sigma_delta must be >= 0");
    const double a = std::abs(t.z);
    return Tikhonov{t.z / (1.0 + sigma_delta * sigma_delta * a)};
}

ObservationFactor observation_factor(cdouble r, cdouble c, double noise_var) {
    if (!(noise_var > 0.0))
        throw std::invalid_argument("observation_factor: noise_var must be > 0");
    const cdouble z = r * std::conj(c) / noise_var;
    const double log_prefactor = -(std::norm(r) + std::norm(c)) / (2.0 * noise_var);
    return {z, log_prefactor};
}

double wrapped_gaussian_pdf(double theta, const WrappedGaussian& p) {
    if (!(p.sigma > 0.0))
        throw std::invalid_argument("wrapped_gaussian_pdf: sigma must be > 0");
    if (p.truncation < 1)
        throw std::invalid_argument("wrapped_gaussian_pdf: truncation must be >= 1");
    const double norm = 1.0 / (p.sigma * std::sqrt(kTwoPi));
    double sum = 0.0;
    for (int l = -p.truncation; l <= p.truncation; ++l) {
        const double d = theta - kTwoPi * l;
        sum += std::exp(-0.5 * d * d / (p.sigma * p.sigma));
    }
    return norm * sum;
}

double tikhonov_log_pdf(double theta, Tikhonov t) {
    const double re = t.z.real() * std::cos(theta) + t.z.imag() * std::sin(theta);
    return re - std::log(kTwoPi) - log_bessel_i0(std::abs(t.z));
}

double tikhonov_pdf(double theta, Tikhonov t) { return std::exp(tikhonov_log_pdf(theta, t)); }

} // namespace pnsim
