#include "pnsim/demod_dp.hpp"

#include "oracles.hpp"
#include "pnsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pnsim;

namespace {

FrameRecord random_frame(const Constellation& c, const ChannelParams& params, int k_len,
                         std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0));
    std::vector<cdouble> syms(k_len);
    for (auto& s : syms) s = c.points[rng.uniform_int(static_cast<int>(c.points.size()))];
    return simulate_frame(syms, params, std::nullopt, derive_seed(seed, 1));
}

double max_abs_diff(const SymbolPosterior& a, const SymbolPosterior& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i) d = std::max(d, std::abs(a.p[i] - b.p[i]));
    return d;
}

} // namespace

TEST_CASE("dp_pd matched filter with delta prior") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    const double theta_star = 1.2345;
    const cdouble r = qpsk.points[0] * std::polar(1.0, theta_star);
    const double priors[4] = {1.0, 0.0, 0.0, 0.0};
    const int grid = 512;
    auto pd = dp_pd(r, priors, qpsk, 1e-4, grid);
    int argmax = 0;
    for (int l = 1; l < grid; ++l)
        if (pd.log_density[l] > pd.log_density[argmax]) argmax = l;
    const int want = static_cast<int>(std::lround(theta_star / (oracle::kTwoPi / grid)));
    CHECK(argmax == want);
}

TEST_CASE("dp_pd periodicity for plain MPSK, aperiodicity for skewed") {
    const int grid = 512;
    const double priors[4] = {0.25, 0.25, 0.25, 0.25};
    const cdouble r{0.8, 0.3};

    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto pd = dp_pd(r, priors, qpsk, 0.2, grid);
    const int shift = grid / 4;
    for (int l = 0; l < grid; ++l) {
        const double a = pd.log_density[l];
        const double b = pd.log_density[(l + shift) % grid];
        CHECK(std::abs(a - b) < 1e-9);
    }

    auto sq = make_skewed_mpsk(4, 0.7);
    auto pds = dp_pd(r, priors, sq, 0.2, grid);
    // no circular shift reproduces the density
    double best_residual = 1e300;
    for (int s = 1; s < grid; ++s) {
        double res = 0.0;
        for (int l = 0; l < grid; ++l)
            res = std::max(res, std::abs(pds.log_density[l] - pds.log_density[(l + s) % grid]));
        best_residual = std::min(best_residual, res);
    }
    CHECK(best_residual > 1e-3);
}

TEST_CASE("degenerate exact inference: no phase noise, no noise, delta priors") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto params = ChannelParams::from_snr_db(60.0, 0.0);
    Rng rng(5);
    const int k_len = 16;
    std::vector<cdouble> syms(k_len);
    std::vector<int> tx(k_len);
    for (int k = 0; k < k_len; ++k) {
        tx[k] = rng.uniform_int(4);
        syms[k] = qpsk.points[tx[k]];
    }
    auto frame = simulate_frame(syms, params, 0.4, 9);
    SymbolPosterior priors(k_len, 4);
    for (int k = 0; k < k_len; ++k) priors.set_delta(k, tx[k]);
    auto pu = dp_forward_backward(frame, priors, qpsk, params, 256);
    for (int k = 0; k < k_len; ++k) {
        CHECK(pu.hard_decision(k) == tx[k]);
        CHECK(pu.at(k, tx[k]) > 0.999999);
    }
}

TEST_CASE("grid refinement: L=512 matches L=8192 on short frames") {
    auto sq = make_skewed_mpsk(4, 0.7);
    auto params = ChannelParams::from_snr_db(4.0, 0.15);
    auto frame = random_frame(sq, params, 8, 1234);
    SymbolPosterior priors(8, 4);
    auto a = dp_forward_backward(frame, priors, sq, params, 512);
    auto b = dp_forward_backward(frame, priors, sq, params, 8192);
    CHECK(max_abs_diff(a, b) <= 1e-3);
}

TEST_CASE("grid convergence improves with doubling") {
    auto sq = make_skewed_mpsk(4, 0.7);
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    auto frame = random_frame(sq, params, 24, 77);
    SymbolPosterior priors(24, 4);
    auto p256 = dp_forward_backward(frame, priors, sq, params, 256);
    auto p512 = dp_forward_backward(frame, priors, sq, params, 512);
    auto p1024 = dp_forward_backward(frame, priors, sq, params, 1024);
    CHECK(max_abs_diff(p512, p1024) <= max_abs_diff(p256, p512) + 1e-12);
}

TEST_CASE("pilotless plain MPSK yields uniform posteriors") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    auto frame = random_frame(qpsk, params, 32, 11);
    SymbolPosterior priors(32, 4);
    auto pu = dp_forward_backward(frame, priors, qpsk, params, 512);
    for (double v : pu.p) CHECK(std::abs(v - 0.25) <= 1e-6);
}

TEST_CASE("time reversal symmetry of the recursions") {
    auto sq = make_skewed_mpsk(4, 0.7);
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    const int k_len = 20;
    auto frame = random_frame(sq, params, k_len, 4242);
    SymbolPosterior priors(k_len, 4);
    DpDiagnostics diag;
    dp_forward_backward(frame, priors, sq, params, 256, &diag);

    FrameRecord rev = frame;
    std::reverse(rev.symbols.begin(), rev.symbols.end());
    std::reverse(rev.theta.begin(), rev.theta.end());
    std::reverse(rev.received.begin(), rev.received.end());
    DpDiagnostics diag_rev;
    dp_forward_backward(rev, priors, sq, params, 256, &diag_rev);

    for (int k = 0; k < k_len; ++k)
        for (int l = 0; l < 256; ++l)
            CHECK(std::abs(diag.backward[k].log_density[l] -
                           diag_rev.forward[k_len - 1 - k].log_density[l]) < 1e-9);
}

TEST_CASE("grid messages stay normalized") {
    auto sq = make_skewed_mpsk(4, 0.7);
    auto params = ChannelParams::from_snr_db(0.0, 0.2);
    auto frame = random_frame(sq, params, 12, 8);
    SymbolPosterior priors(12, 4);
    DpDiagnostics diag;
    dp_forward_backward(frame, priors, sq, params, 128, &diag);
    for (const auto& msgs : {diag.forward, diag.backward})
        for (const auto& m : msgs) {
            double acc = 0.0;
            for (double v : m.log_density) acc += std::exp(v);
            acc *= oracle::kTwoPi / m.grid_size();
            CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
        }
}

TEST_CASE("input validation") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    auto frame = random_frame(qpsk, params, 4, 3);
    SymbolPosterior priors(4, 4);
    CHECK_THROWS_AS(dp_forward_backward(frame, priors, qpsk, params, 32), std::invalid_argument);
    SymbolPosterior bad(3, 4);
    CHECK_THROWS_AS(dp_forward_backward(frame, bad, qpsk, params, 128), std::invalid_argument);
    const double pr[4] = {0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(dp_pd({1.0, 0.0}, pr, qpsk, 0.2, 16), std::invalid_argument);
}
