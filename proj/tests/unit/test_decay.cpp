#include "pnsim/decay.hpp"

#include "oracles.hpp"
#include "pnsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pnsim;

namespace {

// least-squares slope of y over indices with window[k] in [lo, hi]
double fit_slope(const std::vector<double>& y, const std::vector<double>& window, double lo,
                 double hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (window[k] < lo || window[k] > hi) continue;
        const double x = static_cast<double>(k);
        sx += x;
        sy += y[k];
        sxx += x * x;
        sxy += x * y[k];
        ++n;
    }
    REQUIRE(n >= 3);
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST_CASE("steady-state concentration") {
    auto sq = make_skewed_mpsk(4, 0.7);
    SUBCASE("no steady state without phase noise") {
        CHECK_THROWS_AS(
            steady_state_concentration(sq, ChannelParams::from_snr_db(4.0, 0.0), 1000, 1),
            std::runtime_error);
    }
    SUBCASE("rejects short warmup") {
        CHECK_THROWS_AS(
            steady_state_concentration(sq, ChannelParams::from_snr_db(4.0, 0.1), 99, 1),
            std::invalid_argument);
    }
    SUBCASE("matches the deterministic fixed point within 5%") {
        for (double snr : {0.0, 4.0, 8.0}) {
            const auto params = ChannelParams::from_snr_db(snr, 0.1);
            const double c = steady_state_concentration(sq, params, 20000, 42);
            const double want = oracle::concentration_fixed_point(params.noise_var, 0.1);
            CHECK(std::abs(c / want - 1.0) < 0.05);
        }
    }
    SUBCASE("monotone in snr") {
        double prev = 0.0;
        for (double snr : {0.0, 2.0, 4.0, 6.0, 8.0}) {
            const double c =
                steady_state_concentration(sq, ChannelParams::from_snr_db(snr, 0.1), 20000, 7);
            CHECK(c > prev);
            prev = c;
        }
    }
}

TEST_CASE("decay factor is exactly zero for plain MPSK") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    for (double snr : {0.0, 4.0, 8.0}) {
        const auto params = ChannelParams::from_snr_db(snr, 0.1);
        const double conc = steady_state_concentration(qpsk, params, 20000, 3);
        for (auto rule : {DecaySymbolRule::full_sum, DecaySymbolRule::dominant}) {
            const auto est =
                decay_factor(qpsk, params, oracle::kTwoPi / 4.0, conc, 20000, 5, rule);
            CHECK(est.delta == 0.0);
            CHECK(std::abs(est.delta) <= 2.0 * est.stderr_);
        }
    }
}

TEST_CASE("decay factor magnitude grows with skew and snr") {
    const double sigma_delta = 0.1;
    std::vector<std::vector<double>> delta(4, std::vector<double>(4, 0.0));
    const double skews[4] = {0.1, 0.3, 0.5, 0.7};
    const double snrs[4] = {0.0, 2.0, 4.0, 6.0};
    for (int i = 0; i < 4; ++i) {
        auto c = make_skewed_mpsk(4, skews[i]);
        const double phi = oracle::kTwoPi / (4.0 + skews[i]);
        for (int j = 0; j < 4; ++j) {
            const auto params = ChannelParams::from_snr_db(snrs[j], sigma_delta);
            const double conc = steady_state_concentration(c, params, 20000, 11);
            const auto est = decay_factor(c, params, phi, conc, 50000, 13);
            CHECK(est.delta < 0.0); // decay, by sign convention
            delta[i][j] = std::abs(est.delta);
        }
    }
    for (int j = 0; j < 4; ++j)
        for (int i = 1; i < 4; ++i) CHECK(delta[i][j] > delta[i - 1][j]);
    for (int i = 0; i < 4; ++i)
        for (int j = 1; j < 4; ++j) CHECK(delta[i][j] > delta[i][j - 1]);
}

TEST_CASE("decay factor is invariant under phi -> -phi within mc error") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    const double conc = steady_state_concentration(sq, params, 20000, 21);
    const double phi = oracle::kTwoPi / 4.7;
    const auto plus = decay_factor(sq, params, phi, conc, 200000, 31);
    const auto minus = decay_factor(sq, params, -phi, conc, 200000, 37);
    const double tol = 4.0 * std::hypot(plus.stderr_, minus.stderr_);
    CHECK(std::abs(plus.delta - minus.delta) <= tol);
}

TEST_CASE("decay factor input validation") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    CHECK_THROWS_AS(decay_factor(sq, params, 1.0, 20.0, 9999, 1), std::invalid_argument);
    CHECK_THROWS_AS(decay_factor(sq, params, 1.0, 0.0, 10000, 1), std::invalid_argument);
}

TEST_CASE("two-trajectory weights sum to one exactly") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    TwoTrajectoryState st;
    st.phi = oracle::kTwoPi / 4.7;
    st.z_correct = {15.0, 0.0};
    Rng rng(8);
    for (int k = 0; k < 50; ++k) {
        const cdouble sym = sq.points[rng.uniform_int(4)];
        const cdouble r = sym * std::polar(1.0, 0.3) + rng.cnormal(params.noise_var);
        two_trajectory_step(st, r, sym, sq, params);
        const auto [w1, w2] = st.weights();
        CHECK(w1 + w2 == 1.0);
    }
}

TEST_CASE("plain MPSK two-trajectory weights stay exactly half") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    auto trace = simulate_two_trajectories(qpsk, params, oracle::kTwoPi / 4.0, 60, 100, 17);
    for (double v : trace.mean_alpha_wrong) CHECK(v == 0.5);
}

TEST_CASE("wrong-trajectory weight decays monotonically for skewed MPSK") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    auto trace = simulate_two_trajectories(sq, params, oracle::kTwoPi / 4.7, 60, 300, 23);
    int ok = 0, checks = 0;
    for (int k = 5; k + 10 <= 60; ++k) {
        ++checks;
        ok += trace.mean_alpha_wrong[k] >= trace.mean_alpha_wrong[k + 10];
    }
    CHECK(static_cast<double>(ok) / checks >= 0.9);
    CHECK(trace.mean_alpha_wrong[50] < 0.1);
}

TEST_CASE("geometric-mean trajectory decay matches the decay factor within 20%") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    const double phi = oracle::kTwoPi / 4.7;
    const double conc = steady_state_concentration(sq, params, 20000, 29);
    const auto est = decay_factor(sq, params, phi, conc, 200000, 41);
    auto trace = simulate_two_trajectories(sq, params, phi, 80, 800, 43);
    const double slope =
        fit_slope(trace.mean_log_alpha_wrong, trace.mean_alpha_wrong, 0.01, 0.4);
    CHECK(std::abs(slope - est.delta) <= 0.2 * std::abs(est.delta));
}

TEST_CASE("initial weights shift the intercept, not the asymptotic slope") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    const double phi = oracle::kTwoPi / 4.7;
    auto even = simulate_two_trajectories(sq, params, phi, 70, 400, 51, {0.5, 0.5});
    auto skewed = simulate_two_trajectories(sq, params, phi, 70, 400, 51, {0.9, 0.1});
    CHECK(skewed.mean_alpha_wrong[0] == doctest::Approx(0.1).epsilon(1e-12));
    const double s1 = fit_slope(even.mean_log_alpha_wrong, even.mean_alpha_wrong, 0.01, 0.4);
    // same window in k for the shifted run: use the even run's alpha as the window
    const double s2 = fit_slope(skewed.mean_log_alpha_wrong, even.mean_alpha_wrong, 0.01, 0.4);
    CHECK(std::abs(s2 - s1) <= 0.25 * std::abs(s1));
}

TEST_CASE("simulate_two_trajectories input validation") {
    auto sq = make_skewed_mpsk(4, 0.7);
    const auto params = ChannelParams::from_snr_db(4.0, 0.1);
    CHECK_THROWS_AS(simulate_two_trajectories(sq, params, 1.0, 49, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate_two_trajectories(sq, params, 1.0, 60, 99, 1), std::invalid_argument);
}
