#include "pnsim/channel.hpp"

#include "pnsim/constellation.hpp"
#include "pnsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace pnsim;

TEST_CASE("snr convention") {
    // Es/N0 with Es = 1; sigma^2 per real dimension = 10^(-snr/10)/2
    CHECK(noise_var_from_snr_db(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(noise_var_from_snr_db(3.0) == doctest::Approx(0.5 * std::pow(10.0, -0.3)).epsilon(1e-15));
    const auto p = ChannelParams::from_snr_db(4.0, 0.1);
    CHECK(p.noise_var == doctest::Approx(0.19905358527674865).epsilon(1e-12));
    CHECK_THROWS_AS(ChannelParams::from_snr_db(0.0, -0.1), std::invalid_argument);
}

TEST_CASE("noiseless frozen-phase limit") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto params = ChannelParams::from_snr_db(300.0, 0.0); // noise_var ~ 5e-31
    std::vector<cdouble> syms{qpsk.points[0], qpsk.points[3], qpsk.points[1]};
    const double theta0 = 0.9;
    auto f = simulate_frame(syms, params, theta0, 42);
    for (int k = 0; k < f.length(); ++k) {
        CHECK(f.theta[k] == theta0);
        CHECK(std::abs(f.received[k] - f.symbols[k] * std::polar(1.0, theta0)) < 1e-12);
    }
}

TEST_CASE("phase increment moments") {
    auto params = ChannelParams::from_snr_db(10.0, 0.2);
    std::vector<cdouble> syms(100000, cdouble{1.0, 0.0});
    auto f = simulate_frame(syms, params, 0.0, 7);
    double mean = 0.0, var = 0.0;
    const int n = f.length() - 1;
    for (int k = 1; k < f.length(); ++k) mean += f.theta[k] - f.theta[k - 1];
    mean /= n;
    for (int k = 1; k < f.length(); ++k) {
        const double d = f.theta[k] - f.theta[k - 1] - mean;
        var += d * d;
    }
    var /= (n - 1);
    const double se_var = 0.04 * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(var - 0.04) <= 3.0 * se_var);
    CHECK(std::abs(mean) <= 3.0 * 0.2 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("noise power and reconstruction identity") {
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    std::vector<cdouble> syms(50000, cdouble{1.0, 0.0});
    auto f = simulate_frame(syms, params, std::nullopt, 3);
    double p = 0.0;
    for (int k = 0; k < f.length(); ++k)
        p += std::norm(f.received[k] - f.symbols[k] * std::polar(1.0, f.theta[k]));
    p /= f.length();
    const double want = 2.0 * params.noise_var;
    CHECK(std::abs(p - want) <= 4.0 * want / std::sqrt(static_cast<double>(f.length())));
}

TEST_CASE("determinism") {
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    std::vector<cdouble> syms(257, cdouble{0.0, 1.0});
    auto a = simulate_frame(syms, params, std::nullopt, 999);
    auto b = simulate_frame(syms, params, std::nullopt, 999);
    REQUIRE(a.length() == b.length());
    for (int k = 0; k < a.length(); ++k) {
        CHECK(a.theta[k] == b.theta[k]);
        CHECK(a.received[k] == b.received[k]);
    }
    auto c = simulate_frame(syms, params, std::nullopt, 1000);
    CHECK(a.received[0] != c.received[0]);
}

TEST_CASE("pilot insertion") {
    std::vector<cdouble> data(390, cdouble{1.0, 0.0});
    const cdouble pilot{0.0, 1.0};
    auto out = insert_pilots(data, pilot, 40);
    CHECK(out.symbols.size() == 400);
    int pilots = 0;
    for (std::size_t k = 0; k < out.symbols.size(); ++k) {
        if (out.pilot_mask[k]) {
            ++pilots;
            CHECK(k % 40 == 0);
            CHECK(out.symbols[k] == pilot);
        }
    }
    CHECK(pilots == 10);

    auto alt = insert_pilots(std::vector<cdouble>(5, cdouble{1.0, 0.0}), pilot, 2);
    CHECK(alt.symbols.size() == 10);
    for (std::size_t k = 0; k < alt.symbols.size(); ++k)
        CHECK(static_cast<bool>(alt.pilot_mask[k]) == (k % 2 == 0));

    auto none = insert_pilots(data, pilot, std::nullopt);
    CHECK(none.symbols == data);
    for (auto m : none.pilot_mask) CHECK(m == 0);

    CHECK_THROWS_AS(insert_pilots(data, pilot, 1), std::invalid_argument);
}

TEST_CASE("frame csv dump") {
    auto params = ChannelParams::from_snr_db(4.0, 0.1);
    std::vector<cdouble> syms(4, cdouble{1.0, 0.0});
    auto f = simulate_frame(syms, params, 0.0, 1);
    std::ostringstream os;
    dump_frame_csv(f, os);
    const std::string s = os.str();
    CHECK(s.rfind("k,re_c,im_c,theta,re_r,im_r,pilot\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 5);
}
