#include "pnsim/channel.hpp"

#include "pnsim/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace pnsim {

double noise_var_from_snr_db(double snr_db) { return 0.5 * std::pow(10.0, -snr_db / 10.0); }

ChannelParams ChannelParams::from_snr_db(double snr_db, double sigma_delta) {
    if (std::isnan(sigma_delta) || sigma_delta < 0.0)
        throw std::invalid_argument("ChannelParams: sigma_delta must be >= 0");
    ChannelParams p;
    p.sigma_delta = sigma_delta;
    p.snr_db = snr_db;
    p.noise_var = noise_var_from_snr_db(snr_db);
    return p;
}

FrameRecord simulate_frame(std::vector<cdouble> symbols, const ChannelParams& params,
                           std::optional<double> theta0, std::uint64_t seed) {
    if (symbols.empty()) throw std::invalid_argument("simulate_frame: symbols must be non-empty");
    if (!(params.noise_var > 0.0))
        throw std::invalid_argument("simulate_frame: noise_var must be > 0");

    const int k_len = static_cast<int>(symbols.size());
    Rng rng(seed);

    FrameRecord f;
    f.symbols = std::move(symbols);
    f.theta.resize(k_len);
    f.received.resize(k_len);
    f.pilot_mask.assign(k_len, 0);

    double theta = theta0 ? *theta0 : rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < k_len; ++k) {
        if (k > 0) theta += params.sigma_delta * rng.normal();
        f.theta[k] = theta;
        const cdouble n = rng.cnormal(params.noise_var);
        f.received[k] = f.symbols[k] * std::polar(1.0, theta) + n;
    }
    return f;
}

PilotedStream insert_pilots(const std::vector<cdouble>& data_symbols, cdouble pilot_symbol,
                            std::optional<int> period) {
    PilotedStream out;
    if (!period) {
        out.symbols = data_symbols;
        out.pilot_mask.assign(data_symbols.size(), 0);
        return out;
    }
    if (*period < 2) throw std::invalid_argument("insert_pilots: period must be >= 2");
    const int p = *period;
    std::size_t next = 0;
    int k = 0;
    while (next < data_symbols.size()) {
        if (k % p == 0) {
            out.symbols.push_back(pilot_symbol);
            out.pilot_mask.push_back(1);
        } else {
            out.symbols.push_back(data_symbols[next++]);
            out.pilot_mask.push_back(0);
        }
        ++k;
    }
    return out;
}

void dump_frame_csv(const FrameRecord& frame, std::ostream& out) {
    out << "k,re_c,im_c,theta,re_r,im_r,pilot\n";
    char buf[256];
    for (int k = 0; k < frame.length(); ++k) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", k,
                      frame.symbols[k].real(), frame.symbols[k].imag(), frame.theta[k],
                      frame.received[k].real(), frame.received[k].imag(),
                      static_cast<int>(frame.pilot_mask[k]));
        out << buf;
    }
}

} // namespace pnsim
