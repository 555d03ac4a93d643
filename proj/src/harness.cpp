#include "pnsim/harness.hpp"

#include "pnsim/channel.hpp"
#include "pnsim/constellation.hpp"
#include "pnsim/decay.hpp"
#include "pnsim/demod_mixture.hpp"
#include "pnsim/ldpc.hpp"
#include "pnsim/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pnsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt(v[i]);
    }
    return s;
}

// config echo; one '# key=value' line per field, fixed order
void write_header(std::ostringstream& out, const ExperimentConfig& c) {
    out << "# pnsim " << c.kind << "\n";
    out << "# kind=" << c.kind << "\n";
    out << "# m_order=" << c.m_order << "\n";
    out << "# skew=" << fmt(c.skew) << "\n";
    out << "# constellation_file=" << c.constellation_file << "\n";
    out << "# snr_db=" << fmt_list(c.snr_db) << "\n";
    out << "# sigma_delta=" << fmt(c.sigma_delta) << "\n";
    out << "# demod=" << c.demod << "\n";
    out << "# grid_size=" << c.grid_size << "\n";
    out << "# order=" << c.order << "\n";
    out << "# code_file=" << c.code_file << "\n";
    out << "# pilot_period=" << c.pilot_period << "\n";
    out << "# frame_len=" << c.frame_len << "\n";
    out << "# n_frames=" << c.n_frames << "\n";
    out << "# max_frames=" << c.max_frames << "\n";
    out << "# min_bit_errors=" << c.min_bit_errors << "\n";
    out << "# n_samples=" << c.n_samples << "\n";
    out << "# skew_list=" << fmt_list(c.skew_list) << "\n";
    out << "# phi_steps=" << c.phi_steps << "\n";
    out << "# decay_rule=" << c.decay_rule << "\n";
    out << "# n_outer=" << c.n_outer << "\n";
    out << "# n_inner=" << c.n_inner << "\n";
    out << "# seed=" << c.seed << "\n";
}

Constellation config_constellation(const ExperimentConfig& cfg) {
    if (!cfg.constellation_file.empty()) return load_constellation_file(cfg.constellation_file);
    return make_skewed_mpsk(cfg.m_order, cfg.skew);
}

DemodSpec config_demod(const ExperimentConfig& cfg) {
    DemodSpec d;
    if (cfg.demod == "dp")
        d.kind = DemodKind::dp;
    else if (cfg.demod == "mixture")
        d.kind = DemodKind::mixture;
    else
        throw std::invalid_argument("config: demod must be 'dp' or 'mixture', got '" + cfg.demod +
                                    "'");
    d.grid_size = cfg.grid_size;
    d.order_fwd = d.order_bwd = cfg.order;
    return d;
}

DecaySymbolRule config_decay_rule(const ExperimentConfig& cfg) {
    if (cfg.decay_rule == "full_sum") return DecaySymbolRule::full_sum;
    if (cfg.decay_rule == "dominant") return DecaySymbolRule::dominant;
    throw std::invalid_argument("config: decay_rule must be 'full_sum' or 'dominant', got '" +
                                cfg.decay_rule + "'");
}

int effective_threads(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

struct FrameOutcome {
    int bit_errors = 0;
    int frame_error = 0;
    int outer_iters = 0;
    int converged = 0;
};

} // namespace

void ExperimentConfig::validate() const {
    static const char* kinds[] = {"ber_curve", "decay_sweep", "trajectory_trace", "track_demo",
                                  "mi_curve"};
    bool ok = false;
    for (const char* k : kinds) ok = ok || kind == k;
    if (!ok) throw std::invalid_argument("config: unknown experiment kind '" + kind + "'");
    if (snr_db.empty()) throw std::invalid_argument("config: snr_db list must not be empty");
    if (pilot_period != 0 && pilot_period < 2)
        throw std::invalid_argument("config: pilot_period must be 0 (pilotless) or >= 2");
    if (m_order < 2) throw std::invalid_argument("config: m_order must be >= 2");
    if (order < 1) throw std::invalid_argument("config: order must be >= 1");
    if (grid_size < 64) throw std::invalid_argument("config: grid_size must be >= 64");
    if (min_bit_errors < 1) throw std::invalid_argument("config: min_bit_errors must be >= 1");
    if (max_frames < 1) throw std::invalid_argument("config: max_frames must be >= 1");
    if (frame_len < 1) throw std::invalid_argument("config: frame_len must be >= 1");
    if (phi_steps == 0) throw std::invalid_argument("config: phi_steps must be nonzero");
    config_demod(*this);
    config_decay_rule(*this);
}

ExperimentConfig config_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");

    ExperimentConfig cfg;
    auto list_of_double = [](const nlohmann::json& v, const char* key) {
        std::vector<double> out;
        if (!v.is_array()) throw std::invalid_argument(std::string("config: ") + key +
                                                       " must be an array of numbers");
        for (const auto& x : v) out.push_back(x.get<double>());
        return out;
    };
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "kind") cfg.kind = value.get<std::string>();
            else if (key == "m_order") cfg.m_order = value.get<int>();
            else if (key == "skew") cfg.skew = value.get<double>();
            else if (key == "constellation_file") cfg.constellation_file = value.get<std::string>();
            else if (key == "snr_db") cfg.snr_db = list_of_double(value, "snr_db");
            else if (key == "sigma_delta") cfg.sigma_delta = value.get<double>();
            else if (key == "demod") cfg.demod = value.get<std::string>();
            else if (key == "grid_size") cfg.grid_size = value.get<int>();
            else if (key == "order") cfg.order = value.get<int>();
            else if (key == "code_file") cfg.code_file = value.get<std::string>();
            else if (key == "pilot_period") cfg.pilot_period = value.get<int>();
            else if (key == "frame_len") cfg.frame_len = value.get<int>();
            else if (key == "n_frames") cfg.n_frames = value.get<int>();
            else if (key == "max_frames") cfg.max_frames = value.get<int>();
            else if (key == "min_bit_errors") cfg.min_bit_errors = value.get<int>();
            else if (key == "n_samples") cfg.n_samples = value.get<std::int64_t>();
            else if (key == "skew_list") cfg.skew_list = list_of_double(value, "skew_list");
            else if (key == "phi_steps") cfg.phi_steps = value.get<int>();
            else if (key == "decay_rule") cfg.decay_rule = value.get<std::string>();
            else if (key == "n_outer") cfg.n_outer = value.get<int>();
            else if (key == "n_inner") cfg.n_inner = value.get<int>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "threads") cfg.threads = value.get<int>();
            else if (key == "out") cfg.out_path = value.get<std::string>();
            else throw std::invalid_argument("config: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config: bad value for key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string run_ber_curve(const ExperimentConfig& cfg) {
    cfg.validate();
    const Constellation c = config_constellation(cfg);
    if (!c.labeled()) throw std::invalid_argument("ber_curve: constellation must be labeled");
    if (cfg.code_file.empty()) throw std::invalid_argument("ber_curve: code_file is required");
    const ParityCheckCode code = load_alist_file(cfg.code_file);
    const DemodSpec demod = config_demod(cfg);
    const IterationSchedule schedule{cfg.n_outer, cfg.n_inner, true};
    const int bits_per_symbol = c.bits_per_symbol;
    if (code.n % bits_per_symbol != 0)
        throw std::invalid_argument("ber_curve: code length not a multiple of bits/symbol");
    const int n_threads = effective_threads(cfg);
    const int chunk = 8; // stop rule granularity; fixed so output is thread-count independent

    std::ostringstream out;
    write_header(out, cfg);
    out << "snr_db,frames,bits,bit_errors,ber,frame_errors,avg_outer_iters,capped\n";

    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = cfg.snr_db[si];
        const ChannelParams params = ChannelParams::from_snr_db(snr, cfg.sigma_delta);
        const std::uint64_t point_seed = derive_seed(cfg.seed, si);

        auto run_frame = [&](int frame_idx) -> FrameOutcome {
            const std::uint64_t fs = derive_seed(point_seed, frame_idx);
            Rng bit_rng(derive_seed(fs, 0));
            std::vector<std::uint8_t> info(code.k_info());
            for (auto& b : info) b = bit_rng.next_u64() & 1;
            const auto cw = encode(code, info);
            const auto data_syms = map_bits_to_symbols(cw, c);
            const auto piloted =
                insert_pilots(data_syms, c.points[0],
                              cfg.pilot_period ? std::optional<int>(cfg.pilot_period) : std::nullopt);
            FrameRecord frame =
                simulate_frame(piloted.symbols, params, std::nullopt, derive_seed(fs, 1));
            frame.pilot_mask = piloted.pilot_mask;
            frame.tx_bits = cw;
            const IterateResult res =
                iterate_demod_decode(frame, c, params, code, schedule, demod, nullptr);
            FrameOutcome o;
            for (std::size_t i = 0; i < info.size(); ++i)
                o.bit_errors += res.decoded_info[i] != info[i];
            o.frame_error = o.bit_errors > 0 ? 1 : 0;
            o.outer_iters = res.outer_iters;
            o.converged = res.converged ? 1 : 0;
            return o;
        };

        long frames = 0, bit_errors = 0, frame_errors = 0, outer_sum = 0;
        bool capped = false;
        while (true) {
            if (bit_errors >= cfg.min_bit_errors) break;
            if (frames >= cfg.max_frames) {
                capped = true;
                break;
            }
            const int batch =
                static_cast<int>(std::min<long>(chunk, cfg.max_frames - frames));
            std::vector<std::future<FrameOutcome>> futs;
            futs.reserve(batch);
            for (int i = 0; i < batch; ++i) {
                const int idx = static_cast<int>(frames) + i;
                if (n_threads > 1)
                    futs.push_back(std::async(std::launch::async, run_frame, idx));
                else
                    futs.push_back(std::async(std::launch::deferred, run_frame, idx));
            }
            for (auto& f : futs) {
                const FrameOutcome o = f.get();
                bit_errors += o.bit_errors;
                frame_errors += o.frame_error;
                outer_sum += o.outer_iters;
                ++frames;
            }
        }
        const long bits = frames * code.k_info();
        char row[256];
        std::snprintf(row, sizeof(row), "%s,%ld,%ld,%ld,%s,%ld,%s,%d\n", fmt(snr).c_str(), frames,
                      bits, bit_errors, fmt(bits ? double(bit_errors) / bits : 0.0).c_str(),
                      frame_errors, fmt(frames ? double(outer_sum) / frames : 0.0).c_str(),
                      capped ? 1 : 0);
        out << row;
    }
    return out.str();
}

std::string run_decay_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    std::ostringstream out;
    write_header(out, cfg);
    out << "skew,snr_db,sigma_delta,phi,delta,stderr\n";
    const DecaySymbolRule rule = config_decay_rule(cfg);
    std::uint64_t cell = 0;
    for (double skew : cfg.skew_list) {
        const Constellation c = make_skewed_mpsk(cfg.m_order, skew);
        const double phi = cfg.phi_steps * kTwoPi / (cfg.m_order + skew);
        for (double snr : cfg.snr_db) {
            const ChannelParams params = ChannelParams::from_snr_db(snr, cfg.sigma_delta);
            const double conc =
                steady_state_concentration(c, params, 20000, derive_seed(cfg.seed, 2 * cell));
            const DecayEstimate est = decay_factor(c, params, phi, conc, cfg.n_samples,
                                                   derive_seed(cfg.seed, 2 * cell + 1), rule);
            char row[256];
            std::snprintf(row, sizeof(row), "%s,%s,%s,%s,%s,%s\n", fmt(skew).c_str(),
                          fmt(snr).c_str(), fmt(cfg.sigma_delta).c_str(), fmt(phi).c_str(),
                          fmt(est.delta).c_str(), fmt(est.stderr_).c_str());
            out << row;
            ++cell;
        }
    }
    return out.str();
}

std::string run_trajectory_trace(const ExperimentConfig& cfg) {
    cfg.validate();
    const Constellation c = config_constellation(cfg);
    const double snr = cfg.snr_db.front();
    const ChannelParams params = ChannelParams::from_snr_db(snr, cfg.sigma_delta);
    const double skew = c.skew.value_or(0.0);
    const double phi = cfg.phi_steps * kTwoPi / (c.m_order + skew);
    const double conc = steady_state_concentration(c, params, 20000, derive_seed(cfg.seed, 0));
    const DecayEstimate est = decay_factor(c, params, phi, conc, cfg.n_samples,
                                           derive_seed(cfg.seed, 1), config_decay_rule(cfg));
    const TrajectoryTrace trace = simulate_two_trajectories(c, params, phi, cfg.frame_len,
                                                            cfg.n_frames, derive_seed(cfg.seed, 2));
    std::ostringstream out;
    write_header(out, cfg);
    out << "# delta=" << fmt(est.delta) << "\n";
    out << "# delta_stderr=" << fmt(est.stderr_) << "\n";
    out << "# concentration=" << fmt(conc) << "\n";
    out << "k,mean_alpha_wrong,stderr,model\n";
    for (std::size_t k = 0; k < trace.mean_alpha_wrong.size(); ++k) {
        char row[200];
        std::snprintf(row, sizeof(row), "%zu,%s,%s,%s\n", k, fmt(trace.mean_alpha_wrong[k]).c_str(),
                      fmt(trace.stderr_[k]).c_str(),
                      fmt(std::exp(est.delta * static_cast<double>(k))).c_str());
        out << row;
    }
    return out.str();
}

std::string run_track_demo(const ExperimentConfig& cfg) {
    cfg.validate();
    const Constellation c = config_constellation(cfg);
    const ChannelParams params = ChannelParams::from_snr_db(cfg.snr_db.front(), cfg.sigma_delta);
    Rng rng(derive_seed(cfg.seed, 0));
    const int m = static_cast<int>(c.points.size());
    std::vector<cdouble> data(cfg.frame_len);
    for (auto& s : data) s = c.points[rng.uniform_int(m)];
    const auto piloted = insert_pilots(
        data, c.points[0], cfg.pilot_period ? std::optional<int>(cfg.pilot_period) : std::nullopt);
    FrameRecord frame = simulate_frame(piloted.symbols, params, std::nullopt,
                                       derive_seed(cfg.seed, 1));
    frame.pilot_mask = piloted.pilot_mask;

    SymbolPosterior priors(frame.length(), m);
    for (int k = 0; k < frame.length(); ++k)
        if (frame.pilot_mask[k]) priors.set_delta(k, 0);

    MixtureDiagnostics diag;
    mixture_demodulate(frame, priors, c, params, cfg.order, cfg.order, &diag);
    std::ostringstream out;
    write_header(out, cfg);
    std::ostringstream body;
    dump_mixture_trace_csv(diag, frame, body);
    out << body.str();
    return out.str();
}

std::string run_mi_curve(const ExperimentConfig& cfg) {
    cfg.validate();
    const Constellation c = config_constellation(cfg);
    std::ostringstream out;
    write_header(out, cfg);
    out << "snr_db,mi_bits\n";
    for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
        const double mi =
            awgn_mutual_information(c, cfg.snr_db[i], cfg.n_samples, derive_seed(cfg.seed, i));
        out << fmt(cfg.snr_db[i]) << ',' << fmt(mi) << '\n';
    }
    return out.str();
}

std::string run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.kind == "ber_curve") return run_ber_curve(cfg);
    if (cfg.kind == "decay_sweep") return run_decay_sweep(cfg);
    if (cfg.kind == "trajectory_trace") return run_trajectory_trace(cfg);
    if (cfg.kind == "track_demo") return run_track_demo(cfg);
    if (cfg.kind == "mi_curve") return run_mi_curve(cfg);
    throw std::invalid_argument("config: unknown experiment kind '" + cfg.kind + "'");
}

} // namespace pnsim
