#include "pnsim/ldpc.hpp"

#include "pnsim/demod_mixture.hpp"
#include "pnsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace pnsim;

namespace {

// exhaustive ML decoding over all codewords of the (7,4) code
std::vector<std::uint8_t> ml_decode_hamming(const ParityCheckCode& code,
                                            const std::vector<std::uint8_t>& hard) {
    int best_dist = 1 << 30;
    std::vector<std::uint8_t> best;
    for (int info = 0; info < 16; ++info) {
        std::vector<std::uint8_t> bits(4);
        for (int b = 0; b < 4; ++b) bits[b] = (info >> b) & 1;
        const auto cw = encode(code, bits);
        int d = 0;
        for (int i = 0; i < 7; ++i) d += cw[i] != hard[i];
        if (d < best_dist) {
            best_dist = d;
            best = cw;
        }
    }
    return best;
}

} // namespace

TEST_CASE("hamming(7,4) structure") {
    auto code = make_hamming74();
    CHECK(code.n == 7);
    CHECK(code.rank == 3);
    CHECK(code.k_info() == 4);
    CHECK(code.rate() == doctest::Approx(4.0 / 7.0));
    for (int info = 0; info < 16; ++info) {
        std::vector<std::uint8_t> bits(4);
        for (int b = 0; b < 4; ++b) bits[b] = (info >> b) & 1;
        const auto cw = encode(code, bits);
        CHECK(parity_ok(code, cw));
        CHECK(extract_info_bits(code, cw) == bits);
    }
}

TEST_CASE("bp converges instantly on a clean codeword") {
    auto code = make_hamming74();
    std::vector<double> llr(7, 10.0); // all-zero codeword, confident
    auto res = bp_decode(llr, code, 25);
    CHECK(res.converged);
    CHECK(res.iterations <= 1);
    for (auto b : res.hard) CHECK(b == 0);
}

TEST_CASE("bp with zero llr input stays undecided") {
    auto code = make_hamming74();
    std::vector<double> llr(7, 0.0);
    auto res = bp_decode(llr, code, 10);
    CHECK(!res.converged);
    for (double v : res.llr_out) CHECK(v == 0.0);
}

TEST_CASE("bp corrects every single-bit flip and matches ml") {
    auto code = make_hamming74();
    for (int info = 0; info < 16; ++info) {
        std::vector<std::uint8_t> bits(4);
        for (int b = 0; b < 4; ++b) bits[b] = (info >> b) & 1;
        const auto cw = encode(code, bits);
        for (int flip = 0; flip < 7; ++flip) {
            auto rx = cw;
            rx[flip] ^= 1;
            std::vector<double> llr(7);
            for (int i = 0; i < 7; ++i) llr[i] = rx[i] ? -8.0 : 8.0;
            auto res = bp_decode(llr, code, 25);
            CHECK(res.converged);
            CHECK(res.hard == cw);
            CHECK(res.hard == ml_decode_hamming(code, rx));
        }
    }
}

TEST_CASE("alist roundtrip") {
    auto code = make_hamming74();
    std::ostringstream os;
    save_alist(code, os);
    std::istringstream is(os.str());
    auto back = load_alist(is);
    CHECK(back.n == code.n);
    CHECK(back.n_checks == code.n_checks);
    CHECK(back.check_neighbors == code.check_neighbors);
    CHECK(back.rank == code.rank);
}

TEST_CASE("alist loader accepts padded entries and rejects garbage") {
    {
        // 4-bit repetition-ish code with padding zeros
        std::istringstream is("4 2\n2 2\n1 2 1 2\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n");
        // header: n=4 m=2; degrees; col lists padded with 0; row lists
        CHECK_THROWS(load_alist(is)); // degree mismatch on purpose
    }
    {
        std::istringstream is("not an alist");
        CHECK_THROWS(load_alist(is));
    }
}

TEST_CASE("peg construction: regular, deterministic, 4-cycle free") {
    auto code = make_regular_ldpc(1024, 128, 3, 0x9e0);
    CHECK(code.n == 1024);
    CHECK(code.n_checks == 128);
    for (const auto& nb : code.var_neighbors) CHECK(nb.size() == 3);
    for (const auto& nb : code.check_neighbors) CHECK(nb.size() == 24);
    CHECK(code.rank >= 127);

    auto again = make_regular_ldpc(1024, 128, 3, 0x9e0);
    CHECK(again.check_neighbors == code.check_neighbors);

    // no two checks share more than one variable (girth >= 6)
    std::set<std::pair<int, int>> seen;
    bool cycle4 = false;
    for (int v = 0; v < code.n && !cycle4; ++v) {
        const auto& nb = code.var_neighbors[v];
        for (std::size_t i = 0; i < nb.size() && !cycle4; ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                auto key = std::minmax(nb[i], nb[j]);
                if (!seen.insert({key.first, key.second}).second) {
                    cycle4 = true;
                    break;
                }
            }
    }
    CHECK(!cycle4);

    CHECK_THROWS_AS(make_regular_ldpc(1000, 127, 3, 1), std::invalid_argument);
}

TEST_CASE("encode/decode roundtrip at zero noise for the desk-scale code") {
    auto code = make_regular_ldpc(1024, 128, 3, 0x9e0);
    Rng rng(4);
    std::vector<std::uint8_t> info(code.k_info());
    for (auto& b : info) b = rng.next_u64() & 1;
    const auto cw = encode(code, info);
    CHECK(parity_ok(code, cw));
    std::vector<double> llr(code.n);
    for (int i = 0; i < code.n; ++i) llr[i] = cw[i] ? -12.0 : 12.0;
    auto res = bp_decode(llr, code, 25);
    CHECK(res.converged);
    CHECK(res.hard == cw);
    CHECK(extract_info_bits(code, res.hard) == info);
}

TEST_CASE("symbol/bit marginalization round trip on delta priors") {
    auto qpsk = make_skewed_mpsk(4, 0.7);
    for (int m = 0; m < 4; ++m) {
        double row[4] = {0, 0, 0, 0};
        row[m] = 1.0;
        const auto llrs = symbol_posterior_to_bit_llrs(row, qpsk);
        double back[4];
        bit_llrs_to_symbol_priors(llrs.data(), qpsk, back);
        for (int j = 0; j < 4; ++j) CHECK(std::abs(back[j] - row[j]) <= 1e-9);
    }
}

TEST_CASE("bits map to gray-labeled symbols and back") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    std::vector<std::uint8_t> bits{0, 0, 0, 1, 1, 1, 1, 0};
    const auto syms = map_bits_to_symbols(bits, qpsk);
    REQUIRE(syms.size() == 4);
    for (std::size_t j = 0; j < syms.size(); ++j) {
        const std::uint32_t label = (bits[2 * j] << 1) | bits[2 * j + 1];
        for (int m = 0; m < 4; ++m)
            if (qpsk.labels[m] == label) CHECK(syms[j] == qpsk.points[m]);
    }
    CHECK_THROWS_AS(map_bits_to_symbols({0, 1, 0}, qpsk), std::invalid_argument);
}

TEST_CASE("iterate_demod_decode on an easy channel") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto code = make_regular_ldpc(64, 16, 3, 77); // row degree 12
    auto params = ChannelParams::from_snr_db(25.0, 0.0);
    Rng rng(6);
    std::vector<std::uint8_t> info(code.k_info());
    for (auto& b : info) b = rng.next_u64() & 1;
    const auto cw = encode(code, info);
    const auto data_syms = map_bits_to_symbols(cw, qpsk);
    const auto piloted = insert_pilots(data_syms, qpsk.points[0], 2);
    FrameRecord frame = simulate_frame(piloted.symbols, params, std::nullopt, 8);
    frame.pilot_mask = piloted.pilot_mask;
    const IterationSchedule schedule{10, 25, true};
    DemodSpec demod;
    demod.kind = DemodKind::mixture;
    auto res = iterate_demod_decode(frame, qpsk, params, code, schedule, demod, &cw);
    CHECK(res.converged);
    CHECK(res.outer_iters == 1);
    CHECK(res.decoded_info == info);
    REQUIRE(!res.ber_trace.empty());
    CHECK(res.ber_trace.back() == 0.0);
}

TEST_CASE("iterate_demod_decode rejects size mismatches") {
    auto qpsk = make_skewed_mpsk(4, 0.0);
    auto code = make_hamming74(); // 7 bits, not a multiple of 2 bits/symbol
    auto params = ChannelParams::from_snr_db(10.0, 0.1);
    std::vector<cdouble> syms(4, qpsk.points[0]);
    FrameRecord frame = simulate_frame(syms, params, std::nullopt, 3);
    const IterationSchedule schedule{2, 5, true};
    CHECK_THROWS_AS(iterate_demod_decode(frame, qpsk, params, code, schedule, DemodSpec{}),
                    std::invalid_argument);
}

TEST_CASE("extrinsic llr quality grows over outer passes") {
    // the density check: posterior LLRs signed toward the transmitted bits
    // must grow from pass to pass at an operating point. A random codeword
    // is transmitted; the all-zero word would repeat one symbol forever,
    // which no pilotless receiver can resolve regardless of skew.
    auto sq = make_skewed_mpsk(4, 0.7);
    auto code = make_regular_ldpc(256, 64, 3, 5); // rate 0.75
    auto params = ChannelParams::from_snr_db(8.0, 0.2);
    Rng rng(44);
    std::vector<std::uint8_t> info(code.k_info());
    for (auto& b : info) b = rng.next_u64() & 1;
    const auto cw = encode(code, info);
    const auto data_syms = map_bits_to_symbols(cw, sq);
    FrameRecord frame = simulate_frame(data_syms, params, std::nullopt, 99);
    frame.pilot_mask.assign(frame.length(), 0);

    SymbolPosterior priors(frame.length(), 4);
    std::vector<double> mean_llr;
    std::vector<double> llr(code.n);
    for (int pass = 0; pass < 3; ++pass) {
        auto pu = mixture_demodulate(frame, priors, sq, params, 4, 4);
        for (int j = 0; j < frame.length(); ++j) {
            const auto bl = symbol_posterior_to_bit_llrs(pu.row(j), sq);
            for (int b = 0; b < 2; ++b) llr[2 * j + b] = bl[b];
        }
        auto bp = bp_decode(llr, code, 25);
        double acc = 0.0;
        for (int i = 0; i < code.n; ++i)
            acc += (llr[i] + bp.llr_out[i]) * (cw[i] ? -1.0 : 1.0);
        mean_llr.push_back(acc / code.n);
        for (int j = 0; j < frame.length(); ++j)
            bit_llrs_to_symbol_priors(bp.llr_out.data() + 2 * j, sq, priors.row(j));
    }
    CHECK(mean_llr[1] > mean_llr[0]);
    CHECK(mean_llr[2] > mean_llr[0]);
    CHECK(mean_llr[0] > 0.0);
}
