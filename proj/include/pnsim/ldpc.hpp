#pragma once

#include "pnsim/channel.hpp"
#include "pnsim/constellation.hpp"
#include "pnsim/posterior.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pnsim {

// Binary LDPC code given by its parity-check matrix. The systematic
// encoder is derived once from H by Gaussian elimination over GF(2):
// information bits live at the non-pivot columns, parity bits at the
// pivot columns. rate = (n - rank(H)) / n.
struct ParityCheckCode {
    int n = 0;
    int n_checks = 0;
    std::vector<std::vector<int>> check_neighbors; // per check: variable indices
    std::vector<std::vector<int>> var_neighbors;   // per variable: check indices

    // encoder tables (filled by finalize())
    int rank = 0;
    std::vector<int> pivot_cols;
    std::vector<int> info_cols;
    std::vector<std::vector<int>> parity_from_info; // per pivot row: info-bit positions to XOR

    int k_info() const { return n - rank; }
    double rate() const { return static_cast<double>(n - rank) / n; }

    // builds the encoder tables; called by the factory functions below
    void finalize();
};

// MacKay alist text format (entries padded with 0 to the max degree).
ParityCheckCode load_alist(std::istream& in);
ParityCheckCode load_alist_file(const std::string& path);
void save_alist(const ParityCheckCode& code, std::ostream& out);
void save_alist_file(const ParityCheckCode& code, const std::string& path);

// The (7,4) Hamming code; small enough for exhaustive ML cross-checks.
ParityCheckCode make_hamming74();

// Regular LDPC by progressive edge growth: variables are processed in
// order and each new edge goes to the check that is farthest from the
// variable in the current graph (unreachable checks first), among checks
// with remaining capacity; ties prefer the lowest current degree, then a
// seed-derived priority. Deterministic given seed.
// Requires n * col_degree divisible by n_checks.
ParityCheckCode make_regular_ldpc(int n, int n_checks, int col_degree, std::uint64_t seed);

// Systematic encoding: info bits (size k_info) are placed at the info
// columns and parities solved from H. Returns the length-n codeword.
std::vector<std::uint8_t> encode(const ParityCheckCode& code,
                                 const std::vector<std::uint8_t>& info_bits);

// Extracts the information bits of a codeword (the non-pivot positions).
std::vector<std::uint8_t> extract_info_bits(const ParityCheckCode& code,
                                            const std::vector<std::uint8_t>& codeword);

bool parity_ok(const ParityCheckCode& code, const std::vector<std::uint8_t>& bits);

// Sum-product decoding with a flooding schedule. LLR convention:
// llr = ln P(bit=0) / P(bit=1), positive means 0. llr_out holds the
// extrinsic check-to-variable totals (channel input excluded). converged
// is true iff the hard decisions satisfy every check; decoding stops early
// in that case.
struct BpResult {
    std::vector<std::uint8_t> hard; // length n
    std::vector<double> llr_out;    // extrinsic
    bool converged = false;
    int iterations = 0;
};
BpResult bp_decode(const std::vector<double>& llr_in, const ParityCheckCode& code, int n_iter);

struct IterationSchedule {
    int n_outer = 10;
    int n_inner = 25;
    bool early_stop = true;
};

enum class DemodKind { dp, mixture };

struct DemodSpec {
    DemodKind kind = DemodKind::mixture;
    int grid_size = 512;       // dp
    int order_fwd = 4;         // mixture
    int order_bwd = 4;         // mixture
    double merge_threshold = -1.0; // <= 0: default
};

// Gray-labeled bit-to-symbol mapping helpers. Bits are consumed
// bits_per_symbol at a time, MSB first, and matched against point labels.
std::vector<cdouble> map_bits_to_symbols(const std::vector<std::uint8_t>& bits,
                                         const Constellation& c);

// Extrinsic symbol posteriors -> per-bit LLRs (one row per data symbol).
// LLRs are clamped to +-40.
std::vector<double> symbol_posterior_to_bit_llrs(const double* row, const Constellation& c);

// Per-bit LLRs -> symbol prior row (normalized).
void bit_llrs_to_symbol_priors(const double* llrs, const Constellation& c, double* row_out);

struct IterateResult {
    std::vector<std::uint8_t> decoded_codeword; // length n
    std::vector<std::uint8_t> decoded_info;     // length k_info
    std::vector<double> ber_trace;              // per outer pass, vs tx bits when known
    bool converged = false;
    int outer_iters = 0;
};

// The outer receiver loop: demodulate with the current symbol priors,
// convert the extrinsic posteriors to bit LLRs, run BP, feed the extrinsic
// code LLRs back as symbol priors, repeat. Pass 0 uses uniform data priors.
// Pilot positions always carry delta priors and map to no code bits; data
// symbol count times bits/symbol must equal code.n. tx_bits (the coded
// frame bits), when given, enable the per-pass BER trace.
IterateResult iterate_demod_decode(const FrameRecord& frame, const Constellation& c,
                                   const ChannelParams& params, const ParityCheckCode& code,
                                   const IterationSchedule& schedule, const DemodSpec& demod,
                                   const std::vector<std::uint8_t>* tx_bits = nullptr);

} // namespace pnsim
