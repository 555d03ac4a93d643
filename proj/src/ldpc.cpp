#include "pnsim/ldpc.hpp"

#include "pnsim/demod_dp.hpp"
#include "pnsim/demod_mixture.hpp"
#include "pnsim/logsum.hpp"
#include "pnsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pnsim {

namespace {
constexpr double kLlrClamp = 40.0;

std::vector<std::vector<std::uint64_t>> rows_as_bitsets(const ParityCheckCode& code) {
    const int words = (code.n + 63) / 64;
    std::vector<std::vector<std::uint64_t>> rows(code.n_checks,
                                                 std::vector<std::uint64_t>(words, 0));
    for (int c = 0; c < code.n_checks; ++c)
        for (int v : code.check_neighbors[c]) rows[c][v >> 6] ^= 1ull << (v & 63);
    return rows;
}
} // namespace

void ParityCheckCode::finalize() {
    var_neighbors.assign(n, {});
    for (int c = 0; c < n_checks; ++c) {
        std::vector<int>& nb = check_neighbors[c];
        std::sort(nb.begin(), nb.end());
        for (std::size_t i = 1; i < nb.size(); ++i)
            if (nb[i] == nb[i - 1])
                throw std::runtime_error("ParityCheckCode: duplicate edge in check " +
                                         std::to_string(c));
        for (int v : nb) {
            if (v < 0 || v >= n) throw std::runtime_error("ParityCheckCode: variable out of range");
            var_neighbors[v].push_back(c);
        }
    }

    // RREF over GF(2)
    auto rows = rows_as_bitsets(*this);
    pivot_cols.clear();
    int r = 0;
    for (int col = 0; col < n && r < n_checks; ++col) {
        int pivot = -1;
        for (int i = r; i < n_checks; ++i)
            if (rows[i][col >> 6] >> (col & 63) & 1) {
                pivot = i;
                break;
            }
        if (pivot < 0) continue;
        std::swap(rows[r], rows[pivot]);
        for (int i = 0; i < n_checks; ++i) {
            if (i == r) continue;
            if (rows[i][col >> 6] >> (col & 63) & 1)
                for (std::size_t w = 0; w < rows[i].size(); ++w) rows[i][w] ^= rows[r][w];
        }
        pivot_cols.push_back(col);
        ++r;
    }
    rank = r;

    std::vector<char> is_pivot(n, 0);
    for (int col : pivot_cols) is_pivot[col] = 1;
    info_cols.clear();
    for (int col = 0; col < n; ++col)
        if (!is_pivot[col]) info_cols.push_back(col);

    std::vector<int> info_index(n, -1);
    for (std::size_t i = 0; i < info_cols.size(); ++i)
        info_index[info_cols[i]] = static_cast<int>(i);

    parity_from_info.assign(rank, {});
    for (int i = 0; i < rank; ++i)
        for (int col = 0; col < n; ++col)
            if (col != pivot_cols[i] && (rows[i][col >> 6] >> (col & 63) & 1))
                parity_from_info[i].push_back(info_index[col]);
}

std::vector<std::uint8_t> encode(const ParityCheckCode& code,
                                 const std::vector<std::uint8_t>& info_bits) {
    if (static_cast<int>(info_bits.size()) != code.k_info())
        throw std::invalid_argument("encode: expected " + std::to_string(code.k_info()) +
                                    " info bits");
    std::vector<std::uint8_t> x(code.n, 0);
    for (std::size_t i = 0; i < code.info_cols.size(); ++i) x[code.info_cols[i]] = info_bits[i] & 1;
    for (int i = 0; i < code.rank; ++i) {
        std::uint8_t acc = 0;
        for (int j : code.parity_from_info[i]) acc ^= info_bits[j] & 1;
        x[code.pivot_cols[i]] = acc;
    }
    return x;
}

std::vector<std::uint8_t> extract_info_bits(const ParityCheckCode& code,
                                            const std::vector<std::uint8_t>& codeword) {
    if (static_cast<int>(codeword.size()) != code.n)
        throw std::invalid_argument("extract_info_bits: length mismatch");
    std::vector<std::uint8_t> info(code.info_cols.size());
    for (std::size_t i = 0; i < code.info_cols.size(); ++i)
        info[i] = codeword[code.info_cols[i]] & 1;
    return info;
}

bool parity_ok(const ParityCheckCode& code, const std::vector<std::uint8_t>& bits) {
    if (static_cast<int>(bits.size()) != code.n)
        throw std::invalid_argument("parity_ok: length mismatch");
    for (const auto& nb : code.check_neighbors) {
        std::uint8_t acc = 0;
        for (int v : nb) acc ^= bits[v] & 1;
        if (acc) return false;
    }
    return true;
}

ParityCheckCode load_alist(std::istream& in) {
    ParityCheckCode code;
    int max_col = 0, max_row = 0;
    if (!(in >> code.n >> code.n_checks)) throw std::runtime_error("alist: bad header");
    if (!(in >> max_col >> max_row)) throw std::runtime_error("alist: bad degree header");
    if (code.n <= 0 || code.n_checks <= 0) throw std::runtime_error("alist: bad dimensions");
    std::vector<int> col_deg(code.n), row_deg(code.n_checks);
    for (int i = 0; i < code.n; ++i)
        if (!(in >> col_deg[i])) throw std::runtime_error("alist: truncated column degrees");
    for (int i = 0; i < code.n_checks; ++i)
        if (!(in >> row_deg[i])) throw std::runtime_error("alist: truncated row degrees");
    // variable lists (1-based, 0-padded); redundant with the row lists below
    for (int v = 0; v < code.n; ++v)
        for (int j = 0; j < max_col; ++j) {
            int x;
            if (!(in >> x)) throw std::runtime_error("alist: truncated column lists");
        }
    code.check_neighbors.assign(code.n_checks, {});
    for (int c = 0; c < code.n_checks; ++c)
        for (int j = 0; j < max_row; ++j) {
            int x;
            if (!(in >> x)) throw std::runtime_error("alist: truncated row lists");
            if (x > 0) code.check_neighbors[c].push_back(x - 1);
        }
    for (int c = 0; c < code.n_checks; ++c)
        if (static_cast<int>(code.check_neighbors[c].size()) != row_deg[c])
            throw std::runtime_error("alist: row degree mismatch at check " + std::to_string(c));
    code.finalize();
    return code;
}

ParityCheckCode load_alist_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open alist file: " + path);
    return load_alist(in);
}

void save_alist(const ParityCheckCode& code, std::ostream& out) {
    std::vector<std::vector<int>> var_lists(code.n);
    for (int c = 0; c < code.n_checks; ++c)
        for (int v : code.check_neighbors[c]) var_lists[v].push_back(c);
    int max_col = 0, max_row = 0;
    for (const auto& l : var_lists) max_col = std::max(max_col, static_cast<int>(l.size()));
    for (const auto& l : code.check_neighbors)
        max_row = std::max(max_row, static_cast<int>(l.size()));
    out << code.n << ' ' << code.n_checks << '\n' << max_col << ' ' << max_row << '\n';
    for (int v = 0; v < code.n; ++v) out << var_lists[v].size() << (v + 1 < code.n ? ' ' : '\n');
    for (int c = 0; c < code.n_checks; ++c)
        out << code.check_neighbors[c].size() << (c + 1 < code.n_checks ? ' ' : '\n');
    auto write_padded = [&](const std::vector<int>& list, int width) {
        for (int j = 0; j < width; ++j) {
            if (j) out << ' ';
            out << (j < static_cast<int>(list.size()) ? list[j] + 1 : 0);
        }
        out << '\n';
    };
    for (int v = 0; v < code.n; ++v) write_padded(var_lists[v], max_col);
    for (int c = 0; c < code.n_checks; ++c) write_padded(code.check_neighbors[c], max_row);
}

void save_alist_file(const ParityCheckCode& code, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    save_alist(code, out);
}

ParityCheckCode make_hamming74() {
    ParityCheckCode code;
    code.n = 7;
    code.n_checks = 3;
    code.check_neighbors = {{0, 2, 4, 6}, {1, 2, 5, 6}, {3, 4, 5, 6}};
    code.finalize();
    return code;
}

ParityCheckCode make_regular_ldpc(int n, int n_checks, int col_degree, std::uint64_t seed) {
    if (n < 2 || n_checks < 1 || col_degree < 2)
        throw std::invalid_argument("make_regular_ldpc: bad parameters");
    const long long edges = static_cast<long long>(n) * col_degree;
    if (edges % n_checks != 0)
        throw std::invalid_argument("make_regular_ldpc: n * col_degree must be divisible by n_checks");
    const int row_cap = static_cast<int>(edges / n_checks);

    ParityCheckCode code;
    code.n = n;
    code.n_checks = n_checks;
    code.check_neighbors.assign(n_checks, {});
    std::vector<std::vector<int>> var_adj(n);
    std::vector<int> check_deg(n_checks, 0);
    std::uint64_t tick = 0;

    std::vector<int> dist(n_checks);
    std::vector<char> var_seen(n);
    for (int v = 0; v < n; ++v) {
        for (int e = 0; e < col_degree; ++e) {
            // distances from v to every check through the current graph
            std::fill(dist.begin(), dist.end(), -1);
            std::fill(var_seen.begin(), var_seen.end(), 0);
            std::deque<int> frontier{v};
            var_seen[v] = 1;
            int level = 0;
            while (!frontier.empty()) {
                std::deque<int> next;
                for (int u : frontier)
                    for (int c : var_adj[u])
                        if (dist[c] < 0) {
                            dist[c] = level;
                            for (int u2 : code.check_neighbors[c])
                                if (!var_seen[u2]) {
                                    var_seen[u2] = 1;
                                    next.push_back(u2);
                                }
                        }
                frontier = std::move(next);
                ++level;
            }
            // farthest check wins (unreachable counts as infinitely far);
            // ties prefer low degree, then a seed-derived priority
            int best_dist = -2;
            for (int c = 0; c < n_checks; ++c) {
                if (check_deg[c] >= row_cap) continue;
                const int d = dist[c] < 0 ? std::numeric_limits<int>::max() : dist[c];
                best_dist = std::max(best_dist, d);
            }
            if (best_dist == -2)
                throw std::runtime_error("make_regular_ldpc: no check with remaining capacity");
            int chosen = -1;
            std::uint64_t chosen_pri = 0;
            for (int c = 0; c < n_checks; ++c) {
                if (check_deg[c] >= row_cap) continue;
                const int d = dist[c] < 0 ? std::numeric_limits<int>::max() : dist[c];
                if (d != best_dist) continue;
                const std::uint64_t pri =
                    (static_cast<std::uint64_t>(check_deg[c]) << 48) |
                    (mix64(seed ^ (tick * 0x9e3779b97f4a7c15ull) ^ static_cast<std::uint64_t>(c)) >>
                     16);
                if (chosen < 0 || pri < chosen_pri) {
                    chosen = c;
                    chosen_pri = pri;
                }
            }
            code.check_neighbors[chosen].push_back(v);
            var_adj[v].push_back(chosen);
            ++check_deg[chosen];
            ++tick;
        }
    }
    code.finalize();
    return code;
}

BpResult bp_decode(const std::vector<double>& llr_in, const ParityCheckCode& code, int n_iter) {
    if (static_cast<int>(llr_in.size()) != code.n)
        throw std::invalid_argument("bp_decode: llr length mismatch");
    if (n_iter < 1) throw std::invalid_argument("bp_decode: n_iter must be >= 1");

    // edge-indexed check-to-variable messages, grouped by check
    std::vector<int> edge_offset(code.n_checks + 1, 0);
    for (int c = 0; c < code.n_checks; ++c)
        edge_offset[c + 1] = edge_offset[c] + static_cast<int>(code.check_neighbors[c].size());
    const int n_edges = edge_offset[code.n_checks];
    std::vector<double> r_msg(n_edges, 0.0);
    std::vector<std::vector<int>> var_edges(code.n);
    for (int c = 0; c < code.n_checks; ++c)
        for (std::size_t j = 0; j < code.check_neighbors[c].size(); ++j)
            var_edges[code.check_neighbors[c][j]].push_back(edge_offset[c] + static_cast<int>(j));

    BpResult res;
    res.hard.assign(code.n, 0);
    res.llr_out.assign(code.n, 0.0);

    std::vector<double> total = llr_in;
    auto harden = [&] {
        for (int v = 0; v < code.n; ++v) res.hard[v] = total[v] < 0.0 ? 1 : 0;
    };
    // a parity-satisfying state only counts if the posterior actually
    // points somewhere (an all-zero LLR vector trivially "satisfies" H)
    auto decided = [&] {
        for (double t : total)
            if (t != 0.0) return true;
        return false;
    };
    harden();
    if (parity_ok(code, res.hard) && decided()) {
        res.converged = true;
        return res;
    }

    // Flooding on short loopy graphs can oscillate through valid states
    // with period 2, so early stopping waits for a parity-satisfying hard
    // vector that repeats the previous iteration's.
    std::vector<std::uint8_t> prev_hard = res.hard;
    std::vector<double> tanh_buf, pre;
    for (int it = 1; it <= n_iter; ++it) {
        for (int c = 0; c < code.n_checks; ++c) {
            const auto& nb = code.check_neighbors[c];
            const int deg = static_cast<int>(nb.size());
            tanh_buf.resize(deg);
            pre.resize(deg + 1);
            for (int j = 0; j < deg; ++j) {
                double q = total[nb[j]] - r_msg[edge_offset[c] + j]; // extrinsic var-to-check
                q = std::clamp(q, -kLlrClamp, kLlrClamp);
                tanh_buf[j] = std::tanh(0.5 * q);
            }
            pre[0] = 1.0;
            for (int j = 0; j < deg; ++j) pre[j + 1] = pre[j] * tanh_buf[j];
            double suffix = 1.0;
            for (int j = deg - 1; j >= 0; --j) {
                double prod = pre[j] * suffix;
                suffix *= tanh_buf[j];
                prod = std::clamp(prod, -(1.0 - 1e-15), 1.0 - 1e-15);
                r_msg[edge_offset[c] + j] = 2.0 * std::atanh(prod);
            }
        }
        for (int v = 0; v < code.n; ++v) {
            double acc = llr_in[v];
            for (int e : var_edges[v]) acc += r_msg[e];
            total[v] = acc;
        }
        std::swap(prev_hard, res.hard);
        harden();
        res.iterations = it;
        if (res.hard == prev_hard && parity_ok(code, res.hard) && decided()) {
            res.converged = true;
            break;
        }
    }
    for (int v = 0; v < code.n; ++v) res.llr_out[v] = total[v] - llr_in[v];
    return res;
}

std::vector<cdouble> map_bits_to_symbols(const std::vector<std::uint8_t>& bits,
                                         const Constellation& c) {
    if (!c.labeled()) throw std::invalid_argument("map_bits_to_symbols: unlabeled constellation");
    const int b = c.bits_per_symbol;
    if (bits.size() % b != 0)
        throw std::invalid_argument("map_bits_to_symbols: bit count not a multiple of label width");
    std::vector<int> index_of_label(c.points.size(), -1);
    for (std::size_t m = 0; m < c.labels.size(); ++m)
        index_of_label[c.labels[m]] = static_cast<int>(m);
    std::vector<cdouble> out;
    out.reserve(bits.size() / b);
    for (std::size_t i = 0; i < bits.size(); i += b) {
        std::uint32_t label = 0;
        for (int j = 0; j < b; ++j) label = (label << 1) | (bits[i + j] & 1);
        const int m = index_of_label[label];
        if (m < 0) throw std::invalid_argument("map_bits_to_symbols: label without point");
        out.push_back(c.points[m]);
    }
    return out;
}

std::vector<double> symbol_posterior_to_bit_llrs(const double* row, const Constellation& c) {
    const int b = c.bits_per_symbol;
    std::vector<double> llrs(b);
    for (int j = 0; j < b; ++j) {
        double p0 = 0.0, p1 = 0.0;
        for (std::size_t m = 0; m < c.points.size(); ++m) {
            const bool bit = (c.labels[m] >> (b - 1 - j)) & 1u;
            (bit ? p1 : p0) += row[m];
        }
        const double llr = std::log(p0 + 1e-300) - std::log(p1 + 1e-300);
        llrs[j] = std::clamp(llr, -kLlrClamp, kLlrClamp);
    }
    return llrs;
}

void bit_llrs_to_symbol_priors(const double* llrs, const Constellation& c, double* row_out) {
    const int b = c.bits_per_symbol;
    const int m_order = static_cast<int>(c.points.size());
    std::vector<double> lp(m_order, 0.0);
    for (int m = 0; m < m_order; ++m)
        for (int j = 0; j < b; ++j) {
            const bool bit = (c.labels[m] >> (b - 1 - j)) & 1u;
            // ln p(bit) = -ln(1 + e^{x}), x = llr for bit 1, -llr for bit 0
            const double x = bit ? llrs[j] : -llrs[j];
            lp[m] -= x > 30.0 ? x : std::log1p(std::exp(x));
        }
    const double lse = logsumexp(lp.data(), m_order);
    for (int m = 0; m < m_order; ++m) row_out[m] = std::exp(lp[m] - lse);
}

IterateResult iterate_demod_decode(const FrameRecord& frame, const Constellation& c,
                                   const ChannelParams& params, const ParityCheckCode& code,
                                   const IterationSchedule& schedule, const DemodSpec& demod,
                                   const std::vector<std::uint8_t>* tx_bits) {
    if (!c.labeled())
        throw std::invalid_argument("iterate_demod_decode: constellation must be labeled");
    if (schedule.n_outer < 1 || schedule.n_inner < 1)
        throw std::invalid_argument("iterate_demod_decode: schedule must be >= 1");
    const int k_len = frame.length();
    const int m_order = static_cast<int>(c.points.size());
    const int b = c.bits_per_symbol;

    std::vector<int> data_pos;
    for (int k = 0; k < k_len; ++k)
        if (!frame.pilot_mask[k]) data_pos.push_back(k);
    if (static_cast<int>(data_pos.size()) * b != code.n)
        throw std::invalid_argument(
            "iterate_demod_decode: data symbols * bits/symbol != code length");
    if (tx_bits && static_cast<int>(tx_bits->size()) != code.n)
        throw std::invalid_argument("iterate_demod_decode: tx_bits length mismatch");

    // pilot rows are fixed delta priors on the transmitted pilot symbol
    SymbolPosterior priors(k_len, m_order);
    for (int k = 0; k < k_len; ++k) {
        if (!frame.pilot_mask[k]) continue;
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int m = 0; m < m_order; ++m) {
            const double d = std::abs(frame.symbols[k] - c.points[m]);
            if (d < best_d) {
                best_d = d;
                best = m;
            }
        }
        priors.set_delta(k, best);
    }

    IterateResult res;
    std::vector<double> llr(code.n);
    for (int pass = 0; pass < schedule.n_outer; ++pass) {
        SymbolPosterior pu =
            demod.kind == DemodKind::dp
                ? dp_forward_backward(frame, priors, c, params, demod.grid_size)
                : mixture_demodulate(frame, priors, c, params, demod.order_fwd, demod.order_bwd,
                                     nullptr, demod.merge_threshold);
        for (std::size_t j = 0; j < data_pos.size(); ++j) {
            const auto bl = symbol_posterior_to_bit_llrs(pu.row(data_pos[j]), c);
            for (int i = 0; i < b; ++i) llr[j * b + i] = bl[i];
        }
        BpResult bp = bp_decode(llr, code, schedule.n_inner);
        res.outer_iters = pass + 1;
        res.decoded_codeword = bp.hard;
        if (tx_bits) {
            int errs = 0;
            for (int i = 0; i < code.n; ++i) errs += bp.hard[i] != (*tx_bits)[i];
            res.ber_trace.push_back(static_cast<double>(errs) / code.n);
        }
        if (bp.converged && schedule.early_stop) {
            res.converged = true;
            break;
        }
        if (pass + 1 == schedule.n_outer) {
            res.converged = bp.converged;
            break;
        }
        for (std::size_t j = 0; j < data_pos.size(); ++j)
            bit_llrs_to_symbol_priors(bp.llr_out.data() + j * b, c, priors.row(data_pos[j]));
    }
    res.decoded_info = extract_info_bits(code, res.decoded_codeword);
    return res;
}

} // namespace pnsim
