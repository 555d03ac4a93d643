#include "pnsim/constellation.hpp"

#include "pnsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pnsim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

int log2_int(int v) {
    int b = 0;
    while ((1 << b) < v) ++b;
    return b;
}

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}
} // namespace

double Constellation::avg_energy() const {
    double s = 0.0;
    for (const auto& p : points) s += std::norm(p);
    return points.empty() ? 0.0 : s / static_cast<double>(points.size());
}

Constellation make_skewed_mpsk(int m_order, double skew) {
    if (m_order < 2)
        throw std::invalid_argument("make_skewed_mpsk: m_order must be >= 2");
    if (!is_power_of_two(m_order))
        throw std::invalid_argument("make_skewed_mpsk: m_order must be a power of two");
    if (std::isnan(skew) || skew < 0.0 || skew >= static_cast<double>(m_order))
        throw std::invalid_argument("make_skewed_mpsk: skew must be in [0, m_order)");

    Constellation c;
    c.m_order = m_order;
    c.bits_per_symbol = log2_int(m_order);
    c.skew = skew;
    c.points.reserve(m_order);
    c.labels.reserve(m_order);
    const double denom = static_cast<double>(m_order) + skew;
    for (int m = 0; m < m_order; ++m) {
        c.points.push_back(std::polar(1.0, kTwoPi * m / denom));
        c.labels.push_back(static_cast<std::uint32_t>(m ^ (m >> 1))); // Gray in angular order
    }
    return c;
}

std::vector<double> rotational_symmetries(const Constellation& c, double tol) {
    if (c.points.size() < 2)
        throw std::invalid_argument("rotational_symmetries: need at least 2 points");
    if (!(tol > 0.0)) throw std::invalid_argument("rotational_symmetries: tol must be > 0");

    const int m = static_cast<int>(c.points.size());
    std::vector<double> candidates;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            if (a == b) continue;
            const double d = wrap_angle(std::arg(c.points[a]) - std::arg(c.points[b]));
            if (d > tol && d < kTwoPi - tol) candidates.push_back(d);
        }
    std::sort(candidates.begin(), candidates.end());

    std::vector<double> result;
    double last = -1.0;
    for (double theta : candidates) {
        if (last >= 0.0 && theta - last <= tol) continue;
        last = theta;
        const cdouble rot = std::polar(1.0, theta);
        bool all_match = true;
        for (const auto& p : c.points) {
            const cdouble q = p * rot;
            bool found = false;
            for (const auto& t : c.points)
                if (std::abs(q - t) <= tol) {
                    found = true;
                    break;
                }
            if (!found) {
                all_match = false;
                break;
            }
        }
        if (all_match) result.push_back(theta);
    }
    return result;
}

double min_distance(const Constellation& c) {
    if (c.points.size() < 2)
        throw std::invalid_argument("min_distance: need at least 2 points");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.points.size(); ++i)
        for (std::size_t j = i + 1; j < c.points.size(); ++j)
            best = std::min(best, std::abs(c.points[i] - c.points[j]));
    return best;
}

double awgn_mutual_information(const Constellation& c, double snr_db,
                               std::int64_t n_samples, std::uint64_t seed) {
    if (c.points.size() < 2)
        throw std::invalid_argument("awgn_mutual_information: need at least 2 points");
    if (n_samples < 10000)
        throw std::invalid_argument("awgn_mutual_information: n_samples must be >= 10^4");

    const int m = static_cast<int>(c.points.size());
    const double es = c.avg_energy();
    const double noise_var = 0.5 * es * std::pow(10.0, -snr_db / 10.0); // per real dim

    Rng rng(seed);
    const double log2_m = std::log2(static_cast<double>(m));
    double acc = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const int tx = static_cast<int>(i % m); // stratified over symbols
        const cdouble n = rng.cnormal(noise_var);
        // log2 sum_m' exp((|n|^2 - |s_tx + n - s_m'|^2) / (2 sigma^2));
        // the tx term is exactly 0, so the logsumexp max is >= 0.
        double maxe = 0.0;
        double exps[64];
        double* e = m <= 64 ? exps : nullptr;
        std::vector<double> heap;
        if (!e) {
            heap.resize(m);
            e = heap.data();
        }
        for (int k = 0; k < m; ++k) {
            const cdouble d = c.points[tx] + n - c.points[k];
            e[k] = (std::norm(n) - std::norm(d)) / (2.0 * noise_var);
            maxe = std::max(maxe, e[k]);
        }
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += std::exp(e[k] - maxe);
        acc += (maxe + std::log(s)) / std::numbers::ln2;
    }
    return log2_m - acc / static_cast<double>(n_samples);
}

Constellation load_constellation(std::istream& in) {
    Constellation c;
    std::string line;
    bool any_label = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ss(line);
        double re, im;
        if (!(ss >> re >> im))
            throw std::runtime_error("constellation line " + std::to_string(lineno) +
                                     ": expected 're im [label]'");
        c.points.emplace_back(re, im);
        std::string lab;
        if (ss >> lab) {
            std::uint32_t v = 0;
            for (char ch : lab) {
                if (ch != '0' && ch != '1')
                    throw std::runtime_error("constellation line " + std::to_string(lineno) +
                                             ": label must be a binary string");
                v = (v << 1) | static_cast<std::uint32_t>(ch - '0');
            }
            if (any_label && static_cast<int>(lab.size()) != c.bits_per_symbol)
                throw std::runtime_error("constellation: inconsistent label widths");
            c.bits_per_symbol = static_cast<int>(lab.size());
            c.labels.push_back(v);
            any_label = true;
        } else if (any_label) {
            throw std::runtime_error("constellation: labels must be given for all points or none");
        }
    }
    if (c.points.size() < 2) throw std::runtime_error("constellation: need at least 2 points");
    c.m_order = static_cast<int>(c.points.size());
    for (std::size_t i = 0; i < c.points.size(); ++i)
        for (std::size_t j = i + 1; j < c.points.size(); ++j)
            if (std::abs(c.points[i] - c.points[j]) < 1e-12)
                throw std::runtime_error("constellation: duplicate points");
    if (any_label) {
        if (!is_power_of_two(c.m_order) || c.bits_per_symbol != log2_int(c.m_order))
            throw std::runtime_error("constellation: labeled constellations need M = 2^b points");
        std::vector<std::uint32_t> sorted = c.labels;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
            if (sorted[i] == sorted[i + 1]) throw std::runtime_error("constellation: duplicate labels");
    } else {
        c.bits_per_symbol = 0;
    }
    return c;
}

Constellation load_constellation_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constellation file: " + path);
    return load_constellation(in);
}

void save_constellation(const Constellation& c, std::ostream& out) {
    char buf[128];
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g", c.points[i].real(), c.points[i].imag());
        out << buf;
        if (c.labeled()) {
            out << ' ';
            for (int b = c.bits_per_symbol - 1; b >= 0; --b)
                out << (((c.labels[i] >> b) & 1u) ? '1' : '0');
        }
        out << '\n';
    }
}

void save_constellation_file(const Constellation& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    save_constellation(c, out);
}

} // namespace pnsim
