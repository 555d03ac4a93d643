#pragma once

#include <stdexcept>
#include <vector>

namespace pnsim {

// Per-step symbol probability rows, K x M row-major. Used both for decoder
// feedback (the downward priors) and for demodulator output (the upward
// extrinsic posteriors). Every row sums to 1.
struct SymbolPosterior {
    std::vector<double> p;
    int m_order = 0;

    SymbolPosterior() = default;
    SymbolPosterior(int k_len, int m) : p(static_cast<std::size_t>(k_len) * m, 1.0 / m), m_order(m) {}

    int steps() const { return m_order ? static_cast<int>(p.size()) / m_order : 0; }

    double* row(int k) { return p.data() + static_cast<std::size_t>(k) * m_order; }
    const double* row(int k) const { return p.data() + static_cast<std::size_t>(k) * m_order; }

    double& at(int k, int m) { return p[static_cast<std::size_t>(k) * m_order + m]; }
    double at(int k, int m) const { return p[static_cast<std::size_t>(k) * m_order + m]; }

    void set_delta(int k, int m) {
        double* r = row(k);
        for (int i = 0; i < m_order; ++i) r[i] = 0.0;
        r[m] = 1.0;
    }

    // index of the most probable symbol at step k
    int hard_decision(int k) const {
        const double* r = row(k);
        int best = 0;
        for (int m = 1; m < m_order; ++m)
            if (r[m] > r[best]) best = m;
        return best;
    }
};

} // namespace pnsim
