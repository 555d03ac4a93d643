#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace pnsim {

inline double logsumexp(const double* v, int n) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

// logsumexp over values summed in ascending order. Sorting makes the
// result invariant under permutations of the inputs, which matters where
// two symmetric computations must cancel exactly.
inline double logsumexp_sorted(double* v, int n) {
    std::sort(v, v + n);
    const double m = v[n - 1];
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

} // namespace pnsim
