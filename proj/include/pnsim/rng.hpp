#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <numbers>
#include <random>

namespace pnsim {

// SplitMix64 finalizer (Steele et al.). Public because the seed-splitting
// rule below is part of the reproducibility contract and is documented in
// the README.
inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seed for sub-stream `index` of a master seed: output `index` of the
// SplitMix64 sequence started at `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ull);
}

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 output
// is pinned by the standard; the distributions in <random> are not, so
// uniform/normal are implemented here to keep experiment output stable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform on {0, ..., n-1}
    int uniform_int(int n) {
        int v = static_cast<int>(uniform() * n);
        return v < n ? v : n - 1;
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // circular complex Gaussian with variance `var_per_dim` on each of the
    // real and imaginary parts
    std::complex<double> cnormal(double var_per_dim) {
        double s = std::sqrt(var_per_dim);
        double re = normal();
        double im = normal();
        return {s * re, s * im};
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace pnsim
