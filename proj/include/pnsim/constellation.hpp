#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pnsim {

using cdouble = std::complex<double>;

// An ordered set of modulation symbols with optional bit labels.
//
// Labels, when present, are `bits_per_symbol`-wide bit strings stored in a
// uint32, MSB first: bit b of label L is (L >> (bits_per_symbol-1-b)) & 1.
// Unlabeled constellations (empty `labels`) support every analysis
// operation; only bit-level framing requires labels.
struct Constellation {
    std::vector<cdouble> points;
    std::vector<std::uint32_t> labels;
    int m_order = 0;
    int bits_per_symbol = 0;          // 0 when unlabeled
    std::optional<double> skew;       // set by make_skewed_mpsk only

    bool labeled() const { return !labels.empty(); }
    double avg_energy() const;
};

// Skewed MPSK: M unit-circle points at angles 2 pi m / (M + skew),
// m = 0..M-1, Gray-labeled in angular order. skew = 0 is classical MPSK;
// any positive skew destroys the rotational symmetry.
//
// Requires m_order >= 2 and a power of two (labels are always attached),
// and 0 <= skew < m_order. Larger skew values only relabel points.
Constellation make_skewed_mpsk(int m_order, double skew);

// All rotation angles in (0, 2pi) that map the point set onto itself
// within `tol`. Empty result means the constellation is asymmetric.
// Candidates are enumerated from pairwise angle differences, so the search
// is finite and exact.
std::vector<double> rotational_symmetries(const Constellation& c, double tol = 1e-9);

// Minimum Euclidean distance between distinct points.
double min_distance(const Constellation& c);

// Monte Carlo estimate of the symbol-wise mutual information I(C; R) in
// bits/symbol for equiprobable inputs over AWGN at Es/N0 = snr_db (Es is
// the constellation's average energy, noise variance per real dimension
// is Es * 10^(-snr_db/10) / 2). Deterministic given seed. Requires
// n_samples >= 10^4.
double awgn_mutual_information(const Constellation& c, double snr_db,
                               std::int64_t n_samples, std::uint64_t seed);

// Text interchange format: one point per line, "re im label" with the
// label written as a binary string ("10" for a 2-bit label); the label
// column is omitted for unlabeled constellations. '#' starts a comment.
Constellation load_constellation(std::istream& in);
Constellation load_constellation_file(const std::string& path);
void save_constellation(const Constellation& c, std::ostream& out);
void save_constellation_file(const Constellation& c, const std::string& path);

} // namespace pnsim
