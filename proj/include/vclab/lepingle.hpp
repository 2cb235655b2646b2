#pragma once
// Littlewood-Paley families on the sampled torus and the weighted
// variational (Lepingle-type) monitor built on them. A family splits a
// signal into parts with frequency support in dyadic bands around 2^m,
// m = 0..log2(n)-1, with the DC coefficient set aside; the monitor
// compares the r-variation over blocks of consecutive scales against the
// l^s square function, s = min(r, 2).

#include <cstddef>
#include <vector>

#include "vclab/fourier.hpp"
#include "vclab/weights.hpp"

namespace vclab {

struct LPFamily {
    double band_constant = 0.0;  // C: part m lives in (2^m/C, C 2^m) in |k|
    double leakage = 0.0;        // largest window value found outside that band
    std::vector<Signal> parts;   // parts[m] carries frequencies near 2^m

    std::size_t grid_size() const { return parts.empty() ? 0 : parts.front().size(); }
    std::size_t scales() const { return parts.size(); }
};

// Splits f with smooth dyadic windows on log2|k| built from the wave-packet
// bump profile; the windows form an exact partition of unity over the band,
// so the parts sum back to f minus its mean. The band constant must lie in
// (sqrt(2), 4]: at sqrt(2) and below, windows spaced one octave apart are
// too narrow to cover the spectrum and no admissible family exists.
LPFamily lp_family(const Signal& f, double band_constant = 2.0);

// How many parts can share one frequency for this band constant.
int lp_overlap_bound(double band_constant);

// Pointwise r-variation over blocks of consecutive scales (the field inside
// the left-hand norm), and the pointwise l^s sum over scales; both real.
Signal variational_lp_field(const LPFamily& fam, double r);
Signal lp_square_field(const LPFamily& fam, double s);

// Weighted L^p norms of the two fields; the square norm uses s = min(r, 2).
double variational_lp_norm(const LPFamily& fam, double r, double p, const Weight& w);
double lp_square_norm(const LPFamily& fam, double r, double p, const Weight& w);

// Ratio of the two norms. Returns 0 with *degenerate = true when the square
// norm vanishes. A family with a single active scale admits only one block,
// so the two fields coincide and the ratio is returned as exactly 1.
double lepingle_ratio(const LPFamily& fam, double r, double p, const Weight& w,
                      bool* degenerate = nullptr);

}  // namespace vclab
