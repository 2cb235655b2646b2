#pragma once
// Discrete phase-plane combinatorics: tiles and bitiles on the dyadic
// space-frequency lattice, wave packets adapted to them, trees with a
// common top, size and density functionals, and the linearized model
// operator with its bilinear and variational forms.
//
// Geometry conventions. A spatial interval at depth d is [i,i+1)*2^{-d}
// inside [0,1); tile frequency intervals are integer-aligned cells of
// length 2^d so every tile has area one. A bitile stacks two tiles P1, P2
// over the same spatial interval with the frequency index of P2 sitting
// `omega_gap` cells above P1, chosen so the C2-dilations stay ordered.

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vclab/fourier.hpp"
#include "vclab/interval.hpp"
#include "vclab/util.hpp"
#include "vclab/weights.hpp"

namespace vclab {

struct AdmissibleConstants {
    double C1 = 1.0;
    double C2 = 1.0;
    double C21 = 1.0;
    double C22 = 1.0;
    double C3 = 0.75;
    double K0 = 16.0;
    double D = 13.0;

    void validate() const;  // throws std::invalid_argument on violation

    // Frequency-cell offset of the upper tile: smallest integer gap keeping
    // sup C2*om1 <= inf C2*om2.
    int omega_gap() const;
    // Width of the bitile hull om_P in tile-frequency units.
    double hull_units() const;
    // Placement stride for the lower-tile frequency index so that distinct
    // hulls at one scale never partially overlap.
    int freq_stride() const;
};

struct Tile {
    DyadicInterval space;
    Interval freq;
};

struct Bitile {
    int depth = 0;          // spatial depth, |I_P| = 2^{-depth}
    std::int64_t pos = 0;   // spatial index
    std::int64_t fidx = 0;  // lower-tile frequency cell: om1 = [fidx, fidx+1)*2^depth

    Interval om1, om2;  // tile frequency intervals
    Interval omp;       // hull(C21*om1 u C22*om2)
    Interval ompt;      // hull(C2*om1 u C2*om2), always inside omp

    DyadicInterval space() const { return DyadicInterval{depth, pos}; }
    Tile p1() const { return Tile{space(), om1}; }
    Tile p2() const { return Tile{space(), om2}; }

    static Bitile make(int depth, std::int64_t pos, std::int64_t fidx,
                       const AdmissibleConstants& consts);
};

// Immutable bitile collection with the separation flags (S1)-(S3)
// evaluated at construction.
class TileCollection {
public:
    TileCollection(std::size_t n, AdmissibleConstants consts, std::vector<Bitile> tiles);

    std::size_t grid_size() const { return n_; }
    const AdmissibleConstants& constants() const { return consts_; }
    const std::vector<Bitile>& bitiles() const { return tiles_; }
    std::size_t size() const { return tiles_.size(); }
    const Bitile& operator[](std::size_t i) const { return tiles_[i]; }

    bool s1() const { return s1_; }
    bool s2() const { return s2_; }
    bool s3() const { return s3_; }

    TileCollection subset(const std::vector<std::size_t>& indices) const;

    std::string to_text() const;
    static TileCollection from_text(std::string_view text);

private:
    std::size_t n_;
    AdmissibleConstants consts_;
    std::vector<Bitile> tiles_;
    bool s1_ = true, s2_ = true, s3_ = true;
};

// Lattice of bitiles at depths depth0, depth0+scale_gap, ..., every spatial
// position, lower frequency index on the stride grid, hull inside
// [-n/2, n/2). num_scales < 0 takes every admitted depth up to the finest.
TileCollection build_bitile_collection(const DyadicGrid& grid, const AdmissibleConstants& consts,
                                       int scale_gap, int depth0 = 1, int num_scales = -1);

// Fourier packet adapted to a tile: spectrum sqrt(|I|) * bump * modulation
// supported strictly inside C3*freq (tails below 1e-14 cut to exact zero).
Spectrum packet_spectrum(const Tile& tile, const AdmissibleConstants& consts, std::size_t n);
Signal wave_packet(const Tile& tile, const AdmissibleConstants& consts, std::size_t n);

// <f, phi_{P1}> for every member, via the spectral side.
std::vector<cplx> packet_coefficients(const TileCollection& coll, const Signal& f);

// Pointwise (sum_{P in members} |<f,phi_{P1}>|^2 1_{I_P}/|I_P|)^{1/2}.
Signal tree_square_function(const TileCollection& coll, const std::vector<std::size_t>& members,
                            const Signal& f);
Signal tree_square_function(const TileCollection& coll, const Signal& f);

// Candidate tree top: spatial dyadic interval (depth, pos) and a frequency
// cell [cell, cell+1)*2^depth whose center is the top frequency.
struct TreeTop {
    int depth = 0;
    std::int64_t pos = 0;
    std::int64_t cell = 0;

    DyadicInterval space() const { return DyadicInterval{depth, pos}; }
    double xi() const { return (static_cast<double>(cell) + 0.5) * std::ldexp(1.0, depth); }
    Interval omega() const {
        const double h = std::ldexp(1.0, depth);
        return Interval{static_cast<double>(cell) * h, static_cast<double>(cell + 1) * h};
    }
};

struct Tree {
    DyadicInterval top;                 // I_T
    double xi = 0.0;                    // top frequency
    std::vector<std::size_t> members;   // indices into a TileCollection

    Interval omega() const {  // [xi - 1/(2|I_T|), xi + 1/(2|I_T|))
        const double half = std::ldexp(1.0, top.depth - 1);
        return Interval{xi - half, xi + half};
    }
};

enum class TreeKind { overlapping2, lacunary2, mixed };

// Member invariants: I_P inside I_T and omega_T inside the C2-hull of P.
bool is_tree(const TileCollection& coll, const Tree& tree);
TreeKind classify_tree(const TileCollection& coll, const Tree& tree);
// Splits into the 2-overlapping part (xi in C2*om2) and the rest.
std::pair<Tree, Tree> split_tree(const TileCollection& coll, const Tree& tree);

// Largest member set for the given top; overlapping_only additionally
// requires xi in C2*om2.
Tree maximal_tree(const TileCollection& coll, const TreeTop& top, bool overlapping_only);

// Every top with at least one admissible member, sorted by (depth, pos, cell).
std::vector<TreeTop> candidate_tops(const TileCollection& coll, bool overlapping_only);

// For each candidate 2-overlapping top: ||S_T f||^2_{L^2(w)} of its maximal
// tree, computed from precomputed member coefficients.
std::vector<std::pair<TreeTop, double>> tree_energies(const TileCollection& coll,
                                                      const std::vector<cplx>& coeffs,
                                                      const Weight& w);

// sup over 2-overlapping trees of w(I_T)^{-1/2} ||S_T f||_{L^2(w)}.
double collection_size(const TileCollection& coll, const Signal& f, const Weight& w);
double collection_size(const TileCollection& coll, const std::vector<cplx>& coeffs,
                       const Weight& w);

// Measurable threshold family: per grid point, K(x)+1 strictly increasing
// half-integer thresholds N_0 < ... < N_K and coefficients d_1..d_K with
// unit l^{r'} mass.
class Linearization {
public:
    Linearization(std::size_t n, double rprime);

    static Linearization random(std::size_t n, double rprime, int kmax, Rng& rng);

    std::size_t size() const { return pts_.size(); }
    double rprime() const { return rprime_; }

    int K(std::size_t x) const { return static_cast<int>(pts_[x].d.size()); }
    double threshold(std::size_t x, int j) const { return pts_[x].thresholds[j]; }  // j in 0..K
    cplx coeff(std::size_t x, int j) const { return pts_[x].d[j - 1]; }             // j in 1..K

    void set_point(std::size_t x, std::vector<double> thresholds, std::vector<cplx> d);

    // d_P(x): the coefficient of the unique slot j with N_{j-1} outside
    // om_P and N_j inside om_{P2}; zero when no slot activates.
    cplx activated(std::size_t x, const Bitile& bit) const;

private:
    struct Point {
        std::vector<double> thresholds;
        std::vector<cplx> d;
    };
    std::vector<Point> pts_;
    double rprime_;
};

enum class DensityMode { standard, improved };

// chi_I(x) = (1 + (dist(x, c(I))/|I|)^2)^{-1/2} with torus distance.
double chi_tilde(const Interval& I, double x);

// Per-top (standard) or per-member (improved) density values
// ( w(I)^{-1} * (1/n) sum_x chi^D |g|^{r'} A_omega(x) w(x) )^{1/r'} where
// A_omega collects the |d_j|^{r'} whose threshold lands in the cell.
std::vector<std::pair<TreeTop, double>> density_values(const TileCollection& coll, const Signal& g,
                                                       const Weight& w, const Linearization& lin,
                                                       DensityMode mode);
double collection_density(const TileCollection& coll, const Signal& g, const Weight& w,
                          const Linearization& lin, DensityMode mode = DensityMode::standard);

// C_P f(x) = sum_P <f,phi_{P1}> phi_{P1}(x) d_P(x).
Signal model_operator(const TileCollection& coll, const Signal& f, const Linearization& lin);

// B_P(f,g) = sum_P <f,phi_{P1}> <phi_{P1} d_P, g w>, accumulated per member.
cplx bilinear_form(const TileCollection& coll, const Signal& f, const Signal& g, const Weight& w,
                   const Linearization& lin);

// Pointwise supremum of |C_P f| over all admissible linearizations,
// realized by a best-chain dynamic program over distinct activation
// patterns of half-integer thresholds; r >= 1.
Signal variational_model_operator(const TileCollection& coll, const Signal& f, double r);

}  // namespace vclab
