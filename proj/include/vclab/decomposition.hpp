#pragma once
// Greedy decompositions of a bitile collection: extraction by size (energy
// of 2-overlapping trees) and by density (linearization mass near the top),
// the two-parameter ladder combining both, counting functions over the
// selected tops, well-separatedness checks and per-tree estimate monitors.

#include <cstddef>
#include <string>
#include <vector>

#include "vclab/phaseplane.hpp"
#include "vclab/weights.hpp"

namespace vclab {

// One greedy extraction step. `tree` is the maximal tree removed at the
// selected top; `witness` its 2-overlapping subtree (size decomposition).
// Density selections also remove the maximal trees at the two half-cell
// shifted top frequencies, stored as side_lo (xi - 1/(2|I_T|)) and side_hi.
// `removed` lists the indices taken out of the collection by this step;
// side trees can overlap the main tree, so removed is the deduplicated
// union of whatever was still present.
struct Selection {
    Tree tree;
    Tree witness;
    Tree side_lo, side_hi;
    std::vector<std::size_t> removed;

    double top_mass = 0.0;  // w(I_T)
    double energy = 0.0;    // ||S_{T2}f||^2_{L^2(w)} resp. the density integral
};

struct DecompositionResult {
    enum class Kind { size, density };

    Kind kind = Kind::size;
    double alpha = 0.0;
    std::vector<Selection> selections;
    std::vector<std::size_t> remainder;  // indices into the input collection
    double remainder_metric = 0.0;       // size resp. density of the remainder

    std::vector<Tree> trees() const;     // main trees, in selection order
    std::vector<Tree> witnesses() const;
};

// Repeatedly removes the maximal tree at the qualifying 2-overlapping top
// (||S_{T2}f||^2_{L^2(w)} >= alpha^2 w(I_T)) with minimal top frequency,
// ties broken by leftmost top interval then lowest top frequency cell,
// until the remainder has size below alpha.
DecompositionResult size_decompose(const TileCollection& P, const Signal& f, const Weight& w,
                                   double alpha);

// Repeatedly removes T, T+ and T- at the top of maximal |I_T| whose density
// value exceeds alpha, until the remainder has density at most alpha.
DecompositionResult density_decompose(const TileCollection& P, const Signal& g, const Weight& w,
                                      const Linearization& lin, double alpha);

// N^{[k]} = sum_T 1_{2^k I_T}, dilated tops periodized on the torus.
Signal counting_function(const std::vector<Tree>& trees, int k, std::size_t n);

// Pairwise separation of a family of 2-overlapping trees:
//  (i)  P in T, P' in T', |I_P| > |I_{P'}|: the C3-dilated lower-tile
//       frequencies are disjoint or I_{P'} misses I_T entirely;
//  (ii) distinct bitiles of equal scale occupy disjoint phase rectangles
//       I_P x C3 omega_{P1}.
// condition is 0 when the family passes, else 1 or 2 with the first
// violating pair recorded.
struct SeparationReport {
    bool ok = true;
    int condition = 0;
    std::size_t tree_a = 0, tree_b = 0;
    std::size_t member_a = 0, member_b = 0;
};
SeparationReport check_well_separated(const TileCollection& coll, const std::vector<Tree>& trees);

// One rung of the two-parameter ladder: the trees extracted while the
// thresholds stood at sigma_{n+1} = 2^{-(n+1)/(2 q0)} E1 and
// delta_{n+1} = 2^{-(n+1)/r'}, labeled by the level n whose bounds the
// bucket provably satisfies (size <= 2^{-n/(2q0)} E1, density <= 2^{-n/r'}).
struct LadderBucket {
    int level = 0;
    std::vector<Selection> selections;
    std::vector<std::size_t> members;  // all bitiles landing in this bucket
    double size_bound = 0.0, density_bound = 0.0;
    double size_actual = 0.0, density_actual = 0.0;
    double top_mass_sum = 0.0;  // sum of w(I_T) over the selections
};

// Alternately halves the size and density thresholds, extracting trees with
// the two decompositions above until the collection is exhausted. A trailing
// collection with zero size (all coefficients vanish) cannot be reduced
// further and is folded into a final bucket. E1 = w(supp f)^{1/(2 q0)}.
std::vector<LadderBucket> two_parameter_decompose(const TileCollection& P, const Signal& f,
                                                  const Signal& g, const Weight& w,
                                                  const Linearization& lin, double q0, double r);

// ||1_R g C_T f||_{L^s(w)} / (w(I_T)^{1/s} size(T) density(T)) where R is
// I_T for shell = -1 and the annulus 2^{k+1} I_T \ 2^k I_T for shell = k,
// with the expected 2^{-decay k} falloff divided back out. When the members
// occupy pairwise disjoint phase rectangles the same quotient is also formed
// against the improved density.
struct TreeEstimate {
    double ratio = 0.0;
    bool degenerate = false;  // size(T) * density(T) == 0
    bool improved_available = false;
    double improved_ratio = 0.0;
};
TreeEstimate tree_estimate_ratio(const TileCollection& coll, const Tree& tree, const Signal& f,
                                 const Signal& g, const Weight& w, const Linearization& lin,
                                 double s, int shell, double decay = 4.0);

// JSON round-trip. The collection rides along in its text form, member
// references are indices into it, and all reals are %.17g decimal strings.
std::string result_to_json(const TileCollection& coll, const DecompositionResult& res);
DecompositionResult result_from_json(const std::string& text, TileCollection& coll_out);

// Recomputes every certificate of `res` and the partition structure against
// the given data. g/lin may be null for size results; f/w are always needed.
bool reverify(const TileCollection& coll, const DecompositionResult& res, const Signal& f,
              const Signal* g, const Weight& w, const Linearization* lin,
              std::string* why = nullptr);

}  // namespace vclab
