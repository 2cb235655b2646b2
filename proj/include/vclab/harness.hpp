#pragma once
// Experiment driver: reproducible norm-ratio estimates for the truncation
// operators over seeded signal families, r/N sweeps with fitted growth
// slopes, and aggregate decomposition reports with their certificate and
// counting-function monitors. Everything downstream of a config and a seed
// is deterministic, including the serialized reports and their hashes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vclab/fourier.hpp"
#include "vclab/phaseplane.hpp"
#include "vclab/util.hpp"
#include "vclab/weights.hpp"

namespace vclab {

// kind "constant" ignores `a`; kind "power" is power_weight(n, a).
struct WeightSpec {
    std::string kind = "constant";
    double a = 0.0;
};

// A single experiment description. `n` is the grid size for one-off runs;
// sweeps iterate over `n_grid` and `r_grid` (and `a_grid` when the weight
// kind is "power"). `r` may be infinity, written "inf" in JSON, in which
// case the variational operators degrade to the plain supremum.
struct ExperimentConfig {
    std::size_t n = 256;
    std::vector<std::size_t> n_grid;
    WeightSpec weight;
    double p = 2.0;
    double q = 1.5;
    double q0 = 1.25;
    double r = 3.0;
    std::vector<double> r_grid;
    std::vector<double> a_grid;
    std::string op = "svar";
    std::string family = "random_trig";
    int trials = 8;
    int max_bitiles = 200;
    std::uint64_t seed = 1;
};

// Strict parse: unknown keys, q >= p, non-ascending grids, bad sizes and
// unresolvable op/family/weight names all throw std::invalid_argument.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
std::uint64_t config_digest(const ExperimentConfig& cfg);

// Variational bounds ask for r > max(2q, pq/(p-q)); reports carry the flag
// so out-of-range runs are visibly exploratory rather than errors.
bool clears_variation_threshold(double p, double q, double r);

Weight make_weight(const WeightSpec& spec, std::size_t n);

// Seeded test-signal families on n points:
//   random_trig       complex gaussian coefficients on |k| <= 64 (band fixed
//                     independently of n, so draws compare across grids)
//   dirichlet         partial Dirichlet kernel, cutoff random in [1, n/4],
//                     random circular shift
//   lacunary_pm       random signs on the frequencies 1, 2, 4, ..., n/4
//   indicator_smooth  bump profile of random center and width
//   adversarial       coin flip between dirichlet and lacunary_pm; their
//                     frequency content grows with n, which is what gives
//                     the r-sweeps something to detect
//   zero              identically zero (exercises degenerate handling)
Signal family_member(const std::string& family, std::size_t n, Rng& rng);

// Pointwise fields of the named operator:
//   partial-sum   |S_{n/4} f|
//   carleson-sup  sup_m |S_m f|
//   svar          variational_partial_sums(f, r)
//   cvar          variational_truncation(f, r)
//   maximal       maximal(f, 1)
//   sharp         dyadic_sharp(f)
// svar and cvar with r = infinity fall back to carleson-sup.
Signal apply_operator(const std::string& op, const Signal& f, double r);

// One (r, a) row of a sweep: the per-n maxima of the norm ratio and the
// least-squares slope of log2(max ratio) against log2(n).
struct SweepCell {
    double r = 0.0;
    double a = 0.0;
    std::vector<double> max_ratios;
    double slope = 0.0;
};

struct CountPoint {
    double lambda = 0.0;
    double mass = 0.0;  // w({N^{[0]} > lambda}), pooled over instances
};

// Aggregate monitors of run_decomposition_report. counting_slope is the
// fitted slope of log(mass) against log(lambda) and must stay at or below
// -q/q0 + 0.3 whenever at least two levels carry mass; cover_ratio compares
// sum w(I_T) of the selected trees against a random covering family, and
// density_mass_ratio against alpha^{-r'} w(supp K).
struct DecompositionSummary {
    std::size_t instances = 0;
    std::size_t size_selections = 0;
    std::size_t density_selections = 0;
    std::size_t buckets = 0;
    std::size_t certificates = 0;
    bool all_certified = true;
    bool separation_ok = true;
    bool counting_slope_ok = true;
    bool counting_slope_measured = false;
    double counting_slope = 0.0;
    double max_bilinear_error = 0.0;
    double max_remainder_over_alpha = 0.0;
    double cover_ratio = 0.0;
    double density_mass_ratio = 0.0;
    double max_tree_ratio = 0.0;
    double ladder_mass_coeff = 0.0;  // max over buckets of top_mass_sum / 2^level
};

// Self-describing result of one driver call. `ratios` is per-trial for the
// ratio kinds; sweeps fill `cells`; decomposition runs fill `counting` and
// `decomp`. Serialization is canonical (sorted keys, round-trip exact
// doubles), so digest() is reproducible bit for bit.
struct ExperimentReport {
    std::string kind;
    std::string version = "1";
    std::uint64_t config = 0;
    std::uint64_t seed = 0;
    bool r_clears_threshold = false;
    std::vector<std::size_t> n_grid;  // the grid the sweep cells refer to
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    std::vector<SweepCell> cells;
    std::vector<CountPoint> counting;
    DecompositionSummary decomp;

    std::string to_json() const;
    static ExperimentReport from_json(const std::string& text);
    std::string to_csv() const;
    std::string to_svg() const;
    std::uint64_t digest() const;

    // True when every monitor the run activated came back clean.
    bool monitors_ok() const;
};

// ||op f||_{L^p(w)} / ||f||_{L^p(w)} over cfg.trials independent draws
// (trial t uses Rng::stream(seed, t)). Throws if every draw has zero norm;
// individual zero-norm draws contribute a zero ratio.
ExperimentReport estimate_norm_ratio(const ExperimentConfig& cfg);

// Grid of estimate_norm_ratio maxima over r_grid x a_grid x n_grid (both
// r_grid and n_grid need at least two entries; a_grid defaults to the
// configured weight). Infinite r routes through carleson-sup.
ExperimentReport sweep_r(const ExperimentConfig& cfg);

// cfg.trials seeded instances on cfg.n points: a two-scale bitile subset of
// at most cfg.max_bitiles members, random data and linearization, then the
// size and density decompositions at 0.6x the starting metric, the
// two-parameter ladder, per-tree estimate ratios, the pooled counting
// scatter and a random-cover efficiency draw. All certificates recheck
// against independently recomputed quantities.
ExperimentReport run_decomposition_report(const ExperimentConfig& cfg);

// One decomposition instance, exactly as trial t of the report consumes it
// when fed Rng::stream(cfg.seed, t). Exposed so results written to disk can
// be re-verified later against regenerated data.
struct DecompositionInstance {
    TileCollection coll;
    Signal f, g;
    Linearization lin;
};
DecompositionInstance make_decomposition_instance(const ExperimentConfig& cfg, Rng& rng);

}  // namespace vclab
