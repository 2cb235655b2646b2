#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "vclab/decomposition.hpp"
#include "vclab/phaseplane.hpp"
#include "vclab/weights.hpp"

using namespace vclab;

namespace {

Signal random_signal(std::size_t n, Rng& rng) {
    Signal f(n);
    for (auto& v : f.samples()) v = rng.next_cgaussian();
    return f;
}

cplx inner(const Signal& a, const Signal& b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s / static_cast<double>(a.size());
}

TileCollection single_scale(std::size_t n, const std::vector<std::size_t>& pick) {
    const TileCollection full =
        build_bitile_collection(DyadicGrid(n), AdmissibleConstants{}, 6, 1, 1);
    return full.subset(pick);
}

double direct_mass(const Weight& w, const DyadicInterval& it) {
    const std::size_t n = w.samples().size();
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        const double xv = static_cast<double>(x) / static_cast<double>(n);
        if (it.to_interval().contains(xv)) acc += w.sample(x);
    }
    return acc / static_cast<double>(n);
}

// Density value of one aligned top recomputed from raw definitions.
double direct_top_density(const TileCollection& coll, const DyadicInterval& it, const Interval& om,
                          const Signal& g, const Weight& w, const Linearization& lin) {
    const std::size_t n = coll.grid_size();
    const double rp = lin.rprime();
    const Interval iv = it.to_interval();
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double a = 0.0;
        for (int j = 1; j <= lin.K(x); ++j)
            if (om.contains(lin.threshold(x, j))) a += std::pow(std::abs(lin.coeff(x, j)), rp);
        if (a == 0.0) continue;
        const double xv = static_cast<double>(x) / static_cast<double>(n);
        const double u = torus_dist(xv, iv.center()) / iv.length();
        acc += std::pow(1.0 + u * u, -0.5 * coll.constants().D) *
               std::pow(std::abs(g[x]), rp) * a * w.sample(x);
    }
    acc /= static_cast<double>(n);
    const double mass = direct_mass(w, it);
    return mass > 0.0 ? std::pow(acc / mass, 1.0 / rp) : 0.0;
}

struct OracleStep {
    int depth;
    std::int64_t pos;
    double xi;
    std::vector<std::size_t> removed;
    double energy, mass;
};

// Independent greedy reference for the size decomposition: enumerates every
// aligned top directly and mirrors the removal rule.
std::vector<OracleStep> greedy_size_oracle(const TileCollection& coll, const Signal& f,
                                           const Weight& w, double alpha) {
    const std::size_t n = coll.grid_size();
    const int levels = log2_exact(n);
    const std::size_t m = coll.size();
    std::vector<cplx> c(m);
    for (std::size_t i = 0; i < m; ++i)
        c[i] = inner(f, wave_packet(coll[i].p1(), coll.constants(), n));
    std::vector<bool> alive(m, true);
    const double c2 = coll.constants().C2;

    std::vector<OracleStep> steps;
    for (;;) {
        bool found = false;
        OracleStep best{};
        std::tuple<double, double, double> best_key;
        for (int dt = 0; dt <= levels; ++dt) {
            const double h = std::ldexp(1.0, dt);
            const std::int64_t cmax = static_cast<std::int64_t>(n) / (1ll << (dt + 1));
            for (std::int64_t pos = 0; pos < (1ll << dt); ++pos) {
                const DyadicInterval it{dt, pos};
                for (std::int64_t cell = -cmax - 1; cell <= cmax; ++cell) {
                    const double xi = (static_cast<double>(cell) + 0.5) * h;
                    const Interval om{static_cast<double>(cell) * h,
                                      static_cast<double>(cell + 1) * h};
                    double energy = 0.0;
                    for (std::size_t i = 0; i < m; ++i) {
                        if (!alive[i]) continue;
                        const Bitile& b = coll[i];
                        if (!it.contains(b.space()) || !b.ompt.contains(om)) continue;
                        if (!b.om2.dilated(c2).contains(xi)) continue;
                        energy +=
                            std::norm(c[i]) * direct_mass(w, b.space()) / b.space().length();
                    }
                    const double mass = direct_mass(w, it);
                    if (!(energy >= alpha * alpha * mass)) continue;
                    const std::tuple<double, double, double> key{xi, it.to_interval().lo, om.lo};
                    if (!found || key < best_key) {
                        found = true;
                        best_key = key;
                        best = OracleStep{dt, pos, xi, {}, energy, mass};
                    }
                }
            }
        }
        if (!found) break;
        const DyadicInterval it{best.depth, best.pos};
        const double half = std::ldexp(1.0, best.depth - 1);
        const Interval om{best.xi - half, best.xi + half};
        for (std::size_t i = 0; i < m; ++i) {
            if (!alive[i]) continue;
            if (it.contains(coll[i].space()) && coll[i].ompt.contains(om)) {
                best.removed.push_back(i);
                alive[i] = false;
            }
        }
        steps.push_back(std::move(best));
    }
    return steps;
}

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("size decomposition is empty below threshold and total above it") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(50, 0);
    const Signal f = random_signal(n, rng);
    const TileCollection coll = single_scale(n, {1, 7, 14, 21});
    const Weight w = Weight::constant(n);
    const double sz = collection_size(coll, f, w);
    REQUIRE(sz > 0.0);

    const DecompositionResult none = size_decompose(coll, f, w, sz * 1.01);
    CHECK(none.selections.empty());
    CHECK(none.remainder.size() == coll.size());
    CHECK(none.remainder_metric == doctest::Approx(sz).epsilon(1e-12));

    const DecompositionResult all = size_decompose(coll, f, w, sz * 1e-6);
    CHECK(all.remainder.empty());
    CHECK(!all.selections.empty());
    CHECK(all.remainder_metric == 0.0);
    std::string why;
    CHECK(reverify(coll, all, f, nullptr, w, nullptr, &why));
    CHECK(why.empty());

    CHECK_THROWS_AS(size_decompose(coll, f, w, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(size_decompose(coll, f, w, -1.0), std::invalid_argument);
}

TEST_CASE("a single loud bitile is selected on its own") {
    const std::size_t n = 64;
    const TileCollection coll = single_scale(n, {9});
    const Weight w = Weight::constant(n);
    const Signal f = wave_packet(coll[0].p1(), coll.constants(), n);

    const double sz = collection_size(coll, f, w);
    const DecompositionResult res = size_decompose(coll, f, w, sz * 0.5);
    REQUIRE(res.selections.size() == 1);
    const Selection& s = res.selections[0];
    CHECK(s.tree.members == std::vector<std::size_t>{0});
    CHECK(s.witness.members == std::vector<std::size_t>{0});
    CHECK(res.remainder.empty());
    // Certificate: alpha^2 w(I_T) <= ||S_{T2}f||^2.
    CHECK(0.25 * sz * sz * s.top_mass <= s.energy * (1.0 + 1e-12));
    CHECK(reverify(coll, res, f, nullptr, w, nullptr));
}

TEST_CASE("size decomposition matches the exhaustive greedy reference") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(51, 0);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<std::size_t> pick;
        while (pick.size() < 6) {
            const std::size_t i = rng.next_below(32);
            if (std::find(pick.begin(), pick.end(), i) == pick.end()) pick.push_back(i);
        }
        std::sort(pick.begin(), pick.end());
        const TileCollection coll = single_scale(n, pick);
        const Signal f = random_signal(n, rng);
        const Weight w = (trial == 1) ? power_weight(n, 0.5) : Weight::constant(n);
        const double alpha = collection_size(coll, f, w) * (trial == 2 ? 0.15 : 0.6);

        const DecompositionResult res = size_decompose(coll, f, w, alpha);
        const std::vector<OracleStep> ref = greedy_size_oracle(coll, f, w, alpha);
        REQUIRE(res.selections.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            const Selection& s = res.selections[k];
            CHECK(s.tree.top.depth == ref[k].depth);
            CHECK(s.tree.top.index == ref[k].pos);
            CHECK(s.tree.xi == doctest::Approx(ref[k].xi).epsilon(1e-15));
            CHECK(s.removed == ref[k].removed);
            CHECK(s.energy == doctest::Approx(ref[k].energy).epsilon(1e-10));
            CHECK(s.top_mass == doctest::Approx(ref[k].mass).epsilon(1e-10));
        }
        CHECK(res.remainder_metric < alpha);
        CHECK(reverify(coll, res, f, nullptr, w, nullptr));
    }
}

TEST_CASE("size witnesses are well-separated on the corpus") {
    Rng rng = Rng::stream(52, 0);
    // Single-scale corpus.
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t n = 64;
        std::vector<std::size_t> pick;
        for (std::size_t i = 0; i < 32; i += 2 + (trial % 2)) pick.push_back(i);
        const TileCollection coll = single_scale(n, pick);
        const Signal f = random_signal(n, rng);
        const Weight w = power_weight(n, 0.5);
        const double alpha = collection_size(coll, f, w) * 0.3;
        const DecompositionResult res = size_decompose(coll, f, w, alpha);
        const SeparationReport rep = check_well_separated(coll, res.witnesses());
        CHECK(rep.ok);
    }
    // Two-scale corpus with the full scale separation.
    const std::size_t n = 512;
    const TileCollection full =
        build_bitile_collection(DyadicGrid(n), AdmissibleConstants{}, 6, 1, 2);
    REQUIRE(full.s3());
    std::vector<std::size_t> pick;
    for (std::size_t i = 0; i < full.size(); i += 11) pick.push_back(i);
    const TileCollection coll = full.subset(pick);
    const Signal f = random_signal(n, rng);
    const Weight w = Weight::constant(n);
    const double alpha = collection_size(coll, f, w) * 0.25;
    const DecompositionResult res = size_decompose(coll, f, w, alpha);
    REQUIRE(!res.selections.empty());
    const SeparationReport rep = check_well_separated(coll, res.witnesses());
    CHECK(rep.ok);
    CHECK(reverify(coll, res, f, nullptr, w, nullptr));
}

TEST_CASE("density decomposition clears the collection down to alpha") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(53, 0);
    const TileCollection coll = single_scale(n, {2, 8, 15, 23, 28});
    const Weight w = power_weight(n, 0.5);
    const Signal g = random_signal(n, rng);
    const Linearization lin = Linearization::random(n, 1.5, 4, rng);

    const double dens = collection_density(coll, g, w, lin);
    REQUIRE(dens > 0.0);
    const double alpha = dens * 0.4;
    const DecompositionResult res = density_decompose(coll, g, w, lin, alpha);
    REQUIRE(!res.selections.empty());
    CHECK(res.remainder_metric <= alpha);

    // Exhaustive confirmation on the remainder: every aligned top the
    // remaining members can supply stays at or below alpha.
    const int levels = log2_exact(n);
    for (int dt = 0; dt <= levels; ++dt) {
        const double h = std::ldexp(1.0, dt);
        const std::int64_t cmax = static_cast<std::int64_t>(n) / (1ll << (dt + 1));
        for (std::int64_t pos = 0; pos < (1ll << dt); ++pos) {
            const DyadicInterval it{dt, pos};
            for (std::int64_t cell = -cmax - 1; cell <= cmax; ++cell) {
                const Interval om{static_cast<double>(cell) * h,
                                  static_cast<double>(cell + 1) * h};
                bool eligible = false;
                for (std::size_t i : res.remainder) {
                    if (it.contains(coll[i].space()) && coll[i].ompt.contains(om)) {
                        eligible = true;
                        break;
                    }
                }
                if (!eligible) continue;
                CHECK(direct_top_density(coll, it, om, g, w, lin) <= alpha + 1e-12);
            }
        }
    }

    // Selected top rectangles are pairwise disjoint.
    for (std::size_t a = 0; a < res.selections.size(); ++a) {
        for (std::size_t b = a + 1; b < res.selections.size(); ++b) {
            const Tree &ta = res.selections[a].tree, &tb = res.selections[b].tree;
            const bool meet = ta.top.to_interval().intersects(tb.top.to_interval()) &&
                              ta.omega().intersects(tb.omega());
            CHECK_FALSE(meet);
        }
    }

    CHECK(reverify(coll, res, Signal(n), &g, w, &lin));
    CHECK_THROWS_AS(density_decompose(coll, g, w, lin, 0.0), std::invalid_argument);
}

TEST_CASE("density decomposition ignores silent data") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(54, 0);
    const TileCollection coll = single_scale(n, {4, 11});
    const Weight w = Weight::constant(n);
    const Linearization lin = Linearization::random(n, 1.5, 3, rng);

    const DecompositionResult zero_g = density_decompose(coll, Signal(n), w, lin, 0.1);
    CHECK(zero_g.selections.empty());
    CHECK(zero_g.remainder.size() == coll.size());
    CHECK(zero_g.remainder_metric == 0.0);

    const Linearization empty(n, 1.5);
    Signal ones(n);
    for (auto& v : ones.samples()) v = 1.0;
    const DecompositionResult zero_lin = density_decompose(coll, ones, w, empty, 0.1);
    CHECK(zero_lin.selections.empty());
}

TEST_CASE("one concentrated bitile is taken by the density pass") {
    const std::size_t n = 64;
    const TileCollection coll = single_scale(n, {13});
    const Bitile& b = coll[0];
    const Weight w = Weight::constant(n);
    Signal ones(n);
    for (auto& v : ones.samples()) v = 1.0;
    Linearization lin(n, 1.5);
    const double t0 = b.omp.lo - 0.5;
    const double t1 = b.om2.lo + 0.5;
    for (std::size_t x = 0; x < n; ++x) lin.set_point(x, {t0, t1}, {cplx(1.0, 0.0)});

    const DecompositionResult res = density_decompose(coll, ones, w, lin, 1e-4);
    REQUIRE(res.selections.size() == 1);
    CHECK(res.selections[0].tree.members == std::vector<std::size_t>{0});
    CHECK(res.remainder.empty());
    const Selection& s = res.selections[0];
    CHECK(s.top_mass <= std::pow(1e-4, -1.5) * s.energy * (1.0 + 1e-12));
    CHECK(reverify(coll, res, Signal(n), &ones, w, &lin));
}

TEST_CASE("counting functions add tops and stay monotone in the dilation") {
    const std::size_t n = 64;
    CHECK(counting_function({}, 0, n)[5].real() == 0.0);

    const Tree outer{DyadicInterval{1, 0}, 3.0, {}};
    const Tree inner{DyadicInterval{2, 1}, 7.0, {}};
    const Signal n0 = counting_function({outer, inner}, 0, n);
    double mean = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        const double xv = static_cast<double>(x) / static_cast<double>(n);
        const double want = (xv < 0.5 ? 1.0 : 0.0) + (xv >= 0.25 && xv < 0.5 ? 1.0 : 0.0);
        CHECK(n0[x].real() == want);
        mean += n0[x].real();
    }
    CHECK(mean / static_cast<double>(n) == doctest::Approx(0.75).epsilon(1e-15));

    const Signal n1 = counting_function({outer, inner}, 1, n);
    const Signal n2 = counting_function({outer, inner}, 2, n);
    for (std::size_t x = 0; x < n; ++x) {
        CHECK(n0[x].real() <= n1[x].real());
        CHECK(n1[x].real() <= n2[x].real());
        CHECK(n2[x].real() == 2.0);  // both dilations cover the torus
    }
    CHECK_THROWS_AS(counting_function({outer}, -1, n), std::invalid_argument);
}

TEST_CASE("well-separated checks flag shared bitiles and reject mixed trees") {
    const std::size_t n = 64;
    const TileCollection coll = single_scale(n, {3, 10, 17});

    const TreeTop top{coll[0].depth, coll[0].pos, coll[0].fidx + 1};
    const Tree t = maximal_tree(coll, top, true);
    REQUIRE(!t.members.empty());
    CHECK(check_well_separated(coll, {t}).ok);

    const SeparationReport rep = check_well_separated(coll, {t, t});
    CHECK_FALSE(rep.ok);
    CHECK(rep.condition == 2);

    // A tree containing a member whose upper tile misses the top frequency
    // is not 2-overlapping and must be rejected outright.
    Tree mixed{DyadicInterval{0, 0}, coll[0].om2.lo + 0.5, {0, 1}};
    REQUIRE(classify_tree(coll, mixed) != TreeKind::overlapping2);
    CHECK_THROWS_AS(check_well_separated(coll, {mixed}), std::invalid_argument);
}

TEST_CASE("the two-parameter ladder partitions the collection with certified rungs") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(55, 0);
    const double q0 = 1.25, r = 3.0, rp = r / (r - 1.0);
    for (int trial = 0; trial < 2; ++trial) {
        std::vector<std::size_t> pick;
        for (std::size_t i = trial; i < 32; i += 3) pick.push_back(i);
        const TileCollection coll = single_scale(n, pick);
        const Signal f = random_signal(n, rng);
        const Signal g = random_signal(n, rng);
        const Weight w = (trial == 0) ? Weight::constant(n) : power_weight(n, 0.5);
        const Linearization lin = Linearization::random(n, rp, 4, rng);

        const auto buckets = two_parameter_decompose(coll, f, g, w, lin, q0, r);
        REQUIRE(!buckets.empty());

        std::vector<int> seen(coll.size(), 0);
        cplx btotal = 0.0;
        int prev_level = buckets.front().level - 1;
        for (const LadderBucket& b : buckets) {
            CHECK(b.level > prev_level);
            prev_level = b.level;
            CHECK(!b.members.empty());
            for (std::size_t i : b.members) ++seen[i];
            CHECK(b.size_actual <= b.size_bound * (1.0 + 1e-9));
            CHECK(b.density_actual <= b.density_bound * (1.0 + 1e-9));
            CHECK(std::isfinite(b.top_mass_sum));
            btotal += bilinear_form(coll.subset(b.members), f, g, w, lin);
        }
        for (int s : seen) CHECK(s == 1);
        const cplx whole = bilinear_form(coll, f, g, w, lin);
        CHECK(std::abs(whole - btotal) <= 1e-9 * std::max(1.0, std::abs(whole)));
    }

    const TileCollection one = single_scale(n, {5});
    const Signal f = random_signal(n, rng);
    const Signal g = random_signal(n, rng);
    const Weight w = Weight::constant(n);
    const Linearization lin = Linearization::random(n, rp, 4, rng);
    const auto buckets = two_parameter_decompose(one, f, g, w, lin, q0, r);
    std::size_t membership = 0;
    for (const auto& b : buckets) membership += b.members.size();
    CHECK(membership == 1);

    CHECK_THROWS_AS(two_parameter_decompose(one, f, g, w, lin, 1.0, 3.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(two_parameter_decompose(one, f, g, w, lin, 1.25, 2.5),
                    std::invalid_argument);
    const Linearization wrong(n, 1.25);
    CHECK_THROWS_AS(two_parameter_decompose(one, f, g, w, wrong, q0, r),
                    std::invalid_argument);
}

TEST_CASE("tree estimate ratios recompute from raw definitions on a singleton") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(56, 0);
    const TileCollection coll = single_scale(n, {19});
    const Bitile& b = coll[0];
    const Weight w = Weight::constant(n);
    const Signal f = random_signal(n, rng);
    const Signal g = random_signal(n, rng);
    const Linearization lin = Linearization::random(n, 1.5, 4, rng);
    const Tree tree{b.space(), (static_cast<double>(b.fidx) + 1.5) * std::ldexp(1.0, b.depth),
                    {0}};
    REQUIRE(is_tree(coll, tree));

    const double s = 1.25;
    const TreeEstimate est = tree_estimate_ratio(coll, tree, f, g, w, lin, s, -1);
    REQUIRE(!est.degenerate);

    // Rebuild every factor directly.
    const Signal phi = wave_packet(b.p1(), coll.constants(), n);
    const cplx c = inner(f, phi);
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        const double xv = static_cast<double>(x) / static_cast<double>(n);
        if (!b.space().to_interval().contains(xv)) continue;
        cplx d = 0.0;
        for (int j = 1; j <= lin.K(x); ++j) {
            if (!b.omp.contains(lin.threshold(x, j - 1)) && b.om2.contains(lin.threshold(x, j))) {
                d = lin.coeff(x, j);
                break;
            }
        }
        acc += std::pow(std::abs(g[x] * c * phi[x] * d), s) * w.sample(x);
    }
    const double num = std::pow(acc / static_cast<double>(n), 1.0 / s);

    const int levels = log2_exact(n);
    double best_sq = 0.0, best_dens = 0.0;
    for (int dt = 0; dt <= levels; ++dt) {
        const double h = std::ldexp(1.0, dt);
        const std::int64_t cmax = static_cast<std::int64_t>(n) / (1ll << (dt + 1));
        for (std::int64_t pos = 0; pos < (1ll << dt); ++pos) {
            const DyadicInterval it{dt, pos};
            if (!it.contains(b.space())) continue;
            for (std::int64_t cell = -cmax - 1; cell <= cmax; ++cell) {
                const double xi = (static_cast<double>(cell) + 0.5) * h;
                const Interval om{static_cast<double>(cell) * h,
                                  static_cast<double>(cell + 1) * h};
                if (!b.ompt.contains(om)) continue;
                const double dens = direct_top_density(coll, it, om, g, w, lin);
                best_dens = std::max(best_dens, dens);
                if (!b.om2.dilated(coll.constants().C2).contains(xi)) continue;
                const double energy =
                    std::norm(c) * direct_mass(w, b.space()) / b.space().length();
                best_sq = std::max(best_sq, energy / direct_mass(w, it));
            }
        }
    }
    const double want = num / (std::pow(direct_mass(w, tree.top), 1.0 / s) *
                               std::sqrt(best_sq) * best_dens);
    CHECK(est.ratio == doctest::Approx(want).epsilon(1e-9));

    // Improved-density variant relates by the density quotient.
    REQUIRE(est.improved_available);
    const TileCollection sub = coll.subset(tree.members);
    const double dens = collection_density(sub, g, w, lin, DensityMode::standard);
    const double dimp = collection_density(sub, g, w, lin, DensityMode::improved);
    REQUIRE(dimp > 0.0);
    CHECK(est.improved_ratio == doctest::Approx(est.ratio * dens / dimp).epsilon(1e-12));

    // Degenerate input.
    const TreeEstimate zero = tree_estimate_ratio(coll, tree, Signal(n), g, w, lin, s, -1);
    CHECK(zero.degenerate);
    CHECK(zero.ratio == 0.0);

    // Shell variants: the first dilation already wraps the torus here.
    const TreeEstimate shell0 = tree_estimate_ratio(coll, tree, f, g, w, lin, s, 0);
    CHECK(std::isfinite(shell0.ratio));
    const TreeEstimate shell1 = tree_estimate_ratio(coll, tree, f, g, w, lin, s, 1);
    CHECK(shell1.ratio == 0.0);

    CHECK_THROWS_AS(tree_estimate_ratio(coll, tree, f, g, w, lin, 0.5, -1),
                    std::invalid_argument);
    CHECK_THROWS_AS(tree_estimate_ratio(coll, tree, f, g, w, lin, 1.9, -1),
                    std::invalid_argument);
    CHECK_THROWS_AS(tree_estimate_ratio(coll, tree, f, g, w, lin, s, -2),
                    std::invalid_argument);
}

TEST_CASE("tree estimate ratios hold steady as the grid refines") {
    const AdmissibleConstants consts;
    std::vector<double> core, tail1;
    for (const std::size_t n : {256u, 512u, 1024u}) {
        Rng rng = Rng::stream(57, 3);
        Spectrum sf(n), sg(n);
        for (int k = -40; k <= 40; ++k) {
            sf.at(k) = rng.next_cgaussian();
            sg.at(k) = rng.next_cgaussian();
        }
        const Signal f = idft(sf);
        const Signal g = idft(sg);
        const Weight w = power_weight(n, 0.5);
        const TileCollection coll = build_bitile_collection(DyadicGrid(n), consts, 5, 1, 2);
        Linearization lin(n, 1.5);
        for (std::size_t x = 0; x < n; ++x) lin.set_point(x, {-100.5, 6.5}, {cplx(1.0, 0.0)});

        const Tree tree = maximal_tree(coll, TreeTop{1, 0, 2}, false);
        REQUIRE(tree.members.size() > 1);
        const TreeEstimate c0 = tree_estimate_ratio(coll, tree, f, g, w, lin, 1.5, -1);
        REQUIRE(!c0.degenerate);
        core.push_back(c0.ratio);
        tail1.push_back(tree_estimate_ratio(coll, tree, f, g, w, lin, 1.5, 0).ratio);
    }
    for (double v : core) CHECK(v > 0.0);
    CHECK(std::abs(std::log2(core.back() / core.front()) / 2.0) <= 0.2);
    if (tail1.front() > 0.0 && tail1.back() > 0.0)
        CHECK(std::abs(std::log2(tail1.back() / tail1.front()) / 2.0) <= 0.2);
}

TEST_CASE("decomposition results survive the JSON round trip and replay") {
    const std::size_t n = 64;
    Rng rng = Rng::stream(58, 0);
    const TileCollection coll = single_scale(n, {0, 6, 12, 18, 24, 30});
    const Signal f = random_signal(n, rng);
    const Weight w = power_weight(n, 0.5);
    const double alpha = collection_size(coll, f, w) * 0.3;
    const DecompositionResult res = size_decompose(coll, f, w, alpha);
    REQUIRE(!res.selections.empty());

    const std::string text = result_to_json(coll, res);
    TileCollection back = single_scale(n, {0});
    const DecompositionResult parsed = result_from_json(text, back);
    CHECK(back.size() == coll.size());
    CHECK(parsed.alpha == res.alpha);
    REQUIRE(parsed.selections.size() == res.selections.size());
    for (std::size_t i = 0; i < parsed.selections.size(); ++i) {
        CHECK(parsed.selections[i].tree.top.depth == res.selections[i].tree.top.depth);
        CHECK(parsed.selections[i].tree.xi == res.selections[i].tree.xi);
        CHECK(parsed.selections[i].removed == res.selections[i].removed);
        CHECK(parsed.selections[i].energy == res.selections[i].energy);
        CHECK(parsed.selections[i].top_mass == res.selections[i].top_mass);
    }
    CHECK(parsed.remainder == res.remainder);
    CHECK(reverify(back, parsed, f, nullptr, w, nullptr));

    // Tampered payloads fail loudly or fail the replay.
    CHECK_THROWS(result_from_json("{}", back));
    std::string bad = text;
    bad.replace(bad.find("vclab-decomposition"), 19, "vclab-impersonator!");
    CHECK_THROWS_AS(result_from_json(bad, back), std::invalid_argument);

    DecompositionResult forged = res;
    forged.selections[0].energy *= 0.25;
    std::string why;
    CHECK_FALSE(reverify(coll, forged, f, nullptr, w, nullptr, &why));
    CHECK(why.find("drifted") != std::string::npos);

    DecompositionResult leaky = res;
    if (!leaky.remainder.empty()) {
        leaky.remainder.pop_back();
        CHECK_FALSE(reverify(coll, leaky, f, nullptr, w, nullptr));
    } else {
        leaky.remainder.push_back(leaky.selections[0].removed[0]);
        CHECK_FALSE(reverify(coll, leaky, f, nullptr, w, nullptr));
    }

    // Density results replay too.
    const Signal g = random_signal(n, rng);
    const Linearization lin = Linearization::random(n, 1.5, 4, rng);
    const double dens = collection_density(coll, g, w, lin);
    REQUIRE(dens > 0.0);
    const DecompositionResult dres = density_decompose(coll, g, w, lin, dens * 0.5);
    const std::string dtext = result_to_json(coll, dres);
    const DecompositionResult dparsed = result_from_json(dtext, back);
    CHECK(reverify(back, dparsed, Signal(n), &g, w, &lin));
}

}  // TEST_SUITE
