#include "vclab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "vclab/decomposition.hpp"
#include "vclab/phaseplane.hpp"

namespace vclab {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

std::string dec(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_dec(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') bad("bad decimal literal: " + s);
    return v;
}

bool grid_size_ok(std::size_t n) { return n >= 8 && n <= 8192 && (n & (n - 1)) == 0; }

const std::set<std::string>& known_ops() {
    static const std::set<std::string> ops = {"partial-sum", "carleson-sup", "svar",
                                              "cvar",        "maximal",      "sharp"};
    return ops;
}

const std::set<std::string>& known_families() {
    static const std::set<std::string> fams = {"random_trig",      "dirichlet", "lacunary_pm",
                                               "indicator_smooth", "adversarial", "zero"};
    return fams;
}

void check_weight_spec(const WeightSpec& spec, const char* where) {
    if (spec.kind != "constant" && spec.kind != "power")
        bad(std::string(where) + ": unknown weight kind " + spec.kind);
    if (spec.kind == "power" && !(spec.a > -0.95 && spec.a < 5.0))
        bad(std::string(where) + ": power exponent out of range");
}

void check_r_value(double r, const char* where) {
    if (std::isnan(r) || (!std::isinf(r) && !(r >= 1.0)))
        bad(std::string(where) + ": variation exponent must be >= 1 (or infinite)");
}

void validate(const ExperimentConfig& cfg) {
    if (!grid_size_ok(cfg.n)) bad("config: n must be a power of two in [8, 8192]");
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        if (!grid_size_ok(cfg.n_grid[i])) bad("config: n_grid entry out of range");
        if (i > 0 && !(cfg.n_grid[i - 1] < cfg.n_grid[i])) bad("config: n_grid must ascend");
    }
    check_weight_spec(cfg.weight, "config");
    if (!(cfg.p >= 1.0) || std::isinf(cfg.p)) bad("config: p must be finite and >= 1");
    if (!(cfg.q >= 1.0) || std::isinf(cfg.q)) bad("config: q must be finite and >= 1");
    if (!(cfg.q < cfg.p)) bad("config: need q < p");
    if (!(cfg.q0 > 1.0) || std::isinf(cfg.q0)) bad("config: q0 must be finite and > 1");
    check_r_value(cfg.r, "config");
    for (std::size_t i = 0; i < cfg.r_grid.size(); ++i) {
        check_r_value(cfg.r_grid[i], "config");
        if (i > 0 && !(cfg.r_grid[i - 1] < cfg.r_grid[i])) bad("config: r_grid must ascend");
    }
    for (std::size_t i = 0; i < cfg.a_grid.size(); ++i) {
        if (!(cfg.a_grid[i] > -0.95 && cfg.a_grid[i] < 5.0))
            bad("config: a_grid entry out of range");
        if (i > 0 && !(cfg.a_grid[i - 1] < cfg.a_grid[i])) bad("config: a_grid must ascend");
    }
    if (!known_ops().count(cfg.op)) bad("config: unknown operator " + cfg.op);
    if (!known_families().count(cfg.family)) bad("config: unknown family " + cfg.family);
    if (cfg.trials < 1) bad("config: trials must be >= 1");
    if (cfg.max_bitiles < 0) bad("config: max_bitiles must be >= 0");
}

// Least squares slope of ys against xs; callers ensure xs.size() >= 2.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double nn = double(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / nn;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / nn;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// sup over m = 0..n/2 of |S_m f|, accumulated the same way the variational
// field walks the partial sums.
Signal carleson_sup_field(const Signal& f) {
    const std::size_t n = f.size();
    const int half = int(n / 2);
    const Spectrum hat = dft(f);
    const std::vector<cplx> roots = unit_roots(n);
    Signal out(n);
    parallel_chunks(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t x = lo; x < hi; ++x) {
            cplx acc = hat.at(0);
            double best = std::abs(acc);
            for (int m = 1; m < half; ++m) {
                const cplx em = roots[(std::size_t(m) * x) % n];
                acc += hat.at(m) * em + hat.at(-m) * std::conj(em);
                best = std::max(best, std::abs(acc));
            }
            out[x] = best;
        }
    });
    return out;
}

Signal dirichlet_draw(std::size_t n, Rng& rng) {
    const std::int64_t top = std::max<std::int64_t>(1, std::int64_t(n / 4));
    const int m = int(1 + rng.next_below(top));
    const double u = rng.next_unit();
    Spectrum s(n);
    for (int k = -m; k <= m; ++k)
        if (std::abs(k) < int(n / 2)) s.at(k) = std::polar(1.0, -2.0 * kPi * double(k) * u);
    return idft(s);
}

Signal lacunary_draw(std::size_t n, Rng& rng) {
    Spectrum s(n);
    for (int k = 1; k <= int(n / 4); k *= 2)
        s.at(k) = rng.next_below(2) == 0 ? 1.0 : -1.0;
    return idft(s);
}

json r_to_json(double r) { return std::isinf(r) ? json("inf") : json(r); }

double r_from_json(const json& v, const char* what) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return kInf;
        bad(std::string(what) + ": only the string \"inf\" is accepted");
    }
    if (!v.is_number()) bad(std::string(what) + ": expected a number");
    return v.get<double>();
}

double num(const json& v, const char* what) {
    if (!v.is_number()) bad(std::string(what) + ": expected a number");
    return v.get<double>();
}

std::int64_t integer(const json& v, const char* what) {
    if (!v.is_number_integer()) bad(std::string(what) + ": expected an integer");
    return v.get<std::int64_t>();
}

std::string str(const json& v, const char* what) {
    if (!v.is_string()) bad(std::string(what) + ": expected a string");
    return v.get<std::string>();
}

bool boolean(const json& v, const char* what) {
    if (!v.is_boolean()) bad(std::string(what) + ": expected a boolean");
    return v.get<bool>();
}

const json& arr(const json& v, const char* what) {
    if (!v.is_array()) bad(std::string(what) + ": expected an array");
    return v;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("config parse: ") + e.what());
    }
    if (!j.is_object()) bad("config: expected a JSON object");
    ExperimentConfig cfg;
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const json& v = item.value();
        if (key == "n") {
            cfg.n = std::size_t(integer(v, "n"));
        } else if (key == "n_grid") {
            cfg.n_grid.clear();
            for (const json& e : arr(v, "n_grid")) cfg.n_grid.push_back(std::size_t(integer(e, "n_grid")));
        } else if (key == "weight") {
            if (!v.is_object()) bad("weight: expected an object");
            for (const auto& wi : v.items()) {
                if (wi.key() == "kind") cfg.weight.kind = str(wi.value(), "weight.kind");
                else if (wi.key() == "a") cfg.weight.a = num(wi.value(), "weight.a");
                else bad("unknown config key: weight." + wi.key());
            }
        } else if (key == "p") {
            cfg.p = num(v, "p");
        } else if (key == "q") {
            cfg.q = num(v, "q");
        } else if (key == "q0") {
            cfg.q0 = num(v, "q0");
        } else if (key == "r") {
            cfg.r = r_from_json(v, "r");
        } else if (key == "r_grid") {
            cfg.r_grid.clear();
            for (const json& e : arr(v, "r_grid")) cfg.r_grid.push_back(r_from_json(e, "r_grid"));
        } else if (key == "a_grid") {
            cfg.a_grid.clear();
            for (const json& e : arr(v, "a_grid")) cfg.a_grid.push_back(num(e, "a_grid"));
        } else if (key == "op") {
            cfg.op = str(v, "op");
        } else if (key == "family") {
            cfg.family = str(v, "family");
        } else if (key == "trials") {
            cfg.trials = int(integer(v, "trials"));
        } else if (key == "max_bitiles") {
            cfg.max_bitiles = int(integer(v, "max_bitiles"));
        } else if (key == "seed") {
            const std::int64_t s = integer(v, "seed");
            if (s < 0) bad("seed: must be nonnegative");
            cfg.seed = std::uint64_t(s);
        } else {
            bad("unknown config key: " + key);
        }
    }
    validate(cfg);
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["n"] = cfg.n;
    j["n_grid"] = cfg.n_grid;
    j["weight"] = json{{"a", cfg.weight.a}, {"kind", cfg.weight.kind}};
    j["p"] = cfg.p;
    j["q"] = cfg.q;
    j["q0"] = cfg.q0;
    j["r"] = r_to_json(cfg.r);
    json rg = json::array();
    for (double r : cfg.r_grid) rg.push_back(r_to_json(r));
    j["r_grid"] = rg;
    j["a_grid"] = cfg.a_grid;
    j["op"] = cfg.op;
    j["family"] = cfg.family;
    j["trials"] = cfg.trials;
    j["max_bitiles"] = cfg.max_bitiles;
    j["seed"] = cfg.seed;
    return j.dump();
}

std::uint64_t config_digest(const ExperimentConfig& cfg) { return fnv1a(config_to_json(cfg)); }

bool clears_variation_threshold(double p, double q, double r) {
    if (!(q >= 1.0) || !(q < p)) bad("clears_variation_threshold: need 1 <= q < p");
    if (std::isinf(r)) return true;
    return r > std::max(2.0 * q, p * q / (p - q));
}

Weight make_weight(const WeightSpec& spec, std::size_t n) {
    check_weight_spec(spec, "make_weight");
    return spec.kind == "power" ? power_weight(n, spec.a) : Weight::constant(n);
}

Signal family_member(const std::string& family, std::size_t n, Rng& rng) {
    if (!known_families().count(family)) bad("unknown family " + family);
    if (!grid_size_ok(n)) bad("family_member: n must be a power of two in [8, 8192]");
    if (family == "random_trig") {
        // Fixed number of draws so the same stream yields the same
        // coefficients at every grid size.
        Spectrum s(n);
        s.at(0) = rng.next_cgaussian();
        for (int k = 1; k <= 64; ++k) {
            const cplx a = rng.next_cgaussian();
            const cplx b = rng.next_cgaussian();
            if (k < int(n / 2)) {
                s.at(k) = a;
                s.at(-k) = b;
            }
        }
        return idft(s);
    }
    if (family == "dirichlet") return dirichlet_draw(n, rng);
    if (family == "lacunary_pm") return lacunary_draw(n, rng);
    if (family == "indicator_smooth") {
        const double c = rng.next_unit();
        const double l = 0.05 + 0.2 * rng.next_unit();
        Signal f(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d = std::abs(double(i) / double(n) - c);
            d = std::min(d, 1.0 - d);
            const double v = d / l;
            f[i] = v < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - v * v)) : 0.0;
        }
        return f;
    }
    if (family == "adversarial")
        return rng.next_below(2) == 0 ? dirichlet_draw(n, rng) : lacunary_draw(n, rng);
    return Signal(n);  // zero
}

Signal apply_operator(const std::string& op, const Signal& f, double r) {
    if (op == "partial-sum") return partial_sum(f, int(f.size() / 4));
    if (op == "carleson-sup") return carleson_sup_field(f);
    if (op == "svar") return std::isinf(r) ? carleson_sup_field(f) : variational_partial_sums(f, r);
    if (op == "cvar") return std::isinf(r) ? carleson_sup_field(f) : variational_truncation(f, r);
    if (op == "maximal") return maximal(f, 1.0);
    if (op == "sharp") return dyadic_sharp(f);
    bad("unknown operator " + op);
}

ExperimentReport estimate_norm_ratio(const ExperimentConfig& cfg) {
    validate(cfg);
    const Weight w = make_weight(cfg.weight, cfg.n);
    ExperimentReport rep;
    rep.kind = "norm-ratio";
    rep.config = config_digest(cfg);
    rep.seed = cfg.seed;
    rep.r_clears_threshold = clears_variation_threshold(cfg.p, cfg.q, cfg.r);
    rep.ratios.assign(std::size_t(cfg.trials), 0.0);
    std::vector<char> live(std::size_t(cfg.trials), 0);
    parallel_chunks(std::size_t(cfg.trials), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            Rng rng = Rng::stream(cfg.seed, t);
            const Signal f = family_member(cfg.family, cfg.n, rng);
            const double den = weighted_lp_norm(f, cfg.p, w);
            if (den == 0.0) continue;
            live[t] = 1;
            rep.ratios[t] = weighted_lp_norm(apply_operator(cfg.op, f, cfg.r), cfg.p, w) / den;
        }
    });
    if (std::find(live.begin(), live.end(), char(1)) == live.end())
        bad("estimate_norm_ratio: degenerate family, every draw has zero norm");
    rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.median_ratio = median_of(rep.ratios);
    return rep;
}

ExperimentReport sweep_r(const ExperimentConfig& cfg) {
    validate(cfg);
    if (cfg.r_grid.size() < 2) bad("sweep_r: r_grid needs at least two values");
    if (cfg.n_grid.size() < 2) bad("sweep_r: n_grid needs at least two values");
    std::vector<double> as = cfg.a_grid;
    const bool sweep_a = !as.empty();
    if (!sweep_a) as.push_back(cfg.weight.kind == "power" ? cfg.weight.a : 0.0);

    ExperimentReport rep;
    rep.kind = "sweep-r";
    rep.config = config_digest(cfg);
    rep.seed = cfg.seed;
    rep.n_grid = cfg.n_grid;
    rep.r_clears_threshold = std::all_of(cfg.r_grid.begin(), cfg.r_grid.end(), [&](double r) {
        return clears_variation_threshold(cfg.p, cfg.q, r);
    });

    std::vector<double> maxima;
    for (double a : as) {
        for (double r : cfg.r_grid) {
            SweepCell cell;
            cell.r = r;
            cell.a = a;
            std::vector<double> xs, ys;
            for (std::size_t n : cfg.n_grid) {
                ExperimentConfig sub = cfg;
                sub.n = n;
                sub.r = r;
                sub.n_grid.clear();
                sub.r_grid.clear();
                sub.a_grid.clear();
                if (sweep_a) sub.weight = WeightSpec{"power", a};
                const ExperimentReport one = estimate_norm_ratio(sub);
                cell.max_ratios.push_back(one.max_ratio);
                maxima.push_back(one.max_ratio);
                if (one.max_ratio > 0.0) {
                    xs.push_back(std::log2(double(n)));
                    ys.push_back(std::log2(one.max_ratio));
                }
            }
            if (xs.size() >= 2) cell.slope = fit_slope(xs, ys);
            rep.cells.push_back(std::move(cell));
        }
    }
    rep.max_ratio = maxima.empty() ? 0.0 : *std::max_element(maxima.begin(), maxima.end());
    rep.median_ratio = median_of(maxima);
    return rep;
}

namespace {

// Two-scale lattice on the grid, thinned to at most max_bitiles members by
// a seeded partial shuffle.
TileCollection make_instance_collection(const DyadicGrid& grid, int max_bitiles, Rng& rng) {
    const int depth0 = 1;
    const int gap = std::min(5, grid.levels() - 2 - depth0);
    const AdmissibleConstants consts{};
    TileCollection full = gap >= 1 ? build_bitile_collection(grid, consts, gap, depth0, 2)
                                   : build_bitile_collection(grid, consts, 1, depth0, 1);
    if (max_bitiles <= 0) return full.subset({});
    if (full.size() <= std::size_t(max_bitiles)) return full;
    std::vector<std::size_t> idx(full.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    for (int i = 0; i < max_bitiles; ++i) {
        const std::size_t j = std::size_t(i) + std::size_t(rng.next_below(std::int64_t(idx.size() - std::size_t(i))));
        std::swap(idx[std::size_t(i)], idx[j]);
    }
    idx.resize(std::size_t(max_bitiles));
    std::sort(idx.begin(), idx.end());
    return full.subset(idx);
}

// Covers the union of the selected trees by own-scale trees picked in a
// seeded random member order, and returns sum w(I_T') of the cover.
double random_cover_mass(const TileCollection& coll, const std::vector<Selection>& sels,
                         const Weight& w, Rng& rng) {
    std::unordered_set<std::size_t> uni;
    for (const Selection& s : sels)
        for (std::size_t m : s.tree.members) uni.insert(m);
    std::vector<std::size_t> order(uni.begin(), uni.end());
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t j = i + std::size_t(rng.next_below(std::int64_t(order.size() - i)));
        std::swap(order[i], order[j]);
    }
    std::unordered_set<std::size_t> covered;
    double mass = 0.0;
    for (std::size_t m : order) {
        if (covered.count(m)) continue;
        const Bitile& b = coll[m];
        const Tree tr = maximal_tree(coll, TreeTop{b.depth, b.pos, b.fidx + 1}, false);
        for (std::size_t q : tr.members) covered.insert(q);
        if (!covered.count(m)) return 0.0;
        mass += w.mass(DyadicInterval{b.depth, b.pos});
    }
    return mass;
}

}  // namespace

DecompositionInstance make_decomposition_instance(const ExperimentConfig& cfg, Rng& rng) {
    validate(cfg);
    const DyadicGrid grid(cfg.n);
    TileCollection coll = make_instance_collection(grid, cfg.max_bitiles, rng);
    Signal f = family_member("random_trig", cfg.n, rng);
    Signal g = family_member("random_trig", cfg.n, rng);
    const double rp = std::isinf(cfg.r) ? 1.25 : cfg.r / (cfg.r - 1.0);
    Linearization lin = Linearization::random(cfg.n, rp, 4, rng);
    return DecompositionInstance{std::move(coll), std::move(f), std::move(g), std::move(lin)};
}

ExperimentReport run_decomposition_report(const ExperimentConfig& cfg) {
    validate(cfg);
    const bool ladder_possible = !std::isinf(cfg.r) && cfg.r > 2.0 * cfg.q0;
    const std::size_t n = cfg.n;
    const Weight w = make_weight(cfg.weight, n);

    ExperimentReport rep;
    rep.kind = "decomposition";
    rep.config = config_digest(cfg);
    rep.seed = cfg.seed;
    rep.r_clears_threshold = clears_variation_threshold(cfg.p, cfg.q, cfg.r);
    DecompositionSummary& d = rep.decomp;

    std::vector<double> pooled;  // mass above lambda = 0.5 + j, summed over instances

    for (int t = 0; t < cfg.trials; ++t) {
        Rng rng = Rng::stream(cfg.seed, std::uint64_t(t));
        ++d.instances;
        const DecompositionInstance inst = make_decomposition_instance(cfg, rng);
        const TileCollection& coll = inst.coll;
        if (coll.size() == 0) continue;
        const Signal& f = inst.f;
        const Signal& g = inst.g;
        const Linearization& lin = inst.lin;

        const double sz = collection_size(coll, f, w);
        if (sz > 0.0) {
            const double alpha = 0.6 * sz;
            const DecompositionResult res = size_decompose(coll, f, w, alpha);
            if (!reverify(coll, res, f, nullptr, w, nullptr)) d.all_certified = false;
            d.size_selections += res.selections.size();
            d.certificates += res.selections.size();
            d.max_remainder_over_alpha =
                std::max(d.max_remainder_over_alpha, res.remainder_metric / alpha);
            if (!res.selections.empty()) {
                if (!check_well_separated(coll, res.witnesses()).ok) d.separation_ok = false;

                const Signal count = counting_function(res.trees(), 0, n);
                for (std::size_t j = 0; j < 64; ++j) {
                    const double lam = 0.5 + double(j);
                    double mass = 0.0;
                    for (std::size_t x = 0; x < n; ++x)
                        if (count[x].real() > lam) mass += w.sample(x);
                    mass /= double(n);
                    if (mass <= 0.0) break;
                    if (pooled.size() <= j) pooled.resize(j + 1, 0.0);
                    pooled[j] += mass;
                }

                double selected = 0.0;
                for (const Selection& s : res.selections) selected += s.top_mass;
                const double cover = random_cover_mass(coll, res.selections, w, rng);
                if (cover > 0.0) d.cover_ratio = std::max(d.cover_ratio, selected / cover);

                const double s = 0.5 * (1.0 + lin.rprime());
                for (std::size_t i = 0; i < res.selections.size() && i < 2; ++i) {
                    for (int shell : {-1, 0}) {
                        const TreeEstimate te = tree_estimate_ratio(
                            coll, res.selections[i].tree, f, g, w, lin, s, shell);
                        if (te.degenerate) continue;
                        d.max_tree_ratio = std::max(d.max_tree_ratio, te.ratio);
                        if (te.improved_available)
                            d.max_tree_ratio = std::max(d.max_tree_ratio, te.improved_ratio);
                    }
                }
            }
        }

        const double dens = collection_density(coll, g, w, lin);
        if (dens > 0.0) {
            const double alpha = 0.6 * dens;
            const DecompositionResult res = density_decompose(coll, g, w, lin, alpha);
            if (!reverify(coll, res, f, &g, w, &lin)) d.all_certified = false;
            d.density_selections += res.selections.size();
            d.certificates += res.selections.size();
            d.max_remainder_over_alpha =
                std::max(d.max_remainder_over_alpha, res.remainder_metric / alpha);
            for (std::size_t i = 0; i < res.selections.size(); ++i) {
                for (std::size_t j = i + 1; j < res.selections.size(); ++j) {
                    const Tree& ti = res.selections[i].tree;
                    const Tree& tj = res.selections[j].tree;
                    if (ti.top.to_interval().intersects(tj.top.to_interval()) &&
                        ti.omega().intersects(tj.omega()))
                        d.all_certified = false;
                }
            }
            if (!res.selections.empty()) {
                double wg = 0.0;
                for (std::size_t x = 0; x < n; ++x)
                    if (lin.K(x) > 0) wg += w.sample(x);
                wg /= double(n);
                if (wg > 0.0) {
                    double tops = 0.0;
                    for (const Selection& s : res.selections) tops += s.top_mass;
                    d.density_mass_ratio = std::max(
                        d.density_mass_ratio, tops * std::pow(alpha, lin.rprime()) / wg);
                }
            }
        }

        if (ladder_possible) {
            const auto buckets = two_parameter_decompose(coll, f, g, w, lin, cfg.q0, cfg.r);
            d.buckets += buckets.size();
            cplx bsum = 0.0;
            for (const LadderBucket& b : buckets) {
                const bool certified = b.size_actual <= b.size_bound * (1.0 + 1e-9) &&
                                       b.density_actual <= b.density_bound * (1.0 + 1e-9);
                if (certified) ++d.certificates;
                else d.all_certified = false;
                if (!b.members.empty()) bsum += bilinear_form(coll.subset(b.members), f, g, w, lin);
                d.ladder_mass_coeff =
                    std::max(d.ladder_mass_coeff, b.top_mass_sum / std::ldexp(1.0, b.level));
            }
            const cplx bfull = bilinear_form(coll, f, g, w, lin);
            d.max_bilinear_error = std::max(
                d.max_bilinear_error, std::abs(bfull - bsum) / (1.0 + std::abs(bfull)));
        }
    }

    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < pooled.size(); ++j) {
        const double lam = 0.5 + double(j);
        rep.counting.push_back(CountPoint{lam, pooled[j]});
        if (pooled[j] > 0.0) {
            xs.push_back(std::log(lam));
            ys.push_back(std::log(pooled[j]));
        }
    }
    if (xs.size() >= 2) {
        d.counting_slope_measured = true;
        d.counting_slope = fit_slope(xs, ys);
        d.counting_slope_ok = d.counting_slope <= -cfg.q / cfg.q0 + 0.3 + 1e-9;
    }
    return rep;
}

namespace {

json decomp_to_json(const DecompositionSummary& d) {
    json j;
    j["instances"] = d.instances;
    j["size_selections"] = d.size_selections;
    j["density_selections"] = d.density_selections;
    j["buckets"] = d.buckets;
    j["certificates"] = d.certificates;
    j["all_certified"] = d.all_certified;
    j["separation_ok"] = d.separation_ok;
    j["counting_slope_ok"] = d.counting_slope_ok;
    j["counting_slope_measured"] = d.counting_slope_measured;
    j["counting_slope"] = dec(d.counting_slope);
    j["max_bilinear_error"] = dec(d.max_bilinear_error);
    j["max_remainder_over_alpha"] = dec(d.max_remainder_over_alpha);
    j["cover_ratio"] = dec(d.cover_ratio);
    j["density_mass_ratio"] = dec(d.density_mass_ratio);
    j["max_tree_ratio"] = dec(d.max_tree_ratio);
    j["ladder_mass_coeff"] = dec(d.ladder_mass_coeff);
    return j;
}

DecompositionSummary decomp_from_json(const json& j) {
    DecompositionSummary d;
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const json& v = item.value();
        if (key == "instances") d.instances = std::size_t(integer(v, "instances"));
        else if (key == "size_selections") d.size_selections = std::size_t(integer(v, key.c_str()));
        else if (key == "density_selections") d.density_selections = std::size_t(integer(v, key.c_str()));
        else if (key == "buckets") d.buckets = std::size_t(integer(v, key.c_str()));
        else if (key == "certificates") d.certificates = std::size_t(integer(v, key.c_str()));
        else if (key == "all_certified") d.all_certified = boolean(v, key.c_str());
        else if (key == "separation_ok") d.separation_ok = boolean(v, key.c_str());
        else if (key == "counting_slope_ok") d.counting_slope_ok = boolean(v, key.c_str());
        else if (key == "counting_slope_measured") d.counting_slope_measured = boolean(v, key.c_str());
        else if (key == "counting_slope") d.counting_slope = parse_dec(str(v, key.c_str()));
        else if (key == "max_bilinear_error") d.max_bilinear_error = parse_dec(str(v, key.c_str()));
        else if (key == "max_remainder_over_alpha") d.max_remainder_over_alpha = parse_dec(str(v, key.c_str()));
        else if (key == "cover_ratio") d.cover_ratio = parse_dec(str(v, key.c_str()));
        else if (key == "density_mass_ratio") d.density_mass_ratio = parse_dec(str(v, key.c_str()));
        else if (key == "max_tree_ratio") d.max_tree_ratio = parse_dec(str(v, key.c_str()));
        else if (key == "ladder_mass_coeff") d.ladder_mass_coeff = parse_dec(str(v, key.c_str()));
        else bad("unknown report key: decomp." + key);
    }
    return d;
}

}  // namespace

std::string ExperimentReport::to_json() const {
    json j;
    j["kind"] = kind;
    j["version"] = version;
    j["config"] = config;
    j["seed"] = seed;
    j["r_clears_threshold"] = r_clears_threshold;
    j["n_grid"] = n_grid;
    json rs = json::array();
    for (double v : ratios) rs.push_back(dec(v));
    j["ratios"] = rs;
    j["max_ratio"] = dec(max_ratio);
    j["median_ratio"] = dec(median_ratio);
    json cs = json::array();
    for (const SweepCell& c : cells) {
        json mr = json::array();
        for (double v : c.max_ratios) mr.push_back(dec(v));
        cs.push_back(json{{"a", dec(c.a)}, {"max_ratios", mr}, {"r", dec(c.r)}, {"slope", dec(c.slope)}});
    }
    j["cells"] = cs;
    json cp = json::array();
    for (const CountPoint& p : counting)
        cp.push_back(json{{"lambda", dec(p.lambda)}, {"mass", dec(p.mass)}});
    j["counting"] = cp;
    j["decomp"] = decomp_to_json(decomp);
    return j.dump();
}

ExperimentReport ExperimentReport::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("report parse: ") + e.what());
    }
    if (!j.is_object()) bad("report: expected a JSON object");
    ExperimentReport rep;
    rep.version.clear();
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const json& v = item.value();
        if (key == "kind") rep.kind = str(v, "kind");
        else if (key == "version") rep.version = str(v, "version");
        else if (key == "config") rep.config = v.get<std::uint64_t>();
        else if (key == "seed") rep.seed = v.get<std::uint64_t>();
        else if (key == "r_clears_threshold") rep.r_clears_threshold = boolean(v, key.c_str());
        else if (key == "n_grid") {
            for (const json& e : arr(v, "n_grid")) rep.n_grid.push_back(std::size_t(integer(e, "n_grid")));
        } else if (key == "ratios") {
            for (const json& e : arr(v, "ratios")) rep.ratios.push_back(parse_dec(str(e, "ratios")));
        } else if (key == "max_ratio") {
            rep.max_ratio = parse_dec(str(v, key.c_str()));
        } else if (key == "median_ratio") {
            rep.median_ratio = parse_dec(str(v, key.c_str()));
        } else if (key == "cells") {
            for (const json& e : arr(v, "cells")) {
                if (!e.is_object()) bad("cells: expected objects");
                SweepCell cell;
                for (const auto& ci : e.items()) {
                    if (ci.key() == "a") cell.a = parse_dec(str(ci.value(), "cells.a"));
                    else if (ci.key() == "r") cell.r = parse_dec(str(ci.value(), "cells.r"));
                    else if (ci.key() == "slope") cell.slope = parse_dec(str(ci.value(), "cells.slope"));
                    else if (ci.key() == "max_ratios") {
                        for (const json& m : arr(ci.value(), "cells.max_ratios"))
                            cell.max_ratios.push_back(parse_dec(str(m, "cells.max_ratios")));
                    } else bad("unknown report key: cells." + ci.key());
                }
                rep.cells.push_back(std::move(cell));
            }
        } else if (key == "counting") {
            for (const json& e : arr(v, "counting")) {
                if (!e.is_object()) bad("counting: expected objects");
                CountPoint pt;
                for (const auto& ci : e.items()) {
                    if (ci.key() == "lambda") pt.lambda = parse_dec(str(ci.value(), "counting.lambda"));
                    else if (ci.key() == "mass") pt.mass = parse_dec(str(ci.value(), "counting.mass"));
                    else bad("unknown report key: counting." + ci.key());
                }
                rep.counting.push_back(pt);
            }
        } else if (key == "decomp") {
            if (!v.is_object()) bad("decomp: expected an object");
            rep.decomp = decomp_from_json(v);
        } else {
            bad("unknown report key: " + key);
        }
    }
    return rep;
}

std::uint64_t ExperimentReport::digest() const { return fnv1a(to_json()); }

bool ExperimentReport::monitors_ok() const {
    if (!decomp.all_certified || !decomp.separation_ok || !decomp.counting_slope_ok) return false;
    if (!std::isfinite(max_ratio)) return false;
    for (double v : ratios)
        if (!std::isfinite(v)) return false;
    for (const SweepCell& c : cells) {
        if (!std::isfinite(c.slope)) return false;
        for (double v : c.max_ratios)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string ExperimentReport::to_csv() const {
    std::string out;
    if (kind == "sweep-r") {
        out = "r,a,n,max_ratio,slope\n";
        for (const SweepCell& c : cells) {
            const std::size_t cols = std::min(c.max_ratios.size(), n_grid.size());
            for (std::size_t i = 0; i < cols; ++i)
                out += dec(c.r) + "," + dec(c.a) + "," + std::to_string(n_grid[i]) + "," +
                       dec(c.max_ratios[i]) + "," + dec(c.slope) + "\n";
        }
        return out;
    }
    if (kind == "decomposition") {
        out = "metric,value\n";
        const DecompositionSummary& d = decomp;
        out += "instances," + std::to_string(d.instances) + "\n";
        out += "size_selections," + std::to_string(d.size_selections) + "\n";
        out += "density_selections," + std::to_string(d.density_selections) + "\n";
        out += "buckets," + std::to_string(d.buckets) + "\n";
        out += "certificates," + std::to_string(d.certificates) + "\n";
        out += "all_certified," + std::to_string(int(d.all_certified)) + "\n";
        out += "separation_ok," + std::to_string(int(d.separation_ok)) + "\n";
        out += "counting_slope_measured," + std::to_string(int(d.counting_slope_measured)) + "\n";
        out += "counting_slope," + dec(d.counting_slope) + "\n";
        out += "counting_slope_ok," + std::to_string(int(d.counting_slope_ok)) + "\n";
        out += "max_bilinear_error," + dec(d.max_bilinear_error) + "\n";
        out += "max_remainder_over_alpha," + dec(d.max_remainder_over_alpha) + "\n";
        out += "cover_ratio," + dec(d.cover_ratio) + "\n";
        out += "density_mass_ratio," + dec(d.density_mass_ratio) + "\n";
        out += "max_tree_ratio," + dec(d.max_tree_ratio) + "\n";
        out += "ladder_mass_coeff," + dec(d.ladder_mass_coeff) + "\n";
        for (const CountPoint& p : counting)
            out += "mass_above_" + dec(p.lambda) + "," + dec(p.mass) + "\n";
        return out;
    }
    out = "trial,ratio\n";
    for (std::size_t i = 0; i < ratios.size(); ++i)
        out += std::to_string(i) + "," + dec(ratios[i]) + "\n";
    out += "max," + dec(max_ratio) + "\n";
    out += "median," + dec(median_ratio) + "\n";
    return out;
}

namespace {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;
};

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt3g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string render_svg(const std::string& title, const std::string& xlab,
                       const std::string& ylab, const std::vector<Series>& series) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 420\">\n"
        "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";

    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (const Series& s : series)
        for (const auto& [x, y] : s.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!(xmin <= xmax)) {
        svg += "<text x=\"320\" y=\"210\" text-anchor=\"middle\">no data</text>\n</svg>\n";
        return svg;
    }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    const double x0 = 70, x1 = 610, y0 = 360, y1 = 40;
    const auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
    const auto py = [&](double y) { return y0 + (y - ymin) / (ymax - ymin) * (y1 - y0); };

    svg += "<line x1=\"70\" y1=\"360\" x2=\"610\" y2=\"360\" stroke=\"black\"/>\n";
    svg += "<line x1=\"70\" y1=\"360\" x2=\"70\" y2=\"40\" stroke=\"black\"/>\n";
    svg += "<text x=\"340\" y=\"400\" text-anchor=\"middle\" font-size=\"12\">" + xlab + "</text>\n";
    svg += "<text x=\"16\" y=\"200\" font-size=\"12\" transform=\"rotate(-90 16 200)\" "
           "text-anchor=\"middle\">" + ylab + "</text>\n";
    svg += "<text x=\"70\" y=\"376\" font-size=\"10\" text-anchor=\"middle\">" + fmt2(xmin) + "</text>\n";
    svg += "<text x=\"610\" y=\"376\" font-size=\"10\" text-anchor=\"middle\">" + fmt2(xmax) + "</text>\n";
    svg += "<text x=\"64\" y=\"364\" font-size=\"10\" text-anchor=\"end\">" + fmt2(ymin) + "</text>\n";
    svg += "<text x=\"64\" y=\"44\" font-size=\"10\" text-anchor=\"end\">" + fmt2(ymax) + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        if (s.pts.empty()) continue;
        const char* color = palette[si % (sizeof palette / sizeof *palette)];
        std::string pts;
        for (const auto& [x, y] : s.pts) pts += fmt2(px(x)) + "," + fmt2(py(y)) + " ";
        svg += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" points=\"" + pts + "\"/>\n";
        for (const auto& [x, y] : s.pts)
            svg += std::string("<circle cx=\"") + fmt2(px(x)) + "\" cy=\"" + fmt2(py(y)) +
                   "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
        svg += std::string("<text x=\"") + fmt2(px(s.pts.back().first) + 4) + "\" y=\"" +
               fmt2(py(s.pts.back().second)) + "\" font-size=\"10\" fill=\"" + color + "\">" +
               s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace

std::string ExperimentReport::to_svg() const {
    std::vector<Series> series;
    if (kind == "sweep-r") {
        for (const SweepCell& c : cells) {
            Series s;
            s.label = "r=" + fmt3g(c.r) + " a=" + fmt3g(c.a);
            const std::size_t cols = std::min(c.max_ratios.size(), n_grid.size());
            for (std::size_t i = 0; i < cols; ++i)
                if (c.max_ratios[i] > 0.0)
                    s.pts.emplace_back(std::log2(double(n_grid[i])), std::log2(c.max_ratios[i]));
            series.push_back(std::move(s));
        }
        return render_svg(kind, "log2 n", "log2 max ratio", series);
    }
    if (kind == "decomposition") {
        Series s;
        s.label = "counting";
        for (const CountPoint& p : counting)
            if (p.mass > 0.0) s.pts.emplace_back(std::log2(p.lambda), std::log2(p.mass));
        series.push_back(std::move(s));
        return render_svg(kind, "log2 lambda", "log2 mass", series);
    }
    Series s;
    s.label = "ratio";
    for (std::size_t i = 0; i < ratios.size(); ++i) s.pts.emplace_back(double(i), ratios[i]);
    series.push_back(std::move(s));
    return render_svg(kind, "trial", "ratio", series);
}

}  // namespace vclab
