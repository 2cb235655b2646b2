#include "vclab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace vclab {

namespace {

using nlohmann::json;

std::string dec(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double undec(const std::string& s) {
    const char* p = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p || *end != '\0') throw std::invalid_argument("bad decimal literal: " + s);
    return v;
}

// Maximal tree among `alive` with top interval `it` and top frequency `xi`
// (which need not be cell-aligned: the shifted side trees of the density
// selection use half-cell offsets).
Tree tree_at(const TileCollection& coll, const std::vector<std::size_t>& alive,
             const DyadicInterval& it, double xi, bool overlapping_only) {
    Tree tree{it, xi, {}};
    const double c2 = coll.constants().C2;
    const double half = std::ldexp(1.0, it.depth - 1);
    const Interval om{xi - half, xi + half};
    for (std::size_t i : alive) {
        const Bitile& b = coll[i];
        if (!it.contains(b.space())) continue;
        if (!b.ompt.contains(om)) continue;
        if (overlapping_only && !b.om2.dilated(c2).contains(xi)) continue;
        tree.members.push_back(i);
    }
    return tree;
}

void remove_members(std::vector<std::size_t>& alive, const std::vector<std::size_t>& gone) {
    std::vector<std::size_t> next;
    next.reserve(alive.size());
    std::size_t j = 0;
    for (std::size_t i : alive) {
        while (j < gone.size() && gone[j] < i) ++j;
        if (j < gone.size() && gone[j] == i) continue;
        next.push_back(i);
    }
    alive.swap(next);
}

std::vector<std::size_t> sorted_union(std::initializer_list<const std::vector<std::size_t>*> lists) {
    std::vector<std::size_t> out;
    for (const auto* l : lists) out.insert(out.end(), l->begin(), l->end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

json tree_to_json(const Tree& t) {
    json j;
    j["depth"] = t.top.depth;
    j["pos"] = t.top.index;
    j["xi"] = dec(t.xi);
    j["members"] = t.members;
    return j;
}

Tree tree_from_json(const json& j) {
    Tree t;
    t.top = DyadicInterval{j.at("depth").get<int>(), j.at("pos").get<std::int64_t>()};
    t.xi = undec(j.at("xi").get<std::string>());
    t.members = j.at("members").get<std::vector<std::size_t>>();
    return t;
}

// (1/n) sum_x chi_{I_T}(x)^D |g|^{r'} A_omega(x) w(x) with A_omega the
// linearization mass landing in omega; the quantity certified by a density
// selection. Recomputed from scratch during reverification.
double density_integral_direct(const TileCollection& coll, const Tree& tree, const Signal& g,
                               const Weight& w, const Linearization& lin) {
    const std::size_t n = coll.grid_size();
    const double rp = lin.rprime();
    const double D = coll.constants().D;
    const Interval it = tree.top.to_interval();
    const Interval om = tree.omega();
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double a = 0.0;
        for (int j = 1; j <= lin.K(x); ++j) {
            if (om.contains(lin.threshold(x, j))) a += std::pow(std::abs(lin.coeff(x, j)), rp);
        }
        if (a == 0.0) continue;
        const double xv = static_cast<double>(x) / static_cast<double>(n);
        acc += std::pow(chi_tilde(it, xv), D) * std::pow(std::abs(g[x]), rp) * a * w.sample(x);
    }
    return acc / static_cast<double>(n);
}

bool fail(std::string* why, const std::string& msg) {
    if (why) *why = msg;
    return false;
}

}  // namespace

std::vector<Tree> DecompositionResult::trees() const {
    std::vector<Tree> out;
    out.reserve(selections.size());
    for (const Selection& s : selections) out.push_back(s.tree);
    return out;
}

std::vector<Tree> DecompositionResult::witnesses() const {
    std::vector<Tree> out;
    out.reserve(selections.size());
    for (const Selection& s : selections) out.push_back(s.witness);
    return out;
}

DecompositionResult size_decompose(const TileCollection& P, const Signal& f, const Weight& w,
                                   double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("size_decompose: alpha must be positive");
    if (f.size() != P.grid_size()) throw std::invalid_argument("size_decompose: grid mismatch");

    const std::vector<cplx> coeffs = packet_coefficients(P, f);
    std::vector<std::size_t> alive(P.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    DecompositionResult res;
    res.kind = DecompositionResult::Kind::size;
    res.alpha = alpha;

    std::vector<cplx> masked = coeffs;
    while (!alive.empty()) {
        // Tops are re-scored with dead coefficients zeroed out; a top whose
        // 2-overlapping tree lost all members scores zero and cannot fire.
        const auto energies = tree_energies(P, masked, w);
        bool found = false;
        TreeTop best_top;
        double best_energy = 0.0, best_mass = 0.0;
        std::tuple<double, double, double> best_key;
        for (const auto& [top, energy] : energies) {
            const double mass = w.mass(top.space());
            if (!(energy >= alpha * alpha * mass)) continue;
            const std::tuple<double, double, double> key{
                top.xi(), top.space().to_interval().lo, top.omega().lo};
            if (!found || key < best_key) {
                found = true;
                best_key = key;
                best_top = top;
                best_energy = energy;
                best_mass = mass;
            }
        }
        if (!found) break;

        Selection sel;
        sel.tree = tree_at(P, alive, best_top.space(), best_top.xi(), false);
        sel.witness = tree_at(P, alive, best_top.space(), best_top.xi(), true);
        sel.removed = sel.tree.members;
        sel.top_mass = best_mass;
        sel.energy = best_energy;
        remove_members(alive, sel.removed);
        for (std::size_t i : sel.removed) masked[i] = 0.0;
        res.selections.push_back(std::move(sel));
    }

    res.remainder = alive;
    res.remainder_metric = collection_size(P, masked, w);
    return res;
}

DecompositionResult density_decompose(const TileCollection& P, const Signal& g, const Weight& w,
                                      const Linearization& lin, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("density_decompose: alpha must be positive");
    if (g.size() != P.grid_size() || lin.size() != P.grid_size())
        throw std::invalid_argument("density_decompose: grid mismatch");

    const auto values = density_values(P, g, w, lin, DensityMode::standard);
    const double rp = lin.rprime();

    std::vector<std::size_t> alive(P.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    DecompositionResult res;
    res.kind = DecompositionResult::Kind::density;
    res.alpha = alpha;

    while (!alive.empty()) {
        bool found = false;
        TreeTop best_top;
        double best_value = 0.0;
        std::tuple<int, std::int64_t, std::int64_t> best_key;
        for (const auto& [top, value] : values) {
            if (!(value > alpha)) continue;
            // |I_T| maximal means smallest depth; ties leftmost then lowest cell.
            const std::tuple<int, std::int64_t, std::int64_t> key{top.depth, top.pos, top.cell};
            if (found && key >= best_key) continue;
            const DyadicInterval it = top.space();
            const Interval om = top.omega();
            bool eligible = false;
            for (std::size_t i : alive) {
                const Bitile& b = P[i];
                if (it.contains(b.space()) && b.ompt.contains(om)) {
                    eligible = true;
                    break;
                }
            }
            if (!eligible) continue;
            found = true;
            best_key = key;
            best_top = top;
            best_value = value;
        }
        if (!found) break;

        const DyadicInterval it = best_top.space();
        const double xi = best_top.xi();
        const double halfcell = std::ldexp(1.0, it.depth - 1);
        Selection sel;
        sel.tree = tree_at(P, alive, it, xi, false);
        sel.side_lo = tree_at(P, alive, it, xi - halfcell, false);
        sel.side_hi = tree_at(P, alive, it, xi + halfcell, false);
        sel.removed = sorted_union({&sel.tree.members, &sel.side_lo.members, &sel.side_hi.members});
        sel.top_mass = w.mass(it);
        sel.energy = std::pow(best_value, rp) * sel.top_mass;
        remove_members(alive, sel.removed);
        res.selections.push_back(std::move(sel));
    }

    res.remainder = alive;
    double rem = 0.0;
    for (const auto& [top, value] : values) {
        if (value <= rem) continue;
        const DyadicInterval it = top.space();
        const Interval om = top.omega();
        for (std::size_t i : alive) {
            const Bitile& b = P[i];
            if (it.contains(b.space()) && b.ompt.contains(om)) {
                rem = value;
                break;
            }
        }
    }
    res.remainder_metric = rem;
    return res;
}

Signal counting_function(const std::vector<Tree>& trees, int k, std::size_t n) {
    if (k < 0) throw std::invalid_argument("counting_function: k must be nonnegative");
    Signal out(n);
    for (const Tree& t : trees) {
        const double len = std::ldexp(1.0, k - t.top.depth);
        if (len >= 1.0) {
            for (std::size_t x = 0; x < n; ++x) out[x] += 1.0;
            continue;
        }
        const double lo = t.top.center() - 0.5 * len;
        for (std::size_t x = 0; x < n; ++x) {
            double rel = std::fmod(static_cast<double>(x) / static_cast<double>(n) - lo, 1.0);
            if (rel < 0.0) rel += 1.0;
            if (rel < len) out[x] += 1.0;
        }
    }
    return out;
}

SeparationReport check_well_separated(const TileCollection& coll, const std::vector<Tree>& trees) {
    for (const Tree& t : trees) {
        if (!is_tree(coll, t) || classify_tree(coll, t) != TreeKind::overlapping2)
            throw std::invalid_argument("check_well_separated: trees must be 2-overlapping");
    }
    const double c3 = coll.constants().C3;
    SeparationReport rep;
    for (std::size_t a = 0; a < trees.size(); ++a) {
        const Interval ta = trees[a].top.to_interval();
        for (std::size_t b = 0; b < trees.size(); ++b) {
            for (std::size_t ia = 0; ia < trees[a].members.size(); ++ia) {
                const Bitile& pa = coll[trees[a].members[ia]];
                for (std::size_t ib = 0; ib < trees[b].members.size(); ++ib) {
                    if (a == b && ia == ib) continue;
                    const Bitile& pb = coll[trees[b].members[ib]];
                    const bool freq_meet =
                        pa.om1.dilated(c3).intersects(pb.om1.dilated(c3));
                    if (a != b && pa.depth < pb.depth) {
                        // (i): coarser pa in tree a, finer pb elsewhere.
                        if (freq_meet && pb.space().to_interval().intersects(ta)) {
                            rep.ok = false;
                            rep.condition = 1;
                            rep.tree_a = a;
                            rep.tree_b = b;
                            rep.member_a = ia;
                            rep.member_b = ib;
                            return rep;
                        }
                    }
                    if (b >= a && pa.depth == pb.depth) {
                        // (ii): equal scales occupy disjoint rectangles.
                        if (freq_meet &&
                            pa.space().to_interval().intersects(pb.space().to_interval())) {
                            rep.ok = false;
                            rep.condition = 2;
                            rep.tree_a = a;
                            rep.tree_b = b;
                            rep.member_a = ia;
                            rep.member_b = ib;
                            return rep;
                        }
                    }
                }
            }
        }
    }
    return rep;
}

std::vector<LadderBucket> two_parameter_decompose(const TileCollection& P, const Signal& f,
                                                  const Signal& g, const Weight& w,
                                                  const Linearization& lin, double q0, double r) {
    if (!(q0 > 1.0)) throw std::invalid_argument("two_parameter_decompose: need q0 > 1");
    if (!(r > 2.0 * q0)) throw std::invalid_argument("two_parameter_decompose: need r > 2 q0");
    const double rp = r / (r - 1.0);
    if (std::abs(rp - lin.rprime()) > 1e-9)
        throw std::invalid_argument("two_parameter_decompose: linearization exponent mismatch");

    const std::size_t n = P.grid_size();
    double suppmass = 0.0;
    for (std::size_t x = 0; x < n; ++x)
        if (std::abs(f[x]) != 0.0) suppmass += w.sample(x);
    suppmass /= static_cast<double>(n);
    const double E1 = std::pow(suppmass, 1.0 / (2.0 * q0));

    const std::vector<cplx> coeffs = packet_coefficients(P, f);
    std::vector<std::size_t> alive(P.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    const auto size_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<cplx> masked(P.size(), 0.0);
        for (std::size_t i : idx) masked[i] = coeffs[i];
        return collection_size(P, masked, w);
    };
    const auto density_of = [&](const std::vector<std::size_t>& idx) {
        if (idx.empty()) return 0.0;
        return collection_density(P.subset(idx), g, w, lin, DensityMode::standard);
    };
    const auto sigma = [&](long long lvl) {
        return std::exp2(-static_cast<double>(lvl) / (2.0 * q0)) * E1;
    };
    const auto delta = [&](long long lvl) {
        return std::exp2(-static_cast<double>(lvl) / rp);
    };
    // Largest level whose thresholds still sit above the current size and
    // density, nudged down until both hold exactly.
    const auto level_for = [&](double S, double Dv) {
        double cand = std::numeric_limits<double>::infinity();
        if (S > 0.0) cand = std::min(cand, std::floor(2.0 * q0 * std::log2(E1 / S) + 1e-12));
        if (Dv > 0.0) cand = std::min(cand, std::floor(rp * std::log2(1.0 / Dv) + 1e-12));
        long long lvl = static_cast<long long>(cand);
        while (sigma(lvl) < S || delta(lvl) < Dv) --lvl;
        return lvl;
    };

    std::vector<LadderBucket> buckets;
    double S = size_of(alive), Dv = density_of(alive);
    if (alive.empty()) return buckets;
    if (S <= 0.0 && Dv <= 0.0) {
        LadderBucket b;
        b.level = 0;
        b.members = alive;
        b.size_bound = sigma(0);
        b.density_bound = delta(0);
        buckets.push_back(std::move(b));
        return buckets;
    }

    long long lvl = level_for(S, Dv);
    int idle = 0;
    while (!alive.empty()) {
        if (S <= 0.0 && Dv <= 0.0) {
            // Nothing left that either threshold can see; the leftover
            // carries zero coefficients and zero density, so it satisfies
            // any bucket's bounds. Fold it into the last one.
            if (buckets.empty()) {
                LadderBucket b;
                b.level = static_cast<int>(lvl);
                b.size_bound = sigma(lvl);
                b.density_bound = delta(lvl);
                buckets.push_back(std::move(b));
            }
            LadderBucket& back = buckets.back();
            back.members = sorted_union({&back.members, &alive});
            back.size_actual = size_of(back.members);
            back.density_actual = density_of(back.members);
            alive.clear();
            break;
        }

        const TileCollection sub = P.subset(alive);
        std::vector<cplx> sub_coeffs(alive.size());
        for (std::size_t j = 0; j < alive.size(); ++j) sub_coeffs[j] = coeffs[alive[j]];

        DecompositionResult rs = size_decompose(sub, f, w, sigma(lvl + 1));
        std::vector<std::size_t> alive2;
        alive2.reserve(rs.remainder.size());
        for (std::size_t j : rs.remainder) alive2.push_back(alive[j]);
        const TileCollection sub2 = P.subset(alive2);
        DecompositionResult rd = density_decompose(sub2, g, w, lin, delta(lvl + 1));

        LadderBucket bucket;
        bucket.level = static_cast<int>(lvl);
        bucket.size_bound = sigma(lvl);
        bucket.density_bound = delta(lvl);
        const auto remap = [](Selection& s, const std::vector<std::size_t>& map) {
            for (auto* t : {&s.tree, &s.witness, &s.side_lo, &s.side_hi})
                for (std::size_t& i : t->members) i = map[i];
            for (std::size_t& i : s.removed) i = map[i];
            std::sort(s.removed.begin(), s.removed.end());
        };
        for (Selection& s : rs.selections) {
            remap(s, alive);
            bucket.top_mass_sum += s.top_mass;
            bucket.members = sorted_union({&bucket.members, &s.removed});
            bucket.selections.push_back(std::move(s));
        }
        for (Selection& s : rd.selections) {
            remap(s, alive2);
            bucket.top_mass_sum += s.top_mass;
            bucket.members = sorted_union({&bucket.members, &s.removed});
            bucket.selections.push_back(std::move(s));
        }

        std::vector<std::size_t> next;
        next.reserve(rd.remainder.size());
        for (std::size_t j : rd.remainder) next.push_back(alive2[j]);
        alive.swap(next);

        if (!bucket.members.empty()) {
            bucket.size_actual = size_of(bucket.members);
            bucket.density_actual = density_of(bucket.members);
            buckets.push_back(std::move(bucket));
            idle = 0;
        } else if (++idle > 4096) {
            throw std::logic_error("two_parameter_decompose: ladder stalled");
        }

        S = size_of(alive);
        Dv = density_of(alive);
        if (alive.empty()) break;
        lvl = std::max(lvl + 1, (S <= 0.0 && Dv <= 0.0) ? lvl + 1 : level_for(S, Dv));
    }
    return buckets;
}

TreeEstimate tree_estimate_ratio(const TileCollection& coll, const Tree& tree, const Signal& f,
                                 const Signal& g, const Weight& w, const Linearization& lin,
                                 double s, int shell, double decay) {
    if (!is_tree(coll, tree)) throw std::invalid_argument("tree_estimate_ratio: not a tree");
    if (!(s >= 1.0) || s > lin.rprime() + 1e-12)
        throw std::invalid_argument("tree_estimate_ratio: s must lie in [1, r']");
    if (shell < -1) throw std::invalid_argument("tree_estimate_ratio: shell must be >= -1");

    TreeEstimate est;
    if (tree.members.empty()) {
        est.degenerate = true;
        return est;
    }
    const std::size_t n = coll.grid_size();
    const TileCollection sub = coll.subset(tree.members);
    const double size_t_ = collection_size(sub, f, w);
    const double dens_t = collection_density(sub, g, w, lin, DensityMode::standard);

    const Signal cf = model_operator(sub, f, lin);
    const double tlen = tree.top.length();
    const double c = tree.top.center();
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        const double xv = static_cast<double>(x) / static_cast<double>(n);
        bool in_region;
        if (shell < 0) {
            in_region = tree.top.to_interval().contains(xv);
        } else {
            const double len_in = std::ldexp(tlen, shell);
            const double len_out = std::ldexp(tlen, shell + 1);
            const auto inside = [&](double len) {
                if (len >= 1.0) return true;
                double rel = std::fmod(xv - (c - 0.5 * len), 1.0);
                if (rel < 0.0) rel += 1.0;
                return rel < len;
            };
            in_region = inside(len_out) && !inside(len_in);
        }
        if (!in_region) continue;
        acc += std::pow(std::abs(g[x] * cf[x]), s) * w.sample(x);
    }
    const double num = std::pow(acc / static_cast<double>(n), 1.0 / s);
    const double denom_core = std::pow(w.mass(tree.top), 1.0 / s);
    const double boost = shell >= 0 ? std::exp2(decay * shell) : 1.0;

    if (size_t_ * dens_t <= 0.0) {
        est.degenerate = true;
    } else {
        est.ratio = boost * num / (denom_core * size_t_ * dens_t);
    }

    bool disjoint = true;
    for (std::size_t a = 0; a < tree.members.size() && disjoint; ++a) {
        const Bitile& pa = coll[tree.members[a]];
        for (std::size_t b = a + 1; b < tree.members.size() && disjoint; ++b) {
            const Bitile& pb = coll[tree.members[b]];
            if (pa.space().to_interval().intersects(pb.space().to_interval()) &&
                pa.omp.intersects(pb.omp))
                disjoint = false;
        }
    }
    est.improved_available = disjoint;
    if (disjoint) {
        const double dens_imp = collection_density(sub, g, w, lin, DensityMode::improved);
        if (size_t_ * dens_imp > 0.0)
            est.improved_ratio = boost * num / (denom_core * size_t_ * dens_imp);
    }
    return est;
}

std::string result_to_json(const TileCollection& coll, const DecompositionResult& res) {
    json j;
    j["format"] = "vclab-decomposition";
    j["version"] = 1;
    j["kind"] = res.kind == DecompositionResult::Kind::size ? "size" : "density";
    j["alpha"] = dec(res.alpha);
    j["collection"] = coll.to_text();
    j["selections"] = json::array();
    for (const Selection& s : res.selections) {
        json js;
        js["tree"] = tree_to_json(s.tree);
        js["witness"] = tree_to_json(s.witness);
        js["side_lo"] = tree_to_json(s.side_lo);
        js["side_hi"] = tree_to_json(s.side_hi);
        js["removed"] = s.removed;
        js["top_mass"] = dec(s.top_mass);
        js["energy"] = dec(s.energy);
        j["selections"].push_back(std::move(js));
    }
    j["remainder"] = res.remainder;
    j["remainder_metric"] = dec(res.remainder_metric);
    return j.dump(2);
}

DecompositionResult result_from_json(const std::string& text, TileCollection& coll_out) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "vclab-decomposition" ||
        j.at("version").get<int>() != 1)
        throw std::invalid_argument("result_from_json: unrecognized payload");
    coll_out = TileCollection::from_text(j.at("collection").get<std::string>());

    DecompositionResult res;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "size")
        res.kind = DecompositionResult::Kind::size;
    else if (kind == "density")
        res.kind = DecompositionResult::Kind::density;
    else
        throw std::invalid_argument("result_from_json: bad kind");
    res.alpha = undec(j.at("alpha").get<std::string>());
    for (const json& js : j.at("selections")) {
        Selection s;
        s.tree = tree_from_json(js.at("tree"));
        s.witness = tree_from_json(js.at("witness"));
        s.side_lo = tree_from_json(js.at("side_lo"));
        s.side_hi = tree_from_json(js.at("side_hi"));
        s.removed = js.at("removed").get<std::vector<std::size_t>>();
        s.top_mass = undec(js.at("top_mass").get<std::string>());
        s.energy = undec(js.at("energy").get<std::string>());
        res.selections.push_back(std::move(s));
    }
    res.remainder = j.at("remainder").get<std::vector<std::size_t>>();
    res.remainder_metric = undec(j.at("remainder_metric").get<std::string>());
    return res;
}

bool reverify(const TileCollection& coll, const DecompositionResult& res, const Signal& f,
              const Signal* g, const Weight& w, const Linearization* lin, std::string* why) {
    const bool is_size = res.kind == DecompositionResult::Kind::size;
    if (!is_size && (g == nullptr || lin == nullptr))
        return fail(why, "density result needs g and the linearization");
    if (!(res.alpha > 0.0)) return fail(why, "alpha not positive");

    // Partition structure: every index removed exactly once or left over.
    std::vector<int> seen(coll.size(), 0);
    for (const Selection& s : res.selections)
        for (std::size_t i : s.removed) {
            if (i >= coll.size()) return fail(why, "member index out of range");
            ++seen[i];
        }
    for (std::size_t i : res.remainder) {
        if (i >= coll.size()) return fail(why, "remainder index out of range");
        ++seen[i];
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i] != 1) return fail(why, "selections and remainder do not partition the input");

    const std::vector<cplx> coeffs = packet_coefficients(coll, f);
    const double rtol = 1e-9;
    for (std::size_t si = 0; si < res.selections.size(); ++si) {
        const Selection& s = res.selections[si];
        const std::string tag = "selection " + std::to_string(si) + ": ";
        if (!is_tree(coll, s.tree) || !is_tree(coll, s.witness)) return fail(why, tag + "bad tree");
        for (std::size_t i : s.witness.members) {
            if (std::find(s.tree.members.begin(), s.tree.members.end(), i) ==
                s.tree.members.end())
                return fail(why, tag + "witness escapes the tree");
        }
        const double mass = w.mass(s.tree.top);
        if (std::abs(mass - s.top_mass) > rtol * std::max(1.0, mass))
            return fail(why, tag + "top mass drifted");

        double energy = 0.0;
        if (is_size) {
            for (std::size_t i : s.witness.members)
                energy += std::norm(coeffs[i]) * w.mass(coll[i].space()) / coll[i].space().length();
            if (std::abs(energy - s.energy) > rtol * std::max(1.0, std::abs(s.energy)))
                return fail(why, tag + "witness energy drifted");
            if (!(res.alpha * res.alpha * mass <= energy * (1.0 + 1e-12)))
                return fail(why, tag + "selection inequality fails");
        } else {
            if (!is_tree(coll, s.side_lo) || !is_tree(coll, s.side_hi))
                return fail(why, tag + "bad side tree");
            energy = density_integral_direct(coll, s.tree, *g, w, *lin);
            if (std::abs(energy - s.energy) > rtol * std::max(1.0, std::abs(s.energy)))
                return fail(why, tag + "density integral drifted");
            if (!(mass <= std::pow(res.alpha, -lin->rprime()) * energy * (1.0 + 1e-12)))
                return fail(why, tag + "selection inequality fails");
        }
    }

    // Remainder metric and the terminal bound.
    double metric;
    if (is_size) {
        std::vector<cplx> masked(coll.size(), 0.0);
        for (std::size_t i : res.remainder) masked[i] = coeffs[i];
        metric = collection_size(coll, masked, w);
        if (!(metric < res.alpha)) return fail(why, "remainder size not below alpha");
    } else {
        metric = res.remainder.empty()
                     ? 0.0
                     : collection_density(coll.subset(res.remainder), *g, w, *lin,
                                          DensityMode::standard);
        if (!(metric <= res.alpha * (1.0 + 1e-12)))
            return fail(why, "remainder density exceeds alpha");
    }
    if (std::abs(metric - res.remainder_metric) > rtol * std::max(1.0, metric))
        return fail(why, "remainder metric drifted");
    return true;
}

}  // namespace vclab
