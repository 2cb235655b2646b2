#include "vclab/phaseplane.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace vclab {

namespace {

constexpr double kPacketCutoff = 1e-14;

double bump(double v) {
    if (!(std::abs(v) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - v * v));
}

// Visits the integer frequencies of the packet spectrum for `tile` with the
// complex amplitude sqrt(|I|) * bump * e^{-2 pi i c(I) k}. Throws when the
// support would stick out of the resolvable band.
template <class F>
void for_packet_support(const Tile& tile, const AdmissibleConstants& consts, std::size_t n,
                        F&& fn) {
    const Interval band{-0.5 * static_cast<double>(n), 0.5 * static_cast<double>(n)};
    const Interval supp = tile.freq.dilated(consts.C3);
    const double c = tile.freq.center();
    const double half = consts.C3 * tile.freq.length() / 2.0;
    const double amp = std::sqrt(tile.space.length());
    const double xc = tile.space.center();
    bool any = false;
    const auto klo = static_cast<long long>(std::ceil(supp.lo));
    const auto khi = static_cast<long long>(std::floor(supp.hi));
    for (long long k = klo; k <= khi; ++k) {
        const double b = bump((static_cast<double>(k) - c) / half);
        if (b < kPacketCutoff) continue;
        if (static_cast<double>(k) < band.lo || static_cast<double>(k) >= band.hi)
            throw std::invalid_argument("wave packet: frequency support clipped by the band");
        any = true;
        const double phase = -2.0 * std::numbers::pi * xc * static_cast<double>(k);
        fn(k, amp * b * std::polar(1.0, phase));
    }
    if (!any)
        throw std::invalid_argument("wave packet: no lattice frequency survives the C3 cutoff");
}

cplx coefficient_from_spectrum(const Spectrum& fhat, const Tile& tile,
                               const AdmissibleConstants& consts) {
    cplx acc = 0.0;
    for_packet_support(tile, consts, fhat.size(), [&](long long k, cplx a) {
        acc += fhat.at(static_cast<int>(k)) * std::conj(a);
    });
    return acc;
}

// Packs a candidate top into one key; fits any grid up to 2^15 samples.
std::uint64_t top_key(int depth, std::int64_t pos, std::int64_t cell) {
    return (static_cast<std::uint64_t>(depth) << 32) |
           (static_cast<std::uint64_t>(pos) << 16) |
           static_cast<std::uint64_t>(cell + 32768);
}

TreeTop top_from_key(std::uint64_t key) {
    TreeTop t;
    t.depth = static_cast<int>(key >> 32);
    t.pos = static_cast<std::int64_t>((key >> 16) & 0xffff);
    t.cell = static_cast<std::int64_t>(key & 0xffff) - 32768;
    return t;
}

bool top_order(const TreeTop& a, const TreeTop& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.pos != b.pos) return a.pos < b.pos;
    return a.cell < b.cell;
}

// Enumerates every (ancestor interval, frequency cell) pair admissible as a
// top for the given member: cell inside the C2-hull, optionally with its
// center in C2*om2.
template <class F>
void for_member_tops(const Bitile& bit, double c2, bool overlapping_only, F&& fn) {
    const Interval c2om2 = bit.om2.dilated(c2);
    for (int dt = 0; dt <= bit.depth; ++dt) {
        const std::int64_t anc = bit.pos >> (bit.depth - dt);
        const double H = std::ldexp(1.0, dt);
        const auto mlo = static_cast<std::int64_t>(std::ceil(bit.ompt.lo / H - 1e-12));
        const auto mhi = static_cast<std::int64_t>(std::floor(bit.ompt.hi / H + 1e-12)) - 1;
        for (std::int64_t m = mlo; m <= mhi; ++m) {
            if (overlapping_only &&
                !c2om2.contains((static_cast<double>(m) + 0.5) * H))
                continue;
            fn(dt, anc, m);
        }
    }
}

}  // namespace

void AdmissibleConstants::validate() const {
    const bool finite = std::isfinite(C1) && std::isfinite(C2) && std::isfinite(C21) &&
                        std::isfinite(C22) && std::isfinite(C3) && std::isfinite(K0) &&
                        std::isfinite(D);
    if (!finite) throw std::invalid_argument("admissible constants must be finite");
    if (!(C2 >= 1.0)) throw std::invalid_argument("admissible constants need C2 >= 1");
    if (!(C3 > 0.0 && C3 < C2))
        throw std::invalid_argument("admissible constants need C3 in (0, C2)");
    if (!(C21 >= C2 && C22 >= C2 && C1 >= C2))
        throw std::invalid_argument("admissible constants need C21, C22, C1 >= C2");
    if (!(K0 > 2.0 / (C2 - C3)))
        throw std::invalid_argument("admissible constants need K0 > 2/(C2 - C3)");
    if (!(D >= 1.0)) throw std::invalid_argument("admissible constants need D >= 1");
}

int AdmissibleConstants::omega_gap() const {
    return std::max(1, static_cast<int>(std::ceil(C2 - 1e-12)));
}

double AdmissibleConstants::hull_units() const {
    return static_cast<double>(omega_gap()) + (C21 + C22) / 2.0;
}

int AdmissibleConstants::freq_stride() const {
    return static_cast<int>(std::ceil(hull_units() - 1e-12));
}

Bitile Bitile::make(int depth, std::int64_t pos, std::int64_t fidx,
                    const AdmissibleConstants& consts) {
    if (depth < 0 || depth > 62) throw std::invalid_argument("bitile depth out of range");
    if (pos < 0 || pos >= (std::int64_t{1} << depth))
        throw std::invalid_argument("bitile spatial index out of range");
    Bitile b;
    b.depth = depth;
    b.pos = pos;
    b.fidx = fidx;
    const double h = std::ldexp(1.0, depth);
    const auto cell = [h](std::int64_t a) {
        return Interval{static_cast<double>(a) * h, static_cast<double>(a + 1) * h};
    };
    b.om1 = cell(fidx);
    b.om2 = cell(fidx + consts.omega_gap());
    b.omp = Interval::hull(b.om1.dilated(consts.C21), b.om2.dilated(consts.C22));
    b.ompt = Interval::hull(b.om1.dilated(consts.C2), b.om2.dilated(consts.C2));
    if (b.omp.length() > consts.C1 * (b.om1.length() + b.om2.length()) + 1e-9)
        throw std::invalid_argument("bitile hull exceeds the C1 budget");
    return b;
}

TileCollection::TileCollection(std::size_t n, AdmissibleConstants consts,
                               std::vector<Bitile> tiles)
    : n_(n), consts_(consts) {
    if (n < 8 || !is_pow2(n))
        throw std::invalid_argument("tile collection grid size must be a power of two >= 8");
    consts_.validate();
    const int levels = log2_exact(n);
    tiles_.reserve(tiles.size());
    for (const Bitile& t : tiles) {
        if (t.depth > levels)
            throw std::invalid_argument("bitile finer than the grid");
        Bitile b = Bitile::make(t.depth, t.pos, t.fidx, consts_);
        const double half = 0.5 * static_cast<double>(n);
        if (b.omp.lo < -half || b.omp.hi > half)
            throw std::invalid_argument("bitile frequency hull outside the band");
        tiles_.push_back(b);
    }
    std::sort(tiles_.begin(), tiles_.end(), [](const Bitile& a, const Bitile& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.fidx < b.fidx;
    });
    for (std::size_t i = 1; i < tiles_.size(); ++i) {
        const Bitile &a = tiles_[i - 1], &b = tiles_[i];
        if (a.depth == b.depth && a.pos == b.pos && a.fidx == b.fidx)
            throw std::invalid_argument("duplicate bitile in collection");
    }

    // (S1): the normalized gap between the child tiles is scale-free.
    double gmin = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < tiles_.size(); ++i) {
        const double g = (tiles_[i].om2.lo - tiles_[i].om1.hi) / tiles_[i].om1.length();
        if (i == 0) gmin = gmax = g;
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
    }
    s1_ = tiles_.size() <= 1 || (gmax - gmin) <= 1e-12;

    // (S2): at one scale, hulls either coincide or are disjoint.
    s2_ = true;
    for (std::size_t i = 0; i + 1 < tiles_.size() && s2_; ++i) {
        std::vector<Interval> hulls;
        const int d = tiles_[i].depth;
        std::size_t j = i;
        while (j < tiles_.size() && tiles_[j].depth == d) hulls.push_back(tiles_[j++].omp);
        std::sort(hulls.begin(), hulls.end(), [](const Interval& a, const Interval& b) {
            return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
        });
        for (std::size_t k = 1; k < hulls.size(); ++k) {
            const bool equal = hulls[k].lo == hulls[k - 1].lo && hulls[k].hi == hulls[k - 1].hi;
            if (!equal && hulls[k].lo < hulls[k - 1].hi) {
                s2_ = false;
                break;
            }
        }
        i = j - 1;
    }

    // (S3): a spatially longer bitile has a hull strictly K0 times narrower
    // than any shorter bitile's lower tile.
    std::vector<int> depths;
    for (const Bitile& t : tiles_)
        if (depths.empty() || depths.back() != t.depth) depths.push_back(t.depth);
    s3_ = true;
    for (std::size_t a = 0; a < depths.size(); ++a) {
        for (std::size_t b = a + 1; b < depths.size(); ++b) {
            const double wide = consts_.hull_units() * std::ldexp(1.0, depths[a]);
            const double low = std::ldexp(1.0, depths[b]);
            if (!(wide < low / consts_.K0)) s3_ = false;
        }
    }
}

TileCollection TileCollection::subset(const std::vector<std::size_t>& indices) const {
    std::vector<Bitile> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= tiles_.size()) throw std::out_of_range("tile collection subset index");
        picked.push_back(tiles_[i]);
    }
    return TileCollection(n_, consts_, std::move(picked));
}

std::string TileCollection::to_text() const {
    std::string out = "vclab-tiles 1\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "n %zu\n", n_);
    out += buf;
    std::snprintf(buf, sizeof(buf), "consts %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  consts_.C1, consts_.C2, consts_.C21, consts_.C22, consts_.C3, consts_.K0,
                  consts_.D);
    out += buf;
    for (const Bitile& t : tiles_) {
        std::snprintf(buf, sizeof(buf), "tile %d %lld %lld\n", t.depth,
                      static_cast<long long>(t.pos), static_cast<long long>(t.fidx));
        out += buf;
    }
    return out;
}

TileCollection TileCollection::from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "vclab-tiles 1")
        throw std::invalid_argument("tile text: bad magic line");
    std::size_t n = 0;
    AdmissibleConstants consts;
    bool have_n = false, have_consts = false;
    std::vector<Bitile> tiles;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "n") {
            ls >> n;
            have_n = !ls.fail();
        } else if (tag == "consts") {
            ls >> consts.C1 >> consts.C2 >> consts.C21 >> consts.C22 >> consts.C3 >> consts.K0 >>
                consts.D;
            have_consts = !ls.fail();
        } else if (tag == "tile") {
            if (!have_consts) throw std::invalid_argument("tile text: tile before consts");
            int depth;
            long long pos, fidx;
            ls >> depth >> pos >> fidx;
            if (ls.fail()) throw std::invalid_argument("tile text: bad tile record");
            tiles.push_back(Bitile::make(depth, pos, fidx, consts));
        } else {
            throw std::invalid_argument("tile text: unknown record '" + tag + "'");
        }
    }
    if (!have_n || !have_consts) throw std::invalid_argument("tile text: missing header");
    return TileCollection(n, consts, std::move(tiles));
}

TileCollection build_bitile_collection(const DyadicGrid& grid, const AdmissibleConstants& consts,
                                       int scale_gap, int depth0, int num_scales) {
    consts.validate();
    const int floor_gap = static_cast<int>(std::ceil(std::log2(consts.K0)));
    if (scale_gap < std::max(1, floor_gap))
        throw std::invalid_argument("scale_gap below ceil(log2 K0)");
    if (depth0 < 1) throw std::invalid_argument("coarsest bitile depth must be >= 1");
    const int levels = grid.levels();
    const auto n = static_cast<double>(grid.n());
    const int stride = consts.freq_stride();
    const int gap = consts.omega_gap();
    std::vector<Bitile> tiles;
    int scales = 0;
    for (int d = depth0; d <= levels - 1; d += scale_gap) {
        if (num_scales >= 0 && scales >= num_scales) break;
        ++scales;
        const double h = std::ldexp(1.0, d);
        const double lo = -n / (2.0 * h) - 0.5 + consts.C21 / 2.0;
        const double hi = n / (2.0 * h) - gap - 0.5 - consts.C22 / 2.0;
        const auto mlo = static_cast<std::int64_t>(std::ceil(lo / stride - 1e-12));
        const auto mhi = static_cast<std::int64_t>(std::floor(hi / stride + 1e-12));
        for (std::int64_t m = mlo; m <= mhi; ++m) {
            for (std::int64_t pos = 0; pos < (std::int64_t{1} << d); ++pos)
                tiles.push_back(Bitile::make(d, pos, m * stride, consts));
        }
    }
    return TileCollection(grid.n(), consts, std::move(tiles));
}

Spectrum packet_spectrum(const Tile& tile, const AdmissibleConstants& consts, std::size_t n) {
    Spectrum sp(n);
    for_packet_support(tile, consts, n,
                       [&](long long k, cplx a) { sp.at(static_cast<int>(k)) = a; });
    return sp;
}

Signal wave_packet(const Tile& tile, const AdmissibleConstants& consts, std::size_t n) {
    return idft(packet_spectrum(tile, consts, n));
}

std::vector<cplx> packet_coefficients(const TileCollection& coll, const Signal& f) {
    if (f.size() != coll.grid_size())
        throw std::invalid_argument("packet coefficients: signal size mismatch");
    const Spectrum fhat = dft(f);
    std::vector<cplx> out;
    out.reserve(coll.size());
    for (const Bitile& b : coll.bitiles())
        out.push_back(coefficient_from_spectrum(fhat, b.p1(), coll.constants()));
    return out;
}

Signal tree_square_function(const TileCollection& coll, const std::vector<std::size_t>& members,
                            const Signal& f) {
    if (f.size() != coll.grid_size())
        throw std::invalid_argument("tree square function: signal size mismatch");
    const std::size_t n = coll.grid_size();
    const Spectrum fhat = dft(f);
    std::vector<double> acc(n, 0.0);
    for (std::size_t i : members) {
        if (i >= coll.size()) throw std::out_of_range("tree square function member index");
        const Bitile& b = coll[i];
        const cplx c = coefficient_from_spectrum(fhat, b.p1(), coll.constants());
        const std::size_t count = n >> b.depth;
        const double term = std::norm(c) / b.space().length();
        const auto first = static_cast<std::size_t>(b.pos) * count;
        for (std::size_t x = first; x < first + count; ++x) acc[x] += term;
    }
    Signal out(n);
    for (std::size_t x = 0; x < n; ++x) out[x] = std::sqrt(acc[x]);
    return out;
}

Signal tree_square_function(const TileCollection& coll, const Signal& f) {
    std::vector<std::size_t> all(coll.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return tree_square_function(coll, all, f);
}

bool is_tree(const TileCollection& coll, const Tree& tree) {
    const Interval om = tree.omega();
    for (std::size_t i : tree.members) {
        if (i >= coll.size()) return false;
        const Bitile& b = coll[i];
        if (!tree.top.contains(b.space())) return false;
        if (!b.ompt.contains(om)) return false;
    }
    return true;
}

TreeKind classify_tree(const TileCollection& coll, const Tree& tree) {
    const double c2 = coll.constants().C2;
    bool all_in = true, none_in = true;
    for (std::size_t i : tree.members) {
        if (coll[i].om2.dilated(c2).contains(tree.xi))
            none_in = false;
        else
            all_in = false;
    }
    if (all_in) return TreeKind::overlapping2;
    if (none_in) return TreeKind::lacunary2;
    return TreeKind::mixed;
}

std::pair<Tree, Tree> split_tree(const TileCollection& coll, const Tree& tree) {
    const double c2 = coll.constants().C2;
    Tree over{tree.top, tree.xi, {}}, lac{tree.top, tree.xi, {}};
    for (std::size_t i : tree.members) {
        if (coll[i].om2.dilated(c2).contains(tree.xi))
            over.members.push_back(i);
        else
            lac.members.push_back(i);
    }
    return {over, lac};
}

Tree maximal_tree(const TileCollection& coll, const TreeTop& top, bool overlapping_only) {
    Tree tree{top.space(), top.xi(), {}};
    const Interval om = top.omega();
    const double c2 = coll.constants().C2;
    for (std::size_t i = 0; i < coll.size(); ++i) {
        const Bitile& b = coll[i];
        if (!tree.top.contains(b.space())) continue;
        if (!b.ompt.contains(om)) continue;
        if (overlapping_only && !b.om2.dilated(c2).contains(tree.xi)) continue;
        tree.members.push_back(i);
    }
    return tree;
}

std::vector<TreeTop> candidate_tops(const TileCollection& coll, bool overlapping_only) {
    std::unordered_set<std::uint64_t> seen;
    for (const Bitile& b : coll.bitiles()) {
        for_member_tops(b, coll.constants().C2, overlapping_only,
                        [&](int dt, std::int64_t pos, std::int64_t m) {
                            seen.insert(top_key(dt, pos, m));
                        });
    }
    std::vector<TreeTop> tops;
    tops.reserve(seen.size());
    for (std::uint64_t key : seen) tops.push_back(top_from_key(key));
    std::sort(tops.begin(), tops.end(), top_order);
    return tops;
}

std::vector<std::pair<TreeTop, double>> tree_energies(const TileCollection& coll,
                                                      const std::vector<cplx>& coeffs,
                                                      const Weight& w) {
    if (coeffs.size() != coll.size())
        throw std::invalid_argument("tree energies: coefficient count mismatch");
    std::unordered_map<std::uint64_t, double> acc;
    for (std::size_t i = 0; i < coll.size(); ++i) {
        const Bitile& b = coll[i];
        const double q = std::norm(coeffs[i]) * w.mass(b.space()) / b.space().length();
        for_member_tops(b, coll.constants().C2, /*overlapping_only=*/true,
                        [&](int dt, std::int64_t pos, std::int64_t m) {
                            acc[top_key(dt, pos, m)] += q;
                        });
    }
    std::vector<std::pair<TreeTop, double>> out;
    out.reserve(acc.size());
    for (const auto& [key, e] : acc) out.emplace_back(top_from_key(key), e);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return top_order(a.first, b.first); });
    return out;
}

double collection_size(const TileCollection& coll, const std::vector<cplx>& coeffs,
                       const Weight& w) {
    double best = 0.0;
    for (const auto& [top, energy] : tree_energies(coll, coeffs, w))
        best = std::max(best, energy / w.mass(top.space()));
    return std::sqrt(best);
}

double collection_size(const TileCollection& coll, const Signal& f, const Weight& w) {
    return collection_size(coll, packet_coefficients(coll, f), w);
}

Linearization::Linearization(std::size_t n, double rprime) : rprime_(rprime) {
    if (n < 8 || !is_pow2(n))
        throw std::invalid_argument("linearization size must be a power of two >= 8");
    if (!(rprime >= 1.0)) throw std::invalid_argument("linearization needs r' >= 1");
    pts_.resize(n);
}

Linearization Linearization::random(std::size_t n, double rprime, int kmax, Rng& rng) {
    if (kmax < 0 || kmax > 16) throw std::invalid_argument("linearization kmax out of range");
    Linearization lin(n, rprime);
    const auto half = static_cast<std::int64_t>(n / 2);
    for (std::size_t x = 0; x < n; ++x) {
        const int K = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(kmax) + 1));
        if (K == 0) continue;
        std::vector<double> thr;
        while (static_cast<int>(thr.size()) < K + 1) {
            const auto m = static_cast<std::int64_t>(rng.next_below(n)) - half;
            const double t = static_cast<double>(m) + 0.5;
            if (std::find(thr.begin(), thr.end(), t) == thr.end()) thr.push_back(t);
        }
        std::sort(thr.begin(), thr.end());
        std::vector<cplx> d(K);
        double mass = 0.0;
        do {
            mass = 0.0;
            for (auto& v : d) v = rng.next_cgaussian();
            if (std::isinf(rprime)) {
                for (const auto& v : d) mass = std::max(mass, std::abs(v));
            } else {
                for (const auto& v : d) mass += std::pow(std::abs(v), rprime);
            }
        } while (mass == 0.0);
        const double scale =
            std::isinf(rprime) ? 1.0 / mass : std::pow(mass, -1.0 / rprime);
        for (auto& v : d) v *= scale;
        lin.set_point(x, std::move(thr), std::move(d));
    }
    return lin;
}

void Linearization::set_point(std::size_t x, std::vector<double> thresholds,
                              std::vector<cplx> d) {
    if (x >= pts_.size()) throw std::out_of_range("linearization point index");
    if (thresholds.empty() && d.empty()) {
        pts_[x] = Point{};
        return;
    }
    if (thresholds.size() != d.size() + 1)
        throw std::invalid_argument("linearization needs K+1 thresholds for K coefficients");
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
        const double t2 = 2.0 * thresholds[j];
        const auto r = std::llround(t2);
        if (std::abs(t2 - static_cast<double>(r)) > 1e-9 || ((r % 2 + 2) % 2) != 1)
            throw std::invalid_argument("linearization thresholds must be half-integers");
        if (j > 0 && !(thresholds[j] > thresholds[j - 1]))
            throw std::invalid_argument("linearization thresholds must strictly increase");
    }
    if (!d.empty()) {
        double mass = 0.0;
        if (std::isinf(rprime_)) {
            for (const auto& v : d) mass = std::max(mass, std::abs(v));
        } else {
            for (const auto& v : d) mass += std::pow(std::abs(v), rprime_);
        }
        if (std::abs(mass - 1.0) > 1e-9)
            throw std::invalid_argument("linearization coefficients must have unit l^{r'} mass");
    }
    pts_[x] = Point{std::move(thresholds), std::move(d)};
}

cplx Linearization::activated(std::size_t x, const Bitile& bit) const {
    const Point& pt = pts_[x];
    const int K = static_cast<int>(pt.d.size());
    for (int j = 1; j <= K; ++j) {
        if (!bit.omp.contains(pt.thresholds[j - 1]) && bit.om2.contains(pt.thresholds[j]))
            return pt.d[j - 1];
    }
    return 0.0;
}

double chi_tilde(const Interval& I, double x) {
    const double u = torus_dist(x, I.center()) / I.length();
    return 1.0 / std::sqrt(1.0 + u * u);
}

namespace {

double density_integral(const TileCollection& coll, const std::vector<double>& u,
                        const Linearization& lin, const Interval& spatial, const Interval& om) {
    const std::size_t n = coll.grid_size();
    const double D = coll.constants().D;
    const double rp = lin.rprime();
    double sum = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        if (u[x] == 0.0) continue;
        double a = 0.0;
        const int K = lin.K(x);
        for (int j = 1; j <= K; ++j) {
            if (om.contains(lin.threshold(x, j))) a += std::pow(std::abs(lin.coeff(x, j)), rp);
        }
        if (a == 0.0) continue;
        const double chi = chi_tilde(spatial, (static_cast<double>(x)) / static_cast<double>(n));
        sum += std::pow(chi, D) * u[x] * a;
    }
    return sum / static_cast<double>(n);
}

}  // namespace

std::vector<std::pair<TreeTop, double>> density_values(const TileCollection& coll, const Signal& g,
                                                       const Weight& w, const Linearization& lin,
                                                       DensityMode mode) {
    const std::size_t n = coll.grid_size();
    if (g.size() != n || w.size() != n || lin.size() != n)
        throw std::invalid_argument("density: size mismatch");
    const double rp = lin.rprime();
    if (std::isinf(rp)) throw std::invalid_argument("density needs finite r'");
    std::vector<double> u(n);
    for (std::size_t x = 0; x < n; ++x)
        u[x] = std::pow(std::abs(g[x]), rp) * w.sample(x);

    std::vector<std::pair<TreeTop, double>> out;
    if (mode == DensityMode::improved) {
        const int gap = coll.constants().omega_gap();
        for (const Bitile& b : coll.bitiles()) {
            const TreeTop top{b.depth, b.pos, b.fidx + gap};
            const double mass = density_integral(coll, u, lin, b.space().to_interval(), b.om2);
            out.emplace_back(top, std::pow(mass / w.mass(b.space()), 1.0 / rp));
        }
        return out;
    }
    for (const TreeTop& top : candidate_tops(coll, /*overlapping_only=*/false)) {
        const double mass = density_integral(coll, u, lin, top.space().to_interval(), top.omega());
        out.emplace_back(top, std::pow(mass / w.mass(top.space()), 1.0 / rp));
    }
    return out;
}

double collection_density(const TileCollection& coll, const Signal& g, const Weight& w,
                          const Linearization& lin, DensityMode mode) {
    double best = 0.0;
    for (const auto& [top, v] : density_values(coll, g, w, lin, mode)) best = std::max(best, v);
    return best;
}

Signal model_operator(const TileCollection& coll, const Signal& f, const Linearization& lin) {
    const std::size_t n = coll.grid_size();
    if (f.size() != n || lin.size() != n)
        throw std::invalid_argument("model operator: size mismatch");
    const Spectrum fhat = dft(f);
    Signal out(n);
    for (const Bitile& b : coll.bitiles()) {
        const cplx c = coefficient_from_spectrum(fhat, b.p1(), coll.constants());
        if (c == cplx{0.0, 0.0}) continue;
        const Signal phi = wave_packet(b.p1(), coll.constants(), n);
        for (std::size_t x = 0; x < n; ++x) {
            const cplx d = lin.activated(x, b);
            if (d != cplx{0.0, 0.0}) out[x] += c * phi[x] * d;
        }
    }
    return out;
}

cplx bilinear_form(const TileCollection& coll, const Signal& f, const Signal& g, const Weight& w,
                   const Linearization& lin) {
    const std::size_t n = coll.grid_size();
    if (f.size() != n || g.size() != n || w.size() != n || lin.size() != n)
        throw std::invalid_argument("bilinear form: size mismatch");
    const Spectrum fhat = dft(f);
    cplx total = 0.0;
    for (const Bitile& b : coll.bitiles()) {
        const cplx c = coefficient_from_spectrum(fhat, b.p1(), coll.constants());
        const Signal phi = wave_packet(b.p1(), coll.constants(), n);
        cplx pairing = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            const cplx d = lin.activated(x, b);
            if (d != cplx{0.0, 0.0}) pairing += phi[x] * d * std::conj(g[x]) * w.sample(x);
        }
        total += c * pairing / static_cast<double>(n);
    }
    return total;
}

Signal variational_model_operator(const TileCollection& coll, const Signal& f, double r) {
    const std::size_t n = coll.grid_size();
    if (f.size() != n) throw std::invalid_argument("variational model operator: size mismatch");
    if (!(r >= 1.0) || std::isinf(r) || std::isnan(r))
        throw std::invalid_argument("variational model operator needs finite r >= 1");

    const std::size_t m = coll.size();
    const Spectrum fhat = dft(f);
    std::vector<std::vector<cplx>> psi(m);  // c_P * phi_{P1} per member
    for (std::size_t i = 0; i < m; ++i) {
        const Bitile& b = coll[i];
        const cplx c = coefficient_from_spectrum(fhat, b.p1(), coll.constants());
        const Signal phi = wave_packet(b.p1(), coll.constants(), n);
        psi[i].resize(n);
        for (std::size_t x = 0; x < n; ++x) psi[i][x] = c * phi[x];
    }

    // Distinct activation columns over half-integer thresholds: per
    // candidate t record membership in each om_P and om_{P2}; consecutive
    // equal columns collapse to one representative cell.
    const auto half = static_cast<std::int64_t>(n / 2);
    std::vector<double> reps;
    std::vector<std::vector<bool>> in_hull, in_upper;
    for (std::int64_t q = -half - 1; q <= half; ++q) {
        const double t = static_cast<double>(q) + 0.5;
        std::vector<bool> hull(m), upper(m);
        for (std::size_t i = 0; i < m; ++i) {
            hull[i] = coll[i].omp.contains(t);
            upper[i] = coll[i].om2.contains(t);
        }
        if (!reps.empty() && hull == in_hull.back() && upper == in_upper.back()) continue;
        reps.push_back(t);
        in_hull.push_back(std::move(hull));
        in_upper.push_back(std::move(upper));
    }
    const std::size_t cells = reps.size();
    std::vector<std::vector<std::size_t>> upper_members(cells);
    for (std::size_t c = 0; c < cells; ++c)
        for (std::size_t i = 0; i < m; ++i)
            if (in_upper[c][i]) upper_members[c].push_back(i);

    Signal out(n);
    std::vector<double> dp(cells);
    for (std::size_t x = 0; x < n; ++x) {
        double best = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            double v = 0.0;  // chain may start at c (it is then N_0: no gain)
            for (std::size_t s = 0; s < c; ++s) {
                cplx b = 0.0;
                for (std::size_t i : upper_members[c])
                    if (!in_hull[s][i]) b += psi[i][x];
                const double gain = std::pow(std::abs(b), r);
                v = std::max(v, dp[s] + gain);
            }
            dp[c] = v;
            best = std::max(best, v);
        }
        out[x] = std::pow(best, 1.0 / r);
    }
    return out;
}

}  // namespace vclab
