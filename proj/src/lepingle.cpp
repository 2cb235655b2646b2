#include "vclab/lepingle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vclab/util.hpp"

namespace vclab {

namespace {

double bump(double v) {
    if (!(std::abs(v) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - v * v));
}

// Monotone step rising 0 -> 1 across (0, 1), built from the bump profile;
// the complementary identity step(t) + step(1 - t) = 1 makes consecutive
// windows telescope.
double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = bump(1.0 - t);
    const double b = bump(t);
    return a / (a + b);
}

// Transition centered at 0 with half-width eps/2.
struct Step {
    double eps;
    double operator()(double v) const { return smooth_step(v / eps + 0.5); }
};

void check_family(const LPFamily& fam) {
    if (fam.parts.empty()) throw std::invalid_argument("empty Littlewood-Paley family");
    for (const Signal& part : fam.parts)
        if (part.size() != fam.grid_size())
            throw std::invalid_argument("Littlewood-Paley family parts disagree in length");
}

}  // namespace

LPFamily lp_family(const Signal& f, double band_constant) {
    const double C = band_constant;
    if (!(C > std::sqrt(2.0)) || !(C <= 4.0))
        throw std::invalid_argument(
            "lp_family: band constant must lie in (sqrt(2), 4]; windows spaced one octave "
            "apart cannot sum to one below that");
    const std::size_t n = f.size();
    const int L = log2_exact(n);
    // Window m transitions at m -+ 1/2 with half-width eps/2 on log2|k|, so
    // its support half-width is (1 + eps)/2 = log2(C).
    const Step step{2.0 * std::log2(C) - 1.0};

    const Spectrum fhat = dft(f);
    std::vector<Spectrum> spectra(L, Spectrum(n));
    double leak = 0.0;
    const int half = static_cast<int>(n) / 2;
    std::vector<double> tv(static_cast<std::size_t>(L) + 1);
    for (int k = -half; k < half; ++k) {
        if (k == 0) continue;
        const double ak = std::abs(static_cast<double>(k));
        const double u = std::log2(ak);
        tv[0] = 1.0;
        tv[static_cast<std::size_t>(L)] = 0.0;
        for (int m = 1; m < L; ++m)
            tv[static_cast<std::size_t>(m)] = step(u - (static_cast<double>(m) - 0.5));
        for (int m = 0; m < L; ++m) {
            const double wm = tv[m] - tv[m + 1];
            if (wm == 0.0) continue;
            const double scale = std::ldexp(1.0, m);
            if (!(ak > scale / C && ak < scale * C)) {
                leak = std::max(leak, std::abs(wm));
                continue;
            }
            spectra[static_cast<std::size_t>(m)].at(k) = fhat.at(k) * wm;
        }
    }

    LPFamily fam;
    fam.band_constant = C;
    fam.leakage = leak;
    fam.parts.reserve(spectra.size());
    for (const Spectrum& s : spectra) fam.parts.push_back(idft(s));
    return fam;
}

int lp_overlap_bound(double band_constant) {
    if (!(band_constant > 1.0))
        throw std::invalid_argument("lp_overlap_bound: band constant must exceed 1");
    return static_cast<int>(std::ceil(2.0 * std::log2(band_constant) - 1e-12));
}

Signal variational_lp_field(const LPFamily& fam, double r) {
    check_family(fam);
    if (std::isnan(r) || r < 1.0)
        throw std::invalid_argument("variational_lp_field: need r >= 1");
    const std::size_t n = fam.grid_size();
    const std::size_t scales = fam.parts.size();
    Signal out(n);
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        std::vector<cplx> prefix(scales + 1);
        for (std::size_t x = begin; x < end; ++x) {
            prefix[0] = 0.0;
            for (std::size_t m = 0; m < scales; ++m) prefix[m + 1] = prefix[m] + fam.parts[m][x];
            out[x] = variation_norm(prefix, r, VariationMode::oscillation);
        }
    });
    return out;
}

Signal lp_square_field(const LPFamily& fam, double s) {
    check_family(fam);
    if (std::isnan(s) || s < 1.0)
        throw std::invalid_argument("lp_square_field: need s >= 1");
    const std::size_t n = fam.grid_size();
    Signal out(n);
    for (std::size_t x = 0; x < n; ++x) {
        double total = 0.0, peak2 = 0.0;
        for (const Signal& part : fam.parts) {
            const double a2 = std::norm(part[x]);
            total += std::pow(a2, 0.5 * s);
            peak2 = std::max(peak2, a2);
        }
        // With one nonzero scale the sum collapses; return the plain modulus
        // rather than the pow round trip so the collapse is exact.
        out[x] = total > std::pow(peak2, 0.5 * s) ? std::pow(total, 1.0 / s)
                                                  : std::sqrt(peak2);
    }
    return out;
}

double variational_lp_norm(const LPFamily& fam, double r, double p, const Weight& w) {
    if (!(p >= 1.0)) throw std::invalid_argument("variational_lp_norm: need p >= 1");
    if (w.size() != fam.grid_size())
        throw std::invalid_argument("variational_lp_norm: weight length mismatch");
    return weighted_lp_norm(variational_lp_field(fam, r), p, w);
}

double lp_square_norm(const LPFamily& fam, double r, double p, const Weight& w) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_square_norm: need p >= 1");
    if (w.size() != fam.grid_size())
        throw std::invalid_argument("lp_square_norm: weight length mismatch");
    return weighted_lp_norm(lp_square_field(fam, std::min(r, 2.0)), p, w);
}

double lepingle_ratio(const LPFamily& fam, double r, double p, const Weight& w,
                      bool* degenerate) {
    if (degenerate) *degenerate = false;
    const double rhs = lp_square_norm(fam, r, p, w);
    if (rhs == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    std::size_t active = 0;
    for (const Signal& part : fam.parts) {
        for (const cplx& v : part.samples()) {
            if (v != cplx{0.0, 0.0}) {
                ++active;
                break;
            }
        }
    }
    if (active == 1) return 1.0;
    return variational_lp_norm(fam, r, p, w) / rhs;
}

}  // namespace vclab
