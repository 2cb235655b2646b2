#include "vclab/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace vclab {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

void check_signal_length(std::size_t n) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("signal length must be a power of two >= 8");
}

// In-place radix-2 FFT, sign = -1 forward / +1 inverse, no scaling.
void fft_inplace(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTau / double(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// |z|^r computed from m2 = |z|^2. Dispatch once per call of the DP so the
// inner loop avoids std::pow for the common exponents.
struct JumpPower {
    enum Kind { r1, r15, r2, r3, r4, general } kind;
    double half_r;

    static JumpPower make(double r) {
        if (r == 1.0) return {r1, 0.5};
        if (r == 1.5) return {r15, 0.75};
        if (r == 2.0) return {r2, 1.0};
        if (r == 3.0) return {r3, 1.5};
        if (r == 4.0) return {r4, 2.0};
        return {general, 0.5 * r};
    }

    double operator()(double m2) const {
        switch (kind) {
            case r1: return std::sqrt(m2);
            case r15: { double s = std::sqrt(m2); return s * std::sqrt(s); }
            case r2: return m2;
            case r3: return m2 * std::sqrt(m2);
            case r4: return m2 * m2;
            default: return std::pow(m2, half_r);
        }
    }
};

// Best-ending-here dynamic programme over a complex sequence given as split
// re/im arrays. Returns max_i best[i] where
//   best[i] = max(seed_i, max_{j<i} best[j] + |a_i - a_j|^r),
// seed_i = |a_i|^r when the initial value counts, else 0.
double variation_dp_pow(const double* re, const double* im, std::size_t m,
                        const JumpPower& powr, bool include_initial) {
    std::vector<double> best(m);
    double overall = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double bi = include_initial ? powr(re[i] * re[i] + im[i] * im[i]) : 0.0;
        const double ri = re[i], ii = im[i];
        for (std::size_t j = 0; j < i; ++j) {
            double dr = ri - re[j], di = ii - im[j];
            double cand = best[j] + powr(dr * dr + di * di);
            if (cand > bi) bi = cand;
        }
        best[i] = bi;
        if (bi > overall) overall = bi;
    }
    return overall;
}

double variation_sup(const double* re, const double* im, std::size_t m,
                     bool include_initial) {
    // The largest jump on offer: pairwise differences always compete, and in
    // include_initial mode so does each modulus (a chain may open with the
    // jump from zero, but a later pair can still be wider).
    double m2max = 0.0;
    if (include_initial)
        for (std::size_t i = 0; i < m; ++i)
            m2max = std::max(m2max, re[i] * re[i] + im[i] * im[i]);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            double dr = re[i] - re[j], di = im[i] - im[j];
            double m2 = dr * dr + di * di;
            if (m2 > m2max) m2max = m2;
        }
    return std::sqrt(m2max);
}

double variation_of_split(const double* re, const double* im, std::size_t m,
                          double r, VariationMode mode) {
    const bool initial = (mode == VariationMode::include_initial);
    if (std::isinf(r)) return variation_sup(re, im, m, initial);
    const JumpPower powr = JumpPower::make(r);
    double total = variation_dp_pow(re, im, m, powr, initial);
    return std::pow(total, 1.0 / r);
}

void check_variation_args(std::size_t count, double r) {
    if (count == 0) throw std::invalid_argument("variation of an empty sequence");
    if (std::isnan(r) || (!std::isinf(r) && r < 1.0))
        throw std::invalid_argument("variation exponent must satisfy r >= 1");
}

}  // namespace

bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

int log2_exact(std::size_t v) {
    int l = 0;
    while ((std::size_t(1) << l) < v) ++l;
    return l;
}

Signal::Signal(std::size_t n) : v_(n) { check_signal_length(n); }

Signal::Signal(std::vector<cplx> samples) : v_(std::move(samples)) {
    check_signal_length(v_.size());
}

Spectrum::Spectrum(std::size_t n) : c_(n) { check_signal_length(n); }

Spectrum::Spectrum(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
    check_signal_length(c_.size());
}

Spectrum dft(const Signal& f) {
    const std::size_t n = f.size();
    std::vector<cplx> a = f.samples();
    fft_inplace(a, -1);
    // FFT bin j holds frequency j for j < n/2 and j - n above; reorder to
    // ascending k and apply the 1/n Riemann normalization.
    std::vector<cplx> sorted(n);
    const double scale = 1.0 / double(n);
    for (std::size_t j = 0; j < n; ++j) {
        int k = j < n / 2 ? int(j) : int(j) - int(n);
        sorted[std::size_t(k + int(n / 2))] = a[j] * scale;
    }
    return Spectrum(std::move(sorted));
}

Signal idft(const Spectrum& fhat) {
    const std::size_t n = fhat.size();
    std::vector<cplx> a(n);
    for (int k = fhat.kmin(); k <= fhat.kmax(); ++k) {
        std::size_t j = k >= 0 ? std::size_t(k) : std::size_t(k + int(n));
        a[j] = fhat.at(k);
    }
    fft_inplace(a, +1);
    return Signal(std::move(a));
}

std::vector<cplx> unit_roots(std::size_t n) {
    std::vector<cplx> roots(n);
    for (std::size_t j = 0; j < n; ++j) {
        double ang = kTau * double(j) / double(n);
        roots[j] = {std::cos(ang), std::sin(ang)};
    }
    return roots;
}

Signal partial_sum(const Signal& f, int m) {
    const std::size_t n = f.size();
    if (std::size_t(std::abs(m)) > n / 2)
        throw std::invalid_argument("partial-sum cutoff exceeds n/2");
    if (m <= 0) return Signal(n);
    Spectrum fhat = dft(f);
    Spectrum cut(n);
    for (int k = -(m - 1); k <= m - 1; ++k) cut.at(k) = fhat.at(k);
    return idft(cut);
}

double variation_norm(std::span<const cplx> a, double r, VariationMode mode) {
    check_variation_args(a.size(), r);
    std::vector<double> re(a.size()), im(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        re[i] = a[i].real();
        im[i] = a[i].imag();
    }
    return variation_of_split(re.data(), im.data(), a.size(), r, mode);
}

double variation_norm(std::span<const double> a, double r, VariationMode mode) {
    check_variation_args(a.size(), r);
    std::vector<double> im(a.size(), 0.0);
    return variation_of_split(a.data(), im.data(), a.size(), r, mode);
}

namespace {

// Shared driver for the two pointwise variational operators: for each grid
// point build a cumulative sequence from the spectrum, then run the
// oscillation-mode DP on it. `emit` fills the split sequence for one point.
template <class Emit>
Signal pointwise_variation(std::size_t n, double r, std::size_t seq_len,
                           const Emit& emit) {
    Signal out(n);
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> re(seq_len), im(seq_len);
        for (std::size_t i = begin; i < end; ++i) {
            emit(i, re.data(), im.data());
            out[i] = variation_of_split(re.data(), im.data(), seq_len, r,
                                        VariationMode::oscillation);
        }
    });
    return out;
}

}  // namespace

Signal variational_partial_sums(const Signal& f, double r) {
    check_variation_args(1, r);
    const std::size_t n = f.size();
    const int half = int(n / 2);
    const Spectrum fhat = dft(f);
    const std::vector<cplx> roots = unit_roots(n);
    // S_0 = 0, S_1 = fhat(0), S_{m+1} = S_m + fhat(m) e_m + fhat(-m) e_{-m}.
    return pointwise_variation(n, r, std::size_t(half) + 1,
        [&](std::size_t i, double* re, double* im) {
            cplx acc(0.0, 0.0);
            re[0] = 0.0;
            im[0] = 0.0;
            for (int m = 1; m <= half; ++m) {
                int k = m - 1;
                if (k == 0) {
                    acc += fhat.at(0);
                } else {
                    std::size_t jp = (std::size_t(k) * i) % n;
                    std::size_t jm = n - jp;  // (-k*i) mod n, jp != 0 here
                    if (jm == n) jm = 0;
                    acc += fhat.at(k) * roots[jp] + fhat.at(-k) * roots[jm];
                }
                re[std::size_t(m)] = acc.real();
                im[std::size_t(m)] = acc.imag();
            }
        });
}

Signal variational_truncation(const Signal& f, double r) {
    check_variation_args(1, r);
    const std::size_t n = f.size();
    const Spectrum fhat = dft(f);
    const std::vector<cplx> roots = unit_roots(n);
    // Cumulative sums U(t_m) = sum_{k <= -n/2+m} fhat(k) e_k over the
    // half-integer thresholds t_m = -n/2 + m + 1/2; a truncation over [a, b)
    // is a difference of two U values, so the r-variation of (U(t_m))_m is
    // exactly the variational truncation restricted to that threshold grid.
    return pointwise_variation(n, r, n,
        [&](std::size_t i, double* re, double* im) {
            cplx acc(0.0, 0.0);
            const int kmin = fhat.kmin();
            for (std::size_t m = 0; m < n; ++m) {
                int k = kmin + int(m);
                std::size_t j = std::size_t(((std::int64_t(k) * std::int64_t(i)) % std::int64_t(n) +
                                             std::int64_t(n)) % std::int64_t(n));
                acc += fhat.at(k) * roots[j];
                re[m] = acc.real();
                im[m] = acc.imag();
            }
        });
}

}  // namespace vclab
