#pragma once
// Reference implementations used only by the tests. Everything here is a
// direct transcription of a definition (exhaustive enumeration, O(n^2)
// transform sums, all-interval sweeps) and deliberately shares no code with
// the algorithms under test.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "vclab/fourier.hpp"
#include "vclab/weights.hpp"

namespace oracles {

using vclab::cplx;

// Reference A_p over every straight sample window [i, j), not just the
// dyadic+shifted family the implementation sweeps.
inline double ap_all_intervals(const vclab::Weight& w, double p) {
    const std::size_t n = w.size();
    const double dual = -1.0 / (p - 1.0);
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sw = 0.0, sv = 0.0;
        for (std::size_t j = i + 1; j <= n; ++j) {
            sw += w.sample(j - 1);
            sv += std::pow(w.sample(j - 1), dual);
            const double c = static_cast<double>(j - i);
            best = std::max(best, (sw / c) * std::pow(sv / c, p - 1.0));
        }
    }
    return best;
}

// r-variation by walking every index subset. Feasible up to ~20 elements.
inline double variation_brute(std::span<const cplx> a, double r,
                              bool include_initial) {
    const int m = int(a.size());
    std::vector<double> head(static_cast<std::size_t>(m));
    std::vector<double> tab(std::size_t(m) * std::size_t(m));
    for (int i = 0; i < m; ++i) {
        head[std::size_t(i)] = std::pow(std::abs(a[std::size_t(i)]), r);
        for (int j = 0; j < i; ++j)
            tab[std::size_t(i) * std::size_t(m) + std::size_t(j)] =
                std::pow(std::abs(a[std::size_t(i)] - a[std::size_t(j)]), r);
    }
    double best = 0.0;
    const std::uint32_t total = std::uint32_t(1) << m;
    for (std::uint32_t mask = 1; mask < total; ++mask) {
        std::uint32_t bits = mask;
        int prev = std::countr_zero(bits);
        bits &= bits - 1;
        double acc = include_initial ? head[std::size_t(prev)] : 0.0;
        while (bits) {
            int idx = std::countr_zero(bits);
            bits &= bits - 1;
            acc += tab[std::size_t(idx) * std::size_t(m) + std::size_t(prev)];
            prev = idx;
        }
        if (acc > best) best = acc;
    }
    return std::pow(best, 1.0 / r);
}

// sup-variation: best single jump (or largest modulus when the initial
// value counts, since any point can be the start).
inline double variation_brute_sup(std::span<const cplx> a, bool include_initial) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (include_initial) best = std::max(best, std::abs(a[i]));
        for (std::size_t j = 0; j < i; ++j)
            best = std::max(best, std::abs(a[i] - a[j]));
    }
    return best;
}

// Direct O(n^2) transform sums with per-term std::polar phases.
inline vclab::Spectrum dft_direct(const vclab::Signal& f) {
    const std::size_t n = f.size();
    vclab::Spectrum out(n);
    for (int k = out.kmin(); k <= out.kmax(); ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            acc += f[i] * std::polar(1.0, -2.0 * M_PI * double(k) * double(i) / double(n));
        out.at(k) = acc / double(n);
    }
    return out;
}

inline vclab::Signal idft_direct(const vclab::Spectrum& fhat) {
    const std::size_t n = fhat.size();
    vclab::Signal out(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc(0.0, 0.0);
        for (int k = fhat.kmin(); k <= fhat.kmax(); ++k)
            acc += fhat.at(k) * std::polar(1.0, 2.0 * M_PI * double(k) * double(i) / double(n));
        out[i] = acc;
    }
    return out;
}

}  // namespace oracles
