#pragma once
// Discrete model of the unit torus: signals sampled at n = 2^L equispaced
// points, Fourier coefficients on integer frequencies k in [-n/2, n/2).
// Conventions:
//   fhat(k) = (1/n) sum_i f(x_i) e^{-2 pi i k x_i}      (Riemann sum)
//   f(x_i)  =       sum_k fhat(k) e^{+2 pi i k x_i}
//   S_m f   = sum_{|k| < m} fhat(k) e_k,  and S_m f = 0 for m <= 0.
// On top of the transforms this header provides the r-variation seminorm of
// finite sequences and the two pointwise variational operators built from
// partial sums (symmetric cutoffs) and one-sided truncations.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "vclab/util.hpp"

namespace vclab {

bool is_pow2(std::size_t v);
int log2_exact(std::size_t v);  // v must be a power of two

// Complex samples on the grid x_i = i/n; n a power of two, n >= 8.
class Signal {
public:
    Signal() = default;
    explicit Signal(std::size_t n);
    explicit Signal(std::vector<cplx> samples);

    std::size_t size() const { return v_.size(); }
    cplx& operator[](std::size_t i) { return v_[i]; }
    const cplx& operator[](std::size_t i) const { return v_[i]; }
    const std::vector<cplx>& samples() const { return v_; }
    std::vector<cplx>& samples() { return v_; }

private:
    std::vector<cplx> v_;
};

// Fourier coefficients, stored in ascending frequency order k = -n/2 .. n/2-1.
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(std::size_t n);
    explicit Spectrum(std::vector<cplx> coeffs);

    std::size_t size() const { return c_.size(); }
    int kmin() const { return -int(c_.size() / 2); }
    int kmax() const { return int(c_.size() / 2) - 1; }
    cplx& at(int k) { return c_[std::size_t(k - kmin())]; }
    const cplx& at(int k) const { return c_[std::size_t(k - kmin())]; }
    const std::vector<cplx>& coeffs() const { return c_; }

private:
    std::vector<cplx> c_;
};

Spectrum dft(const Signal& f);
Signal idft(const Spectrum& fhat);

// Table of e^{2 pi i j / n}, j = 0..n-1; e^{2 pi i k x_i} = roots[(k*i) mod n].
std::vector<cplx> unit_roots(std::size_t n);

// S_m f. m <= 0 gives the zero signal; |m| > n/2 is rejected.
Signal partial_sum(const Signal& f, int m);

enum class VariationMode {
    include_initial,  // |a_{N_0}|^r counts as a first jump from zero
    oscillation       // jumps between chosen indices only
};

// r-variation of a finite sequence: sup over increasing index subsequences
// of (sum of |jump|^r)^{1/r}; r = infinity takes the largest single jump,
// with the moduli |a_i| competing too in include_initial mode. Requires
// r >= 1.
double variation_norm(std::span<const cplx> a, double r, VariationMode mode);
double variation_norm(std::span<const double> a, double r, VariationMode mode);

// Pointwise r-variation of the partial-sum sequence (S_m f(x))_{m=0..n/2},
// oscillation mode. Output is real-valued (stored as a Signal).
Signal variational_partial_sums(const Signal& f, double r);

// Pointwise r-variation of one-sided truncations sum_{k in [a, b)} fhat(k) e_k
// with thresholds running over the half-integers in [-n/2, n/2]. Dominates
// variational_partial_sums pointwise up to a factor 2.
Signal variational_truncation(const Signal& f, double r);

}  // namespace vclab
