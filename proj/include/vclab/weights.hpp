#pragma once
// Weights on the sampled torus. A weight is a strictly positive sample
// vector; masses are Riemann sums, so w(I) = sum_{x_i in I} w(x_i)/n.
// The A_p characteristic is evaluated over the dyadic family plus its
// half-shifted copies (the usual shifted-grid surrogate for arbitrary
// intervals); the doubling exponent compares a dyadic interval with its
// torus-periodized dilations.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "vclab/fourier.hpp"
#include "vclab/interval.hpp"

namespace vclab {

// Enumerates the sample windows of the dyadic intervals at depths 0..L and
// the half-shifted copies that stay inside [0,1) (the finest scale has no
// grid-aligned half shift).
class DyadicGrid {
public:
    explicit DyadicGrid(std::size_t n);

    std::size_t n() const { return n_; }
    int levels() const { return levels_; }

    template <class F>
    void for_each_window(F&& fn) const {  // fn(first_sample, count)
        for (int d = 0; d <= levels_; ++d) {
            const std::size_t count = n_ >> d;
            for (std::size_t first = 0; first + count <= n_; first += count)
                fn(first, count);
            if (count >= 2) {
                for (std::size_t first = count / 2; first + count <= n_; first += count)
                    fn(first, count);
            }
        }
    }

private:
    std::size_t n_;
    int levels_;
};

class Weight {
public:
    static Weight constant(std::size_t n, double value = 1.0);
    static Weight from_samples(std::vector<double> w);

    std::size_t size() const { return w_.size(); }
    double sample(std::size_t i) const { return w_[i]; }
    const std::vector<double>& samples() const { return w_; }

    // Mass of `count` samples starting at `first`, wrapping mod n.
    double mass(std::size_t first, std::size_t count) const;
    double mass(const DyadicInterval& iv) const;
    double total() const;

    // Smallest gamma with w(2^k I) <= 2^{gamma k} w(I) over all dyadic I and
    // all k with 2^k |I| <= 1 (dilations wrap around the torus).
    double doubling_exponent() const { return gamma_; }

private:
    explicit Weight(std::vector<double> w);
    std::vector<double> w_;
    std::vector<double> prefix_;  // prefix_[i] = sum of first i samples
    double gamma_ = 0.0;
};

// (d(x)+1/(2n))^a with d(x) = min(x, 1-x); requires a in (-0.95, 5).
Weight power_weight(std::size_t n, double a);

// sup over the dyadic+shifted family of avg(w) * avg(w^{-1/(p-1)})^{p-1};
// requires p > 1.
double ap_constant(const Weight& w, double p);

double doubling_exponent(const Weight& w);

// (sum |f_i|^p w_i / n)^{1/p}; p = infinity takes max |f_i|.
double weighted_lp_norm(const Signal& f, double p, const Weight& w);

// Maximal t-averages over grid intervals whose closure contains the sample:
// M out[i] = sup over windows [a,b) with a <= i <= b of the window average.
// The closure convention matters only on boundaries and matches the
// continuum supremum over closed intervals.
Signal maximal(const Signal& f, double t);                   // Lebesgue averages
Signal maximal(const Signal& f, double t, const Weight& w);  // w-averages

// Dyadic sharp function: sup over dyadic I containing x of the mean
// oscillation (1/|I|) int_I |f - avg_I f|.
Signal dyadic_sharp(const Signal& f);

// Two-column CSV (header "x,w"), x on the uniform grid.
std::string weight_to_csv(const Weight& w);
Weight weight_from_csv(std::string_view csv);

}  // namespace vclab
