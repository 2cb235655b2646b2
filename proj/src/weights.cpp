#include "vclab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace vclab {

namespace {

void check_weight_length(std::size_t n) {
    if (n < 8 || !is_pow2(n))
        throw std::invalid_argument("weight length must be a power of two >= 8");
}

}  // namespace

DyadicGrid::DyadicGrid(std::size_t n) : n_(n) {
    check_weight_length(n);
    levels_ = log2_exact(n);
}

Weight::Weight(std::vector<double> w) : w_(std::move(w)) {
    check_weight_length(w_.size());
    for (double v : w_) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("weight samples must be positive and finite");
    }
    const std::size_t n = w_.size();
    prefix_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix_[i + 1] = prefix_[i] + w_[i];

    // Doubling exponent. The dilation 2^k I of a dyadic interval I keeps the
    // center and scales the length; in half-sample units the center of the
    // depth-d interval with index i sits at (2i+1) 2^{L-d}, so the dilated
    // window starts at ceil((center2 - len)/2) and wraps mod n.
    const int levels = log2_exact(n);
    const auto n64 = static_cast<long long>(n);
    double gamma = 0.0;
    for (int d = 1; d <= levels; ++d) {
        const long long count = n64 >> d;
        for (long long i = 0; i < (n64 / count); ++i) {
            const double base = mass(static_cast<std::size_t>(i * count),
                                     static_cast<std::size_t>(count));
            const long long center2 = (2 * i + 1) * count;
            for (int k = 1; k <= d; ++k) {
                const long long len = count << k;
                long long first = (center2 - len + 1) >> 1;
                first = ((first % n64) + n64) % n64;
                const double big = mass(static_cast<std::size_t>(first),
                                        static_cast<std::size_t>(len));
                gamma = std::max(gamma, std::log2(big / base) / k);
            }
        }
    }
    gamma_ = gamma;
}

Weight Weight::constant(std::size_t n, double value) {
    return Weight(std::vector<double>(n, value));
}

Weight Weight::from_samples(std::vector<double> w) { return Weight(std::move(w)); }

double Weight::mass(std::size_t first, std::size_t count) const {
    const std::size_t n = w_.size();
    if (first >= n || count > n) throw std::invalid_argument("weight mass: window out of range");
    double s;
    if (first + count <= n) {
        s = prefix_[first + count] - prefix_[first];
    } else {
        s = (prefix_[n] - prefix_[first]) + prefix_[first + count - n];
    }
    return s / static_cast<double>(n);
}

double Weight::mass(const DyadicInterval& iv) const {
    const std::size_t n = w_.size();
    const int levels = log2_exact(n);
    if (iv.depth < 0 || iv.depth > levels)
        throw std::invalid_argument("weight mass: interval finer than the grid");
    const std::size_t count = n >> iv.depth;
    return mass(static_cast<std::size_t>(iv.index) * count, count);
}

double Weight::total() const { return prefix_.back() / static_cast<double>(w_.size()); }

Weight power_weight(std::size_t n, double a) {
    check_weight_length(n);
    if (!(a > -0.95 && a < 5.0))
        throw std::invalid_argument("power weight exponent must lie in (-0.95, 5)");
    std::vector<double> w(n);
    const double eps = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        const double d = std::min(x, 1.0 - x);
        w[i] = std::pow(d + eps, a);
    }
    return Weight::from_samples(std::move(w));
}

double ap_constant(const Weight& w, double p) {
    if (!(p > 1.0) || !std::isfinite(p))
        throw std::invalid_argument("ap_constant requires finite p > 1");
    const std::size_t n = w.size();
    const double dual = -1.0 / (p - 1.0);
    std::vector<double> pw(n + 1, 0.0), pv(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        pw[i + 1] = pw[i] + w.sample(i);
        pv[i + 1] = pv[i] + std::pow(w.sample(i), dual);
    }
    double best = 0.0;
    DyadicGrid(n).for_each_window([&](std::size_t first, std::size_t count) {
        const double c = static_cast<double>(count);
        const double aw = (pw[first + count] - pw[first]) / c;
        const double av = (pv[first + count] - pv[first]) / c;
        best = std::max(best, aw * std::pow(av, p - 1.0));
    });
    return best;
}

double doubling_exponent(const Weight& w) { return w.doubling_exponent(); }

double weighted_lp_norm(const Signal& f, double p, const Weight& w) {
    const std::size_t n = f.size();
    if (w.size() != n) throw std::invalid_argument("weighted norm: size mismatch");
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(f[i]));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("weighted norm requires p >= 1");
    double s = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < n; ++i) s += std::norm(f[i]) * w.sample(i);
    } else if (p == 1.0) {
        for (std::size_t i = 0; i < n; ++i) s += std::abs(f[i]) * w.sample(i);
    } else {
        for (std::size_t i = 0; i < n; ++i) s += std::pow(std::abs(f[i]), p) * w.sample(i);
    }
    return std::pow(s / static_cast<double>(n), 1.0 / p);
}

namespace {

Signal maximal_impl(const Signal& f, double t, const std::vector<double>& w) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument("maximal function requires finite t > 0");
    const std::size_t n = f.size();
    std::vector<double> ft(n);
    for (std::size_t i = 0; i < n; ++i) ft[i] = std::pow(std::abs(f[i]), t) * w[i];

    std::vector<double> best(n, 0.0);
    std::vector<double> avg(n + 1, 0.0), suf(n + 1, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        double num = 0.0, den = 0.0;
        for (std::size_t b = a + 1; b <= n; ++b) {
            num += ft[b - 1];
            den += w[b - 1];
            avg[b] = num / den;
        }
        suf[n] = avg[n];
        for (std::size_t b = n - 1; b > a; --b) suf[b] = std::max(avg[b], suf[b + 1]);
        // The closure of [a/n, b/n) contains sample x for a <= x <= b, so the
        // candidate windows for x are those with b >= max(x, a+1).
        for (std::size_t x = a; x < n; ++x)
            best[x] = std::max(best[x], suf[std::max(x, a + 1)]);
    }

    Signal out(n);
    const double inv = 1.0 / t;
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (t == 1.0) ? best[i] : std::pow(best[i], inv);
    return out;
}

}  // namespace

Signal maximal(const Signal& f, double t) {
    return maximal_impl(f, t, std::vector<double>(f.size(), 1.0));
}

Signal maximal(const Signal& f, double t, const Weight& w) {
    if (w.size() != f.size()) throw std::invalid_argument("maximal function: size mismatch");
    return maximal_impl(f, t, w.samples());
}

Signal dyadic_sharp(const Signal& f) {
    const std::size_t n = f.size();
    const int levels = log2_exact(n);
    std::vector<double> best(n, 0.0);
    for (int d = 0; d <= levels; ++d) {
        const std::size_t count = n >> d;
        for (std::size_t first = 0; first < n; first += count) {
            cplx mean = 0.0;
            for (std::size_t j = first; j < first + count; ++j) mean += f[j];
            mean /= static_cast<double>(count);
            double osc = 0.0;
            for (std::size_t j = first; j < first + count; ++j) osc += std::abs(f[j] - mean);
            osc /= static_cast<double>(count);
            for (std::size_t j = first; j < first + count; ++j)
                best[j] = std::max(best[j], osc);
        }
    }
    Signal out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = best[i];
    return out;
}

std::string weight_to_csv(const Weight& w) {
    const std::size_t n = w.size();
    std::string out = "x,w\n";
    char buf[80];
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", x, w.sample(i));
        out += buf;
    }
    return out;
}

Weight weight_from_csv(std::string_view csv) {
    std::vector<double> xs, ws;
    std::size_t pos = 0;
    bool first_line = true;
    while (pos < csv.size()) {
        std::size_t eol = csv.find('\n', pos);
        if (eol == std::string_view::npos) eol = csv.size();
        std::string line(csv.substr(pos, eol - pos));
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first_line) {
            first_line = false;
            if (line.find_first_not_of(" \t") != std::string::npos &&
                !std::isdigit(static_cast<unsigned char>(line[line.find_first_not_of(" \t")])) &&
                line[line.find_first_not_of(" \t")] != '-' &&
                line[line.find_first_not_of(" \t")] != '.')
                continue;  // header row
        }
        const char* s = line.c_str();
        char* end = nullptr;
        const double x = std::strtod(s, &end);
        if (end == s || *end != ',')
            throw std::invalid_argument("weight csv: expected 'x,w' on line '" + line + "'");
        const char* s2 = end + 1;
        const double v = std::strtod(s2, &end);
        if (end == s2)
            throw std::invalid_argument("weight csv: bad weight value on line '" + line + "'");
        xs.push_back(x);
        ws.push_back(v);
    }
    const std::size_t n = ws.size();
    if (n < 8 || !is_pow2(n))
        throw std::invalid_argument("weight csv: sample count must be a power of two >= 8");
    for (std::size_t i = 0; i < n; ++i) {
        const double expect = static_cast<double>(i) / static_cast<double>(n);
        if (std::abs(xs[i] - expect) > 1e-9)
            throw std::invalid_argument("weight csv: x column is not the uniform grid");
    }
    return Weight::from_samples(std::move(ws));
}

}  // namespace vclab
