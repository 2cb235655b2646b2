#pragma once
// Half-open intervals on the line plus dyadic intervals of the unit torus.
// All endpoints that occur in practice are dyadic rationals, so interval
// membership tests on doubles are exact as long as the dilation constants
// are themselves dyadic (the defaults are).

#include <cmath>
#include <cstdint>

namespace vclab {

struct Interval {
    double lo = 0.0, hi = 0.0;  // [lo, hi)

    double length() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool empty() const { return !(lo < hi); }
    bool contains(double x) const { return lo <= x && x < hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool intersects(const Interval& o) const { return lo < o.hi && o.lo < hi; }

    // Same center, length scaled by c.
    Interval dilated(double c) const {
        double mid = center(), half = 0.5 * c * length();
        return {mid - half, mid + half};
    }

    static Interval hull(const Interval& a, const Interval& b) {
        return {a.lo < b.lo ? a.lo : b.lo, a.hi > b.hi ? a.hi : b.hi};
    }

    bool operator==(const Interval&) const = default;
};

// Distance on R/Z.
inline double torus_dist(double x, double y) {
    double d = std::fabs(x - y);
    d -= std::floor(d);
    return d <= 0.5 ? d : 1.0 - d;
}

// [index 2^-depth, (index+1) 2^-depth), depth >= 0, 0 <= index < 2^depth.
struct DyadicInterval {
    int depth = 0;
    std::int64_t index = 0;

    double length() const { return std::ldexp(1.0, -depth); }
    double lo() const { return double(index) * length(); }
    double hi() const { return double(index + 1) * length(); }
    double center() const { return (double(index) + 0.5) * length(); }
    Interval to_interval() const { return {lo(), hi()}; }

    // Dyadic nesting, exact in integer arithmetic.
    bool contains(const DyadicInterval& o) const {
        return o.depth >= depth && (o.index >> (o.depth - depth)) == index;
    }
    DyadicInterval parent() const { return {depth - 1, index >> 1}; }

    bool operator==(const DyadicInterval&) const = default;
};

}  // namespace vclab
