#pragma once

#include <boost/rational.hpp>

namespace clab {

// Exact arithmetic for particle densities and discrepancy fractions.
// Numerators are bounded by (alphabet-1) * site count, well inside 64 bits.
using Rat = boost::rational<long long>;

inline double to_double(const Rat& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline Rat rat_abs(const Rat& r) {
    return r < Rat(0) ? -r : r;
}

} // namespace clab
