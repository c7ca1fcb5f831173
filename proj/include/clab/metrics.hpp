#pragma once

#include <optional>
#include <vector>

#include "clab/lattice.hpp"

namespace clab {

// Largest m such that x and y agree on the whole ball I_m. nullopt marks
// identical configurations (infinite radius); 0 covers both a discrepancy at
// the origin and one at sup-norm 1, so the metric below is capped at 1.
std::optional<int> agreement_radius(const Configuration& x, const Configuration& y);

// 2^{-agreement_radius}; 0 for identical configurations. An ultrametric on any
// fixed lattice.
double cylinder_metric(const Configuration& x, const Configuration& y);

// Sites of I_m where x and y disagree, ascending site index.
std::vector<long> discrepancy_sites(const Configuration& x, const Configuration& y, int m);

// Fraction of I_m occupied by discrepancies, exact.
Rat discrepancy_density(const Configuration& x, const Configuration& y, int m);

struct ShiftedDiscrepancy {
    Rat value;
    std::vector<int> best_shift;
};

// Minimum of discrepancy_density(x, shift(y, l), m) over |l| <= shift_bound,
// with the lexicographically smallest argmin. Torus only.
ShiftedDiscrepancy shifted_discrepancy_density(const Configuration& x, const Configuration& y,
                                               int shift_bound, int m);

// Average of the cylinder indicator over all shifts |l| <= m (torus only):
// the ergodic average whose limit separates translation-invariant measures.
Rat shift_average(const Configuration& x, const Cylinder& c, int m);

// Pathwise bound |shift_average(x)-shift_average(y)| obeys: the number of
// mismatched shifts is at most base_size * |D_{m+reach}|. Helpers for tests
// and the harness; reach defaults to the base size per the acceptance check.
long shift_average_mismatch_bound(const Cylinder& c, const Configuration& x, const Configuration& y,
                                  int m, int reach);

} // namespace clab
