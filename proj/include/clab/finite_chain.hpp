#pragma once

#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "clab/errors.hpp"

namespace clab {

struct Distribution {
    std::vector<double> p;
    int size() const { return static_cast<int>(p.size()); }
};

Distribution point_mass(int n, int x);

// sup_A |mu(A) - nu(A)| = half the L1 distance.
double total_variation(const Distribution& mu, const Distribution& nu);

// Row-stochastic matrix on a small finite state space (doubles; rows checked
// to sum to 1 within row_tol).
struct FiniteChain {
    int n = 0;
    std::vector<double> P; // row-major

    double at(int i, int j) const { return P[static_cast<std::size_t>(i * n + j)]; }
    static FiniteChain from_rows(const std::vector<std::vector<double>>& rows,
                                 double row_tol = 1e-12);
};

Distribution evolve(const FiniteChain& chain, const Distribution& mu);

// One invariant measure per recurrent class, embedded in the full state space.
std::vector<Distribution> invariant_measures(const FiniteChain& chain);
// Requires exactly one recurrent class; throws std::domain_error otherwise.
Distribution invariant_measure(const FiniteChain& chain);
double invariant_residual(const FiniteChain& chain, const Distribution& mu);

// Pairs-chain transition matrix on the product space, state (i,j) <-> i*n+j.
struct CouplingKernel {
    int n = 0; // base state count; the matrix is (n^2) x (n^2)
    std::vector<double> K;

    int states() const { return n * n; }
    double at(int s, int t) const {
        return K[static_cast<std::size_t>(s) * static_cast<std::size_t>(states()) +
                 static_cast<std::size_t>(t)];
    }
};

// Components move independently off the diagonal and in lockstep on it.
CouplingKernel independent_glued_kernel(const FiniteChain& chain);

// Checks both marginals against the base chain and that the diagonal maps
// into itself. Throws validation_error on failure.
void validate_kernel(const FiniteChain& chain, const CouplingKernel& kernel, double tol = 1e-12);

// P(tau0 > t) for t = 0..T: off-diagonal mass of the evolved pairs
// distribution; the diagonal must absorb. The _via_inflow variant accumulates
// per-step absorption instead, for cross-checking.
std::vector<double> meeting_survival(const CouplingKernel& kernel, int x, int y, int T);
std::vector<double> meeting_survival_via_inflow(const CouplingKernel& kernel, int x, int y, int T);

struct InequalityRow {
    int t = 0;
    double tv = 0.0;
    double survival = 0.0;
    bool ok = true;
};

struct InequalityReport {
    std::vector<InequalityRow> rows;
    bool holds = true;
    double max_excess = 0.0; // max over t of tv - survival
};

// Exact TV(P^t(x,.), P^t(y,.)) against P(tau0 > t) for every t <= T.
InequalityReport coupling_inequality_verify(const FiniteChain& chain, const CouplingKernel& kernel,
                                            int x, int y, int T, double tol = 1e-12);

struct SpliceReport {
    std::vector<double> l1; // per t: L1 gap between spliced law and P^t(y,.)
    double max_l1 = 0.0;
    bool ok = true;
    long leaves = 0; // enumerated path count
};

// Exhaustive path enumeration: splice at the first meeting time and compare
// the spliced time-t laws with the base chain started from y.
SpliceReport splice_marginal_check(const FiniteChain& chain, const CouplingKernel& kernel, int x,
                                   int y, int T, double tol = 1e-12, long path_cap = 10000000);

// Explicit coupled-path ensembles (for couplings that are not product-chain
// kernels, e.g. with randomness reused across time).
struct CoupledPathEnsemble {
    int n = 0;
    // Each path is a sequence of (first, second) states for t = 0..T.
    std::vector<std::pair<std::vector<std::pair<int, int>>, double>> paths;
};

std::vector<Distribution> spliced_laws(const CoupledPathEnsemble& ensemble);

// Plain-text matrix format: first token is the state count, then the rows.
// Throws validation_error naming the offending row.
FiniteChain load_chain(const std::string& path);
CouplingKernel load_kernel(const std::string& path);

// ---- exact rational path ------------------------------------------------

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

struct RationalChain {
    int n = 0;
    std::vector<BigRat> P;

    const BigRat& at(int i, int j) const { return P[static_cast<std::size_t>(i * n + j)]; }
};

struct RationalKernel {
    int n = 0;
    std::vector<BigRat> K;

    int states() const { return n * n; }
    const BigRat& at(int s, int t) const {
        return K[static_cast<std::size_t>(s) * static_cast<std::size_t>(states()) +
                 static_cast<std::size_t>(t)];
    }
};

// Rows normalized by their exact integer weight sums.
RationalChain rational_chain_from_weights(int n, const std::vector<long>& weights);
// Exact dyadic conversion; rows must sum to exactly 1.
RationalChain rational_chain_from_doubles(const FiniteChain& chain);
RationalKernel rational_kernel_from_doubles(const CouplingKernel& kernel);
FiniteChain to_double_chain(const RationalChain& chain);

RationalKernel independent_glued_kernel(const RationalChain& chain);
void validate_kernel_exact(const RationalChain& chain, const RationalKernel& kernel);

// The inequality checked with zero tolerance in integer arithmetic.
InequalityReport coupling_inequality_verify_exact(const RationalChain& chain,
                                                  const RationalKernel& kernel, int x, int y,
                                                  int T);

} // namespace clab
