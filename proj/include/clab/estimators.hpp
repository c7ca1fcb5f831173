#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clab/coupling.hpp"
#include "clab/metrics.hpp"

namespace clab {

// Seeded replica schedule. Replica k runs on derive_seed(base_seed, k); reruns
// with the same plan are bit-identical regardless of the thread count.
struct ReplicaPlan {
    int replicas = 1;
    long horizon = 0;
    std::uint64_t base_seed = 0;
    int threads = 1;
};

using ConfigSampler = std::function<Configuration(Rng&)>;

ConfigSampler fixed_sampler(Configuration x);
ConfigSampler bernoulli_sampler(const Lattice& lat, double r);
// zeros | ones | alternating | single (one particle at the origin)
ConfigSampler named_sampler(const Lattice& lat, const Alphabet& alph, const std::string& name);

// What to record along a coupled run and when. Empty record_times means every
// step 0..horizon.
struct StatsSpec {
    std::vector<long> record_times;
    std::vector<int> density_radii;
    std::vector<Cylinder> cylinders;
    int shift_bound = 0;      // L for the shifted discrepancy (0 = skip)
    int discrepancy_radius = -1; // -1 = full window
};

// One scalar per replica per recorded time, plus across-replica summaries.
// lo/hi bracket the mean with z * sd / sqrt(R).
struct SeriesData {
    std::vector<std::vector<double>> per_replica;
    std::vector<double> mean, median, lo, hi;
};

struct CoupledRunStats {
    std::vector<long> times;
    SeriesData discrepancy;
    SeriesData shifted_discrepancy; // empty unless shift_bound > 0
    SeriesData pair_count;          // matched pairs
    SeriesData unpaired_fraction;   // unpaired first-component fraction
    std::vector<SeriesData> density_x; // per radius
    std::vector<SeriesData> density_y;
    std::vector<SeriesData> mismatch;  // per cylinder, unshifted flags
    std::vector<std::vector<int>> final_best_shift; // per replica
};

CoupledRunStats run_coupled(const RulePtr& rule, CouplingKind kind, int pairing_distance,
                            const ConfigSampler& x0, const ConfigSampler& y0,
                            const ReplicaPlan& plan, const StatsSpec& spec, double z = 3.0);

// Estimates of P(1_A(x^t) != 1_A(shift(y^t, l))) minimized over |l| <= bound,
// with the arg-min shift per time (lexicographic ties).
struct MismatchRateSeries {
    std::vector<long> times;
    std::vector<double> rate;
    std::vector<double> ci;
    std::vector<std::vector<int>> best_shift;
};

MismatchRateSeries indicator_mismatch_rate(const RulePtr& rule, CouplingKind kind,
                                           int pairing_distance, const ConfigSampler& x0,
                                           const ConfigSampler& y0, const Cylinder& cylinder,
                                           int shift_bound, const ReplicaPlan& plan,
                                           const std::vector<long>& record_times, double z = 3.0);

// Cylinder probabilities under the time-averaged law (1/N) sum_t P_*^t mu.
struct EmpiricalMeasure {
    std::vector<double> estimate;  // per cylinder
    std::vector<double> ci_radius; // z * sqrt(p(1-p)/R)
    int replicas = 0;
    double z = 3.0;
};

EmpiricalMeasure cesaro_estimate(const RulePtr& rule, const ConfigSampler& initial, long avg_len,
                                 const std::vector<Cylinder>& cylinders, const ReplicaPlan& plan,
                                 double z = 3.0);

// Single-trajectory step functions (the lattice models plus the deterministic
// annihilation map).
using StepFn = std::function<Configuration(const Configuration&, Rng&)>;
StepFn rule_step_fn(RulePtr rule);
StepFn annihilation_step_fn();

struct DensitySeries {
    std::vector<long> times;
    std::vector<int> radii;
    std::vector<std::vector<Rat>> by_radius; // [radius][t]
    std::vector<long> particle_count;        // full-window count per t
};

DensitySeries density_series(const StepFn& step_fn, const Configuration& x0,
                             const std::vector<int>& radii, long horizon, std::uint64_t seed);

// Largest possible one-step change of the window-n density for a rule of
// velocity bound V on a d-dimensional lattice with the given alphabet size.
double density_drift_bound(int n, int V, int d, int alphabet_size);
Rat density_drift_bound_exact(int n, int V, int d, int alphabet_size);

// Per-time gap between the empirical cylinder vectors of two initial laws
// evolved by the same rule.
struct ProbeResult {
    std::vector<long> times;
    std::vector<std::vector<double>> est1, est2; // [cylinder][time]
    std::vector<double> max_diff;                // per time
    std::vector<double> ci;                      // per time, worst-case radius
};

ProbeResult weak_convergence_probe(const RulePtr& rule, const ConfigSampler& sampler1,
                                   const ConfigSampler& sampler2,
                                   const std::vector<Cylinder>& cylinders,
                                   const ReplicaPlan& plan,
                                   const std::vector<long>& record_times, double z = 3.0);

// Bit-stream analogues for the doubling map.
using StreamSampler = std::function<BitStream(Rng&)>;
StreamSampler zero_stream_sampler();
StreamSampler uniform_stream_sampler();

struct BitCylinder {
    std::vector<int> bits; // prescribed leading bits
};

int bit_cylinder_indicator(const BitStream& b, const BitCylinder& c);

// [cylinder][t] estimates of P(stepped stream matches), t = 0..horizon.
std::vector<std::vector<double>> stream_cylinder_series(const StreamSampler& sampler,
                                                        const std::vector<BitCylinder>& cylinders,
                                                        const ReplicaPlan& plan);

} // namespace clab
