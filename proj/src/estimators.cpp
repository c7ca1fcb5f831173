#include "clab/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace clab {

namespace {

void run_replicas(int replicas, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, replicas));
    if (threads == 1) {
        for (int r = 0; r < replicas; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic_int next{0};
    std::exception_ptr error;
    std::mutex error_guard;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                int r = next.fetch_add(1);
                if (r >= replicas) break;
                try {
                    body(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_guard);
                    if (!error) error = std::current_exception();
                    break;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<long> resolve_times(const std::vector<long>& requested, long horizon) {
    if (requested.empty()) {
        std::vector<long> all(static_cast<std::size_t>(horizon) + 1);
        for (long t = 0; t <= horizon; ++t) all[static_cast<std::size_t>(t)] = t;
        return all;
    }
    std::vector<long> times = requested;
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.front() < 0 || times.back() > horizon)
        throw std::invalid_argument("record times must lie in [0, horizon]");
    return times;
}

void summarize(SeriesData& s, double z) {
    if (s.per_replica.empty()) return;
    const std::size_t nt = s.per_replica.front().size();
    const std::size_t nr = s.per_replica.size();
    s.mean.assign(nt, 0.0);
    s.median.assign(nt, 0.0);
    s.lo.assign(nt, 0.0);
    s.hi.assign(nt, 0.0);
    std::vector<double> column(nr);
    for (std::size_t t = 0; t < nt; ++t) {
        double sum = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            column[r] = s.per_replica[r][t];
            sum += column[r];
        }
        double mean = sum / static_cast<double>(nr);
        double var = 0.0;
        for (std::size_t r = 0; r < nr; ++r) var += (column[r] - mean) * (column[r] - mean);
        var = nr > 1 ? var / static_cast<double>(nr - 1) : 0.0;
        double half = z * std::sqrt(var / static_cast<double>(nr));
        std::sort(column.begin(), column.end());
        double median = nr % 2 == 1 ? column[nr / 2] : 0.5 * (column[nr / 2 - 1] + column[nr / 2]);
        s.mean[t] = mean;
        s.median[t] = median;
        s.lo[t] = mean - half;
        s.hi[t] = mean + half;
    }
}

} // namespace

ConfigSampler fixed_sampler(Configuration x) {
    return [x = std::move(x)](Rng&) { return x; };
}

ConfigSampler bernoulli_sampler(const Lattice& lat, double r) {
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("bernoulli density must lie in [0,1]");
    return [lat, r](Rng& rng) { return bernoulli_configuration(lat, r, rng); };
}

ConfigSampler named_sampler(const Lattice& lat, const Alphabet& alph, const std::string& name) {
    if (name == "zeros") {
        Configuration x = Configuration::zeros(lat, alph);
        return fixed_sampler(std::move(x));
    }
    if (name == "ones") {
        Configuration x = Configuration::zeros(lat, alph);
        for (long s = 0; s < lat.n_sites(); ++s) x.set(s, 1);
        return fixed_sampler(std::move(x));
    }
    if (name == "alternating") {
        Configuration x = Configuration::zeros(lat, alph);
        std::vector<int> c(static_cast<std::size_t>(lat.dim()));
        for (long s = 0; s < lat.n_sites(); ++s) {
            lat.coords_of(s, c);
            long parity = 0;
            for (int v : c) parity += v;
            x.set(s, static_cast<std::uint8_t>(((parity % 2) + 2) % 2));
        }
        return fixed_sampler(std::move(x));
    }
    if (name == "single") {
        Configuration x = Configuration::zeros(lat, alph);
        std::vector<int> origin(static_cast<std::size_t>(lat.dim()), 0);
        x.set(lat.index_of(origin), 1);
        return fixed_sampler(std::move(x));
    }
    throw validation_error("initial: unknown pattern '" + name + "'");
}

CoupledRunStats run_coupled(const RulePtr& rule, CouplingKind kind, int pairing_distance,
                            const ConfigSampler& x0, const ConfigSampler& y0,
                            const ReplicaPlan& plan, const StatsSpec& spec, double z) {
    if (plan.replicas < 1) throw std::invalid_argument("plan needs at least one replica");
    CoupledRunStats stats;
    stats.times = resolve_times(spec.record_times, plan.horizon);
    const std::size_t nt = stats.times.size();
    const std::size_t nr = static_cast<std::size_t>(plan.replicas);

    auto make_series = [&]() {
        SeriesData s;
        s.per_replica.assign(nr, std::vector<double>(nt, 0.0));
        return s;
    };
    stats.discrepancy = make_series();
    if (spec.shift_bound > 0) stats.shifted_discrepancy = make_series();
    stats.pair_count = make_series();
    stats.unpaired_fraction = make_series();
    stats.density_x.assign(spec.density_radii.size(), make_series());
    stats.density_y.assign(spec.density_radii.size(), make_series());
    stats.mismatch.assign(spec.cylinders.size(), make_series());
    stats.final_best_shift.assign(nr, {});

    run_replicas(plan.replicas, plan.threads, [&](int r) {
        Rng rng(derive_seed(plan.base_seed, static_cast<std::uint64_t>(r)));
        Configuration x = x0(rng);
        Configuration y = y0(rng);
        CoupledState state = make_coupled_state(std::move(x), std::move(y), kind, pairing_distance);
        const Lattice& lat = state.x.lattice();
        const int disc_radius =
            spec.discrepancy_radius >= 0 ? spec.discrepancy_radius : lat.max_ball_radius();
        std::vector<std::vector<long>> windows;
        windows.reserve(spec.density_radii.size());
        for (int radius : spec.density_radii) windows.push_back(lat.ball(radius));

        std::size_t next_record = 0;
        const std::size_t ri = static_cast<std::size_t>(r);
        auto record = [&](long t) {
            while (next_record < nt && stats.times[next_record] == t) {
                stats.discrepancy.per_replica[ri][next_record] =
                    to_double(discrepancy_density(state.x, state.y, disc_radius));
                if (spec.shift_bound > 0) {
                    ShiftedDiscrepancy sd =
                        shifted_discrepancy_density(state.x, state.y, spec.shift_bound, disc_radius);
                    stats.shifted_discrepancy.per_replica[ri][next_record] = to_double(sd.value);
                    if (next_record + 1 == nt) stats.final_best_shift[ri] = sd.best_shift;
                }
                long particles = static_cast<long>(state.registry.first.size());
                stats.pair_count.per_replica[ri][next_record] =
                    static_cast<double>(state.registry.pair_count());
                stats.unpaired_fraction.per_replica[ri][next_record] =
                    particles == 0 ? 1.0
                                   : static_cast<double>(state.registry.unpaired_first()) /
                                         static_cast<double>(particles);
                for (std::size_t w = 0; w < windows.size(); ++w) {
                    stats.density_x[w].per_replica[ri][next_record] =
                        to_double(density(state.x, windows[w]));
                    stats.density_y[w].per_replica[ri][next_record] =
                        to_double(density(state.y, windows[w]));
                }
                for (std::size_t c = 0; c < spec.cylinders.size(); ++c) {
                    int a = cylinder_indicator(state.x, spec.cylinders[c]);
                    int b = cylinder_indicator(state.y, spec.cylinders[c]);
                    stats.mismatch[c].per_replica[ri][next_record] = a != b ? 1.0 : 0.0;
                }
                ++next_record;
            }
        };

        record(0);
        for (long t = 1; t <= plan.horizon && next_record < nt; ++t) {
            state = coupled_step(state, *rule, rng);
            record(t);
        }
    });

    summarize(stats.discrepancy, z);
    if (spec.shift_bound > 0) summarize(stats.shifted_discrepancy, z);
    summarize(stats.pair_count, z);
    summarize(stats.unpaired_fraction, z);
    for (auto& s : stats.density_x) summarize(s, z);
    for (auto& s : stats.density_y) summarize(s, z);
    for (auto& s : stats.mismatch) summarize(s, z);
    return stats;
}

MismatchRateSeries indicator_mismatch_rate(const RulePtr& rule, CouplingKind kind,
                                           int pairing_distance, const ConfigSampler& x0,
                                           const ConfigSampler& y0, const Cylinder& cylinder,
                                           int shift_bound, const ReplicaPlan& plan,
                                           const std::vector<long>& record_times, double z) {
    if (shift_bound < 0) throw std::invalid_argument("shift bound must be >= 0");
    std::vector<long> times = resolve_times(record_times, plan.horizon);
    const std::size_t nt = times.size();

    // Enumerate shifts in lexicographic order and pre-translate the cylinder.
    Rng probe(derive_seed(plan.base_seed, 0));
    Configuration probe_cfg = x0(probe);
    const Lattice& lat = probe_cfg.lattice();
    if (shift_bound > 0 && lat.boundary() != Boundary::torus)
        throw unsupported_operation("shifted mismatch estimators require a torus");
    std::vector<std::vector<int>> shifts;
    std::vector<int> l(static_cast<std::size_t>(lat.dim()), -shift_bound);
    while (true) {
        shifts.push_back(l);
        int a = lat.dim() - 1;
        while (a >= 0) {
            if (++l[static_cast<std::size_t>(a)] <= shift_bound) break;
            l[static_cast<std::size_t>(a)] = -shift_bound;
            --a;
        }
        if (a < 0) break;
    }
    std::vector<Cylinder> translated;
    translated.reserve(shifts.size());
    for (const auto& s : shifts) translated.push_back(translate_cylinder(cylinder, s, lat));

    // mismatch counts per (time, shift), merged across replicas
    std::vector<std::vector<long>> counts(nt, std::vector<long>(shifts.size(), 0));
    std::mutex merge_guard;

    run_replicas(plan.replicas, plan.threads, [&](int r) {
        Rng rng(derive_seed(plan.base_seed, static_cast<std::uint64_t>(r)));
        Configuration x = x0(rng);
        Configuration y = y0(rng);
        CoupledState state = make_coupled_state(std::move(x), std::move(y), kind, pairing_distance);
        std::vector<std::vector<long>> local(nt, std::vector<long>(shifts.size(), 0));
        std::size_t next_record = 0;
        auto record = [&](long t) {
            while (next_record < nt && times[next_record] == t) {
                int ax = cylinder_indicator(state.x, cylinder);
                for (std::size_t s = 0; s < translated.size(); ++s) {
                    int ay = cylinder_indicator(state.y, translated[s]);
                    if (ax != ay) ++local[next_record][s];
                }
                ++next_record;
            }
        };
        record(0);
        for (long t = 1; t <= plan.horizon && next_record < nt; ++t) {
            state = coupled_step(state, *rule, rng);
            record(t);
        }
        std::lock_guard<std::mutex> lock(merge_guard);
        for (std::size_t ti = 0; ti < nt; ++ti)
            for (std::size_t s = 0; s < shifts.size(); ++s) counts[ti][s] += local[ti][s];
    });

    MismatchRateSeries out;
    out.times = times;
    const double R = static_cast<double>(plan.replicas);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        std::size_t best = 0;
        for (std::size_t s = 1; s < shifts.size(); ++s)
            if (counts[ti][s] < counts[ti][best]) best = s; // lexicographic tie-break by order
        double p = static_cast<double>(counts[ti][best]) / R;
        out.rate.push_back(p);
        out.ci.push_back(z * std::sqrt(p * (1.0 - p) / R));
        out.best_shift.push_back(shifts[best]);
    }
    return out;
}

EmpiricalMeasure cesaro_estimate(const RulePtr& rule, const ConfigSampler& initial, long avg_len,
                                 const std::vector<Cylinder>& cylinders, const ReplicaPlan& plan,
                                 double z) {
    if (avg_len < 1) throw std::invalid_argument("averaging length must be >= 1");
    const std::size_t nc = cylinders.size();
    std::vector<std::vector<double>> per_replica(static_cast<std::size_t>(plan.replicas),
                                                 std::vector<double>(nc, 0.0));

    run_replicas(plan.replicas, plan.threads, [&](int r) {
        Rng rng(derive_seed(plan.base_seed, static_cast<std::uint64_t>(r)));
        Configuration x = initial(rng);
        std::vector<long> hits(nc, 0);
        for (long t = 0; t < avg_len; ++t) {
            for (std::size_t c = 0; c < nc; ++c) hits[c] += cylinder_indicator(x, cylinders[c]);
            if (t + 1 < avg_len) x = step(*rule, x, rng);
        }
        for (std::size_t c = 0; c < nc; ++c)
            per_replica[static_cast<std::size_t>(r)][c] =
                static_cast<double>(hits[c]) / static_cast<double>(avg_len);
    });

    EmpiricalMeasure m;
    m.replicas = plan.replicas;
    m.z = z;
    const double R = static_cast<double>(plan.replicas);
    for (std::size_t c = 0; c < nc; ++c) {
        double sum = 0.0;
        for (int r = 0; r < plan.replicas; ++r) sum += per_replica[static_cast<std::size_t>(r)][c];
        double p = sum / R;
        m.estimate.push_back(p);
        m.ci_radius.push_back(z * std::sqrt(p * (1.0 - p) / R));
    }
    return m;
}

StepFn rule_step_fn(RulePtr rule) {
    return [rule = std::move(rule)](const Configuration& x, Rng& rng) {
        return step(*rule, x, rng);
    };
}

StepFn annihilation_step_fn() {
    return [](const Configuration& x, Rng&) { return shift_annihilation_step(x); };
}

DensitySeries density_series(const StepFn& step_fn, const Configuration& x0,
                             const std::vector<int>& radii, long horizon, std::uint64_t seed) {
    DensitySeries out;
    out.radii = radii;
    out.by_radius.assign(radii.size(), {});
    const Lattice& lat = x0.lattice();
    std::vector<std::vector<long>> windows;
    for (int radius : radii) windows.push_back(lat.ball(radius));

    Rng rng(seed);
    Configuration x = x0;
    for (long t = 0; t <= horizon; ++t) {
        out.times.push_back(t);
        out.particle_count.push_back(x.particle_count());
        for (std::size_t w = 0; w < windows.size(); ++w)
            out.by_radius[w].push_back(density(x, windows[w]));
        if (t < horizon) x = step_fn(x, rng);
    }
    return out;
}

double density_drift_bound(int n, int V, int d, int alphabet_size) {
    return to_double(density_drift_bound_exact(n, V, d, alphabet_size));
}

Rat density_drift_bound_exact(int n, int V, int d, int alphabet_size) {
    if (V < 0 || n <= V) throw std::domain_error("drift bound needs n > V >= 0");
    if (d < 1) throw std::domain_error("drift bound needs d >= 1");
    if (alphabet_size < 2) throw std::domain_error("drift bound needs an alphabet of size >= 2");
    Rat ratio(2LL * V, 2LL * n + 1);
    auto pow_d = [&](Rat base) {
        Rat out(1);
        for (int i = 0; i < d; ++i) out *= base;
        return out;
    };
    Rat shrink = Rat(1) - pow_d(Rat(1) - ratio);
    Rat grow = pow_d(Rat(1) + ratio) - Rat(1);
    Rat m = std::max(shrink, grow);
    return Rat(2LL * alphabet_size) * m;
}

ProbeResult weak_convergence_probe(const RulePtr& rule, const ConfigSampler& sampler1,
                                   const ConfigSampler& sampler2,
                                   const std::vector<Cylinder>& cylinders,
                                   const ReplicaPlan& plan,
                                   const std::vector<long>& record_times, double z) {
    std::vector<long> times = resolve_times(record_times, plan.horizon);
    const std::size_t nt = times.size();
    const std::size_t nc = cylinders.size();

    auto estimate = [&](const ConfigSampler& sampler, std::uint64_t salt) {
        std::vector<std::vector<long>> counts(nc, std::vector<long>(nt, 0));
        std::mutex merge_guard;
        run_replicas(plan.replicas, plan.threads, [&](int r) {
            Rng rng(derive_seed(plan.base_seed ^ salt, static_cast<std::uint64_t>(r)));
            Configuration x = sampler(rng);
            std::vector<std::vector<long>> local(nc, std::vector<long>(nt, 0));
            std::size_t next_record = 0;
            for (long t = 0; t <= plan.horizon && next_record < nt; ++t) {
                if (times[next_record] == t) {
                    for (std::size_t c = 0; c < nc; ++c)
                        local[c][next_record] += cylinder_indicator(x, cylinders[c]);
                    ++next_record;
                }
                if (t < plan.horizon && next_record < nt) x = step(*rule, x, rng);
            }
            std::lock_guard<std::mutex> lock(merge_guard);
            for (std::size_t c = 0; c < nc; ++c)
                for (std::size_t ti = 0; ti < nt; ++ti) counts[c][ti] += local[c][ti];
        });
        std::vector<std::vector<double>> est(nc, std::vector<double>(nt, 0.0));
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t ti = 0; ti < nt; ++ti)
                est[c][ti] = static_cast<double>(counts[c][ti]) / static_cast<double>(plan.replicas);
        return est;
    };

    ProbeResult out;
    out.times = times;
    out.est1 = estimate(sampler1, 0x517cc1b727220a95ULL);
    out.est2 = estimate(sampler2, 0x2545f4914f6cdd1dULL);
    const double R = static_cast<double>(plan.replicas);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        double diff = 0.0, radius = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            double p1 = out.est1[c][ti], p2 = out.est2[c][ti];
            diff = std::max(diff, std::abs(p1 - p2));
            double s1 = std::sqrt(p1 * (1.0 - p1) / R), s2 = std::sqrt(p2 * (1.0 - p2) / R);
            radius = std::max(radius, z * (s1 + s2));
        }
        out.max_diff.push_back(diff);
        out.ci.push_back(radius);
    }
    return out;
}

StreamSampler zero_stream_sampler() {
    return [](Rng&) { return zero_stream(); };
}

StreamSampler uniform_stream_sampler() {
    return [](Rng& rng) { return random_stream(rng()); };
}

int bit_cylinder_indicator(const BitStream& b, const BitCylinder& c) {
    for (std::size_t i = 0; i < c.bits.size(); ++i)
        if (b.bit(i) != c.bits[i]) return 0;
    return 1;
}

std::vector<std::vector<double>> stream_cylinder_series(const StreamSampler& sampler,
                                                        const std::vector<BitCylinder>& cylinders,
                                                        const ReplicaPlan& plan) {
    const std::size_t nc = cylinders.size();
    const std::size_t nt = static_cast<std::size_t>(plan.horizon) + 1;
    std::vector<std::vector<long>> counts(nc, std::vector<long>(nt, 0));
    std::mutex merge_guard;
    run_replicas(plan.replicas, plan.threads, [&](int r) {
        Rng rng(derive_seed(plan.base_seed, static_cast<std::uint64_t>(r)));
        BitStream b = sampler(rng);
        std::vector<std::vector<long>> local(nc, std::vector<long>(nt, 0));
        for (std::size_t t = 0; t < nt; ++t) {
            for (std::size_t c = 0; c < nc; ++c) local[c][t] += bit_cylinder_indicator(b, cylinders[c]);
            b = doubling_step(b);
        }
        std::lock_guard<std::mutex> lock(merge_guard);
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t t = 0; t < nt; ++t) counts[c][t] += local[c][t];
    });
    std::vector<std::vector<double>> est(nc, std::vector<double>(nt, 0.0));
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t t = 0; t < nt; ++t)
            est[c][t] = static_cast<double>(counts[c][t]) / static_cast<double>(plan.replicas);
    return est;
}

} // namespace clab
