// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "clab/estimators.hpp"
#include "clab/finite_chain.hpp"

using namespace clab;

namespace {

long site_1d(const Lattice& lat, int c) {
    return lat.index_of(std::span<const int>(&c, 1));
}

// exact one-step occupancy of a site under parallel exclusion dynamics
double one_step_occupancy(const Configuration& x, int site, double p) {
    const Lattice& lat = x.lattice();
    long i = site_1d(lat, site);
    std::vector<int> right{1}, left{-1};
    double xi = x.at(i);
    double xr = x.at(*lat.offset_site(i, right));
    double xl = x.at(*lat.offset_site(i, left));
    return xi * (1.0 - p * (1.0 - xr)) + (1.0 - xi) * xl * p;
}

// 1. Coupling inequality, exact arithmetic, fair 2-state chain and a seeded
//    3-state chain, every start pair, t <= 50.
bool criterion_inequality(std::string& detail) {
    RationalChain fair =
        rational_chain_from_doubles(FiniteChain::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
    RationalKernel fair_kernel = independent_glued_kernel(fair);
    bool ok = true;
    for (int x = 0; x < 2 && ok; ++x)
        for (int y = 0; y < 2 && ok; ++y)
            ok = coupling_inequality_verify_exact(fair, fair_kernel, x, y, 50).holds;

    Rng rng(20260810);
    std::vector<long> weights(9);
    for (auto& w : weights) w = 1 + static_cast<long>(rng() % 1000);
    RationalChain random3 = rational_chain_from_weights(3, weights);
    RationalKernel kernel3 = independent_glued_kernel(random3);
    for (int x = 0; x < 3 && ok; ++x)
        for (int y = 0; y < 3 && ok; ++y)
            ok = coupling_inequality_verify_exact(random3, kernel3, x, y, 50).holds;
    detail = "TV <= P(tau0 > t) exactly, 2-state (4 pairs) and seeded 3-state (9 pairs), t <= 50";
    return ok;
}

// 2. Splice marginal check by exhaustive path enumeration, fair chain, T = 6.
bool criterion_splice(std::string& detail) {
    FiniteChain chain = FiniteChain::from_rows({{0.5, 0.5}, {0.5, 0.5}});
    CouplingKernel kernel = independent_glued_kernel(chain);
    double max_l1 = 0.0;
    long leaves = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            SpliceReport rep = splice_marginal_check(chain, kernel, x, y, 6);
            max_l1 = std::max(max_l1, rep.max_l1);
            leaves += rep.leaves;
        }
    std::ostringstream os;
    os << "spliced laws match P^t(y,.), max L1 = " << max_l1 << " over " << leaves << " paths";
    detail = os.str();
    return max_l1 <= 1e-12;
}

// 3. Halving-chain dichotomy: exact quasi-meeting times, mismatch rate 1.
bool criterion_halving(std::string& detail) {
    std::vector<double> gap;
    double x = 0.0, y = 1.0;
    for (int t = 0; t <= 30; ++t) {
        gap.push_back(std::abs(x - y));
        x = halving_step(x);
        y = halving_step(y);
    }
    bool ok = true;
    for (int k = 1; k <= 20; ++k) {
        auto tau = quasi_meeting_time(gap, std::ldexp(1.0, -k));
        if (!tau || *tau != k) ok = false;
    }
    // indicator mismatch for A = R \ {0}: permanently 1
    double xt = 0.0, yt = 1.0;
    for (int t = 0; t <= 100; ++t) {
        int in_a_x = xt != 0.0;
        int in_a_y = yt != 0.0;
        if ((in_a_x != in_a_y) != 1) ok = false;
        xt = halving_step(xt);
        yt = halving_step(yt);
    }
    detail = "tau^eps = k for eps = 2^-k, k = 1..20; open-set mismatch rate = 1 for t <= 100";
    return ok;
}

// 4. Shift-annihilation closed form, 100 random initials, radius-200 window.
bool criterion_annihilation(std::string& detail) {
    Lattice lat(1, 401, Boundary::open);
    Rng rng(4242);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        Configuration x0 = bernoulli_configuration(lat, 0.5, rng);
        Configuration it = x0;
        for (int t = 1; t <= 150 && ok; ++t) {
            it = shift_annihilation_step(it);
            for (long i = 0; i < lat.n_sites() && ok; ++i) {
                int c = lat.coords_of(i)[0];
                std::uint8_t expected;
                if (c == 0)
                    expected = x0.at(site_1d(lat, 0));
                else if (std::abs(c) <= t)
                    expected = 0;
                else if (c > t)
                    expected = x0.at(site_1d(lat, c - t));
                else
                    expected = x0.at(site_1d(lat, c + t));
                if (it.at(i) != expected) ok = false;
            }
        }
    }
    detail = "T^t equals the outward-shift closed form exactly, 100 initials, t <= 150";
    return ok;
}

// 5. Exact conservation and the window drift bound on a 256-site torus.
bool criterion_drift(std::string& detail) {
    if (density_drift_bound_exact(10, 1, 1, 2) != Rat(8, 21)) {
        detail = "formula spot-check failed at n = 10";
        return false;
    }
    Lattice lat(1, 256, Boundary::torus);
    Rng rng(99);
    Configuration x = bernoulli_configuration(lat, 0.5, rng);
    const long count0 = x.particle_count();
    RulePtr rule = tasep_rule(0.5);

    const std::vector<int> radii{8, 16, 32};
    std::vector<std::vector<long>> windows;
    std::vector<Rat> bounds;
    for (int n : radii) {
        windows.push_back(lat.ball(n));
        bounds.push_back(density_drift_bound_exact(n, 1, 1, 2));
    }
    auto window_count = [&](const Configuration& cfg, const std::vector<long>& w) {
        long c = 0;
        for (long i : w) c += cfg.at(i);
        return c;
    };
    std::vector<long> prev;
    for (const auto& w : windows) prev.push_back(window_count(x, w));

    bool ok = true;
    for (int t = 1; t <= 10000 && ok; ++t) {
        x = step(*rule, x, rng);
        if (x.particle_count() != count0) ok = false;
        for (std::size_t wi = 0; wi < windows.size() && ok; ++wi) {
            long c = window_count(x, windows[wi]);
            Rat change(std::abs(c - prev[wi]), static_cast<long long>(windows[wi].size()));
            if (change > bounds[wi]) ok = false;
            prev[wi] = c;
        }
    }
    detail =
        "particle count exactly constant over 10^4 steps; |drho(I_n)| <= 8/(2n+1) for n in {8,16,32}";
    return ok;
}

// 6. One-step marginal preservation under pairing, chi^2 at level 0.01.
bool criterion_chi2(std::string& detail) {
    const double p = 0.5;
    const int replicas = 10000;
    const double critical = 6.634896601; // 0.99 quantile, 1 df
    Lattice lat(1, 64, Boundary::torus);
    RulePtr rule = tasep_rule(p);
    int passes = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Rng setup(derive_seed(606060, static_cast<std::uint64_t>(rep)));
        Configuration x0 = bernoulli_configuration(lat, 0.5, setup);
        Configuration y0 = bernoulli_configuration(lat, 0.5, setup);
        bool test_first = rep % 2 == 0;
        double expected = one_step_occupancy(test_first ? x0 : y0, 0, p);
        long occupied = 0;
        for (int r = 0; r < replicas; ++r) {
            Rng rng(derive_seed(706060, static_cast<std::uint64_t>(r) +
                                            100000ULL * static_cast<std::uint64_t>(rep)));
            CoupledState s = make_coupled_state(x0, y0, CouplingKind::l_pairing, 8);
            s = coupled_step(s, *rule, rng);
            occupied += (test_first ? s.x : s.y).at(site_1d(lat, 0));
        }
        if (expected <= 0.0 || expected >= 1.0) {
            long want = expected >= 1.0 ? replicas : 0;
            if (occupied == want) ++passes;
            continue;
        }
        double e1 = replicas * expected;
        double e0 = replicas * (1.0 - expected);
        double o1 = static_cast<double>(occupied);
        double o0 = static_cast<double>(replicas) - o1;
        double chi2 = (o1 - e1) * (o1 - e1) / e1 + (o0 - e0) * (o0 - e0) / e0;
        if (chi2 <= critical) ++passes;
    }
    std::ostringstream os;
    os << "chi^2 vs exact one-step occupancy, " << passes << "/100 repetitions at level 0.01";
    detail = os.str();
    return passes >= 99;
}

// 7. Pairing quality improves with time (medians over 32 replicas).
bool criterion_trend(std::string& detail) {
    Lattice lat(1, 256, Boundary::torus);
    ReplicaPlan plan{32, 10000, 2025, 4};
    StatsSpec spec;
    spec.record_times = {0, 100, 10000};
    spec.shift_bound = 8;
    CoupledRunStats stats = run_coupled(tasep_rule(0.5), CouplingKind::l_pairing, 8,
                                        bernoulli_sampler(lat, 0.5), bernoulli_sampler(lat, 0.5),
                                        plan, spec);
    double unpaired_1e2 = stats.unpaired_fraction.median[1];
    double unpaired_1e4 = stats.unpaired_fraction.median[2];
    double sdd_0 = stats.shifted_discrepancy.median[0];
    double sdd_1e4 = stats.shifted_discrepancy.median[2];
    std::ostringstream os;
    os << "median unpaired " << unpaired_1e2 << " (t=1e2) -> " << unpaired_1e4
       << " (t=1e4); median shifted discrepancy " << sdd_0 << " (t=0) -> " << sdd_1e4 << " (t=1e4)";
    detail = os.str();
    return unpaired_1e4 < unpaired_1e2 && sdd_1e4 < sdd_0;
}

// 8. Doubling-map counterexample: two invariant laws, no merging, recurrent
//    eps-closeness of orbits.
bool criterion_doubling(std::string& detail) {
    const long horizon = 1000;
    BitCylinder bit_one{{1}};
    BitCylinder bit_zero{{0}};
    ReplicaPlan plan{4096, horizon, 808080, 4};

    auto zero_series = stream_cylinder_series(zero_stream_sampler(), {bit_one, bit_zero}, plan);
    bool ok = true;
    for (double v : zero_series[0])
        if (v != 0.0) ok = false; // (a) constant in t
    for (double v : zero_series[1])
        if (v != 1.0) ok = false;

    auto uniform_series = stream_cylinder_series(uniform_stream_sampler(), {bit_one}, plan);
    double sigma = std::sqrt(0.25 / plan.replicas);
    double worst = 0.0;
    for (double v : uniform_series[0]) worst = std::max(worst, std::abs(v - 0.5));
    if (worst > 4 * sigma) ok = false; // (b) Lebesgue invariance band

    for (std::size_t t = 0; t < uniform_series[0].size(); ++t)
        if (std::abs(uniform_series[0][t] - zero_series[0][t]) <= 0.4) ok = false; // (c)

    // (d) recurrent closeness: 10-bit agreement before t = 10^4 per seeded pair
    int close_pairs = 0;
    for (int pair = 0; pair < 100; ++pair) {
        BitStream a = random_stream(derive_seed(11111, static_cast<std::uint64_t>(pair)));
        BitStream b = random_stream(derive_seed(22222, static_cast<std::uint64_t>(pair)));
        bool hit = false;
        for (int t = 0; t < 10000 && !hit; ++t) {
            if (streams_agree(a, b, 10)) hit = true;
            a = doubling_step(a);
            b = doubling_step(b);
        }
        if (hit) ++close_pairs;
    }
    if (close_pairs < 95) ok = false;

    std::ostringstream os;
    os << "delta_0 estimates constant; uniform bit within 0.5 +/- " << 4 * sigma << " (worst "
       << worst << "); laws stay > 0.4 apart; " << close_pairs << "/100 pairs reach metric <= 2^-10";
    detail = os.str();
    return ok;
}

// 9. Shift-average Lipschitz bound with constant |I|, zero violations.
bool criterion_psi_lipschitz(std::string& detail) {
    Lattice lat(1, 101, Boundary::torus);
    Rng rng(909090);
    long violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Configuration x = bernoulli_configuration(lat, 0.5, rng);
        Configuration y = bernoulli_configuration(lat, 0.5, rng);
        int base_size = 1 + static_cast<int>(rng() % 3);
        Cylinder c;
        std::vector<int> used;
        while (static_cast<int>(c.prescription.size()) < base_size) {
            int site =
                static_cast<int>(rng() % (2 * static_cast<unsigned>(base_size) + 1)) - base_size;
            bool dup = false;
            for (int u : used) dup = dup || u == site;
            if (dup) continue;
            used.push_back(site);
            c.prescription.push_back({{site}, static_cast<std::uint8_t>(rng() % 2)});
        }
        int m = 1 + static_cast<int>(rng() % (50 - static_cast<unsigned>(base_size)));
        Rat diff = shift_average(x, c, m) - shift_average(y, c, m);
        long lhs_hits = std::llabs((diff * lat.ball_size(m)).numerator());
        long rhs = static_cast<long>(base_size) *
                   static_cast<long>(discrepancy_sites(x, y, m + base_size).size());
        if (lhs_hits > rhs) ++violations;
    }
    std::ostringstream os;
    os << violations
       << " violations of |psi_m(x)-psi_m(y)| <= |I| (2m+1)^-1 |D_{m+|I|}| in 1000 trials";
    detail = os.str();
    return violations == 0;
}

// 10. Cesaro estimates reproduce the initial density under the exclusion rule.
bool criterion_cesaro(std::string& detail) {
    Lattice lat(1, 101, Boundary::torus);
    Cylinder origin;
    origin.prescription.push_back({{0}, 1});
    bool ok = true;
    std::ostringstream os;
    for (double r : {0.25, 0.5, 0.75}) {
        ReplicaPlan plan{1000, 1000, 31415, 4};
        EmpiricalMeasure m =
            cesaro_estimate(tasep_rule(0.5), bernoulli_sampler(lat, r), 1000, {origin}, plan);
        double band = 4 * std::sqrt(r * (1 - r) / plan.replicas);
        os << "r=" << r << ": " << m.estimate[0] << " (band +/-" << band << ") ";
        if (std::abs(m.estimate[0] - r) > band) ok = false;
    }
    detail = os.str();
    return ok;
}

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
    double budget_seconds; // 0 = untimed
};

} // namespace

int main() {
    std::vector<Criterion> criteria{
        {"1 coupling inequality (exact, t <= 50)", criterion_inequality, 1.0},
        {"2 splice marginal check (exhaustive, T = 6)", criterion_splice, 1.0},
        {"3 halving-chain dichotomy", criterion_halving, 0.0},
        {"4 shift-annihilation closed form", criterion_annihilation, 0.0},
        {"5 conservation + drift bound (256-torus, 10^4 steps)", criterion_drift, 30.0},
        {"6 marginal law under pairing (chi^2, 100 reps)", criterion_chi2, 0.0},
        {"7 pairing decay trend (32 replicas, t = 10^4)", criterion_trend, 0.0},
        {"8 doubling-map counterexample", criterion_doubling, 0.0},
        {"9 shift-average Lipschitz bound", criterion_psi_lipschitz, 0.0},
        {"10 cesaro density fidelity", criterion_cesaro, 0.0},
    };

    int failures = 0;
    for (Criterion& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
            ok = false;
            detail += " [over time budget]";
        }
        std::printf("[%s] %-52s %7.2fs  %s\n", ok ? "PASS" : "FAIL", c.name.c_str(), seconds,
                    detail.c_str());
        if (!ok) ++failures;
    }
    if (failures)
        std::printf("%d criterion(s) failed\n", failures);
    else
        std::printf("all 10 criteria passed\n");
    return failures == 0 ? 0 : 1;
}
