#include "clab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clab {

namespace {

void require_comparable(const Configuration& x, const Configuration& y) {
    if (x.lattice() != y.lattice() || !(x.alphabet() == y.alphabet()))
        throw std::domain_error("configurations live on different lattices or alphabets");
}

} // namespace

std::optional<int> agreement_radius(const Configuration& x, const Configuration& y) {
    require_comparable(x, y);
    const Lattice& lat = x.lattice();
    int min_dist = std::numeric_limits<int>::max();
    std::vector<int> c(static_cast<std::size_t>(lat.dim()));
    for (long i = 0; i < lat.n_sites(); ++i) {
        if (x.at(i) == y.at(i)) continue;
        lat.coords_of(i, c);
        int sup = 0;
        for (int v : c) sup = std::max(sup, std::abs(v));
        min_dist = std::min(min_dist, sup);
    }
    if (min_dist == std::numeric_limits<int>::max()) return std::nullopt;
    return std::max(0, min_dist - 1);
}

double cylinder_metric(const Configuration& x, const Configuration& y) {
    auto k = agreement_radius(x, y);
    if (!k) return 0.0;
    return std::ldexp(1.0, -*k);
}

std::vector<long> discrepancy_sites(const Configuration& x, const Configuration& y, int m) {
    require_comparable(x, y);
    std::vector<long> out;
    for (long i : x.lattice().ball(m))
        if (x.at(i) != y.at(i)) out.push_back(i);
    return out;
}

Rat discrepancy_density(const Configuration& x, const Configuration& y, int m) {
    long mismatches = static_cast<long>(discrepancy_sites(x, y, m).size());
    return Rat(mismatches, x.lattice().ball_size(m));
}

ShiftedDiscrepancy shifted_discrepancy_density(const Configuration& x, const Configuration& y,
                                               int shift_bound, int m) {
    require_comparable(x, y);
    const Lattice& lat = x.lattice();
    if (lat.boundary() != Boundary::torus)
        throw unsupported_operation("shifted discrepancy density requires a torus");
    if (shift_bound < 0 || 2 * shift_bound >= lat.side())
        throw std::domain_error("shift bound must satisfy 0 <= L < side/2");
    std::vector<long> window = lat.ball(m);
    std::vector<std::vector<int>> window_coords;
    window_coords.reserve(window.size());
    for (long i : window) window_coords.push_back(lat.coords_of(i));

    ShiftedDiscrepancy best;
    bool have = false;
    std::vector<int> l(static_cast<std::size_t>(lat.dim()), -shift_bound);
    std::vector<int> target(static_cast<std::size_t>(lat.dim()));
    while (true) {
        long mismatches = 0;
        for (std::size_t w = 0; w < window.size(); ++w) {
            for (int a = 0; a < lat.dim(); ++a)
                target[static_cast<std::size_t>(a)] =
                    window_coords[w][static_cast<std::size_t>(a)] + l[static_cast<std::size_t>(a)];
            lat.wrap(target);
            if (x.at(window[w]) != y.at(lat.index_of(target))) ++mismatches;
        }
        Rat value(mismatches, lat.ball_size(m));
        if (!have || value < best.value) {
            best.value = value;
            best.best_shift = l;
            have = true;
        }
        int a = lat.dim() - 1;
        while (a >= 0) {
            if (++l[static_cast<std::size_t>(a)] <= shift_bound) break;
            l[static_cast<std::size_t>(a)] = -shift_bound;
            --a;
        }
        if (a < 0) break;
    }
    return best;
}

Rat shift_average(const Configuration& x, const Cylinder& c, int m) {
    const Lattice& lat = x.lattice();
    if (lat.boundary() != Boundary::torus)
        throw unsupported_operation("shift averages require a torus");
    if (c.prescription.empty()) throw std::invalid_argument("cylinder base is empty");
    for (const auto& [site, value] : c.prescription) {
        if (!lat.in_range(site)) throw std::domain_error("cylinder base site outside lattice");
        if (value >= x.alphabet().size)
            throw std::domain_error("cylinder prescribes a value outside the alphabet");
    }

    long hits = 0;
    std::vector<int> l(static_cast<std::size_t>(lat.dim()), -m);
    std::vector<int> target(static_cast<std::size_t>(lat.dim()));
    while (true) {
        bool match = true;
        for (const auto& [site, value] : c.prescription) {
            for (int a = 0; a < lat.dim(); ++a)
                target[static_cast<std::size_t>(a)] =
                    site[static_cast<std::size_t>(a)] + l[static_cast<std::size_t>(a)];
            lat.wrap(target);
            if (x.at(lat.index_of(target)) != value) {
                match = false;
                break;
            }
        }
        if (match) ++hits;
        int a = lat.dim() - 1;
        while (a >= 0) {
            if (++l[static_cast<std::size_t>(a)] <= m) break;
            l[static_cast<std::size_t>(a)] = -m;
            --a;
        }
        if (a < 0) break;
    }
    return Rat(hits, lat.ball_size(m));
}

long shift_average_mismatch_bound(const Cylinder& c, const Configuration& x, const Configuration& y,
                                  int m, int reach) {
    long discrepancies = static_cast<long>(discrepancy_sites(x, y, m + reach).size());
    return static_cast<long>(c.base_size()) * discrepancies;
}

} // namespace clab
