#include "clab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clab {

CouplingKind coupling_kind_from_string(const std::string& s) {
    if (s == "independent") return CouplingKind::independent;
    if (s == "synchronous") return CouplingKind::synchronous;
    if (s == "equal_pairing") return CouplingKind::equal_pairing;
    if (s == "l_pairing") return CouplingKind::l_pairing;
    throw validation_error("coupling: unknown kind '" + s + "'");
}

std::string to_string(CouplingKind k) {
    switch (k) {
        case CouplingKind::independent: return "independent";
        case CouplingKind::synchronous: return "synchronous";
        case CouplingKind::equal_pairing: return "equal_pairing";
        case CouplingKind::l_pairing: return "l_pairing";
    }
    return "?";
}

ParticleRegistry ParticleRegistry::from_configurations(const Configuration& x,
                                                       const Configuration& y) {
    ParticleRegistry reg;
    auto fill = [](const Configuration& c, std::vector<Particle>& out) {
        out.clear();
        for (long s = 0; s < c.lattice().n_sites(); ++s)
            for (int k = 0; k < c.at(s); ++k) out.push_back(Particle{s, 0, -1});
    };
    fill(x, reg.first);
    fill(y, reg.second);
    return reg;
}

long ParticleRegistry::pair_count() const {
    long n = 0;
    for (const Particle& p : first)
        if (p.state == 1) ++n;
    return n;
}

long ParticleRegistry::unpaired_first() const {
    return static_cast<long>(first.size()) - pair_count();
}

void ParticleRegistry::check_consistent(const Configuration& x, const Configuration& y) const {
    auto check_counts = [](const std::vector<Particle>& ps, const Configuration& c,
                           const char* which) {
        std::vector<int> count(static_cast<std::size_t>(c.lattice().n_sites()), 0);
        for (const Particle& p : ps) {
            if (p.site < 0 || p.site >= c.lattice().n_sites())
                throw invariant_violation(std::string("registry: ") + which +
                                          " particle site outside lattice");
            ++count[static_cast<std::size_t>(p.site)];
        }
        for (long s = 0; s < c.lattice().n_sites(); ++s)
            if (count[static_cast<std::size_t>(s)] != c.at(s))
                throw invariant_violation(std::string("registry: ") + which +
                                          " particle counts disagree with configuration at site " +
                                          std::to_string(s));
    };
    check_counts(first, x, "first");
    check_counts(second, y, "second");

    for (std::size_t i = 0; i < first.size(); ++i) {
        const Particle& p = first[i];
        if ((p.state == 1) != (p.partner >= 0))
            throw invariant_violation("registry: first-component state/partner mismatch");
        if (p.partner >= 0) {
            if (p.partner >= static_cast<int>(second.size()) ||
                second[static_cast<std::size_t>(p.partner)].partner != static_cast<int>(i) ||
                second[static_cast<std::size_t>(p.partner)].state != 1)
                throw invariant_violation("registry: matching is not symmetric");
        }
    }
    for (std::size_t j = 0; j < second.size(); ++j) {
        const Particle& p = second[j];
        if ((p.state == 1) != (p.partner >= 0))
            throw invariant_violation("registry: second-component state/partner mismatch");
        if (p.partner >= 0 &&
            (p.partner >= static_cast<int>(first.size()) ||
             first[static_cast<std::size_t>(p.partner)].partner != static_cast<int>(j)))
            throw invariant_violation("registry: matching is not symmetric");
    }
}

CoupledState make_coupled_state(Configuration x, Configuration y, CouplingKind kind,
                                int pairing_distance) {
    if (x.lattice() != y.lattice() || !(x.alphabet() == y.alphabet()))
        throw std::domain_error("coupled components need the same lattice and alphabet");
    if (kind == CouplingKind::l_pairing && pairing_distance <= 0)
        throw std::invalid_argument("l_pairing needs a pairing distance > 0");
    ParticleRegistry reg = ParticleRegistry::from_configurations(x, y);
    return CoupledState{std::move(x), std::move(y), std::move(reg), kind, pairing_distance};
}

namespace {

int origin_distance(const Lattice& lat, long site, std::vector<int>& scratch) {
    lat.coords_of(site, scratch);
    int d = 0;
    for (int c : scratch) d = std::max(d, std::abs(c));
    return d;
}

std::vector<int> order_by_origin_distance(const std::vector<Particle>& ps, const Lattice& lat,
                                          Rng& rng) {
    const std::size_t n = ps.size();
    std::vector<std::uint64_t> key(n);
    for (auto& k : key) k = rng();
    std::vector<int> dist(n);
    std::vector<int> scratch(static_cast<std::size_t>(lat.dim()));
    for (std::size_t i = 0; i < n; ++i) dist[i] = origin_distance(lat, ps[i].site, scratch);
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
        if (dist[ia] != dist[ib]) return dist[ia] < dist[ib];
        if (key[ia] != key[ib]) return key[ia] < key[ib];
        return a < b;
    });
    return ids;
}

// Bounded nearest-particle search over sup-norm rings around a site. Ties at
// equal distance resolve to the smallest enumeration rank.
class SecondComponentIndex {
public:
    SecondComponentIndex(const std::vector<Particle>& second, const Lattice& lat,
                         const std::vector<int>& rank, int max_rho)
        : second_(second), lat_(lat), rank_(rank) {
        at_.assign(static_cast<std::size_t>(lat.n_sites()), {});
        for (std::size_t j = 0; j < second.size(); ++j)
            at_[static_cast<std::size_t>(second[j].site)].push_back(static_cast<int>(j));
        int cap = lat.boundary() == Boundary::torus ? lat.side() / 2 : lat.side() - 1;
        cap_ = std::min(max_rho, cap);
        rings_.reserve(static_cast<std::size_t>(cap_) + 1);
        for (int rho = 0; rho <= cap_; ++rho) rings_.push_back(lat.ring_offsets(rho));
        center_.resize(static_cast<std::size_t>(lat.dim()));
        target_.resize(static_cast<std::size_t>(lat.dim()));
    }

    // (id, distance) of the closest particle, or nullopt. max_rho limits the
    // scan; require_unpaired restricts to state-0 particles.
    std::optional<std::pair<int, int>> closest(long site, int max_rho, bool require_unpaired) {
        lat_.coords_of(site, center_);
        int limit = std::min(max_rho, cap_);
        for (int rho = 0; rho <= limit; ++rho) {
            int best = -1;
            for (const auto& offset : rings_[static_cast<std::size_t>(rho)]) {
                for (int a = 0; a < lat_.dim(); ++a)
                    target_[static_cast<std::size_t>(a)] =
                        center_[static_cast<std::size_t>(a)] + offset[static_cast<std::size_t>(a)];
                if (lat_.boundary() == Boundary::torus)
                    lat_.wrap(target_);
                else if (!lat_.in_range(target_))
                    continue;
                for (int id : at_[static_cast<std::size_t>(lat_.index_of(target_))]) {
                    if (require_unpaired && second_[static_cast<std::size_t>(id)].state != 0)
                        continue;
                    if (best < 0 || rank_[static_cast<std::size_t>(id)] <
                                        rank_[static_cast<std::size_t>(best)])
                        best = id;
                }
            }
            if (best >= 0) return std::make_pair(best, rho);
        }
        return std::nullopt;
    }

private:
    const std::vector<Particle>& second_;
    const Lattice& lat_;
    const std::vector<int>& rank_;
    std::vector<std::vector<int>> at_;
    std::vector<std::vector<std::vector<int>>> rings_;
    int cap_ = 0;
    std::vector<int> center_;
    std::vector<int> target_;
};

void emit(PairingTrace* trace, PairingEvent::Kind kind, int first_id, int second_id, int distance) {
    if (!trace) return;
    trace->events.push_back(PairingEvent{kind, trace->time, first_id, second_id, distance});
}

} // namespace

std::vector<int> enumerate_particles(const std::vector<Particle>& particles, const Lattice& lat,
                                     Rng& rng) {
    return order_by_origin_distance(particles, lat, rng);
}

std::vector<long> enumerate_particle_sites(const Configuration& x, Rng& rng) {
    std::vector<Particle> ps;
    for (long s = 0; s < x.lattice().n_sites(); ++s)
        for (int k = 0; k < x.at(s); ++k) ps.push_back(Particle{s, 0, -1});
    std::vector<int> order = order_by_origin_distance(ps, x.lattice(), rng);
    std::vector<long> sites(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        sites[i] = ps[static_cast<std::size_t>(order[i])].site;
    return sites;
}

CoupledState pairing_update_with_bound(const CoupledState& s, int bound, Rng& rng,
                                       PairingTrace* trace) {
    if (bound < 0) throw std::invalid_argument("pairing bound must be >= 0");
    CoupledState out = s;
    out.registry.check_consistent(out.x, out.y);
    const Lattice& lat = out.x.lattice();
    auto& first = out.registry.first;
    auto& second = out.registry.second;

    std::vector<int> order_first = enumerate_particles(first, lat, rng);
    std::vector<int> order_second = enumerate_particles(second, lat, rng);
    std::vector<int> rank_second(second.size());
    for (std::size_t r = 0; r < order_second.size(); ++r)
        rank_second[static_cast<std::size_t>(order_second[r])] = static_cast<int>(r);

    SecondComponentIndex index(second, lat, rank_second, bound);

    auto dissolve = [&](int a_id, int b_id) {
        first[static_cast<std::size_t>(a_id)].state = 0;
        first[static_cast<std::size_t>(a_id)].partner = -1;
        second[static_cast<std::size_t>(b_id)].state = 0;
        second[static_cast<std::size_t>(b_id)].partner = -1;
        emit(trace, PairingEvent::Kind::dissolve, a_id, b_id, -1);
    };
    auto pair_up = [&](int a_id, int b_id, int distance, PairingEvent::Kind kind) {
        first[static_cast<std::size_t>(a_id)].state = 1;
        first[static_cast<std::size_t>(a_id)].partner = b_id;
        second[static_cast<std::size_t>(b_id)].state = 1;
        second[static_cast<std::size_t>(b_id)].partner = a_id;
        emit(trace, kind, a_id, b_id, distance);
    };

    for (int a_id : order_first) {
        Particle& eta = first[static_cast<std::size_t>(a_id)];
        if (eta.state == 1) {
            int partner = eta.partner;
            int l = lat.sup_distance(eta.site, second[static_cast<std::size_t>(partner)].site);
            if (l > bound) {
                dissolve(a_id, partner);
                // falls through to the unpaired branch below
            } else {
                // A strictly closer unpaired particle of the other component
                // steals the pairing.
                auto cand = index.closest(eta.site, l - 1, /*require_unpaired=*/true);
                if (cand) {
                    dissolve(a_id, partner);
                    pair_up(a_id, cand->first, cand->second, PairingEvent::Kind::swap);
                }
                continue;
            }
        }
        auto cand = index.closest(eta.site, bound, /*require_unpaired=*/false);
        if (!cand) continue;
        auto [b_id, l] = *cand;
        if (second[static_cast<std::size_t>(b_id)].state == 0) {
            pair_up(a_id, b_id, l, PairingEvent::Kind::form);
        } else {
            int z = second[static_cast<std::size_t>(b_id)].partner;
            int l_pair = lat.sup_distance(second[static_cast<std::size_t>(b_id)].site,
                                          first[static_cast<std::size_t>(z)].site);
            if (l < l_pair) {
                dissolve(z, b_id);
                pair_up(a_id, b_id, l, PairingEvent::Kind::swap);
            }
        }
    }
    return out;
}

CoupledState pairing_update(const CoupledState& s, Rng& rng, PairingTrace* trace) {
    switch (s.kind) {
        case CouplingKind::independent:
        case CouplingKind::synchronous:
            return s;
        case CouplingKind::equal_pairing:
            return pairing_update_with_bound(s, 0, rng, trace);
        case CouplingKind::l_pairing:
            return pairing_update_with_bound(s, s.pairing_distance, rng, trace);
    }
    return s;
}

CoupledState equal_pairing_update(const CoupledState& s, Rng& rng, PairingTrace* trace) {
    return pairing_update_with_bound(s, 0, rng, trace);
}

CoupledState coupled_step(const CoupledState& s, const SystemRule& rule, Rng& rng,
                          PairingTrace* trace) {
    if (rule.required_alphabet() != 0 && rule.required_alphabet() != s.x.alphabet().size)
        throw std::domain_error("rule '" + rule.name() + "' needs alphabet size " +
                                std::to_string(rule.required_alphabet()));
    const Lattice& lat = s.x.lattice();
    const int alph = s.x.alphabet().size;

    if (s.kind == CouplingKind::independent || s.kind == CouplingKind::synchronous) {
        NoiseField fx = draw_noise_field(lat, alph, rng);
        NoiseField fy = s.kind == CouplingKind::independent ? draw_noise_field(lat, alph, rng) : fx;
        CoupledState out = s;
        out.x = apply_noise(rule, s.x, fx);
        out.y = apply_noise(rule, s.y, fy);
        out.registry = ParticleRegistry::from_configurations(out.x, out.y);
        return out;
    }

    CoupledState out = s;
    auto& first = out.registry.first;
    auto& second = out.registry.second;
    const std::size_t na = first.size();
    const std::size_t nb = second.size();
    const int dim = lat.dim();

    // Paired particles share the random word of the velocity draw; everyone
    // else draws a fresh one. Order: first component by id, then the unpaired
    // of the second component by id.
    std::vector<std::uint64_t> noise_a(na), noise_b(nb, 0);
    std::vector<char> have_b(nb, 0);
    for (std::size_t i = 0; i < na; ++i) {
        noise_a[i] = rng();
        if (first[i].state == 1) {
            noise_b[static_cast<std::size_t>(first[i].partner)] = noise_a[i];
            have_b[static_cast<std::size_t>(first[i].partner)] = 1;
        }
    }
    for (std::size_t j = 0; j < nb; ++j)
        if (!have_b[j]) noise_b[j] = rng();

    auto velocities_of = [&](const std::vector<Particle>& ps,
                             const std::vector<std::uint64_t>& noise, std::vector<long>& sites,
                             std::vector<int>& vel) {
        sites.resize(ps.size());
        vel.resize(ps.size() * static_cast<std::size_t>(dim));
        std::span<int> all(vel);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            sites[i] = ps[i].site;
            rule.velocity(lat, ps[i].site, noise[i],
                          all.subspan(i * static_cast<std::size_t>(dim),
                                      static_cast<std::size_t>(dim)));
        }
    };

    std::vector<long> sites_a, sites_b;
    std::vector<int> vel_a, vel_b;
    velocities_of(first, noise_a, sites_a, vel_a);
    velocities_of(second, noise_b, sites_b, vel_b);

    MoveResult ra = apply_particle_moves(rule, s.x, sites_a, vel_a);
    MoveResult rb = apply_particle_moves(rule, s.y, sites_b, vel_b);
    out.x = std::move(ra.next);
    out.y = std::move(rb.next);
    for (std::size_t i = 0; i < na; ++i) first[i].site = ra.new_site[i];
    for (std::size_t j = 0; j < nb; ++j) second[j].site = rb.new_site[j];

    // A pair whose members had different admissibility outcomes moved apart in
    // an uncontrolled way and is dissolved.
    for (std::size_t i = 0; i < na; ++i) {
        if (first[i].state != 1) continue;
        std::size_t j = static_cast<std::size_t>(first[i].partner);
        if (ra.admissible[i] != rb.admissible[j]) {
            first[i].state = 0;
            first[i].partner = -1;
            second[j].state = 0;
            second[j].partner = -1;
            emit(trace, PairingEvent::Kind::dissolve, static_cast<int>(i), static_cast<int>(j), -1);
        }
    }
    return pairing_update(out, rng, trace);
}

std::optional<long> quasi_meeting_time(std::span<const double> series, double eps) {
    if (series.empty()) return std::nullopt;
    long tau = 0;
    for (long t = static_cast<long>(series.size()) - 1; t >= 0; --t) {
        if (series[static_cast<std::size_t>(t)] > eps) {
            tau = t + 1;
            break;
        }
    }
    if (tau == static_cast<long>(series.size())) return std::nullopt;
    return tau;
}

} // namespace clab
