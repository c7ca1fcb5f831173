#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clab/systems.hpp"

namespace clab {

enum class CouplingKind { independent, synchronous, equal_pairing, l_pairing };

CouplingKind coupling_kind_from_string(const std::string& s);
std::string to_string(CouplingKind k);

struct Particle {
    long site = 0;
    int state = 0;    // 1 = paired
    int partner = -1; // id in the other component, -1 when unpaired
};

// Particle populations of the two components with a symmetric partial
// matching. Particle ids are indices into the per-component vectors and stay
// stable across moves (ids are never reused).
struct ParticleRegistry {
    std::vector<Particle> first;
    std::vector<Particle> second;

    static ParticleRegistry from_configurations(const Configuration& x, const Configuration& y);

    long pair_count() const;
    long unpaired_first() const;
    // Throws invariant_violation when the matching or the per-site particle
    // counts disagree with the configurations.
    void check_consistent(const Configuration& x, const Configuration& y) const;
};

struct PairingEvent {
    enum class Kind { form, dissolve, swap };
    Kind kind;
    long time = 0;
    int first_id = -1;
    int second_id = -1;
    int distance = -1; // formation distance; -1 for dissolutions
};

struct PairingTrace {
    long time = 0;
    std::vector<PairingEvent> events;
};

struct CoupledState {
    Configuration x;
    Configuration y;
    ParticleRegistry registry;
    CouplingKind kind = CouplingKind::independent;
    int pairing_distance = 1; // L
};

CoupledState make_coupled_state(Configuration x, Configuration y, CouplingKind kind,
                                int pairing_distance);

// Enumeration order used by the pairing pass: ascending sup-norm distance to
// the origin, equal distances in uniformly random order. Returns particle ids.
std::vector<int> enumerate_particles(const std::vector<Particle>& particles, const Lattice& lat,
                                     Rng& rng);
// Same ordering over the occupied sites of a bare configuration (with
// multiplicity).
std::vector<long> enumerate_particle_sites(const Configuration& x, Rng& rng);

// One pass of the pairing procedure, driven by first-component particles in
// enumeration order: overstretched pairs dissolve, unpaired particles grab the
// closest opposite particle within the bound, strictly closer candidates steal
// existing partners.
CoupledState pairing_update(const CoupledState& s, Rng& rng, PairingTrace* trace = nullptr);
// The same pass with an explicit distance bound (0 = pair only at co-location).
CoupledState pairing_update_with_bound(const CoupledState& s, int bound, Rng& rng,
                                       PairingTrace* trace = nullptr);
CoupledState equal_pairing_update(const CoupledState& s, Rng& rng, PairingTrace* trace = nullptr);

// One coupled step: paired particles share the random word of their velocity
// draw, unpaired particles draw independently; admissibility is evaluated per
// component and a pair whose outcomes differ is dissolved after the move; the
// pairing pass then runs. Each component alone steps exactly like the
// uncoupled rule.
CoupledState coupled_step(const CoupledState& s, const SystemRule& rule, Rng& rng,
                          PairingTrace* trace = nullptr);

// Smallest tau such that series[t] <= eps for every t in [tau, T]; nullopt
// when the last entry still exceeds eps. Finite-horizon surrogate of the
// quasi meeting time.
std::optional<long> quasi_meeting_time(std::span<const double> series, double eps);

// Follows the second trajectory through the meeting time and the first
// afterwards. For Markovian couplings the result has the law of the chain
// started from the second trajectory's initial state.
template <class State>
std::vector<State> splice_at_meeting(const std::vector<State>& first,
                                     const std::vector<State>& second, std::size_t tau) {
    if (first.size() != second.size())
        throw std::invalid_argument("splice: trajectories have different lengths");
    std::vector<State> out = second;
    if (tau < first.size()) {
        if (!(first[tau] == second[tau]))
            throw std::invalid_argument("splice: trajectories do not meet at tau");
        for (std::size_t t = tau + 1; t < out.size(); ++t) out[t] = first[t];
    }
    return out;
}

} // namespace clab
