#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clab/lattice.hpp"

namespace clab {

inline double noise_to_uniform(std::uint64_t noise) {
    return static_cast<double>(noise >> 11) * 0x1.0p-53;
}

// Synchronous local update rule: every particle proposes a velocity with
// |v| <= max_velocity(), computed from its site and one random word but never
// from the configuration; an admissibility predicate over the 2V-neighborhood
// of the pre-move configuration decides whether the move is executed. All
// moves in a step are applied simultaneously. Couplings share the random word
// between paired particles, so the velocity must be a pure function of
// (site, noise).
class SystemRule {
public:
    virtual ~SystemRule() = default;

    virtual const std::string& name() const = 0;
    virtual int max_velocity() const = 0;
    // Alphabet size the rule needs; 0 means any.
    virtual int required_alphabet() const = 0;
    virtual bool conservative() const = 0;
    virtual bool translation_covariant() const = 0;

    // Fill v_out (lat.dim() entries) with the proposed velocity.
    virtual void velocity(const Lattice& lat, long site_idx, std::uint64_t noise,
                          std::span<int> v_out) const = 0;
    virtual bool admissible(const Configuration& x, long site_idx,
                            std::span<const int> v) const = 0;
};

using RulePtr = std::shared_ptr<const SystemRule>;

// Parallel-update exclusion dynamics: velocity +e1 with probability p, move
// admissible iff the target site is empty in the current configuration.
RulePtr tasep_rule(double p);

// Outward particle/vacancy exchange: particles at nonnegative sites swap with
// a vacancy to their right with probability p, particles at negative sites
// with a vacancy to their left. Conserves particles and vacancies.
RulePtr particle_vacancy_rule(double p);

// CLI-facing registry. Throws validation_error for unknown names/parameters.
RulePtr make_rule(const std::string& name, const std::map<std::string, double>& params);

// Site-indexed randomness: alphabet-1 slots per site so every particle a site
// can hold has its own word. Shared between components by the synchronous
// coupling; shifting the field realizes shift-coupled randomness.
struct NoiseField {
    int slots = 0;
    std::vector<std::uint64_t> noise;

    std::uint64_t at(long site, int slot) const {
        return noise[static_cast<std::size_t>(site) * static_cast<std::size_t>(slots) +
                     static_cast<std::size_t>(slot)];
    }
};

NoiseField draw_noise_field(const Lattice& lat, int alphabet_size, Rng& rng);
NoiseField shift_noise_field(const NoiseField& f, const Lattice& lat, std::span<const int> l);

// One synchronous step of the rule.
Configuration step(const SystemRule& rule, const Configuration& x, Rng& rng);
Configuration apply_noise(const SystemRule& rule, const Configuration& x, const NoiseField& field);

// Particle-indexed application used by couplings. sites[i] is particle i's
// current site; velocities is flat, lat.dim() entries per particle.
struct MoveResult {
    Configuration next;
    std::vector<char> admissible;
    std::vector<long> new_site;
};

MoveResult apply_particle_moves(const SystemRule& rule, const Configuration& x,
                                std::span<const long> sites, std::span<const int> velocities);

// Deterministic outward shift on an open 1-d window: the origin keeps its
// value, sites ±1 are voided, everything else moves away from the origin.
Configuration shift_annihilation_step(const Configuration& x);

// The contraction toy chain on the reals.
inline double halving_step(double x) { return x / 2.0; }

// Exact one-sided binary sequence with on-demand refill from a seeded
// generator. Materialized bits never change.
class BitSource {
public:
    static std::shared_ptr<BitSource> zeros();
    static std::shared_ptr<BitSource> seeded(std::uint64_t seed);
    int bit(std::size_t i);

private:
    BitSource(bool constant_zero, std::uint64_t seed);
    bool constant_zero_;
    std::vector<std::uint8_t> bits_;
    Rng gen_;
};

struct BitStream {
    std::shared_ptr<BitSource> src;
    std::size_t offset = 0;
    int bit(std::size_t i) const { return src->bit(offset + i); }
};

BitStream zero_stream();
BitStream random_stream(std::uint64_t seed);

// The binary doubling map, realized exactly as the one-sided shift.
inline BitStream doubling_step(const BitStream& b) { return {b.src, b.offset + 1}; }

std::vector<int> stream_window(const BitStream& b, std::size_t k);
bool streams_agree(const BitStream& a, const BitStream& b, std::size_t k);
// 2^{-k} where k counts agreeing leading bits, capped at max_k.
double stream_metric(const BitStream& a, const BitStream& b, std::size_t max_k);

} // namespace clab
