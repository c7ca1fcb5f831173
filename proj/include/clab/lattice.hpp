#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clab/errors.hpp"
#include "clab/rational.hpp"
#include "clab/rng.hpp"

namespace clab {

// Number of admissible values per site; values are 0 .. size-1 and are read as
// particle counts.
struct Alphabet {
    int size;
    explicit Alphabet(int size_);
    bool operator==(const Alphabet& o) const { return size == o.size; }
};

enum class Boundary { torus, open };

// Finite d-dimensional cubic window with centered coordinates. Odd sides give
// the symmetric range [-n, n]; even sides get one extra positive coordinate.
// Sup-norm balls I_m = { |l| <= m } are addressable for m <= max_ball_radius().
class Lattice {
public:
    Lattice(int dim, int side, Boundary boundary);

    int dim() const { return dim_; }
    int side() const { return side_; }
    Boundary boundary() const { return boundary_; }
    long n_sites() const { return n_sites_; }
    int coord_min() const { return cmin_; }
    int coord_max() const { return cmax_; }
    int max_ball_radius() const { return max_radius_; }
    long ball_size(int m) const;

    long index_of(std::span<const int> coords) const;
    void coords_of(long idx, std::span<int> out) const;
    std::vector<int> coords_of(long idx) const;

    bool in_range(std::span<const int> coords) const;
    void wrap(std::span<int> coords) const;

    // Site reached from idx by offset v; nullopt when the move would leave an
    // open window (torus moves always land somewhere).
    std::optional<long> offset_site(long idx, std::span<const int> v) const;

    // Sup-norm distance between sites, wraparound-aware on a torus.
    int sup_distance(long i, long j) const;

    std::vector<long> ball(int m) const;
    // All coordinate offsets at sup-norm exactly rho (rho = 0 gives {0}).
    std::vector<std::vector<int>> ring_offsets(int rho) const;

    bool operator==(const Lattice& o) const;
    bool operator!=(const Lattice& o) const { return !(*this == o); }

private:
    int dim_;
    int side_;
    Boundary boundary_;
    int cmin_;
    int cmax_;
    int max_radius_;
    long n_sites_;
    std::vector<long> strides_;
};

// Alphabet-valued field over a lattice. Treated as an immutable value by every
// operation in the library; set() exists for building fixtures.
class Configuration {
public:
    Configuration(Lattice lat, Alphabet alph, std::vector<std::uint8_t> values);
    static Configuration zeros(Lattice lat, Alphabet alph);

    const Lattice& lattice() const { return lat_; }
    const Alphabet& alphabet() const { return alph_; }
    std::uint8_t at(long idx) const { return values_[static_cast<std::size_t>(idx)]; }
    std::uint8_t at(std::span<const int> coords) const;
    void set(long idx, std::uint8_t v);
    std::span<const std::uint8_t> values() const { return values_; }
    long particle_count() const;

    bool operator==(const Configuration& o) const;
    bool operator!=(const Configuration& o) const { return !(*this == o); }

private:
    Lattice lat_;
    Alphabet alph_;
    std::vector<std::uint8_t> values_;
};

// Finite-base prescription: the set of configurations taking the given values
// on the base sites.
struct Cylinder {
    std::vector<std::pair<std::vector<int>, std::uint8_t>> prescription;

    int base_size() const { return static_cast<int>(prescription.size()); }
    int base_radius() const;
};

// Band of configurations around a target full-window density.
struct DensitySector {
    Rat target;
    Rat tolerance;
    bool contains(const Configuration& x) const;
};

// result_i = x_{i+l}, coordinates wrapped mod side. Torus only.
Configuration shift(const Configuration& x, std::span<const int> l);

// 1 iff x matches the prescription on every base site.
int cylinder_indicator(const Configuration& x, const Cylinder& c);

// Base translated by l (wrapped on a torus); matches shifted configurations:
// cylinder_indicator(shift(x, l), c) == cylinder_indicator(x, translate_cylinder(c, l, lat)).
Cylinder translate_cylinder(const Cylinder& c, std::span<const int> l, const Lattice& lat);

// Particle count on the window divided by the window size, exact.
Rat density(const Configuration& x, std::span<const long> sites);
Rat density_full(const Configuration& x);

// One line of alphabet digits in row-major site order (|A| <= 10).
std::string to_digit_line(const Configuration& x);
Configuration config_from_digit_line(const Lattice& lat, const Alphabet& alph, const std::string& line);

// Test/sampler helpers.
Configuration random_configuration(const Lattice& lat, const Alphabet& alph, Rng& rng);
Configuration bernoulli_configuration(const Lattice& lat, double r, Rng& rng);

} // namespace clab
