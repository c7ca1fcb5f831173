#include "clab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clab {

Alphabet::Alphabet(int size_) : size(size_) {
    if (size < 2)
        throw std::invalid_argument("alphabet size must be >= 2, got " + std::to_string(size));
}

Lattice::Lattice(int dim, int side, Boundary boundary)
    : dim_(dim), side_(side), boundary_(boundary) {
    if (dim < 1) throw std::invalid_argument("lattice dimension must be >= 1");
    if (side < 2) throw std::invalid_argument("lattice side must be >= 2");
    cmin_ = -((side - 1) / 2);
    cmax_ = side - 1 + cmin_;
    max_radius_ = std::min(-cmin_, cmax_);
    n_sites_ = 1;
    strides_.assign(static_cast<std::size_t>(dim), 1);
    for (int a = dim - 1; a >= 0; --a) {
        strides_[static_cast<std::size_t>(a)] = n_sites_;
        if (n_sites_ > (1L << 50) / side)
            throw std::invalid_argument("lattice too large");
        n_sites_ *= side;
    }
}

long Lattice::ball_size(int m) const {
    long sz = 1;
    for (int a = 0; a < dim_; ++a) sz *= 2L * m + 1;
    return sz;
}

long Lattice::index_of(std::span<const int> coords) const {
    if (static_cast<int>(coords.size()) != dim_)
        throw std::domain_error("coordinate arity does not match lattice dimension");
    long idx = 0;
    for (int a = 0; a < dim_; ++a) {
        int c = coords[static_cast<std::size_t>(a)];
        if (c < cmin_ || c > cmax_)
            throw std::domain_error("site coordinate " + std::to_string(c) + " outside lattice");
        idx += static_cast<long>(c - cmin_) * strides_[static_cast<std::size_t>(a)];
    }
    return idx;
}

void Lattice::coords_of(long idx, std::span<int> out) const {
    for (int a = 0; a < dim_; ++a) {
        out[static_cast<std::size_t>(a)] =
            static_cast<int>((idx / strides_[static_cast<std::size_t>(a)]) % side_) + cmin_;
    }
}

std::vector<int> Lattice::coords_of(long idx) const {
    std::vector<int> out(static_cast<std::size_t>(dim_));
    coords_of(idx, out);
    return out;
}

bool Lattice::in_range(std::span<const int> coords) const {
    for (int c : coords)
        if (c < cmin_ || c > cmax_) return false;
    return true;
}

void Lattice::wrap(std::span<int> coords) const {
    for (int& c : coords) {
        int r = (c - cmin_) % side_;
        if (r < 0) r += side_;
        c = r + cmin_;
    }
}

std::optional<long> Lattice::offset_site(long idx, std::span<const int> v) const {
    long out = 0;
    for (int a = 0; a < dim_; ++a) {
        int c = static_cast<int>((idx / strides_[static_cast<std::size_t>(a)]) % side_) + cmin_ +
                v[static_cast<std::size_t>(a)];
        if (boundary_ == Boundary::torus) {
            int r = (c - cmin_) % side_;
            if (r < 0) r += side_;
            c = r + cmin_;
        } else if (c < cmin_ || c > cmax_) {
            return std::nullopt;
        }
        out += static_cast<long>(c - cmin_) * strides_[static_cast<std::size_t>(a)];
    }
    return out;
}

int Lattice::sup_distance(long i, long j) const {
    int dist = 0;
    for (int a = 0; a < dim_; ++a) {
        long s = strides_[static_cast<std::size_t>(a)];
        int ci = static_cast<int>((i / s) % side_);
        int cj = static_cast<int>((j / s) % side_);
        int d = std::abs(ci - cj);
        if (boundary_ == Boundary::torus) d = std::min(d, side_ - d);
        dist = std::max(dist, d);
    }
    return dist;
}

std::vector<long> Lattice::ball(int m) const {
    if (m < 0 || m > max_radius_)
        throw std::domain_error("ball radius " + std::to_string(m) + " outside lattice (max " +
                                std::to_string(max_radius_) + ")");
    std::vector<long> sites;
    sites.reserve(static_cast<std::size_t>(ball_size(m)));
    std::vector<int> c(static_cast<std::size_t>(dim_), -m);
    while (true) {
        sites.push_back(index_of(c));
        int a = dim_ - 1;
        while (a >= 0) {
            if (++c[static_cast<std::size_t>(a)] <= m) break;
            c[static_cast<std::size_t>(a)] = -m;
            --a;
        }
        if (a < 0) break;
    }
    return sites;
}

std::vector<std::vector<int>> Lattice::ring_offsets(int rho) const {
    std::vector<std::vector<int>> out;
    if (rho == 0) {
        out.emplace_back(static_cast<std::size_t>(dim_), 0);
        return out;
    }
    std::vector<int> c(static_cast<std::size_t>(dim_), -rho);
    while (true) {
        int sup = 0;
        for (int v : c) sup = std::max(sup, std::abs(v));
        if (sup == rho) out.push_back(c);
        int a = dim_ - 1;
        while (a >= 0) {
            if (++c[static_cast<std::size_t>(a)] <= rho) break;
            c[static_cast<std::size_t>(a)] = -rho;
            --a;
        }
        if (a < 0) break;
    }
    return out;
}

bool Lattice::operator==(const Lattice& o) const {
    return dim_ == o.dim_ && side_ == o.side_ && boundary_ == o.boundary_;
}

Configuration::Configuration(Lattice lat, Alphabet alph, std::vector<std::uint8_t> values)
    : lat_(std::move(lat)), alph_(alph), values_(std::move(values)) {
    if (static_cast<long>(values_.size()) != lat_.n_sites())
        throw std::invalid_argument("configuration needs exactly " + std::to_string(lat_.n_sites()) +
                                    " values, got " + std::to_string(values_.size()));
    for (std::uint8_t v : values_)
        if (v >= alph_.size)
            throw std::invalid_argument("configuration value " + std::to_string(v) +
                                        " outside alphabet of size " + std::to_string(alph_.size));
}

Configuration Configuration::zeros(Lattice lat, Alphabet alph) {
    std::vector<std::uint8_t> v(static_cast<std::size_t>(lat.n_sites()), 0);
    return Configuration(std::move(lat), alph, std::move(v));
}

std::uint8_t Configuration::at(std::span<const int> coords) const {
    return values_[static_cast<std::size_t>(lat_.index_of(coords))];
}

void Configuration::set(long idx, std::uint8_t v) {
    if (idx < 0 || idx >= lat_.n_sites()) throw std::domain_error("site index outside lattice");
    if (v >= alph_.size) throw std::invalid_argument("value outside alphabet");
    values_[static_cast<std::size_t>(idx)] = v;
}

long Configuration::particle_count() const {
    long n = 0;
    for (std::uint8_t v : values_) n += v;
    return n;
}

bool Configuration::operator==(const Configuration& o) const {
    return lat_ == o.lat_ && alph_ == o.alph_ && values_ == o.values_;
}

int Cylinder::base_radius() const {
    int r = 0;
    for (const auto& [site, value] : prescription)
        for (int c : site) r = std::max(r, std::abs(c));
    return r;
}

bool DensitySector::contains(const Configuration& x) const {
    return rat_abs(density_full(x) - target) <= tolerance;
}

Configuration shift(const Configuration& x, std::span<const int> l) {
    const Lattice& lat = x.lattice();
    if (lat.boundary() != Boundary::torus)
        throw unsupported_operation("shift requires a torus boundary");
    if (static_cast<int>(l.size()) != lat.dim())
        throw std::domain_error("shift vector arity does not match lattice dimension");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(lat.n_sites()));
    std::vector<int> c(static_cast<std::size_t>(lat.dim()));
    for (long i = 0; i < lat.n_sites(); ++i) {
        lat.coords_of(i, c);
        for (int a = 0; a < lat.dim(); ++a) c[static_cast<std::size_t>(a)] += l[static_cast<std::size_t>(a)];
        lat.wrap(c);
        out[static_cast<std::size_t>(i)] = x.at(lat.index_of(c));
    }
    return Configuration(lat, x.alphabet(), std::move(out));
}

int cylinder_indicator(const Configuration& x, const Cylinder& c) {
    if (c.prescription.empty()) throw std::invalid_argument("cylinder base is empty");
    const Lattice& lat = x.lattice();
    for (const auto& [site, value] : c.prescription) {
        if (!lat.in_range(site))
            throw std::domain_error("cylinder base site outside lattice");
        if (value >= x.alphabet().size)
            throw std::domain_error("cylinder prescribes a value outside the alphabet");
        if (x.at(site) != value) return 0;
    }
    return 1;
}

Cylinder translate_cylinder(const Cylinder& c, std::span<const int> l, const Lattice& lat) {
    Cylinder out;
    out.prescription.reserve(c.prescription.size());
    for (const auto& [site, value] : c.prescription) {
        std::vector<int> s = site;
        for (std::size_t a = 0; a < s.size(); ++a) s[a] += l[a];
        if (lat.boundary() == Boundary::torus)
            lat.wrap(s);
        else if (!lat.in_range(s))
            throw std::domain_error("translated cylinder base leaves the open window");
        out.prescription.emplace_back(std::move(s), value);
    }
    return out;
}

Rat density(const Configuration& x, std::span<const long> sites) {
    if (sites.empty()) throw std::domain_error("density over an empty site set");
    long count = 0;
    for (long i : sites) {
        if (i < 0 || i >= x.lattice().n_sites())
            throw std::domain_error("density site index outside lattice");
        count += x.at(i);
    }
    return Rat(count, static_cast<long long>(sites.size()));
}

Rat density_full(const Configuration& x) {
    return Rat(x.particle_count(), x.lattice().n_sites());
}

std::string to_digit_line(const Configuration& x) {
    if (x.alphabet().size > 10)
        throw validation_error("digit serialization supports alphabets up to size 10");
    std::string line;
    line.reserve(x.values().size());
    for (std::uint8_t v : x.values()) line.push_back(static_cast<char>('0' + v));
    return line;
}

Configuration config_from_digit_line(const Lattice& lat, const Alphabet& alph, const std::string& line) {
    if (static_cast<long>(line.size()) != lat.n_sites())
        throw validation_error("configuration line has " + std::to_string(line.size()) +
                               " digits, lattice has " + std::to_string(lat.n_sites()) + " sites");
    std::vector<std::uint8_t> v(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (ch < '0' || ch > '9')
            throw validation_error("configuration line contains non-digit character");
        v[i] = static_cast<std::uint8_t>(ch - '0');
        if (v[i] >= alph.size)
            throw validation_error("configuration digit outside alphabet");
    }
    return Configuration(lat, alph, std::move(v));
}

Configuration random_configuration(const Lattice& lat, const Alphabet& alph, Rng& rng) {
    std::uniform_int_distribution<int> dist(0, alph.size - 1);
    std::vector<std::uint8_t> v(static_cast<std::size_t>(lat.n_sites()));
    for (auto& s : v) s = static_cast<std::uint8_t>(dist(rng));
    return Configuration(lat, alph, std::move(v));
}

Configuration bernoulli_configuration(const Lattice& lat, double r, Rng& rng) {
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("bernoulli density must lie in [0,1]");
    std::vector<std::uint8_t> v(static_cast<std::size_t>(lat.n_sites()));
    for (auto& s : v) s = bernoulli(rng, r) ? 1 : 0;
    return Configuration(lat, Alphabet(2), std::move(v));
}

} // namespace clab
