#include "clab/systems.hpp"

#include <algorithm>
#include <cmath>

namespace clab {

namespace {

int sup_norm(std::span<const int> v) {
    int m = 0;
    for (int c : v) m = std::max(m, std::abs(c));
    return m;
}

bool is_zero(std::span<const int> v) {
    for (int c : v)
        if (c != 0) return false;
    return true;
}

class TasepRule final : public SystemRule {
public:
    explicit TasepRule(double p) : p_(p), name_("tasep") {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("tasep: p must lie in [0,1]");
    }

    const std::string& name() const override { return name_; }
    int max_velocity() const override { return 1; }
    int required_alphabet() const override { return 2; }
    bool conservative() const override { return true; }
    bool translation_covariant() const override { return true; }

    void velocity(const Lattice&, long, std::uint64_t noise, std::span<int> v_out) const override {
        std::fill(v_out.begin(), v_out.end(), 0);
        if (noise_to_uniform(noise) < p_) v_out[0] = 1;
    }

    bool admissible(const Configuration& x, long site_idx, std::span<const int> v) const override {
        if (is_zero(v)) return true;
        auto target = x.lattice().offset_site(site_idx, v);
        if (!target) return false;
        return x.at(*target) == 0;
    }

private:
    double p_;
    std::string name_;
};

class ParticleVacancyRule final : public SystemRule {
public:
    explicit ParticleVacancyRule(double p) : p_(p), name_("particle_vacancy") {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("particle_vacancy: p must lie in [0,1]");
    }

    const std::string& name() const override { return name_; }
    int max_velocity() const override { return 1; }
    int required_alphabet() const override { return 2; }
    bool conservative() const override { return true; }
    bool translation_covariant() const override { return false; }

    void velocity(const Lattice& lat, long site_idx, std::uint64_t noise,
                  std::span<int> v_out) const override {
        if (lat.dim() != 1) throw std::domain_error("particle_vacancy: lattice must be 1-d");
        v_out[0] = 0;
        if (noise_to_uniform(noise) >= p_) return;
        int c = lat.coords_of(site_idx)[0];
        v_out[0] = (c >= 0) ? 1 : -1;
    }

    bool admissible(const Configuration& x, long site_idx, std::span<const int> v) const override {
        const Lattice& lat = x.lattice();
        if (lat.dim() != 1) throw std::domain_error("particle_vacancy: lattice must be 1-d");
        if (is_zero(v)) return true;
        // Moves across the torus seam would let both outward flows target the
        // same vacancy; they are blocked, matching the open-window behavior.
        int c = lat.coords_of(site_idx)[0];
        if (c == lat.coord_max() && v[0] > 0) return false;
        if (c == lat.coord_min() && v[0] < 0) return false;
        auto target = lat.offset_site(site_idx, v);
        if (!target) return false;
        return x.at(*target) == 0;
    }

private:
    double p_;
    std::string name_;
};

} // namespace

RulePtr tasep_rule(double p) { return std::make_shared<TasepRule>(p); }

RulePtr particle_vacancy_rule(double p) { return std::make_shared<ParticleVacancyRule>(p); }

RulePtr make_rule(const std::string& name, const std::map<std::string, double>& params) {
    auto get_p = [&]() {
        auto it = params.find("p");
        return it == params.end() ? 0.5 : it->second;
    };
    for (const auto& [key, value] : params) {
        (void)value;
        if (key != "p") throw validation_error("model: unknown parameter '" + key + "'");
    }
    try {
        if (name == "tasep") return tasep_rule(get_p());
        if (name == "particle_vacancy") return particle_vacancy_rule(get_p());
    } catch (const std::invalid_argument& e) {
        throw validation_error(std::string("model: ") + e.what());
    }
    throw validation_error("model: unknown model '" + name + "'");
}

NoiseField draw_noise_field(const Lattice& lat, int alphabet_size, Rng& rng) {
    NoiseField f;
    f.slots = alphabet_size - 1;
    f.noise.resize(static_cast<std::size_t>(lat.n_sites()) * static_cast<std::size_t>(f.slots));
    for (auto& n : f.noise) n = rng();
    return f;
}

NoiseField shift_noise_field(const NoiseField& f, const Lattice& lat, std::span<const int> l) {
    if (lat.boundary() != Boundary::torus)
        throw unsupported_operation("noise-field shift requires a torus");
    NoiseField out;
    out.slots = f.slots;
    out.noise.resize(f.noise.size());
    std::vector<int> c(static_cast<std::size_t>(lat.dim()));
    for (long i = 0; i < lat.n_sites(); ++i) {
        lat.coords_of(i, c);
        for (int a = 0; a < lat.dim(); ++a) c[static_cast<std::size_t>(a)] += l[static_cast<std::size_t>(a)];
        lat.wrap(c);
        long src = lat.index_of(c);
        for (int slot = 0; slot < f.slots; ++slot)
            out.noise[static_cast<std::size_t>(i) * static_cast<std::size_t>(f.slots) +
                      static_cast<std::size_t>(slot)] = f.at(src, slot);
    }
    return out;
}

MoveResult apply_particle_moves(const SystemRule& rule, const Configuration& x,
                                std::span<const long> sites, std::span<const int> velocities) {
    const Lattice& lat = x.lattice();
    const int dim = lat.dim();
    const int vmax = rule.max_velocity();
    const std::size_t n = sites.size();

    MoveResult res{x, std::vector<char>(n, 1), std::vector<long>(sites.begin(), sites.end())};
    std::vector<int> delta(static_cast<std::size_t>(lat.n_sites()), 0);

    for (std::size_t i = 0; i < n; ++i) {
        std::span<const int> v = velocities.subspan(i * static_cast<std::size_t>(dim),
                                                    static_cast<std::size_t>(dim));
        if (sup_norm(v) > vmax)
            throw invariant_violation("rule '" + rule.name() + "' proposed |v| > " +
                                      std::to_string(vmax));
        if (is_zero(v)) continue;
        auto target = lat.offset_site(sites[i], v);
        bool ok = target.has_value() && rule.admissible(x, sites[i], v);
        res.admissible[i] = ok ? 1 : 0;
        if (!ok) continue;
        delta[static_cast<std::size_t>(sites[i])] -= 1;
        delta[static_cast<std::size_t>(*target)] += 1;
        res.new_site[i] = *target;
    }

    for (long s = 0; s < lat.n_sites(); ++s) {
        int d = delta[static_cast<std::size_t>(s)];
        if (d == 0) continue;
        int value = static_cast<int>(res.next.at(s)) + d;
        if (value < 0 || value >= x.alphabet().size)
            throw invariant_violation("simultaneous moves drove site " + std::to_string(s) +
                                      " outside the alphabet");
        res.next.set(s, static_cast<std::uint8_t>(value));
    }
    return res;
}

Configuration apply_noise(const SystemRule& rule, const Configuration& x, const NoiseField& field) {
    const Lattice& lat = x.lattice();
    const int dim = lat.dim();
    std::vector<long> sites;
    std::vector<int> velocities;
    std::vector<int> v(static_cast<std::size_t>(dim));
    for (long s = 0; s < lat.n_sites(); ++s) {
        for (int slot = 0; slot < x.at(s); ++slot) {
            sites.push_back(s);
            rule.velocity(lat, s, field.at(s, slot), v);
            velocities.insert(velocities.end(), v.begin(), v.end());
        }
    }
    return apply_particle_moves(rule, x, sites, velocities).next;
}

Configuration step(const SystemRule& rule, const Configuration& x, Rng& rng) {
    if (rule.required_alphabet() != 0 && rule.required_alphabet() != x.alphabet().size)
        throw std::domain_error("rule '" + rule.name() + "' needs alphabet size " +
                                std::to_string(rule.required_alphabet()));
    return apply_noise(rule, x, draw_noise_field(x.lattice(), x.alphabet().size, rng));
}

Configuration shift_annihilation_step(const Configuration& x) {
    const Lattice& lat = x.lattice();
    if (lat.dim() != 1) throw std::domain_error("shift-annihilation map is 1-d");
    if (lat.boundary() != Boundary::open)
        throw unsupported_operation("shift-annihilation map needs an open window");
    Configuration out = Configuration::zeros(lat, x.alphabet());
    for (long idx = 0; idx < lat.n_sites(); ++idx) {
        int i = lat.coords_of(idx)[0];
        std::uint8_t value = 0;
        if (i == 0) {
            value = x.at(idx);
        } else if (i == 1 || i == -1) {
            value = 0;
        } else {
            int src = (i > 1) ? i - 1 : i + 1;
            value = x.at(std::span<const int>(&src, 1));
        }
        out.set(idx, value);
    }
    return out;
}

BitSource::BitSource(bool constant_zero, std::uint64_t seed)
    : constant_zero_(constant_zero), gen_(seed) {}

std::shared_ptr<BitSource> BitSource::zeros() {
    return std::shared_ptr<BitSource>(new BitSource(true, 0));
}

std::shared_ptr<BitSource> BitSource::seeded(std::uint64_t seed) {
    return std::shared_ptr<BitSource>(new BitSource(false, seed));
}

int BitSource::bit(std::size_t i) {
    if (constant_zero_) return 0;
    while (bits_.size() <= i) bits_.push_back(static_cast<std::uint8_t>(gen_() & 1u));
    return bits_[i];
}

BitStream zero_stream() { return {BitSource::zeros(), 0}; }

BitStream random_stream(std::uint64_t seed) { return {BitSource::seeded(seed), 0}; }

std::vector<int> stream_window(const BitStream& b, std::size_t k) {
    std::vector<int> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = b.bit(i);
    return out;
}

bool streams_agree(const BitStream& a, const BitStream& b, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i)
        if (a.bit(i) != b.bit(i)) return false;
    return true;
}

double stream_metric(const BitStream& a, const BitStream& b, std::size_t max_k) {
    std::size_t k = 0;
    while (k < max_k && a.bit(k) == b.bit(k)) ++k;
    return std::ldexp(1.0, -static_cast<int>(k));
}

} // namespace clab
