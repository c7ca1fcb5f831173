#include <doctest.h>

#include <cmath>

#include "clab/systems.hpp"

using namespace clab;

namespace {

Configuration from_digits(const Lattice& lat, const std::string& digits, int alph = 2) {
    return config_from_digit_line(lat, Alphabet(alph), digits);
}

long site_1d(const Lattice& lat, int c) {
    return lat.index_of(std::span<const int>(&c, 1));
}

// A rule that proposes an illegal velocity, for the engine guard.
class RunawayRule final : public SystemRule {
public:
    const std::string& name() const override { return name_; }
    int max_velocity() const override { return 1; }
    int required_alphabet() const override { return 2; }
    bool conservative() const override { return true; }
    bool translation_covariant() const override { return true; }
    void velocity(const Lattice&, long, std::uint64_t, std::span<int> v) const override {
        v[0] = 5;
    }
    bool admissible(const Configuration&, long, std::span<const int>) const override {
        return true;
    }

private:
    std::string name_ = "runaway";
};

} // namespace

TEST_CASE("tasep: identity at p=0, full advance at p=1") {
    Lattice lat(1, 9, Boundary::torus);
    Rng rng(1);
    Configuration x = bernoulli_configuration(lat, 0.5, rng);

    RulePtr still = tasep_rule(0.0);
    CHECK(step(*still, x, rng) == x);

    // no two adjacent particles, p = 1: every particle advances by one
    RulePtr go = tasep_rule(1.0);
    Configuration sparse = from_digits(lat, "101010000");
    Configuration next = step(*go, sparse, rng);
    CHECK(to_digit_line(next) == "010101000");

    // 4-site torus: (1,0,1,0) -> (0,1,0,1)
    Lattice four(1, 4, Boundary::torus);
    Configuration alt = from_digits(four, "1010");
    CHECK(to_digit_line(step(*go, alt, rng)) == "0101");

    // empty configuration stays empty
    Configuration empty = Configuration::zeros(lat, Alphabet(2));
    CHECK(step(*go, empty, rng) == empty);
}

TEST_CASE("tasep conserves particles step by step") {
    Lattice lat(1, 64, Boundary::torus);
    Rng rng(99);
    Configuration x = bernoulli_configuration(lat, 0.5, rng);
    long count = x.particle_count();
    RulePtr rule = tasep_rule(0.7);
    for (int t = 0; t < 2000; ++t) {
        x = step(*rule, x, rng);
        CHECK(x.particle_count() == count);
    }
}

TEST_CASE("tasep validates the alphabet") {
    Lattice lat(1, 5, Boundary::torus);
    Configuration x = Configuration::zeros(lat, Alphabet(3));
    Rng rng(1);
    RulePtr rule = tasep_rule(0.5);
    CHECK_THROWS_AS(step(*rule, x, rng), std::domain_error);
    CHECK_THROWS_AS(tasep_rule(1.5), std::invalid_argument);
}

TEST_CASE("particle_vacancy: outward exchanges") {
    Lattice lat(1, 9, Boundary::open);
    Rng rng(5);

    RulePtr still = particle_vacancy_rule(0.0);
    Configuration x = bernoulli_configuration(lat, 0.4, rng);
    CHECK(step(*still, x, rng) == x);

    RulePtr go = particle_vacancy_rule(1.0);
    Configuration ones = from_digits(lat, "111111111");
    CHECK(step(*go, ones, rng) == ones); // no vacancies, nothing moves

    // single particle at site 3 hops right to 4
    Configuration single = Configuration::zeros(lat, Alphabet(2));
    single.set(site_1d(lat, 3), 1);
    Configuration moved = step(*go, single, rng);
    CHECK(moved.at(site_1d(lat, 4)) == 1);
    CHECK(moved.particle_count() == 1);

    // a particle at a negative site hops left
    Configuration neg = Configuration::zeros(lat, Alphabet(2));
    neg.set(site_1d(lat, -2), 1);
    Configuration moved2 = step(*go, neg, rng);
    CHECK(moved2.at(site_1d(lat, -3)) == 1);

    // boundary particles stay (no target outside the window)
    Configuration edge = Configuration::zeros(lat, Alphabet(2));
    edge.set(site_1d(lat, 4), 1);
    edge.set(site_1d(lat, -4), 1);
    CHECK(step(*go, edge, rng) == edge);
}

TEST_CASE("particle_vacancy conserves particles on the torus too") {
    Lattice lat(1, 33, Boundary::torus);
    Rng rng(13);
    Configuration x = bernoulli_configuration(lat, 0.5, rng);
    long count = x.particle_count();
    RulePtr rule = particle_vacancy_rule(0.8);
    for (int t = 0; t < 2000; ++t) {
        x = step(*rule, x, rng);
        CHECK(x.particle_count() == count);
    }
}

TEST_CASE("admissibility is local: sites beyond 2V never matter") {
    Lattice lat(1, 21, Boundary::torus);
    Rng rng(7);
    std::vector<RulePtr> rules{tasep_rule(1.0), particle_vacancy_rule(1.0)};
    for (const RulePtr& rule : rules) {
        int reach = 2 * rule->max_velocity();
        for (int trial = 0; trial < 200; ++trial) {
            Configuration x = bernoulli_configuration(lat, 0.5, rng);
            long i = static_cast<long>(rng() % static_cast<unsigned long>(lat.n_sites()));
            Configuration far = x;
            // flip everything strictly beyond the 2V neighborhood of i
            for (long j = 0; j < lat.n_sites(); ++j)
                if (lat.sup_distance(i, j) > reach) far.set(j, 1 - far.at(j));
            for (int vi = -1; vi <= 1; ++vi) {
                std::vector<int> v{vi};
                CHECK(rule->admissible(x, i, v) == rule->admissible(far, i, v));
            }
        }
    }
}

TEST_CASE("translation-covariant rules commute with shifts under shifted noise") {
    Lattice lat(1, 11, Boundary::torus);
    Rng rng(71);
    RulePtr rule = tasep_rule(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        Configuration x = bernoulli_configuration(lat, 0.5, rng);
        NoiseField field = draw_noise_field(lat, 2, rng);
        int l = static_cast<int>(rng() % 11) - 5;
        std::vector<int> lv{l};
        Configuration a = apply_noise(*rule, shift(x, lv), shift_noise_field(field, lat, lv));
        Configuration b = shift(apply_noise(*rule, x, field), lv);
        CHECK(a == b);
    }
}

TEST_CASE("velocity bound violations abort") {
    Lattice lat(1, 5, Boundary::torus);
    Configuration x = from_digits(lat, "10000");
    Rng rng(1);
    RunawayRule bad;
    CHECK_THROWS_AS(step(bad, x, rng), invariant_violation);
}

TEST_CASE("shift-annihilation map") {
    Lattice lat(1, 21, Boundary::open);

    Configuration zeros = Configuration::zeros(lat, Alphabet(2));
    CHECK(shift_annihilation_step(zeros) == zeros);

    // all ones: only the sites adjacent to the origin are voided
    Configuration ones = from_digits(lat, std::string(21, '1'));
    Configuration next = shift_annihilation_step(ones);
    for (long i = 0; i < lat.n_sites(); ++i) {
        int c = lat.coords_of(i)[0];
        CHECK(next.at(i) == ((c == 1 || c == -1) ? 0 : 1));
    }

    // closed form after t steps, checked by brute force iteration
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Configuration x = bernoulli_configuration(lat, 0.5, rng);
        Configuration it = x;
        for (int t = 1; t <= lat.max_ball_radius(); ++t) {
            it = shift_annihilation_step(it);
            for (long i = 0; i < lat.n_sites(); ++i) {
                int c = lat.coords_of(i)[0];
                std::uint8_t expected;
                if (c == 0)
                    expected = x.at(site_1d(lat, 0));
                else if (std::abs(c) <= t)
                    expected = 0;
                else if (c > t)
                    expected = x.at(site_1d(lat, c - t));
                else
                    expected = x.at(site_1d(lat, c + t));
                CHECK(it.at(i) == expected);
            }
        }
        // with x_0 = 1, the window-radius iterate is a lone particle at the origin
        Configuration seeded = x;
        seeded.set(site_1d(lat, 0), 1);
        Configuration lone = seeded;
        for (int t = 0; t < lat.max_ball_radius(); ++t) lone = shift_annihilation_step(lone);
        CHECK(lone.particle_count() == 1);
        CHECK(lone.at(site_1d(lat, 0)) == 1);
    }

    Configuration torus = Configuration::zeros(Lattice(1, 21, Boundary::torus), Alphabet(2));
    CHECK_THROWS_AS(shift_annihilation_step(torus), unsupported_operation);
}

TEST_CASE("halving chain") {
    CHECK(halving_step(0.0) == 0.0);
    CHECK(halving_step(1.0) == 0.5);
    double x = 0.8, y = -0.4;
    double gap = std::abs(x - y);
    for (int t = 1; t <= 30; ++t) {
        x = halving_step(x);
        y = halving_step(y);
        CHECK(std::abs(x - y) == doctest::Approx(gap * std::ldexp(1.0, -t)).epsilon(1e-15));
    }
}

TEST_CASE("bit streams and the doubling map") {
    BitStream z = zero_stream();
    CHECK(stream_window(z, 8) == std::vector<int>(8, 0));
    CHECK(stream_window(doubling_step(z), 8) == std::vector<int>(8, 0));

    BitStream u = random_stream(42);
    std::vector<int> w = stream_window(u, 12);
    BitStream stepped = doubling_step(u);
    std::vector<int> w2 = stream_window(stepped, 11);
    for (int i = 0; i < 11; ++i) CHECK(w2[static_cast<std::size_t>(i)] == w[static_cast<std::size_t>(i) + 1]);

    // materialized bits never change
    BitStream again = random_stream(42);
    (void)again.bit(1000);
    for (int i = 0; i < 12; ++i) CHECK(again.bit(static_cast<std::size_t>(i)) == w[static_cast<std::size_t>(i)]);

    // the t-step window is the source window at offset t
    BitStream b = random_stream(7);
    BitStream bt = b;
    for (int t = 0; t < 20; ++t) bt = doubling_step(bt);
    for (int i = 0; i < 10; ++i) CHECK(bt.bit(static_cast<std::size_t>(i)) == b.bit(static_cast<std::size_t>(i) + 20));

    CHECK(streams_agree(b, random_stream(7), 100));
    CHECK(stream_metric(b, random_stream(7), 30) == std::ldexp(1.0, -30));
}

TEST_CASE("model registry validates names and parameters") {
    CHECK(make_rule("tasep", {{"p", 0.3}})->name() == "tasep");
    CHECK_THROWS_AS(make_rule("nope", {}), validation_error);
    CHECK_THROWS_AS(make_rule("tasep", {{"q", 0.3}}), validation_error);
    CHECK_THROWS_AS(make_rule("tasep", {{"p", 2.0}}), validation_error);
}
