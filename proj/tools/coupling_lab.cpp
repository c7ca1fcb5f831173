// coupling-lab: simulation and exact-verification front end for coupled
// lattice particle systems and small finite chains.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clab/estimators.hpp"
#include "clab/finite_chain.hpp"

using nlohmann::json;
using namespace clab;

namespace {

struct LatticeOpts {
    int dim = 1;
    int side = 101;
    std::string boundary = "torus";

    Lattice build() const {
        if (boundary != "torus" && boundary != "open")
            throw validation_error("boundary: must be 'torus' or 'open'");
        return Lattice(dim, side, boundary == "torus" ? Boundary::torus : Boundary::open);
    }
};

void add_lattice_opts(CLI::App* cmd, LatticeOpts& lat) {
    cmd->add_option("--dim", lat.dim, "lattice dimension")->capture_default_str();
    cmd->add_option("--side", lat.side, "lattice side length")->capture_default_str();
    cmd->add_option("--boundary", lat.boundary, "torus | open")->capture_default_str();
}

struct ModelOpts {
    std::string model = "tasep";
    double p = 0.5;
};

void add_model_opts(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--model", m.model, "model name (tasep | particle_vacancy)")
        ->capture_default_str();
    cmd->add_option("--p", m.p, "hop probability")->capture_default_str();
}

ConfigSampler make_initial(const std::string& spec, const Lattice& lat, const Alphabet& alph) {
    if (spec.rfind("bernoulli:", 0) == 0) {
        double r = 0.0;
        try {
            r = std::stod(spec.substr(10));
        } catch (const std::exception&) {
            throw validation_error("initial: cannot parse density in '" + spec + "'");
        }
        if (r < 0.0 || r > 1.0) throw validation_error("initial: density must lie in [0,1]");
        if (alph.size != 2) throw validation_error("initial: bernoulli needs a binary alphabet");
        return bernoulli_sampler(lat, r);
    }
    if (spec.rfind("file:", 0) == 0) {
        std::ifstream in(spec.substr(5));
        if (!in) throw validation_error("initial: cannot open '" + spec.substr(5) + "'");
        std::string line;
        if (!std::getline(in, line))
            throw validation_error("initial: file '" + spec.substr(5) + "' is empty");
        return fixed_sampler(config_from_digit_line(lat, alph, line));
    }
    return named_sampler(lat, alph, spec);
}

// "c1 .. cd:v;c1 .. cd:v" -> cylinder (coordinates space-separated, sites
// separated by ';').
Cylinder parse_cylinder(const std::string& spec, int dim) {
    Cylinder c;
    std::stringstream sites(spec);
    std::string entry;
    while (std::getline(sites, entry, ';')) {
        auto colon = entry.rfind(':');
        if (colon == std::string::npos)
            throw validation_error("cylinder: entry '" + entry + "' needs site:value");
        std::stringstream coords(entry.substr(0, colon));
        std::vector<int> site;
        int ci;
        while (coords >> ci) site.push_back(ci);
        if (static_cast<int>(site.size()) != dim)
            throw validation_error("cylinder: site '" + entry.substr(0, colon) + "' needs " +
                                   std::to_string(dim) + " coordinates");
        int value = 0;
        try {
            value = std::stoi(entry.substr(colon + 1));
        } catch (const std::exception&) {
            throw validation_error("cylinder: bad value in '" + entry + "'");
        }
        if (value < 0 || value > 255) throw validation_error("cylinder: value out of range");
        c.prescription.emplace_back(std::move(site), static_cast<std::uint8_t>(value));
    }
    if (c.prescription.empty()) throw validation_error("cylinder: empty prescription");
    return c;
}

json cylinder_json(const Cylinder& c) {
    json sites = json::array();
    for (const auto& [site, value] : c.prescription)
        sites.push_back({{"site", site}, {"value", value}});
    return sites;
}

json series_json(const SeriesData& s) {
    return json{{"mean", s.mean}, {"median", s.median}, {"lo", s.lo}, {"hi", s.hi}};
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open output file '" + path + "'");
    out << text;
}

std::string csv_cell(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// ---- couple ---------------------------------------------------------------

struct CoupleOpts {
    ModelOpts model;
    LatticeOpts lattice;
    std::string coupling = "l_pairing";
    int pair_distance = 8;
    std::string x0 = "bernoulli:0.5";
    std::string y0 = "bernoulli:0.5";
    int replicas = 8;
    long horizon = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<long> record_times;
    std::vector<int> radii;
    std::vector<std::string> cylinders;
    int shift_bound = 0;
    std::string csv_path = "couple.csv";
    std::string json_path = "couple.json";
    std::string trace_path;
};

json couple_config_json(const CoupleOpts& o) {
    return json{{"command", "couple"},
                {"model", o.model.model},
                {"p", o.model.p},
                {"dim", o.lattice.dim},
                {"side", o.lattice.side},
                {"boundary", o.lattice.boundary},
                {"coupling", o.coupling},
                {"pair_distance", o.pair_distance},
                {"x0", o.x0},
                {"y0", o.y0},
                {"replicas", o.replicas},
                {"horizon", o.horizon},
                {"seed", o.seed},
                {"threads", o.threads},
                {"record_times", o.record_times},
                {"radii", o.radii},
                {"cylinders", o.cylinders},
                {"shift_bound", o.shift_bound},
                {"csv", o.csv_path},
                {"json", o.json_path},
                {"trace", o.trace_path}};
}

void run_couple(const CoupleOpts& o) {
    Lattice lat = o.lattice.build();
    Alphabet alph(2);
    RulePtr rule = make_rule(o.model.model, {{"p", o.model.p}});
    CouplingKind kind = coupling_kind_from_string(o.coupling);
    ConfigSampler sx = make_initial(o.x0, lat, alph);
    ConfigSampler sy = make_initial(o.y0, lat, alph);

    StatsSpec spec;
    spec.record_times = o.record_times;
    spec.density_radii = o.radii;
    for (const std::string& c : o.cylinders) spec.cylinders.push_back(parse_cylinder(c, lat.dim()));
    spec.shift_bound = o.shift_bound;

    ReplicaPlan plan{o.replicas, o.horizon, o.seed, o.threads};
    CoupledRunStats stats = run_coupled(rule, kind, o.pair_distance, sx, sy, plan, spec);

    // CSV: aggregates, one row per recorded time.
    std::ostringstream csv;
    csv << "# coupled run: model=" << o.model.model << " coupling=" << o.coupling
        << " replicas=" << o.replicas << " seed=" << o.seed << "\n";
    csv << "# columns: t; discrepancy density (mean/median/lo/hi);";
    if (o.shift_bound > 0) csv << " shifted discrepancy (mean/median/lo/hi);";
    csv << " unpaired fraction (mean/median/lo/hi); per-radius densities of both components;"
           " per-cylinder mismatch rates\n";
    csv << "t,disc_mean,disc_median,disc_lo,disc_hi";
    if (o.shift_bound > 0) csv << ",sdd_mean,sdd_median,sdd_lo,sdd_hi";
    csv << ",unpaired_mean,unpaired_median,unpaired_lo,unpaired_hi,pairs_mean";
    for (int r : o.radii) csv << ",densx_r" << r << "_mean,densy_r" << r << "_mean";
    for (std::size_t c = 0; c < spec.cylinders.size(); ++c) csv << ",mismatch" << c << "_mean";
    csv << "\n";
    for (std::size_t ti = 0; ti < stats.times.size(); ++ti) {
        csv << stats.times[ti];
        csv << ',' << csv_cell(stats.discrepancy.mean[ti]) << ','
            << csv_cell(stats.discrepancy.median[ti]) << ',' << csv_cell(stats.discrepancy.lo[ti])
            << ',' << csv_cell(stats.discrepancy.hi[ti]);
        if (o.shift_bound > 0)
            csv << ',' << csv_cell(stats.shifted_discrepancy.mean[ti]) << ','
                << csv_cell(stats.shifted_discrepancy.median[ti]) << ','
                << csv_cell(stats.shifted_discrepancy.lo[ti]) << ','
                << csv_cell(stats.shifted_discrepancy.hi[ti]);
        csv << ',' << csv_cell(stats.unpaired_fraction.mean[ti]) << ','
            << csv_cell(stats.unpaired_fraction.median[ti]) << ','
            << csv_cell(stats.unpaired_fraction.lo[ti]) << ','
            << csv_cell(stats.unpaired_fraction.hi[ti]) << ','
            << csv_cell(stats.pair_count.mean[ti]);
        for (std::size_t w = 0; w < o.radii.size(); ++w)
            csv << ',' << csv_cell(stats.density_x[w].mean[ti]) << ','
                << csv_cell(stats.density_y[w].mean[ti]);
        for (const auto& m : stats.mismatch) csv << ',' << csv_cell(m.mean[ti]);
        csv << "\n";
    }
    write_file(o.csv_path, csv.str());

    json out;
    out["config"] = couple_config_json(o);
    out["times"] = stats.times;
    out["discrepancy"] = series_json(stats.discrepancy);
    if (o.shift_bound > 0) {
        out["shifted_discrepancy"] = series_json(stats.shifted_discrepancy);
        out["final_best_shift"] = stats.final_best_shift;
    }
    out["unpaired_fraction"] = series_json(stats.unpaired_fraction);
    out["pair_count"] = series_json(stats.pair_count);
    for (std::size_t w = 0; w < o.radii.size(); ++w) {
        out["density_x"][std::to_string(o.radii[w])] = series_json(stats.density_x[w]);
        out["density_y"][std::to_string(o.radii[w])] = series_json(stats.density_y[w]);
    }
    for (std::size_t c = 0; c < stats.mismatch.size(); ++c) {
        out["mismatch"].push_back({{"cylinder", cylinder_json(spec.cylinders[c])},
                                   {"series", series_json(stats.mismatch[c])}});
    }
    // Shift-minimized mismatch rates when both ingredients are configured.
    if (o.shift_bound > 0 && !spec.cylinders.empty()) {
        for (std::size_t c = 0; c < spec.cylinders.size(); ++c) {
            MismatchRateSeries mm =
                indicator_mismatch_rate(rule, kind, o.pair_distance, sx, sy, spec.cylinders[c],
                                        o.shift_bound, plan, o.record_times);
            out["shifted_mismatch"].push_back({{"cylinder", cylinder_json(spec.cylinders[c])},
                                               {"times", mm.times},
                                               {"rate", mm.rate},
                                               {"ci", mm.ci},
                                               {"best_shift", mm.best_shift}});
        }
    }
    write_file(o.json_path, out.dump(2) + "\n");

    // Pairing event log for replica 0.
    if (!o.trace_path.empty() &&
        (kind == CouplingKind::equal_pairing || kind == CouplingKind::l_pairing)) {
        Rng rng(derive_seed(o.seed, 0));
        Configuration x = sx(rng);
        Configuration y = sy(rng);
        CoupledState state = make_coupled_state(std::move(x), std::move(y), kind, o.pair_distance);
        PairingTrace trace;
        std::ostringstream lines;
        for (long t = 1; t <= o.horizon; ++t) {
            trace.time = t;
            state = coupled_step(state, *rule, rng, &trace);
        }
        for (const PairingEvent& e : trace.events) {
            const char* kind_name = e.kind == PairingEvent::Kind::form      ? "form"
                                    : e.kind == PairingEvent::Kind::dissolve ? "dissolve"
                                                                             : "swap";
            json line{{"t", e.time}, {"kind", kind_name}, {"first", e.first_id},
                      {"second", e.second_id}};
            if (e.distance >= 0) line["distance"] = e.distance;
            lines << line.dump() << "\n";
        }
        write_file(o.trace_path, lines.str());
    }
}

// ---- exact ----------------------------------------------------------------

struct ExactOpts {
    std::string chain_path;
    std::string kernel_path;
    std::string glue = "independent";
    int x = 0;
    int y = 1;
    int horizon = 50;
    bool exact = false;
    int splice_horizon = 0;
    std::string json_path = "exact.json";
};

void run_exact(const ExactOpts& o) {
    FiniteChain chain = load_chain(o.chain_path);
    CouplingKernel kernel;
    std::string kernel_source;
    if (!o.kernel_path.empty()) {
        kernel = load_kernel(o.kernel_path);
        kernel_source = o.kernel_path;
    } else if (o.glue == "independent") {
        kernel = independent_glued_kernel(chain);
        kernel_source = "independent-glued";
    } else {
        throw validation_error("glue: unknown kernel construction '" + o.glue + "'");
    }

    json out;
    out["config"] = {{"command", "exact"},   {"chain", o.chain_path}, {"kernel", kernel_source},
                     {"x", o.x},             {"y", o.y},              {"horizon", o.horizon},
                     {"exact", o.exact},     {"splice_horizon", o.splice_horizon},
                     {"json", o.json_path}};
    out["n"] = chain.n;

    InequalityReport report;
    if (o.exact) {
        RationalChain rc = rational_chain_from_doubles(chain);
        RationalKernel rk = o.kernel_path.empty() ? independent_glued_kernel(rc)
                                                  : rational_kernel_from_doubles(kernel);
        report = coupling_inequality_verify_exact(rc, rk, o.x, o.y, o.horizon);
    } else {
        report = coupling_inequality_verify(chain, kernel, o.x, o.y, o.horizon);
    }
    json rows = json::array();
    for (const InequalityRow& r : report.rows)
        rows.push_back({{"t", r.t}, {"tv", r.tv}, {"survival", r.survival}, {"ok", r.ok}});
    out["rows"] = rows;
    out["verdict"] = report.holds ? "inequality holds" : "violation";
    out["max_excess"] = report.max_excess;

    std::vector<double> s1 = meeting_survival(kernel, o.x, o.y, o.horizon);
    std::vector<double> s2 = meeting_survival_via_inflow(kernel, o.x, o.y, o.horizon);
    double gap = 0.0;
    for (std::size_t t = 0; t < s1.size(); ++t) gap = std::max(gap, std::abs(s1[t] - s2[t]));
    out["survival_crosscheck_gap"] = gap;

    if (o.splice_horizon > 0) {
        SpliceReport splice = splice_marginal_check(chain, kernel, o.x, o.y, o.splice_horizon);
        out["splice"] = {{"horizon", o.splice_horizon},
                         {"max_l1", splice.max_l1},
                         {"paths", splice.leaves},
                         {"ok", splice.ok}};
    }
    write_file(o.json_path, out.dump(2) + "\n");
    std::cout << "verdict: " << out["verdict"].get<std::string>() << " (rows "
              << report.rows.size() << ")\n";
}

// ---- density --------------------------------------------------------------

struct DensityOpts {
    ModelOpts model;
    LatticeOpts lattice;
    std::string x0 = "bernoulli:0.5";
    std::vector<int> radii;
    long horizon = 100;
    std::uint64_t seed = 1;
    std::string csv_path = "density.csv";
    std::string json_path = "density.json";
};

void run_density(const DensityOpts& o) {
    Lattice lat = o.lattice.build();
    Alphabet alph(2);

    StepFn step_fn;
    int velocity_bound = 1;
    bool conservative = true;
    if (o.model.model == "shift_annihilation") {
        if (o.lattice.boundary != "open")
            throw validation_error("boundary: shift_annihilation needs an open window");
        step_fn = annihilation_step_fn();
        conservative = false;
    } else {
        RulePtr rule = make_rule(o.model.model, {{"p", o.model.p}});
        velocity_bound = rule->max_velocity();
        conservative = rule->conservative();
        step_fn = rule_step_fn(rule);
    }
    if (o.radii.empty()) throw validation_error("radii: at least one window radius is required");

    Rng sample_rng(derive_seed(o.seed, 0));
    Configuration x0 = make_initial(o.x0, lat, alph)(sample_rng);
    DensitySeries series = density_series(step_fn, x0, o.radii, o.horizon, derive_seed(o.seed, 1));

    std::vector<double> bounds;
    for (int r : o.radii)
        bounds.push_back(conservative && r > velocity_bound
                             ? density_drift_bound(r, velocity_bound, lat.dim(), alph.size)
                             : std::numeric_limits<double>::quiet_NaN());

    std::ostringstream csv;
    csv << "# density series: model=" << o.model.model << " seed=" << o.seed << "\n";
    csv << "# rho_rN = window-N density; bound_rN = per-step drift bound (empty when not "
           "applicable)\n";
    csv << "t,count";
    for (int r : o.radii) csv << ",rho_r" << r << ",bound_r" << r;
    csv << "\n";
    for (std::size_t ti = 0; ti < series.times.size(); ++ti) {
        csv << series.times[ti] << ',' << series.particle_count[ti];
        for (std::size_t w = 0; w < o.radii.size(); ++w) {
            csv << ',' << csv_cell(to_double(series.by_radius[w][ti])) << ',';
            if (!std::isnan(bounds[w])) csv << csv_cell(bounds[w]);
        }
        csv << "\n";
    }
    write_file(o.csv_path, csv.str());

    json out;
    out["config"] = {{"command", "density"}, {"model", o.model.model}, {"p", o.model.p},
                     {"dim", o.lattice.dim}, {"side", o.lattice.side},
                     {"boundary", o.lattice.boundary}, {"x0", o.x0},   {"radii", o.radii},
                     {"horizon", o.horizon}, {"seed", o.seed},         {"csv", o.csv_path},
                     {"json", o.json_path}};
    out["particle_count_constant"] =
        std::all_of(series.particle_count.begin(), series.particle_count.end(),
                    [&](long c) { return c == series.particle_count.front(); });
    for (std::size_t w = 0; w < o.radii.size(); ++w) {
        json col;
        col["radius"] = o.radii[w];
        if (!std::isnan(bounds[w])) col["drift_bound"] = bounds[w];
        double max_step = 0.0;
        for (std::size_t ti = 1; ti < series.times.size(); ++ti)
            max_step = std::max(max_step, std::abs(to_double(series.by_radius[w][ti] -
                                                             series.by_radius[w][ti - 1])));
        col["max_step_change"] = max_step;
        out["windows"].push_back(col);
    }
    write_file(o.json_path, out.dump(2) + "\n");
}

// ---- cesaro ---------------------------------------------------------------

struct CesaroOpts {
    ModelOpts model;
    LatticeOpts lattice;
    double density = 0.5;
    long avg_len = 100;
    int replicas = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<std::string> cylinders;
    std::string json_path = "cesaro.json";
};

void run_cesaro(const CesaroOpts& o) {
    Lattice lat = o.lattice.build();
    Alphabet alph(2);
    RulePtr rule = make_rule(o.model.model, {{"p", o.model.p}});
    std::vector<Cylinder> cylinders;
    if (o.cylinders.empty()) {
        Cylinder origin;
        origin.prescription.emplace_back(std::vector<int>(static_cast<std::size_t>(lat.dim()), 0),
                                         1);
        cylinders.push_back(origin);
    } else {
        for (const std::string& c : o.cylinders) cylinders.push_back(parse_cylinder(c, lat.dim()));
    }
    ReplicaPlan plan{o.replicas, o.avg_len, o.seed, o.threads};
    EmpiricalMeasure m =
        cesaro_estimate(rule, bernoulli_sampler(lat, o.density), o.avg_len, cylinders, plan);

    json out;
    out["config"] = {{"command", "cesaro"},   {"model", o.model.model}, {"p", o.model.p},
                     {"dim", o.lattice.dim},  {"side", o.lattice.side},
                     {"boundary", o.lattice.boundary},                  {"density", o.density},
                     {"avg_len", o.avg_len},  {"replicas", o.replicas}, {"seed", o.seed},
                     {"threads", o.threads},  {"json", o.json_path}};
    for (std::size_t c = 0; c < cylinders.size(); ++c)
        out["estimates"].push_back({{"cylinder", cylinder_json(cylinders[c])},
                                    {"estimate", m.estimate[c]},
                                    {"ci_radius", m.ci_radius[c]}});
    write_file(o.json_path, out.dump(2) + "\n");
    for (std::size_t c = 0; c < cylinders.size(); ++c)
        std::cout << "cylinder " << c << ": " << m.estimate[c] << " ± " << m.ci_radius[c] << "\n";
}

// ---- simulate -------------------------------------------------------------

struct SimulateOpts {
    ModelOpts model;
    LatticeOpts lattice;
    std::string x0 = "bernoulli:0.5";
    long horizon = 100;
    std::uint64_t seed = 1;
    std::vector<int> radii;
    std::vector<std::string> cylinders;
    std::string csv_path = "simulate.csv";
    std::string json_path = "simulate.json";
};

void run_simulate(const SimulateOpts& o) {
    Lattice lat = o.lattice.build();
    Alphabet alph(2);
    StepFn step_fn;
    if (o.model.model == "shift_annihilation") {
        if (o.lattice.boundary != "open")
            throw validation_error("boundary: shift_annihilation needs an open window");
        step_fn = annihilation_step_fn();
    } else {
        step_fn = rule_step_fn(make_rule(o.model.model, {{"p", o.model.p}}));
    }
    std::vector<Cylinder> cylinders;
    for (const std::string& c : o.cylinders) cylinders.push_back(parse_cylinder(c, lat.dim()));
    std::vector<int> radii = o.radii;
    if (radii.empty()) radii.push_back(lat.max_ball_radius());

    Rng sample_rng(derive_seed(o.seed, 0));
    Configuration x = make_initial(o.x0, lat, alph)(sample_rng);
    Rng rng(derive_seed(o.seed, 1));
    std::vector<std::vector<long>> windows;
    for (int r : radii) windows.push_back(lat.ball(r));

    std::ostringstream csv;
    csv << "# single trajectory: model=" << o.model.model << " seed=" << o.seed << "\n";
    csv << "t,count";
    for (int r : radii) csv << ",rho_r" << r;
    for (std::size_t c = 0; c < cylinders.size(); ++c) csv << ",cyl" << c;
    csv << "\n";
    for (long t = 0; t <= o.horizon; ++t) {
        csv << t << ',' << x.particle_count();
        for (const auto& w : windows) csv << ',' << csv_cell(to_double(density(x, w)));
        for (const Cylinder& c : cylinders) csv << ',' << cylinder_indicator(x, c);
        csv << "\n";
        if (t < o.horizon) x = step_fn(x, rng);
    }
    write_file(o.csv_path, csv.str());

    json out;
    out["config"] = {{"command", "simulate"}, {"model", o.model.model}, {"p", o.model.p},
                     {"dim", o.lattice.dim},  {"side", o.lattice.side},
                     {"boundary", o.lattice.boundary},                  {"x0", o.x0},
                     {"horizon", o.horizon},  {"seed", o.seed},         {"radii", radii},
                     {"csv", o.csv_path},     {"json", o.json_path}};
    out["final_line"] = to_digit_line(x);
    write_file(o.json_path, out.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupling-lab: couplings of lattice particle systems and exact chain checks"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "experiment config file; keys live in [subcommand] sections, flags override");

    CoupleOpts couple;
    CLI::App* c1 = app.add_subcommand("couple", "run a coupled pair of systems");
    add_model_opts(c1, couple.model);
    add_lattice_opts(c1, couple.lattice);
    c1->add_option("--coupling", couple.coupling,
                   "independent | synchronous | equal_pairing | l_pairing")
        ->capture_default_str();
    c1->add_option("--pair-distance", couple.pair_distance, "pairing distance bound L")
        ->capture_default_str();
    c1->add_option("--x0", couple.x0, "first initial condition")->capture_default_str();
    c1->add_option("--y0", couple.y0, "second initial condition")->capture_default_str();
    c1->add_option("--replicas", couple.replicas)->capture_default_str();
    c1->add_option("--horizon", couple.horizon)->capture_default_str();
    c1->add_option("--seed", couple.seed)->capture_default_str();
    c1->add_option("--threads", couple.threads)->capture_default_str();
    c1->add_option("--record-times", couple.record_times, "times to record (default: all)")
        ->delimiter(',');
    c1->add_option("--radii", couple.radii, "density window radii")->delimiter(',');
    c1->add_option("--cylinder", couple.cylinders, "cylinder spec 'c1 .. cd:v;...'");
    c1->add_option("--shift-bound", couple.shift_bound, "L for shifted estimators")
        ->capture_default_str();
    c1->add_option("--csv", couple.csv_path)->capture_default_str();
    c1->add_option("--json", couple.json_path)->capture_default_str();
    c1->add_option("--trace", couple.trace_path, "pairing event log (JSONL, replica 0)");

    ExactOpts exact;
    CLI::App* c2 = app.add_subcommand("exact", "finite-chain inequality and splice checks");
    c2->add_option("--chain", exact.chain_path, "chain matrix file")->required();
    c2->add_option("--kernel", exact.kernel_path, "kernel matrix file");
    c2->add_option("--glue", exact.glue, "kernel construction when no file is given")
        ->capture_default_str();
    c2->add_option("--x", exact.x)->capture_default_str();
    c2->add_option("--y", exact.y)->capture_default_str();
    c2->add_option("--horizon", exact.horizon)->capture_default_str();
    c2->add_flag("--exact", exact.exact, "verify in exact rational arithmetic");
    c2->add_option("--splice-horizon", exact.splice_horizon,
                   "also run the splice marginal check up to this horizon");
    c2->add_option("--json", exact.json_path)->capture_default_str();

    DensityOpts density_opts;
    CLI::App* c3 = app.add_subcommand("density", "density series and drift bounds");
    add_model_opts(c3, density_opts.model);
    add_lattice_opts(c3, density_opts.lattice);
    c3->add_option("--x0", density_opts.x0)->capture_default_str();
    c3->add_option("--radii", density_opts.radii, "window radii")->delimiter(',');
    c3->add_option("--horizon", density_opts.horizon)->capture_default_str();
    c3->add_option("--seed", density_opts.seed)->capture_default_str();
    c3->add_option("--csv", density_opts.csv_path)->capture_default_str();
    c3->add_option("--json", density_opts.json_path)->capture_default_str();

    CesaroOpts cesaro;
    CLI::App* c4 = app.add_subcommand("cesaro", "time-averaged empirical measure");
    add_model_opts(c4, cesaro.model);
    add_lattice_opts(c4, cesaro.lattice);
    c4->add_option("--density", cesaro.density, "initial Bernoulli density")
        ->capture_default_str();
    c4->add_option("--avg-len", cesaro.avg_len, "averaging length N")->capture_default_str();
    c4->add_option("--replicas", cesaro.replicas)->capture_default_str();
    c4->add_option("--seed", cesaro.seed)->capture_default_str();
    c4->add_option("--threads", cesaro.threads)->capture_default_str();
    c4->add_option("--cylinder", cesaro.cylinders, "cylinder spec (default: origin occupied)");
    c4->add_option("--json", cesaro.json_path)->capture_default_str();

    SimulateOpts simulate;
    CLI::App* c5 = app.add_subcommand("simulate", "single uncoupled trajectory");
    add_model_opts(c5, simulate.model);
    add_lattice_opts(c5, simulate.lattice);
    c5->add_option("--x0", simulate.x0)->capture_default_str();
    c5->add_option("--horizon", simulate.horizon)->capture_default_str();
    c5->add_option("--seed", simulate.seed)->capture_default_str();
    c5->add_option("--radii", simulate.radii)->delimiter(',');
    c5->add_option("--cylinder", simulate.cylinders);
    c5->add_option("--csv", simulate.csv_path)->capture_default_str();
    c5->add_option("--json", simulate.json_path)->capture_default_str();

    try {
        app.parse(argc, argv);
        if (c1->parsed()) run_couple(couple);
        if (c2->parsed()) run_exact(exact);
        if (c3->parsed()) run_density(density_opts);
        if (c4->parsed()) run_cesaro(cesaro);
        if (c5->parsed()) run_simulate(simulate);
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const invariant_violation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const unsupported_operation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
}
