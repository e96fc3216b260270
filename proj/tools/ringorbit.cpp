// ringorbit: command-line front end.
//
//   ringorbit constants --n 4
//   ringorbit simulate --config seed.txt --t-end 50 --out traj.csv
//   ringorbit verify --fixture fixtures/table_seeds
//   ringorbit search --grid grid.json --jobs 8 --out catalog.jsonl
//   ringorbit reconstruct --config seed.txt --out bodies.csv
//
// Exit codes: 0 ok, 1 verification failure, 2 usage, 3 numerical failure or
// collision, 4 seed outside the collision-free family.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ringorbit/dynamics.hpp"
#include "ringorbit/errors.hpp"
#include "ringorbit/fixture.hpp"
#include "ringorbit/integrate.hpp"
#include "ringorbit/model.hpp"
#include "ringorbit/nbody.hpp"
#include "ringorbit/search.hpp"
#include "ringorbit/seed_io.hpp"

#ifndef RINGORBIT_VERSION
#define RINGORBIT_VERSION "0.0.0"
#endif

namespace {

using namespace ringorbit;

enum Exit : int { ok = 0, verify_failed = 1, usage = 2, numeric = 3, out_of_family = 4 };

struct SeedFlags {
    std::optional<std::string> config;
    std::optional<int> n;
    std::optional<double> m1, m2, y10, dy20, df0, t0;
    std::optional<std::string> theta0;

    void add(CLI::App* cmd) {
        cmd->add_option("--config", config, "Seed file: key = value lines or a JSON object");
        cmd->add_option("--n", n, "Number of ring bodies (>= 2)");
        cmd->add_option("--m1", m1, "Axial body mass");
        cmd->add_option("--m2", m2, "Ring body mass");
        cmd->add_option("--y10", y10, "Initial ring radius");
        cmd->add_option("--dy20", dy20, "Initial tangential speed");
        cmd->add_option("--df0", df0, "Initial axial speed");
        cmd->add_option("--theta0", theta0, "Target angle as p/q (multiples of pi)");
        cmd->add_option("--t0", t0, "Candidate period");
    }

    [[nodiscard]] bool any() const { return config || n || m1 || m2 || y10 || dy20 || df0 || t0 || theta0; }

    [[nodiscard]] std::string source() const { return config ? "config " + *config : "flags"; }

    /// Config file first, flags override.
    [[nodiscard]] SeedConfig resolve() const {
        KeyValues kv;
        if (config) {
            std::ifstream in(*config);
            if (!in) throw InvalidConfiguration("cannot read config file '" + *config + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            const std::string text = ss.str();
            const auto first = text.find_first_not_of(" \t\r\n");
            if (first != std::string::npos && text[first] == '{') {
                try {
                    kv = key_values_from_json(nlohmann::json::parse(text));
                } catch (const nlohmann::json::exception& e) {
                    throw InvalidConfiguration(std::string("invalid config JSON: ") + e.what());
                }
            } else {
                kv = parse_key_values(text);
            }
        }
        if (n) kv["n"] = std::to_string(*n);
        auto put = [&kv](const char* key, const std::optional<double>& v) {
            if (v) kv[key] = format_double(*v);
        };
        put("m1", m1);
        put("m2", m2);
        put("y10", y10);
        put("dy20", dy20);
        put("df0", df0);
        put("t0", t0);
        if (theta0) {
            const auto th = PiFraction::parse(*theta0);
            kv["theta0_p"] = std::to_string(th.num());
            kv["theta0_q"] = std::to_string(th.den());
        }
        return seed_from_key_values(kv);
    }
};

struct SettingsFlags {
    double rtol = 1e-12;
    double atol = 1e-12;
    std::optional<double> max_step;

    void add(CLI::App* cmd) {
        cmd->add_option("--rtol", rtol, "Relative tolerance")->capture_default_str();
        cmd->add_option("--atol", atol, "Absolute tolerance")->capture_default_str();
        cmd->add_option("--max-step", max_step, "Largest step size");
    }

    [[nodiscard]] IntegratorSettings get() const {
        IntegratorSettings s;
        s.rel_tol = rtol;
        s.abs_tol = atol;
        s.max_step = max_step;
        s.validate();
        return s;
    }

    [[nodiscard]] nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["rel_tol"] = rtol;
        j["abs_tol"] = atol;
        if (max_step) j["max_step"] = *max_step;
        return j;
    }
};

std::string timestamp() {
    std::time_t t = 0;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    } else {
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Manifest {
    std::string command;
    std::string source;
    nlohmann::ordered_json seed;
    nlohmann::ordered_json settings;
    std::vector<std::string> outputs;

    void write(std::ostream& os) const {
        os << "# ringorbit " << RINGORBIT_VERSION << '\n';
        os << "# command: " << command << '\n';
        os << "# source: " << source << '\n';
        if (!seed.is_null()) os << "# seed: " << seed.dump() << '\n';
        os << "# settings: " << settings.dump() << '\n';
        os << "# outputs:";
        for (const auto& o : outputs) os << ' ' << o;
        os << '\n';
        os << "# timestamp: " << timestamp() << '\n';
    }
};

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidConfiguration("cannot write '" + path + "'");
    out.precision(17);
    return out;
}

// ---------------------------------------------------------------- constants

struct ClosedForm {
    std::optional<double> a;
    std::optional<double> b;
};

ClosedForm closed_forms(int n) {
    switch (n) {
    case 2: return {0.25, 0.5};
    case 3: return {1.0 / std::sqrt(3.0), 2.0 / std::sqrt(3.0)};
    case 4: return {0.25 + 1.0 / std::sqrt(2.0), 0.5 + std::sqrt(2.0)};
    case 5: return {std::nullopt, 2.0 * std::sqrt(1.0 + 2.0 / std::sqrt(5.0))};
    default: return {};
    }
}

int cmd_constants(int n) {
    if (n < 2) throw InvalidConfiguration("n must be at least 2");
    const auto rc = make_constants(n, 1.0, 1.0);
    const auto cf = closed_forms(n);
    std::cout << "n = " << n << '\n';
    std::cout << "a_n = " << format_17(rc.a_n) << '\n';
    std::cout << "b_n = " << format_17(rc.b_n) << '\n';
    std::cout << "a_n - b_n/2 = " << format_17(rc.a_n - rc.b_n / 2.0) << '\n';
    if (cf.a) std::cout << "a_n closed form = " << format_17(*cf.a) << " (diff " << format_17(rc.a_n - *cf.a) << ")\n";
    if (cf.b) std::cout << "b_n closed form = " << format_17(*cf.b) << " (diff " << format_17(rc.b_n - *cf.b) << ")\n";
    return ok;
}

// ----------------------------------------------------------------- simulate

double end_time(const std::optional<double>& t_end, const SeedConfig& q) {
    if (t_end) {
        if (!(*t_end > 0.0)) throw InvalidConfiguration("--t-end must be positive");
        return *t_end;
    }
    if (q.t0) return *q.t0;
    throw InvalidConfiguration("give --t-end or a seed with t0");
}

void require_family(const SeedConfig& q, bool allow_unbounded) {
    if (allow_unbounded) return;
    if (!validate_family(q).in_L) {
        throw OutsideFamily("seed has c2 >= 0 or c1 = 0; pass --allow-unbounded to integrate anyway");
    }
}

int cmd_simulate(const SeedFlags& sf, const SettingsFlags& st, const std::optional<double>& t_end_flag,
                 const std::optional<std::string>& out_path, bool allow_unbounded) {
    const auto q = sf.resolve();
    require_family(q, allow_unbounded);
    const auto settings = st.get();
    const double t_end = end_time(t_end_flag, q);
    const auto traj = integrate(q, t_end, settings);
    const auto c = conserved_from_seed(q);
    const auto fam = validate_family(q);

    std::cout << "c1 = " << format_17(c.c1) << '\n';
    std::cout << "c2 = " << format_17(c.c2) << '\n';
    std::cout << "note: c2 uses df0 squared; the printed three-body definition shows the df0 term unsquared\n";
    std::cout << "in_L = " << (fam.in_L ? "true" : "false") << '\n';
    std::cout << "in_B = " << (fam.in_B ? "true" : "false") << '\n';
    if (fam.in_L) {
        try {
            const auto rb = radial_bounds(c, traj.system());
            std::cout << "r_lo = " << format_17(rb.r_lo) << '\n';
            std::cout << "r_hi = " << format_17(rb.r_hi) << '\n';
        } catch (const TheoremViolation&) {
            // Only a circular planar seed gets here: the band collapses to y10
            // and the discriminant rounds to zero or just below.
            std::cout << "note: radial band degenerate (circular orbit to rounding)\n";
        }
    }
    std::cout << "t_end = " << format_17(t_end) << '\n';
    std::cout << "steps = " << traj.steps().size() << '\n';
    std::cout << "turning_points = " << traj.events().size() << '\n';
    std::cout << "max_c2_drift = " << format_17(traj.max_abs_drift()) << '\n';

    if (out_path) {
        auto out = open_output(*out_path);
        Manifest m{"simulate", sf.source(), seed_to_json(q), st.json(), {*out_path}};
        m.settings["t_end"] = t_end;
        m.write(out);
        write_trajectory_csv(out, traj);
    }
    return ok;
}

// -------------------------------------------------------------- reconstruct

int cmd_reconstruct(const SeedFlags& sf, const SettingsFlags& st, const std::optional<double>& t_end_flag,
                    std::size_t samples, const std::optional<std::string>& out_path, bool allow_unbounded) {
    const auto q = sf.resolve();
    require_family(q, allow_unbounded);
    if (samples < 2) throw InvalidConfiguration("--samples must be at least 2");
    const auto settings = st.get();
    const double t_end = end_time(t_end_flag, q);
    const auto traj = integrate(q, t_end, settings);

    std::ofstream file;
    if (out_path) file = open_output(*out_path);
    std::ostream& out = out_path ? static_cast<std::ostream&>(file) : std::cout;
    Manifest m{"reconstruct", sf.source(), seed_to_json(q), st.json(), {out_path.value_or("-")}};
    m.settings["t_end"] = t_end;
    m.settings["samples"] = samples;
    m.write(out);
    write_full_csv_header(out);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = i + 1 == samples ? t_end : t_end * static_cast<double>(i) / static_cast<double>(samples - 1);
        write_full_csv_rows(out, reconstruct_full(traj.state_at(t), traj.system()));
    }
    std::cerr << "bodies = " << q.n + 1 << ", samples = " << samples << '\n';
    return ok;
}

// ------------------------------------------------------------------- verify

struct VerifyOptions {
    double xi_threshold = 1e-3;
    double cross_tolerance = 1e-6;
    bool refine = false;
    double refine_target = 1e-10;
    double neighborhood = 1e-3;
};

double max_relative_offset(const SeedConfig& a, const SeedConfig& b) {
    auto relo = [](double x, double y) { return y == 0.0 ? std::abs(x) : std::abs(x / y - 1.0); };
    return std::max({relo(a.y10, b.y10), relo(a.dy20, b.dy20), relo(a.df0, b.df0),
                     relo(a.t0.value_or(0.0), b.t0.value_or(0.0))});
}

nlohmann::ordered_json verify_row(const std::string& label, const SeedConfig& q, const IntegratorSettings& settings,
                                  const VerifyOptions& opt, bool& pass) {
    nlohmann::ordered_json j;
    j["label"] = label;
    j["n"] = q.n;
    pass = false;
    try {
        if (!q.t0) throw InvalidConfiguration("row has no t0");
        const auto rec = verify_recurrence(q, settings, opt.xi_threshold);
        j["xi"] = rec.xi;
        j["radius_mismatch"] = rec.radius_mismatch;
        j["multiplier"] = rec.multiplier;
        j["closure"] = rec.closure ? nlohmann::ordered_json(*rec.closure) : nlohmann::ordered_json(nullptr);
        const auto cv = cross_validate(q, *q.t0, settings, std::nullopt, 200);
        j["cross_validation"] = cv.max_position_deviation;
        j["energy_drift"] = std::max(cv.energy_drift, cv.reduced_energy_drift);
        bool row_ok = cv.max_position_deviation < opt.cross_tolerance;
        if (opt.refine) {
            const auto refined = refine(make_candidate(q, rec.xi), settings);
            const double offset = max_relative_offset(refined.q, q);
            j["refined_xi"] = refined.xi;
            j["refined_offset"] = offset;
            row_ok = row_ok && refined.xi < opt.refine_target && offset <= opt.neighborhood;
        } else {
            row_ok = row_ok && rec.xi < opt.xi_threshold;
        }
        pass = row_ok;
    } catch (const Error& e) {
        j["error"] = e.what();
    }
    j["pass"] = pass;
    return j;
}

int cmd_verify(const std::optional<std::string>& fixture, const SeedFlags& sf, const SettingsFlags& st,
               const VerifyOptions& opt, const std::optional<std::string>& out_path) {
    std::vector<std::pair<std::string, SeedConfig>> rows;
    std::string source;
    if (fixture) {
        std::string path = *fixture;
#ifdef RINGORBIT_FIXTURE_DIR
        if (!std::filesystem::exists(path) && path.find('/') == std::string::npos) {
            path = std::string(RINGORBIT_FIXTURE_DIR) + "/" + path;
        }
#endif
        for (const auto& r : load_fixture(path)) rows.emplace_back(r.label, r.seed);
        source = "fixture " + *fixture;
    } else if (sf.any()) {
        rows.emplace_back("seed", sf.resolve());
        source = sf.source();
    } else {
        throw InvalidConfiguration("give --fixture or seed flags");
    }
    const auto settings = st.get();

    std::ofstream file;
    if (out_path) file = open_output(*out_path);
    std::ostream& out = out_path ? static_cast<std::ostream&>(file) : std::cout;
    if (out_path) {
        auto s = st.json();
        s["xi_threshold"] = opt.xi_threshold;
        s["cross_tolerance"] = opt.cross_tolerance;
        s["refine"] = opt.refine;
        Manifest{"verify", source, nullptr, s, {*out_path}}.write(out);
    }
    std::size_t passed = 0;
    for (const auto& [label, q] : rows) {
        bool pass = false;
        out << verify_row(label, q, settings, opt, pass).dump() << '\n';
        if (pass) {
            ++passed;
        } else {
            std::cerr << "FAIL " << label << '\n';
        }
    }
    std::cerr << passed << "/" << rows.size() << " rows pass\n";
    return passed == rows.size() ? ok : verify_failed;
}

// ------------------------------------------------------------------- search

std::vector<PeriodicCandidate> read_from(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    // A catalog has one JSON object per line; anything else is a single seed record.
    std::istringstream probe(text);
    std::string line;
    bool catalog = false;
    while (std::getline(probe, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        catalog = t.front() == '{' && t.back() == '}';
        break;
    }
    if (catalog) {
        std::istringstream is(text);
        return read_catalog(is);
    }
    const auto q = parse_seed(text);
    return {make_candidate(q, std::numeric_limits<double>::infinity())};
}

int cmd_search(const std::optional<std::string>& grid_path, const std::optional<std::string>& from,
               const SeedFlags& sf, const SettingsFlags& st, std::size_t jobs,
               const std::optional<std::string>& out_path) {
    const auto settings = st.get();
    if (jobs == 0) throw InvalidConfiguration("--jobs must be positive");
    std::vector<PeriodicCandidate> found;
    std::string source;
    nlohmann::ordered_json extra;
    if (grid_path) {
        std::ifstream in(*grid_path);
        if (!in) throw InvalidConfiguration("cannot read grid '" + *grid_path + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfiguration(std::string("invalid grid JSON: ") + e.what());
        }
        const auto grid = grid_from_json(j);
        const auto res = sweep(grid, jobs, settings);
        found = res.candidates;
        source = "grid " + *grid_path;
        extra["grid_points"] = res.evaluated;
        extra["out_of_family"] = res.out_of_family;
        extra["failed"] = res.failed;
        std::cerr << "grid points = " << res.evaluated << ", out of family = " << res.out_of_family
                  << ", failed = " << res.failed << '\n';
    } else {
        std::vector<PeriodicCandidate> starts;
        if (from) {
            starts = read_from(*from);
            source = "from " + *from;
        } else if (sf.any()) {
            starts = {make_candidate(sf.resolve(), std::numeric_limits<double>::infinity())};
            source = sf.source();
        } else {
            throw InvalidConfiguration("give --grid, --from or seed flags");
        }
        for (auto& c : starts) {
            if (!std::isfinite(c.xi)) c.xi = xi(c.q, settings);
            found.push_back(refine(c, settings));
        }
    }

    std::ofstream file;
    if (out_path) file = open_output(*out_path);
    std::ostream& out = out_path ? static_cast<std::ostream&>(file) : std::cout;
    auto s = st.json();
    for (const auto& [k, v] : extra.items()) s[k] = v;
    Manifest{"search", source, nullptr, s, {out_path.value_or("-")}}.write(out);
    write_catalog(out, found);
    std::cerr << "candidates = " << found.size() << '\n';
    for (const auto& c : found) std::cerr << "xi = " << format_17(c.xi) << (c.refined ? " (refined)" : "") << '\n';
    return ok;
}

int run(int argc, char** argv) {
    CLI::App app{"Symmetric (n+1)-body orbits: an axial body and a rotating regular n-gon"};
    app.set_version_flag("--version", std::string(RINGORBIT_VERSION));
    app.require_subcommand(1);

    int const_n = 0;
    auto* constants = app.add_subcommand("constants", "Ring constants a_n, b_n and closed forms");
    constants->add_option("--n", const_n, "Number of ring bodies")->required();

    SeedFlags sim_seed;
    SettingsFlags sim_set;
    std::optional<double> sim_t_end;
    std::optional<std::string> sim_out;
    bool sim_unbounded = false;
    auto* simulate = app.add_subcommand("simulate", "Integrate a seed; write the reduced trajectory CSV");
    sim_seed.add(simulate);
    sim_set.add(simulate);
    simulate->add_option("--t-end", sim_t_end, "End time (defaults to t0)");
    simulate->add_option("--out", sim_out, "Trajectory CSV path");
    simulate->add_flag("--allow-unbounded", sim_unbounded, "Integrate seeds outside the family");

    SeedFlags rec_seed;
    SettingsFlags rec_set;
    std::optional<double> rec_t_end;
    std::optional<std::string> rec_out;
    std::size_t rec_samples = 1001;
    bool rec_unbounded = false;
    auto* recon = app.add_subcommand("reconstruct", "Write Cartesian positions and velocities of all bodies");
    rec_seed.add(recon);
    rec_set.add(recon);
    recon->add_option("--t-end", rec_t_end, "End time (defaults to t0)");
    recon->add_option("--samples", rec_samples, "Uniform output times")->capture_default_str();
    recon->add_option("--out", rec_out, "CSV path (stdout when omitted)");
    recon->add_flag("--allow-unbounded", rec_unbounded, "Integrate seeds outside the family");

    SeedFlags ver_seed;
    SettingsFlags ver_set;
    std::optional<std::string> ver_fixture, ver_out;
    VerifyOptions ver_opt;
    auto* verify = app.add_subcommand("verify", "Check periodic seeds: xi, closure, Cartesian cross-check");
    verify->add_option("--fixture", ver_fixture, "Fixture file (path, or a name under the shipped fixtures)");
    ver_seed.add(verify);
    ver_set.add(verify);
    verify->add_option("--xi-threshold", ver_opt.xi_threshold, "Largest passing xi")->capture_default_str();
    verify->add_option("--cross-tolerance", ver_opt.cross_tolerance, "Largest reduced/Cartesian position gap")
        ->capture_default_str();
    verify->add_flag("--refine", ver_opt.refine, "Pass rows by refined xi < 1e-10 within 1e-3 of the seed");
    verify->add_option("--out", ver_out, "Results file (stdout when omitted)");

    SeedFlags sea_seed;
    SettingsFlags sea_set;
    std::optional<std::string> sea_grid, sea_from, sea_out;
    std::size_t sea_jobs = 1;
    auto* search = app.add_subcommand("search", "Refine a candidate or sweep a grid for periodic seeds");
    search->add_option("--grid", sea_grid, "Grid specification (JSON)");
    search->add_option("--from", sea_from, "Seed record or catalog to refine");
    sea_seed.add(search);
    sea_set.add(search);
    search->add_option("--jobs", sea_jobs, "Worker threads")->capture_default_str();
    search->add_option("--out", sea_out, "Catalog path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*constants) return cmd_constants(const_n);
        if (*simulate) return cmd_simulate(sim_seed, sim_set, sim_t_end, sim_out, sim_unbounded);
        if (*recon) return cmd_reconstruct(rec_seed, rec_set, rec_t_end, rec_samples, rec_out, rec_unbounded);
        if (*verify) return cmd_verify(ver_fixture, ver_seed, ver_set, ver_opt, ver_out);
        if (*search) return cmd_search(sea_grid, sea_from, sea_seed, sea_set, sea_jobs, sea_out);
    } catch (const InvalidConfiguration& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const OutsideFamily& e) {
        std::cerr << "error: " << e.what() << '\n';
        return out_of_family;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numeric;
    }
    return usage;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
