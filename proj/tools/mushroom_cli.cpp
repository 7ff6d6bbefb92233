// Command-line front end. Talks to the library only through mushroom.h.

#include "mushroom/mushroom.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTopology = 3;
constexpr int kExitQuality = 4;

constexpr const char* kOutputEnv = "MUSHROOM_OUTPUT_DIR";

// Error that carries the process exit code.
struct Failure : std::runtime_error
{
    int code;
    Failure(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

int exit_code_of(mushroom_status s)
{
    switch (s) {
    case MUSHROOM_OK: return kExitOk;
    case MUSHROOM_ERR_CONFIG: return kExitConfig;
    case MUSHROOM_ERR_TOPOLOGY: return kExitTopology;
    case MUSHROOM_ERR_QUALITY: return kExitQuality;
    default: return 1;
    }
}

void check(mushroom_status s, const std::string& what)
{
    if (s != MUSHROOM_OK)
        throw Failure(exit_code_of(s), what + ": " + mushroom_last_error());
}

// ---- presets ----------------------------------------------------------------

json preset_protocol(const std::string& name)
{
    if (name == "sinusoidal")
        return json{{"kind", "sinusoidal"}, {"r0", 1.0},          {"h0", 1.0}, {"a", 0.5},
                    {"b", -0.5},            {"c", 0.8},            {"tan_theta", 0.1111},
                    {"time_scale", 1.0},    {"nu_rate", 0.5}};
    if (name == "ergodic") {
        json j = preset_protocol("sinusoidal");
        j["c"] = 0.0;
        return j;
    }
    if (name == "rectangle" || name == "rectangle-clockwise")
        return json{{"kind", "rectangle"},
                    {"r", 1.0},
                    {"w0", 0.3},
                    {"w1", 1.0},
                    {"h0", 2.0},
                    {"h1", 6.0},
                    {"tan_theta", std::tan(2.3 * M_PI / 180.0)},
                    {"direction", name == "rectangle" ? "anticlockwise" : "clockwise"}};
    throw Failure(kExitConfig, "unknown preset '" + name + "' (sinusoidal, ergodic, rectangle, rectangle-clockwise)");
}

json read_json_file(const std::string& path, const char* what)
{
    std::ifstream f(path);
    if (!f)
        throw Failure(kExitConfig, std::string("cannot read ") + what + " file '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw Failure(kExitConfig, std::string(what) + " file '" + path + "' does not parse: " + e.what());
    }
}

// ---- configuration ------------------------------------------------------------

// Values from the command line; unset ones fall back to the config file, then
// to defaults.
struct Flags
{
    std::string config_file;
    std::string protocol_file;
    std::string preset;
    std::string out;
    std::optional<std::size_t> particles;
    std::optional<double> e0;
    std::optional<std::size_t> cycles;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> bins;
    std::optional<unsigned> threads;
    std::optional<std::size_t> panels;
    std::vector<std::size_t> normalized_at;
    std::size_t chi_bins = 25;
    bool per_particle = false;
    bool quiet = false;
};

struct Experiment
{
    json protocol;
    mushroom_ensemble_config ensemble{};
    std::size_t panels = 10000;
    fs::path out;
};

template <class T>
T pick(const std::optional<T>& flag, const json& file, const std::vector<const char*>& keys, T fallback)
{
    if (flag)
        return *flag;
    for (const char* k : keys)
        if (file.contains(k) && !file.at(k).is_null()) {
            try {
                return file.at(k).get<T>();
            } catch (const json::exception& e) {
                throw Failure(kExitConfig, std::string("config field '") + k + "': " + e.what());
            }
        }
    return fallback;
}

Experiment resolve(const Flags& f)
{
    json file = json::object();
    if (!f.config_file.empty())
        file = read_json_file(f.config_file, "config");
    if (!file.is_object())
        throw Failure(kExitConfig, "config file must hold a JSON object");

    Experiment ex;
    if (!f.protocol_file.empty())
        ex.protocol = read_json_file(f.protocol_file, "protocol");
    else if (!f.preset.empty())
        ex.protocol = preset_protocol(f.preset);
    else if (file.contains("protocol") && file["protocol"].is_object())
        ex.protocol = file["protocol"];
    else if (file.contains("protocol") && file["protocol"].is_string()) {
        fs::path p = file["protocol"].get<std::string>();
        if (p.is_relative() && !f.config_file.empty())
            p = fs::path(f.config_file).parent_path() / p;
        ex.protocol = read_json_file(p.string(), "protocol");
    } else if (file.contains("preset") && file["preset"].is_string())
        ex.protocol = preset_protocol(file["preset"].get<std::string>());
    else
        throw Failure(kExitConfig, "no protocol given (use --protocol FILE, --preset NAME or a config file)");

    mushroom_ensemble_config_default(&ex.ensemble);
    ex.ensemble.particles = pick<std::size_t>(f.particles, file, {"particles", "N"}, ex.ensemble.particles);
    ex.ensemble.e0 = pick<double>(f.e0, file, {"e0", "E0"}, ex.ensemble.e0);
    ex.ensemble.cycles = pick<std::size_t>(f.cycles, file, {"cycles", "n"}, ex.ensemble.cycles);
    ex.ensemble.seed = pick<std::uint64_t>(f.seed, file, {"seed"}, ex.ensemble.seed);
    ex.ensemble.bins = pick<std::size_t>(f.bins, file, {"bins"}, ex.ensemble.bins);
    ex.ensemble.threads = pick<unsigned>(f.threads, file, {"threads"}, ex.ensemble.threads);
    ex.panels = pick<std::size_t>(f.panels, file, {"panels"}, ex.panels);

    std::string out = f.out;
    if (out.empty() && file.contains("output") && file["output"].is_string())
        out = file["output"].get<std::string>();
    if (out.empty())
        if (const char* env = std::getenv(kOutputEnv))
            out = env;
    if (out.empty())
        out = ".";
    ex.out = out;
    return ex;
}

void prepare_output(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Failure(kExitConfig, "output directory '" + dir.string() + "' is not writable");
}

struct Protocol
{
    mushroom_protocol* handle = nullptr;
    ~Protocol() { mushroom_protocol_free(handle); }
};

struct Theory
{
    mushroom_theory* handle = nullptr;
    ~Theory() { mushroom_theory_free(handle); }
};

struct Ensemble
{
    mushroom_ensemble* handle = nullptr;
    ~Ensemble() { mushroom_ensemble_free(handle); }
};

json canonical_protocol(const mushroom_protocol* p)
{
    char* text = nullptr;
    check(mushroom_protocol_to_json(p, &text), "protocol");
    json j = json::parse(text);
    mushroom_string_free(text);
    return j;
}

json config_echo(const std::string& command, const Experiment& ex, const json& protocol, bool ensemble)
{
    json c;
    c["command"] = command;
    c["protocol"] = protocol;
    if (ensemble) {
        c["particles"] = ex.ensemble.particles;
        c["e0"] = ex.ensemble.e0;
        c["cycles"] = ex.ensemble.cycles;
        c["seed"] = ex.ensemble.seed;
        c["bins"] = ex.ensemble.bins;
    } else {
        c["panels"] = ex.panels;
    }
    c["library_version"] = mushroom_version();
    return c;
}

// ---- file writers ---------------------------------------------------------------

std::ofstream open_out(const fs::path& path)
{
    std::ofstream f(path);
    if (!f)
        throw Failure(kExitConfig, "cannot write '" + path.string() + "'");
    f.precision(17);
    return f;
}

void write_json(const fs::path& path, const json& j)
{
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

// Plain two-column CSV with the configuration echoed as a leading comment.
void write_columns(const fs::path& path, const json& echo, const char* x_name, const char* y_name,
                   const std::vector<double>& x, const std::vector<double>& y)
{
    auto f = open_out(path);
    f << "# config: " << echo.dump() << '\n';
    f << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < x.size(); ++i)
        f << x[i] << ',' << y[i] << '\n';
}

void write_histogram(const fs::path& path, const json& echo, const std::vector<double>& edges,
                     const std::vector<double>& density)
{
    std::vector<double> centers(density.size());
    for (std::size_t i = 0; i < density.size(); ++i)
        centers[i] = 0.5 * (edges[i] + edges[i + 1]);
    write_columns(path, echo, "bin_center", "density", centers, density);
}

// ---- theory -----------------------------------------------------------------------

struct TheoryOutcome
{
    mushroom_prediction prediction{};
    mushroom_status status = MUSHROOM_OK;
    std::string message;
};

TheoryOutcome evaluate_theory(Theory& th, const mushroom_protocol* p, std::size_t panels)
{
    mushroom_theory_options opts;
    mushroom_theory_options_default(&opts);
    opts.panels = panels;
    check(mushroom_theory_create(p, &opts, &th.handle), "theory");
    TheoryOutcome out;
    out.status = mushroom_theory_predict(th.handle, &out.prediction);
    if (out.status != MUSHROOM_OK && out.status != MUSHROOM_ERR_TOPOLOGY)
        check(out.status, "theory");
    out.message = mushroom_last_error();
    return out;
}

json prediction_json(const mushroom_prediction& p)
{
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["m1"] = num(p.m1);
    j["p_nc"] = num(p.p_nc);
    j["ln_e_nc"] = num(p.ln_e_nc);
    j["loop_area"] = num(p.loop_area);
    j["capture_intervals"] = p.capture_intervals;
    if (p.capture_intervals == 1)
        j["capture_interval"] = {p.capture_begin, p.capture_end};
    return j;
}

std::pair<std::vector<double>, std::vector<double>> curve(mushroom_theory* th, mushroom_curve which)
{
    std::size_t n = 0;
    check(mushroom_theory_curve(th, which, nullptr, nullptr, &n), "curve");
    std::vector<double> x(n);
    std::vector<double> y(n);
    check(mushroom_theory_curve(th, which, x.data(), y.data(), &n), "curve");
    return {x, y};
}

int cmd_theory(const Flags& flags)
{
    const Experiment ex = resolve(flags);
    Protocol proto;
    // A rectangle without a period gets the adiabatic one at E0; the
    // predictions themselves do not depend on the period.
    check(mushroom_protocol_from_json(ex.protocol.dump().c_str(), ex.ensemble.e0, &proto.handle), "protocol");
    const json canonical = canonical_protocol(proto.handle);
    prepare_output(ex.out);
    const json echo = config_echo("theory", ex, canonical, false);

    Theory th;
    const TheoryOutcome res = evaluate_theory(th, proto.handle, ex.panels);
    json doc = prediction_json(res.prediction);
    doc["config"] = echo;
    if (res.status == MUSHROOM_ERR_TOPOLOGY) {
        doc["error"] = res.message;
        write_json(ex.out / "prediction.json", doc);
        throw Failure(kExitTopology, res.message);
    }
    double atom_value = 0.0;
    double atom_mass = 0.0;
    check(mushroom_theory_atom(th.handle, &atom_value, &atom_mass), "theory");
    doc["noncaptured_atom"] = {{"ln_e1", atom_value}, {"mass", atom_mass}};
    write_json(ex.out / "prediction.json", doc);

    auto [t1, p] = curve(th.handle, MUSHROOM_CURVE_P_CHA);
    write_columns(ex.out / "p_cha.csv", echo, "t", "value", t1, p);
    auto [t2, g] = curve(th.handle, MUSHROOM_CURVE_G);
    write_columns(ex.out / "g.csv", echo, "t", "value", t2, g);
    auto [t3, e1] = curve(th.handle, MUSHROOM_CURVE_LN_E1);
    write_columns(ex.out / "e1_of_tin.csv", echo, "t", "value", t3, e1);
    auto [c, d] = curve(th.handle, MUSHROOM_CURVE_PREDICTED_DENSITY);
    write_columns(ex.out / "predicted_density.csv", echo, "bin_center", "density", c, d);

    std::cout << prediction_json(res.prediction).dump(2) << '\n';
    return kExitOk;
}

// ---- simulate / compare ----------------------------------------------------------

void progress_bar(std::size_t done, std::size_t total, void*)
{
    const std::size_t step = std::max<std::size_t>(1, total / 20);
    if (done % step == 0 || done == total)
        std::fprintf(stderr, "\r  %zu/%zu particles", done, total), std::fflush(stderr);
    if (done == total)
        std::fputc('\n', stderr);
}

struct Run
{
    Protocol proto;
    Ensemble ens;
    json canonical;
    mushroom_ensemble_summary summary{};
    mushroom_status status = MUSHROOM_OK;
    std::string message;
};

void run_simulation(const Experiment& ex, const Flags& flags, Run& run)
{
    check(mushroom_protocol_from_json(ex.protocol.dump().c_str(), ex.ensemble.e0, &run.proto.handle), "protocol");
    run.canonical = canonical_protocol(run.proto.handle);
    prepare_output(ex.out);
    run.status = mushroom_ensemble_run(run.proto.handle, &ex.ensemble, flags.quiet ? nullptr : progress_bar, nullptr,
                                       &run.ens.handle);
    run.message = mushroom_last_error();
    if (run.status != MUSHROOM_OK && run.status != MUSHROOM_ERR_QUALITY)
        check(run.status, "simulate");
    check(mushroom_ensemble_get_summary(run.ens.handle, &run.summary), "summary");
}

json summary_json(const mushroom_ensemble_summary& s)
{
    json j;
    j["m1_star"] = s.m1_star;
    j["sigma_n"] = s.sigma_n;
    j["p_nc_star"] = s.p_nc_star;
    j["p_nc_sigma"] = s.p_nc_sigma;
    j["completed"] = s.completed;
    j["aborted"] = s.aborted;
    j["aborted_fraction"] = s.aborted_fraction;
    j["captured"] = s.captured;
    j["mean_collisions"] = s.mean_collisions;
    j["period"] = s.period;
    return j;
}

void write_simulation_files(const Experiment& ex, const Flags& flags, const Run& run, const json& echo, json& doc)
{
    for (auto [kind, name] : {std::pair{MUSHROOM_HIST_LOG_ENERGY, "log_energy_histogram.csv"},
                              std::pair{MUSHROOM_HIST_CAPTURE_TIMES, "capture_time_histogram.csv"}}) {
        std::size_t n = 0;
        check(mushroom_ensemble_histogram(run.ens.handle, kind, nullptr, nullptr, &n), "histogram");
        std::vector<double> edges(n + 1);
        std::vector<double> density(n);
        check(mushroom_ensemble_histogram(run.ens.handle, kind, edges.data(), density.data(), &n), "histogram");
        write_histogram(ex.out / name, echo, edges, density);
    }

    std::size_t nt = 0;
    check(mushroom_ensemble_capture_times(run.ens.handle, nullptr, &nt), "capture times");
    std::vector<double> times(nt);
    check(mushroom_ensemble_capture_times(run.ens.handle, times.data(), &nt), "capture times");
    {
        auto f = open_out(ex.out / "capture_times.csv");
        f << "# config: " << echo.dump() << '\n' << "t_in\n";
        for (double t : times)
            f << t << '\n';
    }

    const std::size_t cycles = ex.ensemble.cycles;
    if (cycles > 1) {
        std::vector<std::size_t> ns = flags.normalized_at;
        ns.push_back(cycles);
        json multi = json::object();
        for (std::size_t n : ns) {
            if (n < 1 || n > cycles || multi.contains(std::to_string(n)))
                continue;
            std::vector<double> edges(ex.ensemble.bins + 1);
            std::vector<double> density(ex.ensemble.bins);
            mushroom_moments m{};
            check(mushroom_ensemble_normalized(run.ens.handle, n, ex.ensemble.bins, edges.data(), density.data(), &m),
                  "normalized histogram");
            write_histogram(ex.out / ("normalized_n" + std::to_string(n) + ".csv"), echo, edges, density);
            multi[std::to_string(n)] = {{"mean", m.mean}, {"variance", m.variance}, {"std_error", m.std_error},
                                        {"count", m.count}};
        }
        doc["normalized"] = multi;
    }

    if (flags.per_particle) {
        auto f = open_out(ex.out / "particles.csv");
        f << "# config: " << echo.dump() << '\n' << "index,ln_en_e0,t_in,t_out,aborted\n";
        for (std::size_t i = 0; i < ex.ensemble.particles; ++i) {
            mushroom_particle p{};
            check(mushroom_ensemble_particle(run.ens.handle, i, &p), "particle");
            f << p.index << ',' << p.log_ratio << ',' << p.t_in << ',' << p.t_out << ',' << p.aborted << '\n';
        }
    }
}

int cmd_simulate(const Flags& flags)
{
    const Experiment ex = resolve(flags);
    Run run;
    run_simulation(ex, flags, run);
    const json echo = config_echo("simulate", ex, run.canonical, true);
    json doc = summary_json(run.summary);
    write_simulation_files(ex, flags, run, echo, doc);
    doc["config"] = echo;
    doc["seed"] = ex.ensemble.seed;
    if (run.status == MUSHROOM_ERR_QUALITY)
        doc["error"] = run.message;
    write_json(ex.out / "summary.json", doc);
    std::cout << summary_json(run.summary).dump(2) << '\n';
    if (run.status == MUSHROOM_ERR_QUALITY)
        throw Failure(kExitQuality, run.message);
    return kExitOk;
}

// Below this many completed particles the comparisons are reported as
// inconclusive rather than judged.
constexpr std::size_t kMinConclusive = 30;
// Absolute floor for the m1 comparison; matters only when sigma_N is tiny
// (protocols that barely change the energy).
constexpr double kM1Floor = 1e-4;

json compare_m1(double theory, const mushroom_ensemble_summary& s)
{
    const double diff = s.m1_star - theory;
    const double tol = std::max(3.0 * s.sigma_n, kM1Floor);
    json j{{"theory", theory}, {"simulated", s.m1_star}, {"sigma_n", s.sigma_n}, {"difference", diff},
           {"tolerance", tol}};
    if (!std::isfinite(theory))
        j["status"] = "NOT_APPLICABLE";
    else if (s.completed < kMinConclusive)
        j["status"] = "INCONCLUSIVE";
    else
        j["status"] = std::abs(diff) <= tol ? "PASS" : "FAIL";
    return j;
}

json compare_p_nc(double theory, const mushroom_ensemble_summary& s)
{
    const double n = static_cast<double>(std::max<std::size_t>(s.completed, 1));
    const double sigma = std::sqrt(std::max(0.0, theory * (1.0 - theory)) / n);
    const double diff = s.p_nc_star - theory;
    const double tol = std::max(3.0 * sigma, 1e-12);
    json j{{"theory", theory}, {"simulated", s.p_nc_star}, {"binomial_sigma", sigma}, {"difference", diff},
           {"tolerance", tol}};
    if (!std::isfinite(theory))
        j["status"] = "NOT_APPLICABLE";
    else if (s.completed < kMinConclusive)
        j["status"] = "INCONCLUSIVE";
    else
        j["status"] = std::abs(diff) <= tol ? "PASS" : "FAIL";
    return j;
}

json compare_capture_times(const Run& run, Theory& th, const mushroom_prediction& pred, std::size_t bins)
{
    json j;
    if (pred.capture_intervals != 1) {
        j["status"] = run.summary.captured == 0 ? "NOT_APPLICABLE" : "FAIL";
        j["note"] = "protocol has no single capture interval";
        return j;
    }
    mushroom_chi_square cs{};
    const mushroom_status s = mushroom_ensemble_chi_square(run.ens.handle, th.handle, bins, &cs);
    if (s != MUSHROOM_OK) {
        j["status"] = "INCONCLUSIVE";
        j["note"] = mushroom_last_error();
        return j;
    }
    j = {{"statistic", cs.statistic}, {"dof", cs.dof},         {"p_value", cs.p_value},
         {"bins_used", cs.bins_used}, {"significance", 0.01}, {"min_bins", 20}};
    if (cs.bins_used < 20 || run.summary.completed < kMinConclusive)
        j["status"] = "INCONCLUSIVE";
    else
        j["status"] = cs.p_value >= 0.01 ? "PASS" : "FAIL";
    return j;
}

int cmd_compare(const Flags& flags)
{
    const Experiment ex = resolve(flags);
    if (ex.ensemble.cycles != 1)
        throw Failure(kExitConfig, "compare works on single-cycle runs (--cycles 1)");
    Run run;
    run_simulation(ex, flags, run);
    const json echo = config_echo("compare", ex, run.canonical, true);

    Theory th;
    const TheoryOutcome theory = evaluate_theory(th, run.proto.handle, ex.panels);

    json cmp;
    cmp["m1"] = compare_m1(theory.prediction.m1, run.summary);
    cmp["p_nc"] = compare_p_nc(theory.prediction.p_nc, run.summary);
    cmp["capture_times"] = compare_capture_times(run, th, theory.prediction, flags.chi_bins);

    std::string overall = "PASS";
    for (const auto& [name, c] : cmp.items()) {
        const std::string s = c["status"];
        if (s == "FAIL")
            overall = "FAIL";
        else if (s == "INCONCLUSIVE" && overall != "FAIL")
            overall = "INCONCLUSIVE";
    }

    json doc;
    doc["overall"] = overall;
    doc["comparisons"] = cmp;
    doc["theory"] = prediction_json(theory.prediction);
    doc["simulation"] = summary_json(run.summary);
    doc["config"] = echo;
    doc["seed"] = ex.ensemble.seed;
    write_json(ex.out / "report.json", doc);
    std::cout << json{{"overall", overall}, {"comparisons", cmp}}.dump(2) << '\n';
    if (run.status == MUSHROOM_ERR_QUALITY)
        throw Failure(kExitQuality, run.message);
    return kExitOk;
}

int cmd_volumes(double r, double w, double h, double tan_theta)
{
    const mushroom_shape shape{r, w, h, tan_theta};
    mushroom_volumes v{};
    check(mushroom_compute_volumes(&shape, &v), "invalid shape");
    json j{{"v_cap", v.v_cap}, {"v_stem", v.v_stem}, {"v_ell", v.v_ell},
           {"v_cha", v.v_cha}, {"delta", v.delta},   {"area", v.area}};
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

void add_protocol_flags(CLI::App* cmd, Flags& f)
{
    cmd->add_option("--config", f.config_file, "JSON experiment config; flags override its values");
    cmd->add_option("--protocol", f.protocol_file, "protocol JSON file");
    cmd->add_option("--preset", f.preset, "built-in protocol: sinusoidal, ergodic, rectangle, rectangle-clockwise");
    cmd->add_option("-o,--out", f.out, std::string("output directory (default: $") + kOutputEnv + " or .)");
    cmd->add_option("--panels", f.panels, "quadrature cells per capture interval");
}

void add_ensemble_flags(CLI::App* cmd, Flags& f)
{
    cmd->add_option("-N,--particles", f.particles, "number of particles");
    cmd->add_option("--e0", f.e0, "initial energy");
    cmd->add_option("-n,--cycles", f.cycles, "number of protocol cycles");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--bins", f.bins, "histogram bin count");
    cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    cmd->add_flag("-q,--quiet", f.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fermi acceleration in an oscillating mushroom billiard"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mushroom_version()));

    double r = 0.0;
    double w = 0.0;
    double h = 0.0;
    double tan_theta = 0.0;
    auto* vol = app.add_subcommand("volumes", "phase-space volumes of a frozen mushroom");
    vol->set_help_flag("--help", "print this help message and exit");  // -h is the stem length
    vol->add_option("--r", r, "cap radius")->required();
    vol->add_option("--w", w, "hole half-width")->required();
    vol->add_option("--h", h, "stem length")->required();
    vol->add_option("--tan-theta", tan_theta, "stem wall slope")->required();

    Flags flags;
    auto* theory = app.add_subcommand("theory", "adiabatic prediction for a protocol");
    add_protocol_flags(theory, flags);
    theory->add_option("--e0", flags.e0, "initial energy, only used to derive a missing rectangle period");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo ensemble");
    add_protocol_flags(simulate, flags);
    add_ensemble_flags(simulate, flags);
    simulate->add_option("--normalized-at", flags.normalized_at,
                         "extra cycle counts n for (1/n) ln(E_n/E0) histograms")
        ->delimiter(',');
    simulate->add_flag("--per-particle", flags.per_particle, "write particles.csv");

    auto* compare = app.add_subcommand("compare", "theory against a single-cycle ensemble");
    add_protocol_flags(compare, flags);
    add_ensemble_flags(compare, flags);
    compare->add_option("--chi-bins", flags.chi_bins, "capture-time bins before merging");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (vol->parsed())
            return cmd_volumes(r, w, h, tan_theta);
        if (theory->parsed())
            return cmd_theory(flags);
        if (simulate->parsed())
            return cmd_simulate(flags);
        if (compare->parsed())
            return cmd_compare(flags);
    } catch (const Failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}
