// afcmem: command-line front end for the AFC memory simulator.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid input or sequence
// validation errors, 3 fit did not converge.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afc/afc.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNoConvergence = 3;

struct Globals {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string format = "json";
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw afc::ConfigError("", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw afc::CsvError("cannot open '" + path + "'");
    return in;
}

std::ofstream open_output(const Globals& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    const auto path = fs::path(g.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw afc::Error("cannot write '" + path.string() + "'");
    return out;
}

afc::json load_config_doc(const Globals& g) {
    if (g.config.empty()) throw afc::ConfigError("", "--config is required");
    try {
        return afc::json::parse(read_file(g.config));
    } catch (const afc::json::parse_error& e) {
        throw afc::ConfigError("", std::string("JSON syntax error: ") + e.what());
    }
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void print_fit(const Globals& g, const afc::FitResult& fit, std::ostream& out) {
    if (g.format == "csv") {
        out << "name,value,sigma\n";
        for (const auto& [k, v] : fit.params)
            out << k << ',' << afc::csv::format_number(v) << ',' << afc::csv::format_number(fit.sigmas.at(k)) << '\n';
        out << "residual_norm," << afc::csv::format_number(fit.residual_norm) << ",\n";
        out << "converged," << (fit.converged ? 1 : 0) << ",\n";
        out << "n_iter," << fit.n_iter << ",\n";
    } else {
        out << afc::json(fit).dump(2) << '\n';
    }
}

int finish_fit(const Globals& g, const afc::FitResult& fit, const std::string& name) {
    print_fit(g, fit, std::cout);
    auto file = open_output(g, name + (g.format == "csv" ? ".csv" : ".json"));
    print_fit(g, fit, file);
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
    if (!fit.converged) {
        std::cerr << "fit did not converge after " << fit.n_iter << " iterations\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

int cmd_simulate(const Globals& g, double noise) {
    const auto cfg = afc::config_from_json(load_config_doc(g));
    auto run = afc::run_scenario(cfg);
    run.report.seed = g.seed;
    run.report.timestamp = utc_timestamp();
    if (noise > 0.0) {
        std::mt19937_64 rng(g.seed.value_or(0));
        std::normal_distribution<double> n01(0.0, noise);
        for (auto& s : run.output.samples) s += afc::cplx(n01(rng), n01(rng));
    }
    {
        auto f = open_output(g, "input.csv");
        afc::csv::write_trace(f, run.input);
    }
    {
        auto f = open_output(g, "output.csv");
        afc::csv::write_trace(f, run.output);
    }
    const auto report = afc::report_to_json(run.report).dump(2);
    {
        auto f = open_output(g, "report.json");
        f << report << '\n';
    }
    std::cout << report << '\n';
    for (const auto& w : run.report.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& e : run.report.errors) std::cerr << "error: " << e << '\n';
    return run.report.valid() ? kExitOk : kExitInvalid;
}

int cmd_sweep(const Globals& g, const std::string& param, const std::vector<double>& values, unsigned threads) {
    const auto doc = load_config_doc(g);
    const auto rows = afc::sweep(doc, param, values, threads);
    std::ostringstream text;
    if (g.format == "csv") afc::write_sweep_csv(text, rows);
    else text << afc::sweep_to_json(param, rows).dump(2) << '\n';
    auto f = open_output(g, g.format == "csv" ? "sweep.csv" : "sweep.json");
    f << text.str();
    std::cout << text.str();
    return kExitOk;
}

int cmd_validate(const Globals& g) {
    const auto cfg = afc::config_from_json(load_config_doc(g));
    const auto diags = afc::validate_sequence(cfg.plan());
    if (g.format == "csv") {
        std::cout << "severity,field,message\n";
        for (const auto& d : diags) std::cout << afc::to_string(d.severity) << ',' << d.field << ",\"" << d.message << "\"\n";
    } else {
        afc::json arr = afc::json::array();
        for (const auto& d : diags)
            arr.push_back({{"severity", afc::to_string(d.severity)}, {"field", d.field}, {"message", d.message}});
        std::cout << afc::json{{"valid", !afc::has_errors(diags)},
                               {"max_input_fwhm", afc::max_input_fwhm(cfg.plan())},
                               {"diagnostics", arr}}
                         .dump(2)
                  << '\n';
    }
    return afc::has_errors(diags) ? kExitInvalid : kExitOk;
}

int cmd_optimize_finesse(const Globals& g, std::optional<double> d, std::optional<double> d0) {
    std::optional<afc::CombSpec> comb;
    if (!g.config.empty()) comb = afc::config_from_json(load_config_doc(g)).comb;
    const double depth = d ? *d : (comb ? comb->d() : throw afc::ConfigError("d", "give --d or --config"));
    const double background = d0 ? *d0 : (comb ? comb->d0() : 0.0);
    const double f_opt = afc::optimal_finesse(depth);
    afc::json j{{"d", depth},
                {"d0", background},
                {"optimal_finesse", f_opt},
                {"efficiency_at_optimum", afc::afc_efficiency(depth, f_opt, background)}};
    if (comb) {
        j["delta"] = comb->delta();
        j["optimal_gamma_fwhm"] = comb->delta() / f_opt;
        j["current_finesse"] = comb->finesse();
        j["current_efficiency"] = afc::afc_efficiency(*comb);
    }
    if (g.format == "csv") {
        std::cout << "name,value\n";
        for (const auto& [k, v] : j.items()) std::cout << k << ',' << afc::csv::format_number(v.get<double>()) << '\n';
    } else {
        std::cout << j.dump(2) << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atomic-frequency-comb quantum memory simulator and fitter"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config, "Scenario config (JSON)");
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (recorded in provenance)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    double noise = 0.0;
    auto* sim = app.add_subcommand("simulate",
                                   "Run one scenario. Writes report.json and the traces input.csv, "
                                   "output.csv (columns t_or_nu,re,im; seconds, field units)");
    sim->add_option("--noise", noise, "Std of additive white noise on the written output trace");

    std::string param;
    std::vector<double> values;
    unsigned threads = 0;
    auto* sw = app.add_subcommand("sweep",
                                  "Sweep one numeric config field. CSV columns: " + std::string(afc::kSweepCsvHeader));
    sw->add_option("--param", param, "Dotted config path, e.g. comb.delta")->required();
    sw->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
    sw->add_option("--threads", threads, "Worker threads (0 = all cores)");

    std::string input;
    double delta_hint = 0.0;
    afc::CombFitOptions comb_opts;
    auto* fc = app.add_subcommand("fit-comb",
                                  "Fit a Gaussian comb to an absorption scan (CSV x,y: Hz, optical depth)");
    fc->add_option("--input", input, "Trace CSV")->required();
    fc->add_option("--delta-hint", delta_hint, "Approximate tooth spacing, Hz")->required();
    fc->add_option("--n-teeth", comb_opts.n_teeth, "Fixed tooth count (0 = periodic)");
    fc->add_option("--instrument-fwhm", comb_opts.instrument_fwhm, "Gaussian instrument kernel FWHM, Hz");

    bool nonlinear = false;
    auto* fd = app.add_subcommand("fit-decay",
                                  "Fit the spin linewidth to an echo-decay series (CSV ts_seconds,height)");
    fd->add_option("--input", input, "Decay series CSV")->required();
    fd->add_flag("--nonlinear", nonlinear, "Fit in the linear domain instead of log domain");

    auto* fp = app.add_subcommand("fit-peak", "Fit a Gaussian to an echo intensity trace (CSV x,y)");
    fp->add_option("--input", input, "Trace CSV")->required();

    auto* val = app.add_subcommand("validate", "Check the pulse-sequence timing of a config");

    std::optional<double> opt_d, opt_d0;
    auto* of = app.add_subcommand("optimize-finesse", "Finesse maximising the two-level echo efficiency");
    of->add_option("--d", opt_d, "Peak optical depth");
    of->add_option("--d0", opt_d0, "Background optical depth");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) g.seed = seed;

    try {
        if (*sim) return cmd_simulate(g, noise);
        if (*sw) return cmd_sweep(g, param, values, threads);
        if (*fc) {
            auto in = open_input(input);
            const auto xy = afc::csv::read_xy(in);
            return finish_fit(g, afc::fit_comb(xy.x, xy.y, delta_hint, comb_opts), "fit_comb");
        }
        if (*fd) {
            auto in = open_input(input);
            const auto series = afc::csv::read_decay_series(in);
            return finish_fit(g, nonlinear ? afc::fit_spin_linewidth_nonlinear(series) : afc::fit_spin_linewidth(series),
                              "fit_decay");
        }
        if (*fp) {
            auto in = open_input(input);
            const auto xy = afc::csv::read_xy(in);
            return finish_fit(g, afc::fit_gaussian_peak(xy.x, xy.y), "fit_peak");
        }
        if (*val) return cmd_validate(g);
        if (*of) return cmd_optimize_finesse(g, opt_d, opt_d0);
    } catch (const afc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const afc::CsvError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const afc::UnknownPathError& e) {
        std::cerr << "sweep error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const afc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
