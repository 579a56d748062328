// Pulse-sequence validation, scenario configuration, scenario runs and
// parameter sweeps.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "afc/comb_model.hpp"
#include "afc/csv.hpp"
#include "afc/errors.hpp"
#include "afc/json_io.hpp"
#include "afc/propagation.hpp"
#include "afc/signal.hpp"
#include "afc/spinwave.hpp"

namespace afc {

// ---------------------------------------------------------------------------
// Sequence timing

/// Input pulse, two control pulses and the comb period, in absolute times.
struct SequencePlan {
    double input_fwhm = 0.0;
    double input_time = 0.0;
    double control1_time = 0.0;
    double control2_time = 0.0;
    ControlPulseSpec control;
    double delta = 0.0;

    double storage_time() const noexcept { return control2_time - control1_time; }
    /// Three-level echo time: input + 1/Δ + T_s.
    double echo_time() const noexcept { return input_time + 1.0 / delta + storage_time(); }
};

enum class Severity { error, warning };

inline const char* to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

struct Diagnostic {
    Severity severity;
    std::string field;
    std::string message;

    std::string str() const { return std::string(to_string(severity)) + ": " + field + ": " + message; }
    bool operator==(const Diagnostic&) const = default;
};

/// Longest input FWHM that still fits beside one control pulse inside 1/Δ
/// (input counted as 1×FWHM).
inline double max_input_fwhm(const SequencePlan& plan) {
    return 1.0 / plan.delta - plan.control.equivalent_square_duration();
}

/// Checks the timing constraints of a storage sequence.
///
/// Empty iff the input (counted as 2×FWHM) plus one control pulse fits in 1/Δ
/// and the input spectrum is within the control bandwidth 2 f_R. Between 1×
/// and 2×FWHM the overrun is a warning; beyond it is an error. Results are
/// ordered errors first, then by field name.
inline std::vector<Diagnostic> validate_sequence(const SequencePlan& plan) {
    std::vector<Diagnostic> out;
    auto add = [&](Severity s, std::string field, std::string msg) {
        out.push_back({s, std::move(field), std::move(msg)});
    };
    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };

    const double values[] = {plan.input_fwhm, plan.input_time, plan.control1_time, plan.control2_time,
                             plan.control.rabi_freq, plan.control.duration, plan.delta};
    if (!std::all_of(std::begin(values), std::end(values), [](double v) { return std::isfinite(v); })) {
        add(Severity::error, "sequence", "non-finite timing value");
        return out;
    }
    bool timing_ok = true;
    if (!(plan.delta > 0.0)) {
        add(Severity::error, "comb.delta", "tooth spacing must be > 0");
        timing_ok = false;
    }
    if (!(plan.input_fwhm > 0.0)) {
        add(Severity::error, "sequence.input_fwhm", "input FWHM must be > 0");
        timing_ok = false;
    }
    if (!(plan.control.duration > 0.0)) {
        add(Severity::error, "control.duration", "zero-area control pulse (duration <= 0)");
        timing_ok = false;
    }
    if (!(plan.control.rabi_freq > 0.0)) {
        add(Severity::error, "control.rabi_freq", "zero-area control pulse (rabi_freq <= 0)");
        timing_ok = false;
    }
    if (!(plan.control1_time > plan.input_time))
        add(Severity::error, "sequence.control1_time", "first control pulse must follow the input");
    if (plan.control2_time < plan.control1_time)
        add(Severity::error, "sequence.control2_time", "second control pulse precedes the first");

    if (timing_ok) {
        const double period = 1.0 / plan.delta;
        const double c = plan.control.equivalent_square_duration();
        if (plan.control1_time >= plan.input_time + period)
            add(Severity::error, "sequence.control1_time",
                "first control pulse comes after the two-level echo at input_time + 1/delta");
        if (2.0 * plan.input_fwhm + c > period) {
            const auto sev = plan.input_fwhm + c <= period ? Severity::warning : Severity::error;
            add(sev, "sequence.input_fwhm",
                "input (" + fmt(2.0 * plan.input_fwhm) + " s at 2xFWHM) plus control (" + fmt(c) +
                    " s) exceeds 1/delta = " + fmt(period) + " s");
        }
        const double input_bw = 2.0 * std::numbers::ln2 / (std::numbers::pi * plan.input_fwhm);
        const double control_bw = 2.0 * plan.control.rabi_freq;
        if (input_bw > control_bw)
            add(Severity::warning, "control.rabi_freq",
                "input spectral FWHM " + fmt(input_bw) + " Hz exceeds control bandwidth 2*f_R = " +
                    fmt(control_bw) + " Hz");
    }

    std::stable_sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
        if (a.severity != b.severity) return a.severity == Severity::error;
        return a.field < b.field;
    });
    return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::error; });
}

// ---------------------------------------------------------------------------
// Configuration

/// Times of the sequence section (seconds).
struct SequenceTimes {
    double input_fwhm = 0.0;
    double input_time = 0.0;
    double control1_time = 0.0;
    double control2_time = 0.0;
};

/// One scenario document: comb, medium, control, spin, sequence, grid and
/// storage sections.
struct ScenarioConfig {
    CombSpec comb;
    std::optional<MediumSpec> medium;
    ControlPulseSpec control;
    SpinParams spin;
    SequenceTimes sequence;
    SimGrid grid{65536, 50e-6};
    double mode_overlap = 1.0;
    std::optional<double> transfer_efficiency;  ///< measured η_T, overrides the model

    SequencePlan plan() const {
        return {sequence.input_fwhm, sequence.input_time, sequence.control1_time, sequence.control2_time,
                control, comb.delta()};
    }
    StorageScenario scenario() const {
        return {comb, sequence.input_fwhm, control, std::max(plan().storage_time(), 0.0), spin, mode_overlap};
    }
};

inline ScenarioConfig config_from_json(const json& doc) {
    json_io::ObjectReader root(doc, "");
    auto comb = json_io::comb_from_json(root.object("comb"), "comb");
    std::optional<MediumSpec> medium;
    if (root.has("medium")) medium = json_io::medium_from_json(root.object("medium"), "medium");
    auto control = json_io::control_from_json(root.object("control"), "control");
    auto spin = json_io::spin_from_json(root.object("spin"), "spin");

    json_io::ObjectReader seq(root.object("sequence"), "sequence");
    SequenceTimes times;
    times.input_fwhm = seq.number("input_fwhm");
    times.input_time = seq.number_or("input_time", 0.0);
    times.control1_time = seq.number("control1_time");
    times.control2_time = seq.number("control2_time");
    seq.finish();
    if (!(times.input_fwhm > 0.0)) throw ConfigError("sequence.input_fwhm", "must be > 0");

    SimGrid grid{65536, 50e-6};
    if (root.has("grid")) grid = json_io::grid_from_json(root.object("grid"), "grid");

    double overlap = 1.0;
    std::optional<double> transfer;
    if (root.has("storage")) {
        json_io::ObjectReader st(root.object("storage"), "storage");
        overlap = st.number_or("mode_overlap", 1.0);
        transfer = st.optional_number("transfer_efficiency");
        st.finish();
        if (!(overlap > 0.0 && overlap <= 1.0)) throw ConfigError("storage.mode_overlap", "must lie in (0,1]");
        if (transfer && !(*transfer >= 0.0 && *transfer <= 1.0))
            throw ConfigError("storage.transfer_efficiency", "must lie in [0,1]");
    }
    root.finish();
    return {comb, medium, control, spin, times, grid, overlap, transfer};
}

/// Parses a config document, reporting JSON syntax errors with their line.
inline ScenarioConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("JSON syntax error: ") + e.what());
    }
    return config_from_json(doc);
}

inline json config_to_json(const ScenarioConfig& c) {
    json j{{"comb", c.comb},
           {"control", c.control},
           {"spin", c.spin},
           {"sequence",
            {{"input_fwhm", c.sequence.input_fwhm},
             {"input_time", c.sequence.input_time},
             {"control1_time", c.sequence.control1_time},
             {"control2_time", c.sequence.control2_time}}},
           {"grid", c.grid},
           {"storage", {{"mode_overlap", c.mode_overlap}}}};
    if (c.medium) j["medium"] = *c.medium;
    if (c.transfer_efficiency) j["storage"]["transfer_efficiency"] = *c.transfer_efficiency;
    return j;
}

/// 64-bit FNV-1a of the canonical (key-sorted, compact) config dump, as hex.
inline std::string config_digest(const ScenarioConfig& c) {
    const std::string text = config_to_json(c).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Scenario runs

struct ScenarioReport {
    double finesse = 0.0;
    double two_level_efficiency = 0.0;  ///< from the propagation model
    double two_level_analytic = 0.0;    ///< closed form
    double transfer_efficiency = 0.0;
    std::string transfer_source;        ///< "model" or "measured"
    double spin_decay = 0.0;
    std::optional<double> three_level_efficiency;
    std::optional<double> three_level_analytic;
    double echo_time = 0.0;             ///< input_time + 1/Δ + T_s
    double two_level_echo_time = 0.0;   ///< input_time + 1/Δ
    double echo_peak_time = 0.0;        ///< simulated two-level echo peak, sequence clock
    double storage_time = 0.0;
    double total_memory_time = 0.0;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::string config_digest;
    std::optional<std::uint64_t> seed;
    std::string timestamp;  ///< left empty by the library

    bool valid() const noexcept { return errors.empty(); }
};

struct ScenarioRun {
    ScenarioReport report;
    TimeTrace input;      ///< also the vacuum reference
    TimeTrace output;
    double sim_input_time;  ///< input centre on the simulation grid
};

/// Builds the comb, propagates the input for the numerical two-level echo,
/// evaluates the closed form and composes the three-level efficiency.
///
/// Sequence violations are recorded in the report rather than thrown; the
/// three-level fields stay empty when T_s < 0.
inline ScenarioRun run_scenario(const ScenarioConfig& cfg) {
    ScenarioReport rep;
    const auto plan = cfg.plan();
    for (const auto& d : validate_sequence(plan))
        (d.severity == Severity::error ? rep.errors : rep.warnings).push_back(d.field + ": " + d.message);

    const auto& comb = cfg.comb;
    const auto& grid = cfg.grid;
    const double period = comb.echo_delay();
    const double window = default_echo_window(comb);
    const double fwhm = cfg.sequence.input_fwhm;
    const double t0 = grid.time_at(grid.index_of_time(5.0 * fwhm));
    if (t0 + period + window > grid.time_span())
        throw GridCoverageError("run_scenario: grid time span too short for input placement and echo");

    auto input = gaussian_pulse(grid, t0, fwhm);
    std::vector<std::string> prop_warnings;
    auto output = propagate(input, comb, &prop_warnings);
    for (auto& w : prop_warnings) rep.warnings.push_back("propagation: " + w);

    rep.finesse = comb.finesse();
    rep.two_level_efficiency = std::clamp(echo_efficiency(output, input, t0 + period, window), 0.0, 1.0);
    rep.two_level_analytic = afc_efficiency(comb);
    rep.echo_peak_time = find_peak_time(output, t0 + 0.5 * period, t0 + 1.5 * period) - t0 +
                         cfg.sequence.input_time;
    rep.two_level_echo_time = cfg.sequence.input_time + period;
    rep.storage_time = plan.storage_time();
    rep.echo_time = plan.echo_time();
    rep.total_memory_time = rep.storage_time + period;

    if (cfg.transfer_efficiency) {
        rep.transfer_efficiency = *cfg.transfer_efficiency;
        rep.transfer_source = "measured";
    } else {
        rep.transfer_efficiency = effective_transfer_efficiency(fwhm, cfg.control);
        rep.transfer_source = "model";
    }
    if (rep.storage_time >= 0.0) {
        const auto scenario = cfg.scenario();
        rep.spin_decay = spin_decay_factor(rep.storage_time, cfg.spin);
        rep.three_level_efficiency =
            three_level_efficiency(scenario, rep.two_level_efficiency, rep.transfer_efficiency);
        rep.three_level_analytic =
            three_level_efficiency(scenario, rep.two_level_analytic, rep.transfer_efficiency);
    }
    rep.config_digest = config_digest(cfg);
    return {std::move(rep), std::move(input), std::move(output), t0};
}

inline json report_to_json(const ScenarioReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json prov{{"config_digest", r.config_digest}};
    if (r.seed) prov["seed"] = *r.seed;
    json j{{"finesse", r.finesse},
           {"two_level_efficiency", r.two_level_efficiency},
           {"two_level_analytic", r.two_level_analytic},
           {"transfer_efficiency", r.transfer_efficiency},
           {"transfer_source", r.transfer_source},
           {"spin_decay", r.spin_decay},
           {"three_level_efficiency", opt(r.three_level_efficiency)},
           {"three_level_analytic", opt(r.three_level_analytic)},
           {"echo_time", r.echo_time},
           {"two_level_echo_time", r.two_level_echo_time},
           {"echo_peak_time", r.echo_peak_time},
           {"storage_time", r.storage_time},
           {"total_memory_time", r.total_memory_time},
           {"valid", r.valid()},
           {"errors", r.errors},
           {"warnings", r.warnings},
           {"provenance", prov}};
    if (!r.timestamp.empty()) j["timestamp"] = r.timestamp;
    return j;
}

// ---------------------------------------------------------------------------
// Sweeps

/// Copy of `doc` with the numeric field at dotted `path` set to `value`.
/// Integer fields accept only integral values.
inline json set_path(json doc, const std::string& path, double value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty() || !node->is_object() || !node->contains(key))
            throw UnknownPathError("unknown parameter path '" + path + "'");
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (node->is_number_integer()) {
        if (value != std::floor(value))
            throw UnknownPathError("parameter '" + path + "' is an integer field");
        *node = static_cast<long long>(value);
    } else if (node->is_number()) {
        *node = value;
    } else {
        throw UnknownPathError("parameter path '" + path + "' is not numeric");
    }
    return doc;
}

struct SweepRow {
    double value;
    std::optional<ScenarioReport> report;
    std::string error;  ///< set when the point could not be run
};

/// Runs one scenario per value of the parameter at `path`. Points execute
/// concurrently; rows come back in input order and match independent
/// run_scenario calls exactly.
inline std::vector<SweepRow> sweep(const json& doc, const std::string& path, std::span<const double> values,
                                   unsigned threads = 0) {
    // Resolve the path once up front so a typo fails before any work.
    if (!values.empty()) (void)set_path(doc, path, values.front());
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            rows[i].value = values[i];
            try {
                rows[i].report = run_scenario(config_from_json(set_path(doc, path, values[i]))).report;
            } catch (const Error& e) {
                rows[i].error = e.what();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(values.size(), 1)));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return rows;
}

inline const char* kSweepCsvHeader =
    "value,finesse,two_level_efficiency,two_level_analytic,transfer_efficiency,spin_decay,"
    "three_level_efficiency,three_level_analytic,echo_time,total_memory_time,valid,error";

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    using csv::format_number;
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    out << kSweepCsvHeader << '\n';
    for (const auto& row : rows) {
        out << format_number(row.value) << ',';
        if (row.report) {
            const auto& r = *row.report;
            out << format_number(r.finesse) << ',' << format_number(r.two_level_efficiency) << ','
                << format_number(r.two_level_analytic) << ',' << format_number(r.transfer_efficiency) << ','
                << format_number(r.spin_decay) << ',' << opt(r.three_level_efficiency) << ','
                << opt(r.three_level_analytic) << ',' << format_number(r.echo_time) << ','
                << format_number(r.total_memory_time) << ',' << (r.valid() ? "true" : "false") << ',';
            std::string err;
            for (const auto& e : r.errors) err += (err.empty() ? "" : "; ") + e;
            std::replace(err.begin(), err.end(), ',', ';');
            out << err << '\n';
        } else {
            std::string err = row.error;
            std::replace(err.begin(), err.end(), ',', ';');
            out << ",,,,,,,,,false," << err << '\n';
        }
    }
}

inline json sweep_to_json(const std::string& path, const std::vector<SweepRow>& rows) {
    json arr = json::array();
    for (const auto& row : rows) {
        json j{{"value", row.value}};
        if (row.report) j["report"] = report_to_json(*row.report);
        else j["error"] = row.error;
        arr.push_back(std::move(j));
    }
    return json{{"parameter", path}, {"rows", arr}};
}

}  // namespace afc
