// JSON encoding of the domain types. Decoding is strict: every field is
// type-checked and unknown keys are rejected with the offending path.
#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "afc/comb_model.hpp"
#include "afc/errors.hpp"
#include "afc/estimation.hpp"
#include "afc/signal.hpp"
#include "afc/spinwave.hpp"

namespace afc {

using json = nlohmann::json;

namespace json_io {

/// Walks one JSON object, remembering which keys were consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key) {
        const auto& v = get(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
        return x;
    }
    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
    std::optional<double> optional_number(const std::string& key) {
        if (!has(key) || j_.at(key).is_null()) {
            seen_.insert(key);
            return std::nullopt;
        }
        return number(key);
    }
    long long integer(const std::string& key) {
        const auto& v = get(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v.get<long long>();
    }
    long long integer_or(const std::string& key, long long fallback) {
        return has(key) ? integer(key) : fallback;
    }
    std::string string_or(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const auto& v = get(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }
    const json& object(const std::string& key) {
        const auto& v = get(key);
        if (!v.is_object()) throw ConfigError(field(key), "expected an object");
        return v;
    }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    /// Throws on the first key that was never read.
    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) throw ConfigError(field(k), "unknown key");
    }

private:
    const json& get(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(field(key), "missing required field");
        seen_.insert(key);
        return j_.at(key);
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Runs `build`, rewrapping domain errors as ConfigError at `path`.
template <class F>
auto with_path(const std::string& path, F&& build) {
    try {
        return build();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

inline CombSpec comb_from_json(const json& j, const std::string& path = "comb") {
    ObjectReader r(j, path);
    const double d = r.number("d");
    const double d0 = r.number("d0");
    const double delta = r.number("delta");
    const double gamma = r.number("gamma_fwhm");
    const auto n_teeth = r.integer("n_teeth");
    const double center = r.number_or("center_freq", 0.0);
    r.finish();
    return with_path(path, [&] { return CombSpec(d, d0, delta, gamma, static_cast<int>(n_teeth), center); });
}

inline MediumSpec medium_from_json(const json& j, const std::string& path = "medium") {
    ObjectReader r(j, path);
    MediumSpec m;
    m.alpha = r.number("alpha");
    m.length = r.number("length");
    m.inhom_broadening = r.number_or("inhom_broadening", 0.0);
    m.metadata = r.string_or("metadata", "");
    r.finish();
    with_path(path, [&] {
        m.validate();
        return 0;
    });
    return m;
}

inline ControlPulseSpec control_from_json(const json& j, const std::string& path = "control") {
    ObjectReader r(j, path);
    ControlPulseSpec c;
    c.rabi_freq = r.number("rabi_freq");
    c.duration = r.number("duration");
    const auto shape = r.string_or("shape", "square");
    r.finish();
    c.shape = with_path(r.field("shape"), [&] { return pulse_shape_from_string(shape); });
    return c;
}

inline SpinParams spin_from_json(const json& j, const std::string& path = "spin") {
    ObjectReader r(j, path);
    SpinParams s;
    s.gamma_is = r.number("gamma_is");
    s.t2_spin = r.number_or("t2_spin", 0.0);
    r.finish();
    with_path(path, [&] {
        s.validate();
        return 0;
    });
    return s;
}

inline SimGrid grid_from_json(const json& j, const std::string& path = "grid") {
    ObjectReader r(j, path);
    const auto n = r.integer_or("n_samples", 65536);
    const double span = r.number_or("time_span", 50e-6);
    r.finish();
    if (n < 2) throw ConfigError(r.field("n_samples"), "must be a power of two >= 2");
    return with_path(path, [&] { return SimGrid(static_cast<std::size_t>(n), span); });
}

inline StorageScenario scenario_from_json(const json& j, const std::string& path = "") {
    ObjectReader r(j, path);
    auto comb = comb_from_json(r.object("comb"), r.field("comb"));
    const double input_fwhm = r.number("input_fwhm");
    auto control = control_from_json(r.object("control"), r.field("control"));
    const double ts = r.number("ts");
    auto spin = spin_from_json(r.object("spin"), r.field("spin"));
    const double overlap = r.number_or("mode_overlap", 1.0);
    r.finish();
    if (!(input_fwhm > 0.0)) throw ConfigError(r.field("input_fwhm"), "must be > 0");
    if (!(ts >= 0.0)) throw ConfigError(r.field("ts"), "must be >= 0");
    if (!(overlap > 0.0 && overlap <= 1.0)) throw ConfigError(r.field("mode_overlap"), "must lie in (0,1]");
    return StorageScenario{comb, input_fwhm, control, ts, spin, overlap};
}

}  // namespace json_io

inline void to_json(json& j, const CombSpec& c) {
    j = json{{"d", c.d()},
             {"d0", c.d0()},
             {"delta", c.delta()},
             {"gamma_fwhm", c.gamma_fwhm()},
             {"n_teeth", c.n_teeth()},
             {"center_freq", c.center_freq()}};
}

inline void to_json(json& j, const MediumSpec& m) {
    j = json{{"alpha", m.alpha},
             {"length", m.length},
             {"inhom_broadening", m.inhom_broadening},
             {"metadata", m.metadata}};
}

inline void to_json(json& j, const ControlPulseSpec& c) {
    j = json{{"rabi_freq", c.rabi_freq}, {"duration", c.duration}, {"shape", to_string(c.shape)}};
}

inline void to_json(json& j, const SpinParams& s) {
    j = json{{"gamma_is", s.gamma_is}, {"t2_spin", s.t2_spin}};
}

inline void to_json(json& j, const SimGrid& g) {
    j = json{{"n_samples", g.n_samples()}, {"time_span", g.time_span()}};
}

inline void to_json(json& j, const StorageScenario& s) {
    j = json{{"comb", s.comb},  {"input_fwhm", s.input_fwhm}, {"control", s.control},
             {"ts", s.ts},      {"spin", s.spin},             {"mode_overlap", s.mode_overlap}};
}

inline void to_json(json& j, const FitResult& f) {
    j = json{{"params", f.params},
             {"sigmas", f.sigmas},
             {"residual_norm", f.residual_norm},
             {"converged", f.converged},
             {"n_iter", f.n_iter},
             {"warnings", f.warnings}};
}

}  // namespace afc
