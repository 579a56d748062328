// Three-level storage: control-pulse transfer, spin dephasing, and the
// composed memory efficiency.
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "afc/comb_model.hpp"
#include "afc/errors.hpp"

namespace afc {

enum class PulseShape { square, gaussian };

inline std::string to_string(PulseShape s) { return s == PulseShape::square ? "square" : "gaussian"; }

inline PulseShape pulse_shape_from_string(const std::string& s) {
    if (s == "square") return PulseShape::square;
    if (s == "gaussian") return PulseShape::gaussian;
    throw InvalidArgument("unknown pulse shape '" + s + "'");
}

/// Control pulse on the |e> -> |s> transition.
///
/// `rabi_freq` is the ordinary frequency f_R (Ω = 2π f_R). For a gaussian
/// shape `duration` is the field FWHM; it is treated as the square pulse of
/// equal peak Rabi frequency and equal area.
struct ControlPulseSpec {
    double rabi_freq = 0.0;
    double duration = 0.0;
    PulseShape shape = PulseShape::square;

    /// Length of the square pulse with the same area and peak Rabi frequency.
    double equivalent_square_duration() const noexcept {
        if (shape == PulseShape::square) return duration;
        return duration * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
    }
    /// Pulse area in radians.
    double area() const noexcept {
        return 2.0 * std::numbers::pi * rabi_freq * equivalent_square_duration();
    }
    /// Square-pulse duration giving a resonant π rotation at this Rabi frequency.
    static double pi_pulse_duration(double rabi_freq) {
        if (!(rabi_freq > 0.0)) throw InvalidArgument("pi_pulse_duration: rabi_freq must be > 0");
        return 0.5 / rabi_freq;
    }
};

struct SpinParams {
    double gamma_is = 0.0;  ///< inhomogeneous spin linewidth FWHM, Hz
    double t2_spin = 0.0;   ///< spin coherence time, s (informational)

    void validate() const {
        if (!(gamma_is > 0.0) || !std::isfinite(gamma_is))
            throw InvalidArgument("spin: gamma_is must be > 0");
        if (!(t2_spin >= 0.0)) throw InvalidArgument("spin: t2_spin must be >= 0");
    }
};

/// Full spin-wave storage protocol.
struct StorageScenario {
    CombSpec comb;
    double input_fwhm;
    ControlPulseSpec control;
    double ts;  ///< spin storage time between the control pulses
    SpinParams spin;
    double mode_overlap = 1.0;

    /// T_s + 1/Δ.
    double total_memory_time() const noexcept { return ts + comb.echo_delay(); }
};

/// Square-pulse Rabi transfer probability at a detuning (Hz):
/// Ω²/(Ω²+δ²) sin²(√(Ω²+δ²) τ/2).
inline double rabi_transfer_probability(const ControlPulseSpec& control, double detuning) {
    const double omega = 2.0 * std::numbers::pi * control.rabi_freq;
    const double delta = 2.0 * std::numbers::pi * detuning;
    const double w2 = omega * omega + delta * delta;
    if (w2 == 0.0) return 0.0;
    const double s = std::sin(0.5 * std::sqrt(w2) * control.equivalent_square_duration());
    return omega * omega / w2 * s * s;
}

/// Transfer probability averaged over the power spectrum of a transform-limited
/// Gaussian input of intensity FWHM `input_fwhm`, integrated over ±5 spectral
/// FWHM with composite Simpson.
inline double effective_transfer_efficiency(double input_fwhm, const ControlPulseSpec& control) {
    if (!(input_fwhm > 0.0) || !std::isfinite(input_fwhm))
        throw InvalidArgument("effective_transfer_efficiency: input_fwhm must be > 0");
    // Time-bandwidth product of a Gaussian intensity profile: 2 ln2 / π.
    const double spectral_fwhm = 2.0 * std::numbers::ln2 / (std::numbers::pi * input_fwhm);
    const double a = 4.0 * std::numbers::ln2 / (spectral_fwhm * spectral_fwhm);
    constexpr int intervals = 8192;  // even
    const double half_range = 5.0 * spectral_fwhm;
    const double h = 2.0 * half_range / intervals;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double x = -half_range + i * h;
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double s = std::exp(-a * x * x);
        num += w * s * rabi_transfer_probability(control, x);
        den += w * s;
    }
    return num / den;
}

/// Gaussian spin-dephasing factor exp(-T_s² γ_IS² π² / (2 ln 2)).
inline double spin_decay_factor(double ts, const SpinParams& spin) {
    if (!(ts >= 0.0) || !std::isfinite(ts)) throw InvalidArgument("spin_decay_factor: ts must be >= 0");
    spin.validate();
    const double x = ts * spin.gamma_is * std::numbers::pi;
    return std::exp(-x * x / (2.0 * std::numbers::ln2));
}

/// Storage time at which the spin decay factor reaches one half.
inline double spin_half_time(const SpinParams& spin) {
    spin.validate();
    return std::sqrt(2.0) * std::numbers::ln2 / (std::numbers::pi * spin.gamma_is);
}

/// η₃ = η₂ · η_T² · decay(T_s) · overlap. Both control pulses are identical so
/// the transfer enters squared. `measured_transfer` overrides the model η_T.
inline double three_level_efficiency(const StorageScenario& scenario, double eta_two_level,
                                     std::optional<double> measured_transfer = std::nullopt) {
    if (!(eta_two_level >= 0.0 && eta_two_level <= 1.0))
        throw InvalidArgument("three_level_efficiency: eta_two_level must lie in [0,1]");
    if (!(scenario.mode_overlap > 0.0 && scenario.mode_overlap <= 1.0))
        throw InvalidArgument("three_level_efficiency: mode_overlap must lie in (0,1]");
    const double eta_t = measured_transfer
                             ? *measured_transfer
                             : effective_transfer_efficiency(scenario.input_fwhm, scenario.control);
    if (!(eta_t >= 0.0 && eta_t <= 1.0))
        throw InvalidArgument("three_level_efficiency: transfer efficiency must lie in [0,1]");
    return eta_two_level * eta_t * eta_t * spin_decay_factor(scenario.ts, scenario.spin) *
           scenario.mode_overlap;
}

/// Per-pulse transfer efficiency from the T_s → 0 three-level and the
/// two-level efficiencies: √(η₃/η₂).
inline double extract_transfer_efficiency(double eta3_at_ts0, double eta2) {
    if (!(eta2 > 0.0)) throw InvalidArgument("extract_transfer_efficiency: eta2 must be > 0");
    if (!(eta3_at_ts0 > 0.0)) throw InvalidArgument("extract_transfer_efficiency: eta3 must be > 0");
    if (eta3_at_ts0 > eta2)
        throw UnphysicalEfficiencyError("extract_transfer_efficiency: three-level efficiency exceeds "
                                        "two-level efficiency");
    return std::sqrt(eta3_at_ts0 / eta2);
}

}  // namespace afc
