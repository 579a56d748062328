// Gaussian atomic frequency comb and its closed-form echo-efficiency theory.
//
// All frequencies are detunings in Hz relative to the comb centre; the optical
// carrier is metadata only.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "afc/errors.hpp"

namespace afc {

/// FWHM / σ for a Gaussian, √(8 ln 2).
inline const double kFwhmPerSigma = std::sqrt(8.0 * std::numbers::ln2);

/// Comb of `n_teeth` identical Gaussian absorption teeth on a background.
///
/// Immutable once built. Construction enforces d, d0 ≥ 0, Δ, γ > 0, odd
/// tooth count and finesse Δ/γ > 1 (the latter with LowFinesseError).
class CombSpec {
public:
    CombSpec(double d, double d0, double delta, double gamma_fwhm, int n_teeth,
             double center_freq = 0.0)
        : d_(d), d0_(d0), delta_(delta), gamma_fwhm_(gamma_fwhm), n_teeth_(n_teeth),
          center_freq_(center_freq) {
        if (!std::isfinite(d) || d < 0.0) throw InvalidArgument("comb: d must be finite and >= 0");
        if (!std::isfinite(d0) || d0 < 0.0) throw InvalidArgument("comb: d0 must be finite and >= 0");
        if (!std::isfinite(delta) || delta <= 0.0) throw InvalidArgument("comb: delta must be > 0");
        if (!std::isfinite(gamma_fwhm) || gamma_fwhm <= 0.0)
            throw InvalidArgument("comb: gamma_fwhm must be > 0");
        if (n_teeth < 1 || n_teeth % 2 == 0)
            throw InvalidArgument("comb: n_teeth must be an odd integer >= 1");
        if (!std::isfinite(center_freq)) throw InvalidArgument("comb: center_freq must be finite");
        if (!(delta / gamma_fwhm > 1.0))
            throw LowFinesseError("comb: finesse delta/gamma_fwhm = " +
                                  std::to_string(delta / gamma_fwhm) + " must exceed 1");
    }

    double d() const noexcept { return d_; }
    double d0() const noexcept { return d0_; }
    double delta() const noexcept { return delta_; }
    double gamma_fwhm() const noexcept { return gamma_fwhm_; }
    int n_teeth() const noexcept { return n_teeth_; }
    double center_freq() const noexcept { return center_freq_; }

    /// Gaussian standard deviation of one tooth, γ/√(8 ln 2).
    double sigma() const noexcept { return gamma_fwhm_ / kFwhmPerSigma; }
    double finesse() const noexcept { return delta_ / gamma_fwhm_; }
    double bandwidth() const noexcept { return n_teeth_ * delta_; }
    /// Two-level storage time 1/Δ.
    double echo_delay() const noexcept { return 1.0 / delta_; }
    /// Outermost tooth index; teeth run over j = -half_span .. +half_span.
    int half_span() const noexcept { return (n_teeth_ - 1) / 2; }

private:
    double d_;
    double d0_;
    double delta_;
    double gamma_fwhm_;
    int n_teeth_;
    double center_freq_;
};

/// Bulk absorber the comb is carved from.
struct MediumSpec {
    double alpha = 0.0;            ///< absorption coefficient, 1/cm
    double length = 1.0;           ///< crystal length, cm
    double inhom_broadening = 0.0; ///< optical inhomogeneous width, Hz
    std::string metadata;

    void validate() const {
        if (!std::isfinite(alpha) || alpha < 0.0) throw InvalidArgument("medium: alpha must be >= 0");
        if (!std::isfinite(length) || length <= 0.0) throw InvalidArgument("medium: length must be > 0");
        if (!std::isfinite(inhom_broadening) || inhom_broadening < 0.0)
            throw InvalidArgument("medium: inhom_broadening must be >= 0");
    }

    /// d = αL.
    double optical_depth() const noexcept { return alpha * length; }
};

/// Optical depth of the comb at detuning `nu`:
/// d Σ_j exp(-(ν - ν_c - jΔ)² / 2σ²) + d0.
///
/// Teeth further than 12σ from ν contribute below 1e-31 and are skipped.
inline double comb_profile(const CombSpec& comb, double nu) {
    const double sigma = comb.sigma();
    const double x = nu - comb.center_freq();
    const int half = comb.half_span();
    const int reach = static_cast<int>(std::ceil(12.0 * sigma / comb.delta())) + 1;
    const double nearest = std::round(x / comb.delta());
    // Clamp in double space first; x can be far outside the comb.
    const double lo_d = std::max(nearest - reach, static_cast<double>(-half));
    const double hi_d = std::min(nearest + reach, static_cast<double>(half));
    double sum = 0.0;
    if (lo_d <= hi_d) {
        const int lo = static_cast<int>(lo_d);
        const int hi = static_cast<int>(hi_d);
        const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
        for (int j = lo; j <= hi; ++j) {
            const double u = x - j * comb.delta();
            sum += std::exp(-u * u * inv_two_var);
        }
    }
    return comb.d() * sum + comb.d0();
}

/// Forward two-level echo efficiency of a Gaussian comb,
/// (d/F)² e^{-7/F²} e^{-d/F} e^{-d0}.
inline double afc_efficiency(double d, double finesse, double d0) {
    if (!(finesse > 0.0) || !std::isfinite(finesse))
        throw InvalidArgument("afc_efficiency: finesse must be > 0");
    if (!(d >= 0.0) || !(d0 >= 0.0)) throw InvalidArgument("afc_efficiency: depths must be >= 0");
    const double r = d / finesse;
    return r * r * std::exp(-7.0 / (finesse * finesse)) * std::exp(-r) * std::exp(-d0);
}

inline double afc_efficiency(const CombSpec& comb) {
    return afc_efficiency(comb.d(), comb.finesse(), comb.d0());
}

/// Finesse maximising afc_efficiency at fixed d: positive root of
/// 2F² - dF - 14 = 0. Independent of d0.
inline double optimal_finesse(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("optimal_finesse: d must be >= 0");
    return (d + std::sqrt(d * d + 112.0)) / 4.0;
}

/// Number of temporal modes the comb can hold: one per tooth.
inline std::size_t multimode_capacity(const CombSpec& comb) {
    return static_cast<std::size_t>(comb.n_teeth());
}

/// Mode count for a comb of the given bandwidth and tooth spacing.
inline std::size_t multimode_capacity(double bandwidth, double delta) {
    if (!(delta > 0.0) || !(bandwidth >= 0.0))
        throw InvalidArgument("multimode_capacity: need bandwidth >= 0 and delta > 0");
    // Tolerate round-off in bandwidth/delta landing just under an integer.
    return static_cast<std::size_t>(std::floor(bandwidth / delta * (1.0 + 1e-12)));
}

/// Largest odd tooth count whose comb fits inside `bandwidth`.
inline int teeth_for_bandwidth(double bandwidth, double delta) {
    auto n = static_cast<int>(multimode_capacity(bandwidth, delta));
    if (n % 2 == 0) --n;
    return std::max(n, 1);
}

}  // namespace afc
