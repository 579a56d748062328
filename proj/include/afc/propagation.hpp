// Linear frequency-domain propagation of a weak pulse through the comb.
//
// The medium acts as a causal filter H(ν) = exp(-D(ν)/2 - iφ(ν)) where D is
// the comb optical depth and φ its Kramers–Kronig partner. The echo is the
// first-order delayed term of this filter; no Maxwell–Bloch dynamics.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "afc/comb_model.hpp"
#include "afc/errors.hpp"
#include "afc/fft.hpp"
#include "afc/signal.hpp"

namespace afc {

/// Phase φ(ν) such that exp(-D/2 - iφ) is causal: the periodic discrete
/// Hilbert transform of D/2, computed by folding negative times onto positive
/// ones.
inline std::vector<double> kramers_kronig_phase(const std::vector<double>& half_depth) {
    const std::size_t n = half_depth.size();
    std::vector<cplx> ell(n);
    for (std::size_t k = 0; k < n; ++k) ell[k] = half_depth[k];
    ell = fft::backward(ell);
    const double inv_n = 1.0 / static_cast<double>(n);
    // Causal fold: keep t = 0 and Nyquist, double 0 < t < T/2, drop the rest.
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || i == n / 2) ell[i] *= inv_n;
        else if (i < n / 2) ell[i] *= 2.0 * inv_n;
        else ell[i] = 0.0;
    }
    const auto folded = fft::forward(ell);
    std::vector<double> phase(n);
    for (std::size_t k = 0; k < n; ++k) phase[k] = folded[k].imag();
    return phase;
}

/// Complex medium response sampled on the grid's frequency bins.
inline Spectrum transfer_function(const CombSpec& comb, const SimGrid& grid) {
    grid.require_coverage(comb);
    const std::size_t n = grid.n_samples();
    std::vector<double> half_depth(n);
    for (std::size_t k = 0; k < n; ++k) half_depth[k] = 0.5 * comb_profile(comb, grid.frequency_at(k));
    const auto phase = kramers_kronig_phase(half_depth);
    std::vector<cplx> h(n);
    for (std::size_t k = 0; k < n; ++k) h[k] = std::polar(std::exp(-half_depth[k]), -phase[k]);
    return {grid, std::move(h)};
}

/// Intensity-spectrum FWHM of a trace, estimated from its RMS spectral width
/// (exact for Gaussian pulses).
inline double spectral_fwhm(const TimeTrace& trace) {
    const auto spec = to_spectrum(trace);
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < spec.samples.size(); ++k) {
        const double p = std::norm(spec.samples[k]);
        const double nu = spec.grid.frequency_at(k);
        w += p;
        m1 += p * nu;
        m2 += p * nu * nu;
    }
    if (w <= 0.0) return 0.0;
    const double mean = m1 / w;
    return kFwhmPerSigma * std::sqrt(std::max(m2 / w - mean * mean, 0.0));
}

/// Applies a precomputed medium response to the input field.
inline TimeTrace propagate(const TimeTrace& input, const Spectrum& response) {
    if (!(input.grid == response.grid))
        throw GridCoverageError("propagate: input and response grids differ");
    auto spec = to_spectrum(input);
    for (std::size_t k = 0; k < spec.samples.size(); ++k) spec.samples[k] *= response.samples[k];
    return to_time(spec);
}

/// Output field after the comb. When `warnings` is given, a note is appended
/// if the input spectrum is wider than a quarter of the comb bandwidth.
inline TimeTrace propagate(const TimeTrace& input, const CombSpec& comb,
                           std::vector<std::string>* warnings = nullptr) {
    input.grid.require_coverage(comb);
    if (warnings != nullptr) {
        const double width = spectral_fwhm(input);
        if (width > comb.bandwidth() / 4.0)
            warnings->push_back("input spectral FWHM " + std::to_string(width) +
                                " Hz exceeds a quarter of the comb bandwidth");
    }
    return propagate(input, transfer_function(comb, input.grid));
}

/// Default echo integration window, 0.6/Δ (±0.3/Δ about the echo).
inline double default_echo_window(const CombSpec& comb) { return 0.6 / comb.delta(); }

/// Time of the intensity maximum within [t_lo, t_hi].
inline double find_peak_time(const TimeTrace& trace, double t_lo, double t_hi) {
    double best = -1.0;
    std::size_t best_i = trace.samples.size();
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const double t = trace.grid.time_at(i);
        if (t < t_lo || t > t_hi) continue;
        const double p = std::norm(trace.samples[i]);
        if (p > best) {
            best = p;
            best_i = i;
        }
    }
    if (best_i == trace.samples.size()) throw WindowError("find_peak_time: empty search window");
    return trace.grid.time_at(best_i);
}

/// Echo energy in [echo_time ± window/2] of `output` over the total energy of
/// `reference` (the same input through vacuum).
inline double echo_efficiency(const TimeTrace& output, const TimeTrace& reference, double echo_time,
                              double window) {
    if (!(output.grid == reference.grid))
        throw GridCoverageError("echo_efficiency: output and reference grids differ");
    if (!(window > 0.0)) throw WindowError("echo_efficiency: window must be > 0");
    const double lo = echo_time - 0.5 * window;
    const double hi = echo_time + 0.5 * window;
    const auto& g = output.grid;
    if (hi < 0.0 || lo > g.time_at(g.n_samples() - 1) ||
        std::floor(hi / g.time_step()) < std::ceil(lo / g.time_step()))
        throw WindowError("echo_efficiency: window contains no samples");
    const double ref_peak = find_peak_time(reference, 0.0, g.time_span());
    if (ref_peak >= lo && ref_peak <= hi)
        throw WindowError("echo_efficiency: window overlaps the transmitted pulse");
    const double ref_energy = reference.energy();
    if (!(ref_energy > 0.0)) throw InvalidArgument("echo_efficiency: reference has no energy");
    return output.energy_between(lo, hi) / ref_energy;
}

/// Power spectrum of `n_pulses` identical Gaussian pulses spaced by
/// `separation`. Values are real (stored in the real part).
inline Spectrum pulse_train_spectrum(int n_pulses, double separation, double pulse_fwhm,
                                     const SimGrid& grid) {
    if (n_pulses < 1) throw InvalidArgument("pulse_train_spectrum: n_pulses must be >= 1");
    if (!(pulse_fwhm > 0.0)) throw InvalidArgument("pulse_train_spectrum: pulse_fwhm must be > 0");
    if (n_pulses > 1 && !(separation > 0.0))
        throw InvalidArgument("pulse_train_spectrum: separation must be > 0");
    const double margin = 4.0 * pulse_fwhm;
    const double length = (n_pulses - 1) * separation;
    if (length + 2.0 * margin > grid.time_span())
        throw GridCoverageError("pulse_train_spectrum: train longer than the grid");
    TimeTrace train(grid);
    for (int m = 0; m < n_pulses; ++m) {
        const auto pulse = gaussian_pulse(grid, margin + m * separation, pulse_fwhm);
        for (std::size_t i = 0; i < train.samples.size(); ++i) train.samples[i] += pulse.samples[i];
    }
    auto spec = to_spectrum(train);
    for (auto& v : spec.samples) v = std::norm(v);
    return spec;
}

}  // namespace afc
