// Uniform time/frequency grids and the traces sampled on them.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "afc/comb_model.hpp"
#include "afc/errors.hpp"
#include "afc/fft.hpp"

namespace afc {

using cplx = std::complex<double>;

/// Periodic sampling grid shared by a time trace and its spectrum.
///
/// Time bins are t_n = n·dt, n = 0..N-1. Frequency bins follow DFT order:
/// k·df for k < N/2, (k-N)·df above.
class SimGrid {
public:
    SimGrid(std::size_t n_samples, double time_span) : n_(n_samples), span_(time_span) {
        if (n_samples < 2 || (n_samples & (n_samples - 1)) != 0)
            throw InvalidArgument("grid: n_samples must be a power of two >= 2");
        if (!std::isfinite(time_span) || time_span <= 0.0)
            throw InvalidArgument("grid: time_span must be > 0");
    }

    std::size_t n_samples() const noexcept { return n_; }
    double time_span() const noexcept { return span_; }
    double time_step() const noexcept { return span_ / static_cast<double>(n_); }
    double freq_step() const noexcept { return 1.0 / span_; }
    double frequency_span() const noexcept { return static_cast<double>(n_) / span_; }

    double time_at(std::size_t i) const noexcept { return static_cast<double>(i) * time_step(); }
    double frequency_at(std::size_t k) const noexcept {
        const auto kk = static_cast<double>(k);
        return (k < n_ / 2 ? kk : kk - static_cast<double>(n_)) * freq_step();
    }
    /// Nearest sample index to time t, clamped to the grid.
    std::size_t index_of_time(double t) const noexcept {
        const double idx = std::round(t / time_step());
        if (idx <= 0.0) return 0;
        if (idx >= static_cast<double>(n_ - 1)) return n_ - 1;
        return static_cast<std::size_t>(idx);
    }

    /// Throws GridCoverageError unless the band spans ≥ 4× the comb bandwidth
    /// and the period exceeds three echo delays.
    void require_coverage(const CombSpec& comb) const {
        const double needed_band = 4.0 * (comb.bandwidth() + 2.0 * std::abs(comb.center_freq()));
        if (frequency_span() < needed_band)
            throw GridCoverageError("grid: frequency span " + std::to_string(frequency_span()) +
                                    " Hz is below 4x comb bandwidth (" +
                                    std::to_string(needed_band) + " Hz)");
        if (!(time_span() > 3.0 * comb.echo_delay()))
            throw GridCoverageError("grid: time span must exceed 3/delta = " +
                                    std::to_string(3.0 * comb.echo_delay()) + " s");
    }

    bool operator==(const SimGrid&) const = default;

private:
    std::size_t n_;
    double span_;
};

/// Complex field envelope versus time.
struct TimeTrace {
    SimGrid grid;
    std::vector<cplx> samples;

    TimeTrace(SimGrid g, std::vector<cplx> s) : grid(g), samples(std::move(s)) {
        if (samples.size() != grid.n_samples())
            throw InvalidArgument("trace: sample count does not match grid");
    }
    explicit TimeTrace(SimGrid g) : grid(g), samples(g.n_samples()) {}

    /// Σ|E|²·dt.
    double energy() const {
        double e = 0.0;
        for (const auto& s : samples) e += std::norm(s);
        return e * grid.time_step();
    }
    /// Energy of samples with t in [t_lo, t_hi].
    double energy_between(double t_lo, double t_hi) const {
        double e = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double t = grid.time_at(i);
            if (t >= t_lo && t <= t_hi) e += std::norm(samples[i]);
        }
        return e * grid.time_step();
    }
    std::vector<double> intensity() const {
        std::vector<double> out(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) out[i] = std::norm(samples[i]);
        return out;
    }
    std::vector<double> times() const {
        std::vector<double> out(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) out[i] = grid.time_at(i);
        return out;
    }
};

/// Complex amplitude versus frequency, stored in DFT bin order.
struct Spectrum {
    SimGrid grid;
    std::vector<cplx> samples;

    Spectrum(SimGrid g, std::vector<cplx> s) : grid(g), samples(std::move(s)) {
        if (samples.size() != grid.n_samples())
            throw InvalidArgument("spectrum: sample count does not match grid");
    }
};

/// Continuous-FT approximation: Ẽ(ν_k) = dt·Σ E(t_n) e^{-2πiν_k t_n}.
inline Spectrum to_spectrum(const TimeTrace& trace) {
    auto s = fft::forward(trace.samples);
    const double dt = trace.grid.time_step();
    for (auto& v : s) v *= dt;
    return {trace.grid, std::move(s)};
}

/// Inverse of to_spectrum.
inline TimeTrace to_time(const Spectrum& spec) {
    auto t = fft::backward(spec.samples);
    const double df = spec.grid.freq_step();
    for (auto& v : t) v *= df;
    return {spec.grid, std::move(t)};
}

/// Gaussian field envelope whose intensity has the given FWHM, centred at t0.
inline TimeTrace gaussian_pulse(const SimGrid& grid, double t0, double intensity_fwhm,
                                double amplitude = 1.0) {
    if (!(intensity_fwhm > 0.0)) throw InvalidArgument("gaussian_pulse: fwhm must be > 0");
    TimeTrace trace(grid);
    // Field σ is √2 times the intensity σ.
    const double field_sigma = std::sqrt(2.0) * intensity_fwhm / kFwhmPerSigma;
    for (std::size_t i = 0; i < grid.n_samples(); ++i) {
        const double u = (grid.time_at(i) - t0) / field_sigma;
        trace.samples[i] = amplitude * std::exp(-0.5 * u * u);
    }
    return trace;
}

}  // namespace afc
