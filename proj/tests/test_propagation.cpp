#include <algorithm>
#include <cmath>
#include <numbers>
#include <future>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "afc/estimation.hpp"
#include "afc/propagation.hpp"
#include "support/oracles.hpp"

namespace {

const afc::SimGrid kDefaultGrid(65536, 50e-6);

// Sample comb (d = 0.54, d0 = 0.04, γ = 165 kHz, Δ = 0.5 MHz) over a 10.5 MHz range.
afc::CombSpec sample_comb(int n_teeth = 21) { return {0.54, 0.04, 0.5e6, 165e3, n_teeth}; }

// Wide enough (100 MHz) that band-edge dispersion is below one time step.
afc::CombSpec wide_comb() { return sample_comb(201); }

// Fourier coefficient c_k of H over the central comb period: for a periodic
// comb the output is Σ_k c_k·input(t - k/Δ).
afc::cplx harmonic(const afc::Spectrum& h, const afc::CombSpec& comb, int k) {
    const auto& g = h.grid;
    const int bins = static_cast<int>(std::lround(comb.delta() / g.freq_step()));
    const auto n = static_cast<long>(g.n_samples());
    afc::cplx acc = 0.0;
    for (int j = -bins / 2; j < bins - bins / 2; ++j) {
        const double nu = j * g.freq_step();
        acc += h.samples[static_cast<std::size_t>((j + n) % n)] *
               std::polar(1.0, 2.0 * std::numbers::pi * nu * k / comb.delta());
    }
    return acc / static_cast<double>(bins);
}

// Broad comb for comparing against the closed form: 61 teeth (30.5 MHz)
// against a 0.2 µs input (2.2 MHz spectral FWHM).
afc::CombSpec broad_comb(double d, double finesse, double d0) {
    return {d, d0, 0.5e6, 0.5e6 / finesse, 61};
}
const afc::SimGrid kBroadGrid(16384, 100e-6);

double relative_l2(const afc::TimeTrace& a, const afc::TimeTrace& b) {
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        err += std::norm(a.samples[i] - b.samples[i]);
        norm += std::norm(b.samples[i]);
    }
    return std::sqrt(err / norm);
}

double numeric_efficiency(const afc::CombSpec& comb, const afc::SimGrid& grid, double fwhm, double t0) {
    const auto in = afc::gaussian_pulse(grid, t0, fwhm);
    const auto out = afc::propagate(in, comb);
    return afc::echo_efficiency(out, in, t0 + comb.echo_delay(), afc::default_echo_window(comb));
}

TEST(TransferFunction, VacuumIsUnity) {
    const afc::CombSpec vacuum(0.0, 0.0, 0.5e6, 165e3, 9);
    const auto h = afc::transfer_function(vacuum, kDefaultGrid);
    for (const auto& v : h.samples) EXPECT_EQ(v, afc::cplx(1.0, 0.0));
}

TEST(TransferFunction, ConstantDepthHasNoPhase) {
    const afc::CombSpec flat(0.0, 0.3, 0.5e6, 165e3, 9);
    const auto h = afc::transfer_function(flat, kDefaultGrid);
    for (const auto& v : h.samples) {
        EXPECT_NEAR(std::abs(v), std::exp(-0.15), 1e-15);
        EXPECT_NEAR(std::arg(v), 0.0, 1e-12);
    }
}

TEST(TransferFunction, ToothCentersAndPassivity) {
    const auto comb = sample_comb();
    const auto h = afc::transfer_function(comb, kDefaultGrid);
    // 20 kHz bins land exactly on the tooth centres.
    for (int j = -4; j <= 4; ++j) {
        const auto k = static_cast<std::size_t>((j * 25 + 65536) % 65536);
        ASSERT_DOUBLE_EQ(kDefaultGrid.frequency_at(k), j * 0.5e6);
        EXPECT_NEAR(std::abs(h.samples[k]), std::exp(-0.29), 0.01);
    }
    for (const auto& v : h.samples) EXPECT_LE(std::abs(v), 1.0);
}

TEST(TransferFunction, ImpulseResponseIsCausal) {
    const auto comb = sample_comb();
    const auto h = afc::transfer_function(comb, kDefaultGrid);
    const auto resp = afc::to_time(h);
    // Second half of the periodic window is negative time.
    double neg = 0.0, total = 0.0;
    for (std::size_t i = 0; i < resp.samples.size(); ++i) {
        const double p = std::norm(resp.samples[i]);
        total += p;
        if (i > resp.samples.size() / 2) neg += p;
    }
    EXPECT_LT(neg / total, 1e-12);
}

TEST(TransferFunction, RejectsUncoveredGrid) {
    EXPECT_THROW(afc::transfer_function(sample_comb(), afc::SimGrid(64, 50e-6)), afc::GridCoverageError);
}

TEST(Propagate, VacuumReturnsInput) {
    const afc::CombSpec vacuum(0.0, 0.0, 0.5e6, 165e3, 9);
    const auto in = afc::gaussian_pulse(kDefaultGrid, 5e-6, 1.3e-6);
    EXPECT_LT(relative_l2(afc::propagate(in, vacuum), in), 1e-10);
}

TEST(Propagate, OutputIsSumOfDelayedCopies) {
    const auto comb = wide_comb();
    const double t0 = 5e-6, fwhm = 1.3e-6;
    const auto in = afc::gaussian_pulse(kDefaultGrid, t0, fwhm);
    const auto h = afc::transfer_function(comb, kDefaultGrid);
    const auto out = afc::propagate(in, h);
    afc::TimeTrace model(kDefaultGrid), others(kDefaultGrid);
    for (int k = 0; k <= 8; ++k) {
        const auto copy = afc::gaussian_pulse(kDefaultGrid, t0 + k * comb.echo_delay(), fwhm);
        const auto ck = harmonic(h, comb, k);
        for (std::size_t i = 0; i < copy.samples.size(); ++i) {
            model.samples[i] += ck * copy.samples[i];
            if (k != 1) others.samples[i] += ck * copy.samples[i];
        }
    }
    EXPECT_LT(relative_l2(out, model), 1e-3);
    // With the other orders removed the echo of a 1.3 µs pulse sits at t0 + 2 µs.
    for (std::size_t i = 0; i < out.samples.size(); ++i) others.samples[i] = out.samples[i] - others.samples[i];
    // The crest of a 1.3 µs pulse is flat to a part in 1e6 over a sample, so
    // locate it with a Gaussian fit as for a recorded echo.
    std::vector<double> t, y;
    for (std::size_t i = 0; i < others.samples.size(); ++i) {
        const double ti = kDefaultGrid.time_at(i);
        if (ti < t0 + 0.5e-6 || ti > t0 + 3.5e-6) continue;
        t.push_back(ti);
        y.push_back(std::norm(others.samples[i]));
    }
    EXPECT_NEAR(afc::fit_gaussian_peak(t, y)["center"], t0 + 2e-6, kDefaultGrid.time_step());
}

TEST(Propagate, EchoPeakWithinOneSample) {
    const auto comb = wide_comb();
    const double t0 = 5e-6;
    const auto out = afc::propagate(afc::gaussian_pulse(kDefaultGrid, t0, 0.35e-6), comb);
    EXPECT_NEAR(afc::find_peak_time(out, t0 - 1e-6, t0 + 1e-6), t0, kDefaultGrid.time_step());
    EXPECT_NEAR(afc::find_peak_time(out, t0 + 1e-6, t0 + 3e-6), t0 + 2e-6, kDefaultGrid.time_step());
}

TEST(Propagate, NarrowCombShiftsEchoAndTransmissionTogether) {
    // A finite comb is a fast-light medium near its centre; both pulses are
    // advanced by the same few nanoseconds and stay 1/Δ apart.
    for (int n : {9, 21}) {
        const auto comb = sample_comb(n);
        const double t0 = 5e-6;
        const auto out = afc::propagate(afc::gaussian_pulse(kDefaultGrid, t0, 0.35e-6), comb);
        const double trans = afc::find_peak_time(out, t0 - 1e-6, t0 + 1e-6);
        const double echo = afc::find_peak_time(out, t0 + 1e-6, t0 + 3e-6);
        EXPECT_LT(trans, t0);
        EXPECT_NEAR(echo - trans, 2e-6, kDefaultGrid.time_step()) << n;
    }
}

TEST(Propagate, SecondEchoWeakerThanFirst) {
    const auto comb = wide_comb();
    const double t0 = 5e-6, w = afc::default_echo_window(comb);
    const auto out = afc::propagate(afc::gaussian_pulse(kDefaultGrid, t0, 0.35e-6), comb);
    const double e1 = out.energy_between(t0 + 2e-6 - w / 2, t0 + 2e-6 + w / 2);
    const double e2 = out.energy_between(t0 + 4e-6 - w / 2, t0 + 4e-6 + w / 2);
    EXPECT_GT(e2, 0.0);
    EXPECT_LT(e2, e1);
    EXPECT_NEAR(afc::find_peak_time(out, t0 + 3.4e-6, t0 + 4.6e-6), t0 + 4e-6, kDefaultGrid.time_step());
}

TEST(Propagate, WarnsOnWideInputSpectrum) {
    const auto comb = sample_comb();
    std::vector<std::string> warnings;
    afc::propagate(afc::gaussian_pulse(kDefaultGrid, 5e-6, 0.05e-6), comb, &warnings);
    EXPECT_EQ(warnings.size(), 1u);
    warnings.clear();
    afc::propagate(afc::gaussian_pulse(kDefaultGrid, 5e-6, 1.3e-6), comb, &warnings);
    EXPECT_TRUE(warnings.empty());
}

TEST(Propagate, GridMismatchIsRejected) {
    const auto comb = sample_comb();
    const auto h = afc::transfer_function(comb, kDefaultGrid);
    const auto in = afc::gaussian_pulse(afc::SimGrid(32768, 50e-6), 5e-6, 1e-6);
    EXPECT_THROW(afc::propagate(in, h), afc::GridCoverageError);
}

TEST(EchoEfficiency, SampleCombNearClosedForm) {
    const double eta = numeric_efficiency(sample_comb(), kDefaultGrid, 0.35e-6, 5e-6);
    const double closed = afc::afc_efficiency(0.54, 3.03, 0.04);
    EXPECT_NEAR(eta / closed, 1.0, 0.15) << "numeric " << eta << " closed " << closed;
}

TEST(EchoEfficiency, VacuumHasNoEcho) {
    const afc::CombSpec vacuum(0.0, 0.0, 0.5e6, 165e3, 9);
    EXPECT_LT(numeric_efficiency(vacuum, kDefaultGrid, 0.35e-6, 5e-6), 1e-6);
}

TEST(EchoEfficiency, WindowErrors) {
    const auto comb = sample_comb();
    const auto in = afc::gaussian_pulse(kDefaultGrid, 5e-6, 0.35e-6);
    const auto out = afc::propagate(in, comb);
    EXPECT_THROW(afc::echo_efficiency(out, in, 7e-6, 0.0), afc::WindowError);
    EXPECT_THROW(afc::echo_efficiency(out, in, -1e-3, 1e-6), afc::WindowError);
    // Window reaching back over the transmitted pulse.
    EXPECT_THROW(afc::echo_efficiency(out, in, 6e-6, 3e-6), afc::WindowError);
}

TEST(EchoEfficiency, DecreasesWithFinesseAboveOptimum) {
    std::vector<double> numeric, closed;
    for (double f : {4.0, 6.0, 8.0, 10.0}) {
        const auto comb = broad_comb(0.54, f, 0.0);
        numeric.push_back(numeric_efficiency(comb, kBroadGrid, 0.2e-6, 10e-6));
        closed.push_back(afc::afc_efficiency(comb));
    }
    for (std::size_t i = 1; i < numeric.size(); ++i) {
        EXPECT_LT(numeric[i], numeric[i - 1]);
        EXPECT_LT(closed[i], closed[i - 1]);
        EXPECT_NEAR(numeric[i] / closed[i], 1.0, 0.15);
    }
}

TEST(EchoEfficiency, AgreesWithClosedFormOnSubgrid) {
    for (double d : {0.1, 0.8})
        for (double f : {2.0, 10.0})
            for (double d0 : {0.0, 0.04}) {
                const auto comb = broad_comb(d, f, d0);
                const double eta = numeric_efficiency(comb, kBroadGrid, 0.2e-6, 10e-6);
                EXPECT_NEAR(eta / afc::afc_efficiency(comb), 1.0, 0.15) << d << ' ' << f << ' ' << d0;
            }
}

TEST(EchoEfficiency, StableUnderGridRefinement) {
    for (double f : {2.0, 5.0}) {
        const auto comb = broad_comb(0.54, f, 0.04);
        const double coarse = numeric_efficiency(comb, kBroadGrid, 0.2e-6, 10e-6);
        const double fine = numeric_efficiency(comb, afc::SimGrid(32768, 100e-6), 0.2e-6, 10e-6);
        EXPECT_NEAR(fine / coarse, 1.0, 0.01);
    }
}

TEST(Propagate, PassiveForRandomCombs) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ud(0.0, 3.0), ud0(0.0, 0.5), uf(1.2, 12.0), ufw(0.1e-6, 1.5e-6);
    for (int trial = 0; trial < 40; ++trial) {
        const afc::CombSpec comb(ud(rng), ud0(rng), 0.5e6, 0.5e6 / uf(rng), 2 * (trial % 15) + 1);
        const auto in = afc::gaussian_pulse(kDefaultGrid, 8e-6, ufw(rng));
        const auto out = afc::propagate(in, comb);
        EXPECT_LE(out.energy(), in.energy() * (1.0 + 1e-12));
    }
}

TEST(Propagate, CausalForRandomCombs) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ud(0.0, 1.5), ud0(0.0, 0.3), uf(2.0, 6.0);
    const double fwhm = 0.5e-6, t0 = 10e-6;
    for (int trial = 0; trial < 25; ++trial) {
        const afc::CombSpec comb(ud(rng), ud0(rng), 0.5e6, 0.5e6 / uf(rng), 2 * (trial % 10) + 3);
        const auto out = afc::propagate(afc::gaussian_pulse(kDefaultGrid, t0, fwhm), comb);
        EXPECT_LT(out.energy_between(0.0, t0 - 3 * fwhm) / out.energy(), 1e-8);
    }
}

TEST(Propagate, ConcurrentRunsAreBitIdentical) {
    const auto comb = sample_comb();
    const auto in = afc::gaussian_pulse(kDefaultGrid, 5e-6, 0.35e-6);
    const auto ref = afc::propagate(in, comb);
    std::vector<std::future<afc::TimeTrace>> jobs;
    for (int i = 0; i < 6; ++i) jobs.push_back(std::async(std::launch::async, [&] { return afc::propagate(in, comb); }));
    for (auto& j : jobs) {
        const auto out = j.get();
        ASSERT_EQ(out.samples.size(), ref.samples.size());
        for (std::size_t i = 0; i < out.samples.size(); ++i) ASSERT_EQ(out.samples[i], ref.samples[i]);
    }
}

// Peaks of a spectrum within ±range, as frequencies, sorted.
std::vector<double> local_maxima(const afc::Spectrum& s, double range) {
    std::vector<double> peaks;
    const std::size_t n = s.samples.size();
    double top = 0.0;
    for (const auto& v : s.samples) top = std::max(top, v.real());
    for (std::size_t k = 0; k < n; ++k) {
        const double f = s.grid.frequency_at(k);
        if (std::abs(f) > range) continue;
        const double v = s.samples[k].real();
        if (v > 0.05 * top && v > s.samples[(k + n - 1) % n].real() && v > s.samples[(k + 1) % n].real())
            peaks.push_back(f);
    }
    std::sort(peaks.begin(), peaks.end());
    return peaks;
}

TEST(PulseTrain, FifteenPulsesGiveHalfMegahertzTeeth) {
    const afc::SimGrid grid(65536, 50e-6);
    const auto s = afc::pulse_train_spectrum(15, 2e-6, 0.2e-6, grid);
    const auto peaks = local_maxima(s, 2.6e6);
    ASSERT_GE(peaks.size(), 5u);
    for (std::size_t i = 1; i < peaks.size(); ++i)
        EXPECT_NEAR(peaks[i] - peaks[i - 1], 0.5e6, grid.freq_step());
}

TEST(PulseTrain, SinglePulseIsSmooth) {
    const afc::SimGrid grid(65536, 50e-6);
    const auto s = afc::pulse_train_spectrum(1, 2e-6, 0.2e-6, grid);
    const auto peaks = local_maxima(s, 20e6);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_DOUBLE_EQ(peaks[0], 0.0);
}

TEST(PulseTrain, ToothWidthScalesInverselyWithTrainLength) {
    // Fine frequency resolution: 2.4 kHz bins.
    const afc::SimGrid grid(65536, 409.6e-6);
    auto tooth_fwhm = [&](int n) {
        const auto s = afc::pulse_train_spectrum(n, 2e-6, 0.2e-6, grid);
        const double top = s.samples[0].real();
        // Linear interpolation of the half-maximum crossing on the positive side.
        std::size_t k = 0;
        while (s.samples[k + 1].real() > 0.5 * top) ++k;
        const double v0 = s.samples[k].real(), v1 = s.samples[k + 1].real();
        const double f = grid.frequency_at(k) + (v0 - 0.5 * top) / (v0 - v1) * grid.freq_step();
        return 2.0 * f;
    };
    const double w15 = tooth_fwhm(15), w5 = tooth_fwhm(5);
    // Independent: bisection on the analytic N-slit factor (envelope is flat at this scale).
    auto train = [](int n) {
        return oracle::fwhm_by_bisection([n](double nu) { return oracle::train_factor(nu, n, 2e-6); }, 0.0, 0.25e6);
    };
    EXPECT_NEAR(w15 / w5, train(15) / train(5), 0.02);
    EXPECT_NEAR(w15 / w5, 1.0 / 3.0, 0.03);
}

TEST(PulseTrain, RejectsTrainLongerThanGrid) {
    EXPECT_THROW(afc::pulse_train_spectrum(30, 2e-6, 0.2e-6, afc::SimGrid(4096, 50e-6)), afc::GridCoverageError);
    EXPECT_THROW(afc::pulse_train_spectrum(0, 2e-6, 0.2e-6, kDefaultGrid), afc::InvalidArgument);
}

}  // namespace
