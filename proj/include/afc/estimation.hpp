// Parameter estimation from sampled traces: Gaussian echo peaks, comb
// absorption scans and spin-dephasing decay series.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "afc/comb_model.hpp"
#include "afc/errors.hpp"
#include "afc/least_squares.hpp"
#include "afc/signal.hpp"

namespace afc {

struct FitResult {
    std::map<std::string, double> params;
    std::map<std::string, double> sigmas;
    double residual_norm = 0.0;  ///< RMS residual
    bool converged = false;
    int n_iter = 0;
    std::vector<std::string> warnings;

    double operator[](const std::string& name) const { return params.at(name); }
    double sigma(const std::string& name) const { return sigmas.at(name); }
};

struct DecayPoint {
    double ts;
    double height;
};

/// Echo heights versus spin storage time; ts strictly increasing, heights ≥ 0.
class DecaySeries {
public:
    DecaySeries() = default;
    explicit DecaySeries(std::vector<DecayPoint> points) : points_(std::move(points)) {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& p = points_[i];
            if (!std::isfinite(p.ts) || !std::isfinite(p.height))
                throw InvalidArgument("decay series: non-finite value");
            if (p.height < 0.0) throw InvalidArgument("decay series: heights must be >= 0");
            if (i > 0 && !(p.ts > points_[i - 1].ts))
                throw InvalidArgument("decay series: ts must be strictly increasing");
        }
    }
    const std::vector<DecayPoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }

private:
    std::vector<DecayPoint> points_;
};

namespace detail {

inline void check_xy(std::span<const double> x, std::span<const double> y, std::size_t min_n,
                     const char* who) {
    if (x.size() != y.size()) throw InvalidArgument(std::string(who) + ": x and y differ in length");
    if (x.size() < min_n)
        throw InsufficientDataError(std::string(who) + ": need at least " + std::to_string(min_n) +
                                    " samples");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw InvalidArgument(std::string(who) + ": non-finite sample");
        if (i > 0 && !(x[i] > x[i - 1]))
            throw InvalidArgument(std::string(who) + ": x must be strictly increasing");
    }
}

inline bool is_flat(std::span<const double> y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double mag = std::max({std::abs(*lo), std::abs(*hi), 1e-300});
    return (*hi - *lo) <= 1e-12 * mag;
}

inline double sum_sq(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return s;
}

template <int P>
FitResult to_fit_result(const lsq::Result<P>& r, const std::array<const char*, P>& names) {
    FitResult out;
    for (int j = 0; j < P; ++j) {
        out.params[names[j]] = r.params[j];
        out.sigmas[names[j]] = r.sigmas[j];
    }
    out.residual_norm = r.rms;
    out.converged = r.converged;
    out.n_iter = r.iterations;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian peak

/// A·exp(-4 ln2 (x-c)²/w²) + b.
inline double gaussian_peak_value(double x, double amplitude, double center, double fwhm,
                                  double offset) {
    const double u = (x - center) / fwhm;
    return amplitude * std::exp(-4.0 * std::numbers::ln2 * u * u) + offset;
}

/// Fits amplitude, center, fwhm and offset of a single Gaussian peak.
///
/// Initial values come from moments of the baseline-subtracted trace. A flat
/// trace throws FlatTraceError; running out of iterations only clears
/// `converged`.
inline FitResult fit_gaussian_peak(std::span<const double> x, std::span<const double> y,
                                   const lsq::Options& opts = {}) {
    detail::check_xy(x, y, 8, "fit_gaussian_peak");
    if (detail::is_flat(y)) throw FlatTraceError("fit_gaussian_peak: trace is flat");
    const std::size_t n = x.size();

    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n_low = std::max<std::size_t>(1, n / 10);
    double base = 0.0;
    for (std::size_t i = 0; i < n_low; ++i) base += sorted[i];
    base /= static_cast<double>(n_low);
    const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double amp = y[imax] - base;
    double area = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        area += 0.5 * (std::max(y[i] - base, 0.0) + std::max(y[i - 1] - base, 0.0)) * (x[i] - x[i - 1]);
    const double span = x[n - 1] - x[0];
    const double gauss_area_per_fwhm = std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
    double width = area / (amp * gauss_area_per_fwhm);
    width = std::clamp(width, 2.0 * span / static_cast<double>(n), span);

    using V = lsq::Vector<4>;
    const V p0{amp, x[imax], width, base};
    const V lower{0.0, -std::numeric_limits<double>::infinity(), 1e-9 * span,
                  -std::numeric_limits<double>::infinity()};
    const double yscale = std::max(amp, 1e-300);
    const V scale{yscale, width, width, yscale};
    const double c4 = 4.0 * std::numbers::ln2;

    auto residual = [&](const V& p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] = gaussian_peak_value(x[i], p[0], p[1], p[2], p[3]) - y[i];
        return r;
    };
    auto jacobian = [&](const V& p) {
        lsq::Jacobian<4> jac(static_cast<Eigen::Index>(n), 4);
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = x[i] - p[1];
            const double e = std::exp(-c4 * dx * dx / (p[2] * p[2]));
            const auto row = static_cast<Eigen::Index>(i);
            jac(row, 0) = e;
            jac(row, 1) = p[0] * e * 2.0 * c4 * dx / (p[2] * p[2]);
            jac(row, 2) = p[0] * e * 2.0 * c4 * dx * dx / (p[2] * p[2] * p[2]);
            jac(row, 3) = 1.0;
        }
        return jac;
    };
    const auto r = lsq::levenberg_marquardt<4>(residual, jacobian, p0, lower, scale,
                                               detail::sum_sq(y), opts);
    return detail::to_fit_result<4>(r, {"amplitude", "center", "fwhm", "offset"});
}

/// Fits a Gaussian to the intensity |E|² of a time trace.
inline FitResult fit_gaussian_peak(const TimeTrace& trace, const lsq::Options& opts = {}) {
    const auto t = trace.times();
    const auto i = trace.intensity();
    return fit_gaussian_peak(t, i, opts);
}

// ---------------------------------------------------------------------------
// Comb

struct CombFitOptions {
    /// 0 fits an unbounded periodic comb over the trace; otherwise the comb has
    /// exactly this many teeth about `center`.
    int n_teeth = 0;
    /// Known Gaussian instrument-kernel FWHM (Hz) to deconvolve; 0 for none.
    double instrument_fwhm = 0.0;
    lsq::Options lm{};
};

/// Gaussian comb convolved with a Gaussian kernel of std `kernel_sigma`:
/// each tooth broadens to σ_e = √(σ²+σ_k²) with its area conserved.
inline double comb_trace_value(double nu, double d, double d0, double gamma_fwhm, double delta,
                               double center, int n_teeth, double kernel_sigma) {
    const double sigma = gamma_fwhm / kFwhmPerSigma;
    const double sig_e = std::sqrt(sigma * sigma + kernel_sigma * kernel_sigma);
    const double amp = d * sigma / sig_e;
    const double x = nu - center;
    const double nearest = std::round(x / delta);
    const double reach = std::ceil(12.0 * sig_e / delta) + 1.0;
    double lo = nearest - reach, hi = nearest + reach;
    if (n_teeth > 0) {
        const double half = (n_teeth - 1) / 2;
        lo = std::max(lo, -half);
        hi = std::min(hi, half);
    }
    double sum = 0.0;
    const double inv = 1.0 / (2.0 * sig_e * sig_e);
    for (double j = lo; j <= hi; j += 1.0) {
        const double u = x - j * delta;
        sum += std::exp(-u * u * inv);
    }
    return amp * sum + d0;
}

/// Fits d, d0, γ, Δ and the comb centre to an optical-depth scan.
///
/// Δ is seeded by a periodogram search within ±20 % of `delta_hint` and the
/// centre from the phase of the fundamental. The reported centre is reduced to
/// (-Δ/2, Δ/2] for the unbounded model. Adds the derived `finesse`.
inline FitResult fit_comb(std::span<const double> nu, std::span<const double> depth, double delta_hint,
                          const CombFitOptions& opts = {}) {
    detail::check_xy(nu, depth, 8, "fit_comb");
    if (!(delta_hint > 0.0)) throw InvalidArgument("fit_comb: delta_hint must be > 0");
    if (opts.n_teeth < 0 || (opts.n_teeth > 0 && opts.n_teeth % 2 == 0))
        throw InvalidArgument("fit_comb: n_teeth must be 0 or odd");
    if (detail::is_flat(depth)) throw FlatTraceError("fit_comb: trace has no comb structure");
    const std::size_t n = nu.size();
    const double x0 = nu.front(), x1 = nu.back();
    const double mean_step = (x1 - x0) / static_cast<double>(n - 1);
    if (mean_step > delta_hint / 4.0)
        throw InsufficientDataError("fit_comb: sampling too coarse to resolve teeth");

    double ymean = 0.0;
    for (double v : depth) ymean += v;
    ymean /= static_cast<double>(n);

    auto fundamental = [&](double period) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += (depth[i] - ymean) * std::polar(1.0, -2.0 * std::numbers::pi * nu[i] / period);
        return acc;
    };
    double delta0 = delta_hint, best = -1.0;
    constexpr int kScan = 801;
    for (int i = 0; i < kScan; ++i) {
        const double cand = delta_hint * (0.8 + 0.4 * i / (kScan - 1));
        const double mag = std::abs(fundamental(cand));
        if (mag > best) {
            best = mag;
            delta0 = cand;
        }
    }
    double center0 = -delta0 / (2.0 * std::numbers::pi) * std::arg(fundamental(delta0));
    center0 -= delta0 * std::round(center0 / delta0);

    const double first = std::ceil((x0 - center0) / delta0);
    const double last = std::floor((x1 - center0) / delta0);
    if (last - first + 1.0 < 3.0)
        throw InsufficientDataError("fit_comb: fewer than 3 resolvable teeth in trace");

    const auto [ylo, yhi] = std::minmax_element(depth.begin(), depth.end());
    const double d0_0 = std::max(*ylo, 0.0);
    const double d_0 = std::max(*yhi - *ylo, 1e-12);
    double sigma0 = (ymean - d0_0) * delta0 / (d_0 * std::sqrt(2.0 * std::numbers::pi));
    sigma0 = std::clamp(sigma0, delta0 / 50.0, delta0 / 3.0);
    const double gamma0 = sigma0 * kFwhmPerSigma;
    const double kernel_sigma = opts.instrument_fwhm / kFwhmPerSigma;

    using V = lsq::Vector<5>;
    const V p0{d_0, d0_0, gamma0, delta0, center0};
    const V lower{0.0, 0.0, 1e-6 * delta0, 0.1 * delta0, -std::numeric_limits<double>::infinity()};
    const V scale{d_0, d_0, gamma0, delta0, gamma0};
    const int teeth = opts.n_teeth;
    auto residual = [&](const V& p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] =
                comb_trace_value(nu[i], p[0], p[1], p[2], p[3], p[4], teeth, kernel_sigma) - depth[i];
        return r;
    };
    auto jacobian = [&](const V& p) { return lsq::numeric_jacobian<5>(residual, p, scale); };
    const auto r = lsq::levenberg_marquardt<5>(residual, jacobian, p0, lower, scale,
                                               detail::sum_sq(depth), opts.lm);
    auto out = detail::to_fit_result<5>(r, {"d", "d0", "gamma_fwhm", "delta", "center"});
    if (teeth == 0) {
        double& c = out.params["center"];
        const double dl = out.params["delta"];
        c -= dl * std::ceil(c / dl - 0.5);
    }
    const double f = out.params["delta"] / out.params["gamma_fwhm"];
    out.params["finesse"] = f;
    out.sigmas["finesse"] =
        f * std::hypot(out.sigmas["delta"] / out.params["delta"],
                       out.sigmas["gamma_fwhm"] / out.params["gamma_fwhm"]);
    return out;
}

// ---------------------------------------------------------------------------
// Spin linewidth

/// A·exp(-T_s² γ_IS² π² / (2 ln 2)).
inline double spin_decay_model(double ts, double amplitude, double gamma_is) {
    const double x = ts * gamma_is * std::numbers::pi;
    return amplitude * std::exp(-x * x / (2.0 * std::numbers::ln2));
}

/// Fits A and γ_IS by weighted linear regression of ln(height) on T_s².
///
/// Zero heights are dropped with a warning. `weights`, when non-empty, gives
/// one weight per point of the log-domain regression. Needs ≥ 4 usable points
/// and a fitted decay of at least a factor two across the series.
inline FitResult fit_spin_linewidth(const DecaySeries& series, std::span<const double> weights = {}) {
    if (!weights.empty() && weights.size() != series.size())
        throw InvalidArgument("fit_spin_linewidth: weights size mismatch");
    FitResult out;
    std::vector<double> xs, zs, ws;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& p = series.points()[i];
        if (p.height == 0.0) {
            out.warnings.push_back("excluded zero height at ts=" + std::to_string(p.ts));
            continue;
        }
        xs.push_back(p.ts * p.ts);
        zs.push_back(std::log(p.height));
        ws.push_back(weights.empty() ? 1.0 : weights[i]);
    }
    const std::size_t n = xs.size();
    if (n < 4) throw InsufficientDataError("fit_spin_linewidth: need at least 4 non-zero points");

    double sw = 0.0, sx = 0.0, sz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += ws[i];
        sx += ws[i] * xs[i];
        sz += ws[i] * zs[i];
    }
    const double xbar = sx / sw, zbar = sz / sw;
    double sxx = 0.0, sxz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
        sxz += ws[i] * (xs[i] - xbar) * (zs[i] - zbar);
    }
    if (!(sxx > 0.0)) throw InsufficientDataError("fit_spin_linewidth: ts values are degenerate");
    const double slope = sxz / sxx;
    const double intercept = zbar - slope * xbar;
    const double k = -slope;
    if (!(k > 0.0)) throw NonDecayingError("fit_spin_linewidth: series is non-decaying");
    const double decay_span = k * (xs.back() - xs.front());
    if (decay_span < std::numbers::ln2)
        throw InsufficientDataError("fit_spin_linewidth: series spans less than a factor-2 decay");

    double rss = 0.0, rss_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = zs[i] - (intercept + slope * xs[i]);
        rss += e * e;
        rss_w += ws[i] * e * e;
    }
    const double s2 = rss_w / static_cast<double>(n - 2);
    const double var_slope = s2 / sxx;
    const double var_intercept = s2 * (1.0 / sw + xbar * xbar / sxx);

    // k = γ² π² / (2 ln2)  ⇒  γ = √(2 ln2 k)/π, dγ/dk = γ/(2k).
    const double gamma = std::sqrt(2.0 * std::numbers::ln2 * k) / std::numbers::pi;
    const double amplitude = std::exp(intercept);
    out.params = {{"A", amplitude}, {"gamma_is", gamma}};
    out.sigmas = {{"A", amplitude * std::sqrt(var_intercept)},
                  {"gamma_is", gamma / (2.0 * k) * std::sqrt(var_slope)}};
    out.residual_norm = std::sqrt(rss / static_cast<double>(n));
    out.converged = true;
    out.n_iter = 0;
    return out;
}

/// Same model fitted directly in the linear domain with Levenberg–Marquardt,
/// seeded by the log-domain solution.
inline FitResult fit_spin_linewidth_nonlinear(const DecaySeries& series, const lsq::Options& opts = {}) {
    const auto seed = fit_spin_linewidth(series);
    const auto& pts = series.points();
    const std::size_t n = pts.size();
    using V = lsq::Vector<2>;
    const V p0{seed["A"], seed["gamma_is"]};
    const V lower{0.0, 1e-12 * seed["gamma_is"]};
    const V scale{seed["A"], seed["gamma_is"]};
    const double c = std::numbers::pi * std::numbers::pi / (2.0 * std::numbers::ln2);
    auto residual = [&](const V& p) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] = spin_decay_model(pts[i].ts, p[0], p[1]) - pts[i].height;
        return r;
    };
    auto jacobian = [&](const V& p) {
        lsq::Jacobian<2> jac(static_cast<Eigen::Index>(n), 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double t2 = pts[i].ts * pts[i].ts;
            const double e = std::exp(-c * t2 * p[1] * p[1]);
            jac(static_cast<Eigen::Index>(i), 0) = e;
            jac(static_cast<Eigen::Index>(i), 1) = -2.0 * c * t2 * p[1] * p[0] * e;
        }
        return jac;
    };
    double norm2 = 0.0;
    for (const auto& p : pts) norm2 += p.height * p.height;
    const auto r = lsq::levenberg_marquardt<2>(residual, jacobian, p0, lower, scale, norm2, opts);
    return detail::to_fit_result<2>(r, {"A", "gamma_is"});
}

}  // namespace afc
