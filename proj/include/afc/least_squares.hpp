// Bounded Levenberg–Marquardt for small dense least-squares problems.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace afc::lsq {

template <int P>
using Vector = Eigen::Matrix<double, P, 1>;

template <int P>
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, P>;

struct Options {
    int max_iterations = 200;
    /// Converged when max_j |∂cost/∂p_j|·scale_j / Σy² is below this.
    double gradient_tol = 1e-8;
    /// Iteration continues past convergence until the same measure drops
    /// below this or no step lowers the cost.
    double stop_gradient_tol = 1e-14;
    /// Stop when every step component is below step_tol·(|p_j| + scale_j).
    double step_tol = 1e-15;
    double initial_lambda = 1e-3;
};

template <int P>
struct Result {
    Vector<P> params;
    Vector<P> sigmas;
    double cost = 0.0;  ///< ½‖r‖²
    double rms = 0.0;   ///< √(‖r‖²/m)
    double gradient_measure = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Central-difference Jacobian with per-parameter step 1e-6·scale_j.
template <int P, class ResidualFn>
Jacobian<P> numeric_jacobian(const ResidualFn& residual, const Vector<P>& p, const Vector<P>& scale) {
    const Eigen::VectorXd r0 = residual(p);
    Jacobian<P> jac(r0.size(), P);
    for (int j = 0; j < P; ++j) {
        const double h = 1e-6 * scale[j];
        Vector<P> hi = p, lo = p;
        hi[j] += h;
        lo[j] -= h;
        jac.col(j) = (residual(hi) - residual(lo)) / (2.0 * h);
    }
    return jac;
}

namespace detail {

template <int P>
Vector<P> project(Vector<P> p, const Vector<P>& lower) {
    return p.cwiseMax(lower);
}

template <int P>
double gradient_measure(const Vector<P>& g, const Vector<P>& p, const Vector<P>& lower,
                        const Vector<P>& scale, double data_norm2) {
    double worst = 0.0;
    for (int j = 0; j < P; ++j) {
        // A component pushing into an active bound is not a descent direction.
        if (p[j] <= lower[j] && g[j] > 0.0) continue;
        worst = std::max(worst, std::abs(g[j]) * scale[j]);
    }
    return worst / std::max(data_norm2, std::numeric_limits<double>::min());
}

}  // namespace detail

/// Minimises ½‖r(p)‖² subject to p ≥ lower (by projection).
///
/// `scale` gives the typical magnitude of each parameter; it sets the
/// relative-gradient test and is never zero. `data_norm2` is Σy² of the data
/// being fitted. Marquardt damping uses diag(JᵀJ); a step is accepted only if
/// it lowers the cost. The last iterate is returned even when not converged.
template <int P, class ResidualFn, class JacobianFn>
Result<P> levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian, Vector<P> p0,
                              const Vector<P>& lower, const Vector<P>& scale, double data_norm2,
                              const Options& opts = {}) {
    Result<P> out;
    Vector<P> p = detail::project<P>(p0, lower);
    Eigen::VectorXd r = residual(p);
    double cost = 0.5 * r.squaredNorm();
    double lambda = opts.initial_lambda;
    const auto m = r.size();

    Jacobian<P> jac = jacobian(p);
    Vector<P> g = jac.transpose() * r;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (detail::gradient_measure<P>(g, p, lower, scale, data_norm2) <
            std::min(opts.stop_gradient_tol, opts.gradient_tol))
            break;
        const Eigen::Matrix<double, P, P> a = jac.transpose() * jac;
        Vector<P> damp = a.diagonal().cwiseMax(1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300));
        bool accepted = false;
        Vector<P> p_new;
        Eigen::VectorXd r_new;
        double cost_new = cost;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::Matrix<double, P, P> lhs = a;
            lhs.diagonal() += lambda * damp;
            const Vector<P> step = lhs.ldlt().solve(-g);
            p_new = detail::project<P>(p + step, lower);
            r_new = residual(p_new);
            cost_new = 0.5 * r_new.squaredNorm();
            if (std::isfinite(cost_new) && cost_new < cost && step.allFinite()) {
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) break;
        bool tiny_step = true;
        for (int j = 0; j < P; ++j)
            if (std::abs(p_new[j] - p[j]) > opts.step_tol * (std::abs(p[j]) + scale[j])) tiny_step = false;
        p = p_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-15);
        jac = jacobian(p);
        g = jac.transpose() * r;
        if (tiny_step) {
            ++it;
            break;
        }
    }

    out.params = p;
    out.cost = cost;
    out.rms = std::sqrt(2.0 * cost / static_cast<double>(m));
    out.iterations = it;
    out.gradient_measure = detail::gradient_measure<P>(g, p, lower, scale, data_norm2);
    out.converged = out.gradient_measure < opts.gradient_tol;

    const double dof = static_cast<double>(m) - P;
    const Eigen::Matrix<double, P, P> a = jac.transpose() * jac;
    const Eigen::Matrix<double, P, P> cov =
        a.completeOrthogonalDecomposition().pseudoInverse() * (dof > 0 ? 2.0 * cost / dof : 0.0);
    out.sigmas = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return out;
}

}  // namespace afc::lsq
