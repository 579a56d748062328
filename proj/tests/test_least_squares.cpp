#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "afc/least_squares.hpp"

namespace {

using V2 = afc::lsq::Vector<2>;
using V3 = afc::lsq::Vector<3>;

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(LevenbergMarquardt, LinearProblemMatchesNormalEquations) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> x, y;
    for (int i = 0; i < 50; ++i) {
        x.push_back(0.1 * i);
        y.push_back(2.0 - 0.7 * x.back() + noise(rng));
    }
    auto residual = [&](const V2& p) {
        Eigen::VectorXd r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = p[0] + p[1] * x[i] - y[i];
        return r;
    };
    auto jac = [&](const V2&) {
        afc::lsq::Jacobian<2> j(x.size(), 2);
        for (std::size_t i = 0; i < x.size(); ++i) j.row(i) << 1.0, x[i];
        return j;
    };
    double norm2 = 0.0;
    for (double v : y) norm2 += v * v;
    const auto res = afc::lsq::levenberg_marquardt<2>(residual, jac, V2{0, 0}, V2{-kInf, -kInf}, V2{1, 1}, norm2);
    ASSERT_TRUE(res.converged);

    // Closed-form ordinary least squares.
    const double n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double a = (sy - b * sx) / n;
    EXPECT_NEAR(res.params[0], a, 1e-7);
    EXPECT_NEAR(res.params[1], b, 1e-7);

    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) rss += std::pow(a + b * x[i] - y[i], 2);
    const double s2 = rss / (n - 2);
    const double xbar = sx / n, ssx = sxx - n * xbar * xbar;
    EXPECT_NEAR(res.sigmas[1], std::sqrt(s2 / ssx), 1e-8);
    EXPECT_NEAR(res.sigmas[0], std::sqrt(s2 * (1.0 / n + xbar * xbar / ssx)), 1e-8);
}

TEST(LevenbergMarquardt, RosenbrockFromStandardStart) {
    auto residual = [](const V2& p) {
        Eigen::VectorXd r(2);
        r << 10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0];
        return r;
    };
    auto jac = [&](const V2& p) { return afc::lsq::numeric_jacobian<2>(residual, p, V2{1, 1}); };
    afc::lsq::Options opts;
    opts.gradient_tol = 1e-14;
    const auto res = afc::lsq::levenberg_marquardt<2>(residual, jac, V2{-1.2, 1.0}, V2{-kInf, -kInf}, V2{1, 1}, 1.0, opts);
    EXPECT_NEAR(res.params[0], 1.0, 1e-6);
    EXPECT_NEAR(res.params[1], 1.0, 1e-6);
}

TEST(LevenbergMarquardt, LowerBoundIsRespected) {
    // Unconstrained optimum at p = -3; bound at 0.
    auto residual = [](const afc::lsq::Vector<1>& p) {
        Eigen::VectorXd r(1);
        r << p[0] + 3.0;
        return r;
    };
    auto jac = [](const afc::lsq::Vector<1>&) {
        afc::lsq::Jacobian<1> j(1, 1);
        j << 1.0;
        return j;
    };
    using V1 = afc::lsq::Vector<1>;
    const auto res = afc::lsq::levenberg_marquardt<1>(residual, jac, V1{5.0}, V1{0.0}, V1{1.0}, 9.0);
    EXPECT_EQ(res.params[0], 0.0);
    EXPECT_TRUE(res.converged);
}

TEST(LevenbergMarquardt, IterationCapClearsConvergence) {
    auto residual = [](const V3& p) {
        Eigen::VectorXd r(3);
        r << std::exp(p[0]) - 2.0, p[1] * p[1] - 4.0, std::sin(p[2]) - 0.5;
        return r;
    };
    auto jac = [&](const V3& p) { return afc::lsq::numeric_jacobian<3>(residual, p, V3{1, 1, 1}); };
    afc::lsq::Options opts;
    opts.max_iterations = 1;
    const auto res = afc::lsq::levenberg_marquardt<3>(residual, jac, V3{3, 10, 0}, V3{-kInf, -kInf, -kInf},
                                                      V3{1, 1, 1}, 4.25, opts);
    EXPECT_FALSE(res.converged);
    EXPECT_LE(res.iterations, 1);
    opts.max_iterations = 200;
    const auto full = afc::lsq::levenberg_marquardt<3>(residual, jac, V3{3, 10, 0}, V3{-kInf, -kInf, -kInf},
                                                       V3{1, 1, 1}, 4.25, opts);
    EXPECT_TRUE(full.converged);
    EXPECT_NEAR(full.params[0], std::log(2.0), 1e-6);
    EXPECT_NEAR(full.params[1], 2.0, 1e-6);
    EXPECT_NEAR(full.params[2], std::asin(0.5), 1e-6);
}

TEST(NumericJacobian, MatchesAnalytic) {
    auto residual = [](const V2& p) {
        Eigen::VectorXd r(3);
        r << p[0] * p[1], std::exp(p[0]), std::sin(p[1]);
        return r;
    };
    const V2 p{0.3, 1.1};
    const auto j = afc::lsq::numeric_jacobian<2>(residual, p, V2{1, 1});
    EXPECT_NEAR(j(0, 0), 1.1, 1e-8);
    EXPECT_NEAR(j(0, 1), 0.3, 1e-8);
    EXPECT_NEAR(j(1, 0), std::exp(0.3), 1e-8);
    EXPECT_NEAR(j(1, 1), 0.0, 1e-8);
    EXPECT_NEAR(j(2, 1), std::cos(1.1), 1e-8);
}

}  // namespace
