/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/error.hpp"
#include "qrender/integrators.hpp"
#include "qrender/theory.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

using namespace qrender;
using namespace qrender::theory;

namespace {

ContinuousRayModel single_segment(double sigma, double length, double a, double b, double t_max) {
    ContinuousRayModel m;
    m.density = {sigma};
    m.knots = {0.0, length};
    m.values = Eigen::MatrixXd(2, 1);
    m.values << a, b;
    m.t_max = t_max;
    return m;
}

}  // namespace

TEST(Theory, TransmittanceOfPiecewiseDensity) {
    ContinuousRayModel m;
    m.breaks = {0.0, 1.0};
    m.density = {2.0, 0.5};
    m.t_max = 10.0;
    EXPECT_DOUBLE_EQ(optical_depth(m, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(optical_depth(m, 3.0), 2.0 + 1.0);
    EXPECT_NEAR(transmittance_at(m, 3.0), std::exp(-3.0), 1e-15);
    EXPECT_EQ(density_at(m, 0.99), 2.0);
    EXPECT_EQ(density_at(m, 1.0), 0.5);
    for (double t : {0.0, 0.3, 1.0, 2.7, 9.0})
        EXPECT_NEAR(depth_at_transmittance(m, transmittance_at(m, t)), t, 1e-12);
    EXPECT_TRUE(std::isinf(depth_at_transmittance(m, 0.0)));
}

TEST(Theory, PayloadInterpolation) {
    const auto m = single_segment(1.0, 2.0, 1.0, 3.0, 5.0);
    EXPECT_DOUBLE_EQ(payload_at(m, 1.0)[0], 2.0);
    EXPECT_DOUBLE_EQ(payload_at(m, 4.0)[0], 3.0);
    EXPECT_DOUBLE_EQ(payload_at_transmittance(m, 0.0)[0], 3.0);
    EXPECT_DOUBLE_EQ(payload_at_transmittance(m, 1.0)[0], 1.0);
}

TEST(Theory, ConstantPayloadIntegratesToItself) {
    auto m = single_segment(1.3, 1.0, 0.7, 0.7, 12.0);
    EXPECT_NEAR(reference_integral(m, 10'000)[0], 0.7, 1e-12);
    EXPECT_NEAR(integral_in_u(m, 10'000)[0], 0.7, 1e-12);
    for (int k : {1, 2, 7})
        EXPECT_NEAR(right_riemann_in_u(m, k)[0], 0.7, 1e-12);
}

TEST(Theory, LinearPayloadClosedForm) {
    const double sigma = 1.5, length = 2.0, a = 0.3, b = -0.4;
    const auto m = single_segment(sigma, length, a, a + b * length, 12.0);
    const double e = std::exp(-sigma * length);
    const double expected = a * (1.0 - e) + b * (1.0 - e * (1.0 + sigma * length)) / sigma + (a + b * length) * e;
    EXPECT_NEAR(reference_integral(m, 100'000)[0], expected, 1e-10);
    EXPECT_NEAR(integral_in_u(m, 100'000)[0], expected, 1e-10);
}

TEST(Theory, SlopeBoundOfSingleSegment) {
    const double sigma = 2.0, length = 0.5;
    const auto m = single_segment(sigma, length, 0.0, 1.0, 10.0);
    // |dc/du| = |dc/dt| / (sigma T), largest where T is smallest inside the ramp.
    EXPECT_NEAR(payload_slope_bound(m)[0], std::exp(sigma * length) / (sigma * length), 1e-12);
}

TEST(Theory, ChangeOfVariablesOnRandomModels) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = random_model(seed, 2);
        EXPECT_NO_THROW(validate(m));
        EXPECT_LE(transmittance_at(m, m.t_max), 1e-6);
        const auto a = reference_integral(m, 200'000);
        const auto b = integral_in_u(m, 200'000);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8) << "seed " << seed;
    }
}

TEST(Theory, RandomModelIsDeterministic) {
    const auto a = random_model(42, 3);
    const auto b = random_model(42, 3);
    EXPECT_EQ(a.breaks, b.breaks);
    EXPECT_EQ(a.density, b.density);
    EXPECT_EQ(a.knots, b.knots);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(random_model(43, 3).breaks, a.breaks);
}

TEST(Theory, RiemannErrorWithinBound) {
    const std::vector<int> ks{2, 4, 8, 16, 32, 64, 128};
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const auto report = verify_bound(random_model(seed), ks, 20'000);
        EXPECT_EQ(report.violations, 0) << "seed " << seed;
        for (const auto& row : report.rows) EXPECT_LE(row.error, row.bound);
    }
}

TEST(Theory, LogLogSlope) {
    const std::vector<double> x{1, 2, 4, 8};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 / v);
    EXPECT_NEAR(log_log_slope(x, y), -1.0, 1e-12);
    const std::vector<double> one{1.0}, zero{0.0};
    EXPECT_TRUE(std::isnan(log_log_slope(one, one)));
    const std::vector<double> xs{1, 2}, ys{0.0, 1.0};
    EXPECT_TRUE(std::isnan(log_log_slope(xs, ys)));
}

TEST(Theory, DiscretisationPreservesTransmittance) {
    const auto m = random_model(5);
    const auto d = discretize_model(m, 1000);
    ASSERT_EQ(d.alphas.size(), 1000u);
    double t = 1.0;
    for (double a : d.alphas) t *= 1.0 - a;
    EXPECT_NEAR(t, transmittance_at(m, m.t_max), 1e-12);
    for (std::size_t i = 1; i < d.depths.size(); ++i) EXPECT_GT(d.depths[i], d.depths[i - 1]);
}

TEST(Theory, QuantileRenderOfThinSlabsStaysWithinBoundAtConstantDensity) {
    // Constant density gives every thin slab the same alpha, so the sparse blend
    // weights the crossing samples equally.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = random_model(seed);
        const double sigma = m.density[0];
        m.breaks = {0.0};
        m.density = {sigma};
        m.t_max = std::max(14.0 / sigma, m.knots.back());
        const auto d = discretize_model(m, 20'000);
        const double reference = reference_integral(m, 100'000)[0];
        for (int k : {8, 64}) {
            const auto q = q_render_ray(d.values, d.alphas, k);
            const double bound = payload_slope_bound(m).maxCoeff() / (2.0 * k);
            EXPECT_LE(std::abs(q.value[0] - reference), bound) << "seed " << seed << " K " << k;
        }
    }
}

TEST(Theory, ValidationRejectsMalformedModels) {
    ContinuousRayModel m;
    m.density = {0.0};
    EXPECT_THROW(validate(m), DomainError);
    m = ContinuousRayModel{};
    m.knots = {0.0, 0.0};
    m.values = Eigen::MatrixXd::Zero(2, 1);
    EXPECT_THROW(validate(m), DomainError);
    m = ContinuousRayModel{};
    m.values = Eigen::MatrixXd::Zero(2, 1);
    EXPECT_THROW(validate(m), DomainError);
    m = ContinuousRayModel{};
    m.breaks = {0.5};
    EXPECT_THROW(validate(m), DomainError);
    m = single_segment(1.0, 3.0, 0.0, 1.0, 2.0);
    EXPECT_THROW(validate(m), DomainError);
}

TEST(Theory, ReportCsv) {
    QuadratureReport report;
    QuadratureRow row;
    row.k = 4;
    row.reference = Eigen::VectorXd::Constant(1, 0.5);
    row.error = 0.01;
    row.bound = 0.1;
    report.rows.push_back(row);
    std::ostringstream out;
    write_report_csv(out, report);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "K,error,bound,reference_norm");
}
