/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "oracles.hpp"

#include "qrender/error.hpp"
#include "qrender/integrators.hpp"
#include "qrender/rasterizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace qrender;

namespace {

GaussianPrimitive at(const Eigen::Vector3d& c, double s, double opacity) {
    GaussianPrimitive g;
    g.center = c;
    g.scale = Eigen::Vector3d::Constant(s);
    g.opacity = opacity;
    return g;
}

}  // namespace

TEST(Projection, OnAxisMeanIsPrincipalPoint) {
    const auto cam = oracle::small_camera(9, 7);
    const auto pg = project_gaussian(at({0, 0, 4}, 0.1, 0.5), 0, cam);
    ASSERT_TRUE(pg);
    EXPECT_DOUBLE_EQ(pg->mean.x(), cam.cx);
    EXPECT_DOUBLE_EQ(pg->mean.y(), cam.cy);
    EXPECT_EQ(pg->depth, 4.0);
}

TEST(Projection, IsotropicCovarianceOnAxis) {
    auto cam = oracle::small_camera(64, 64);
    cam.fx = cam.fy = 80.0;
    const double sigma = 0.2, z = 5.0;
    const auto pg = project_gaussian(at({0, 0, z}, sigma, 0.5), 0, cam);
    ASSERT_TRUE(pg);
    const double expected = std::pow(cam.fx * sigma / z, 2);
    const Eigen::Matrix2d raw = pg->cov - 0.3 * Eigen::Matrix2d::Identity();
    EXPECT_NEAR(raw(0, 0) / expected, 1.0, 1e-6);
    EXPECT_NEAR(raw(1, 1) / expected, 1.0, 1e-6);
    EXPECT_NEAR(raw(0, 1), 0.0, 1e-12);
}

TEST(Projection, OffAxisMatchesJacobianFormula) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto cam = look_at({0.4, -0.3, -3}, {0.1, 0.2, 0.0}, Eigen::Vector3d::UnitY(), 32, 24, 30.0);
    for (int t = 0; t < 50; ++t) {
        GaussianPrimitive g = at({0.5 * n(rng), 0.5 * n(rng), 0.5 * n(rng)}, 0.1, 0.5);
        g.scale = {0.05 + std::abs(n(rng)) * 0.1, 0.05 + std::abs(n(rng)) * 0.1, 0.05 + std::abs(n(rng)) * 0.1};
        g.rotation = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
        const Eigen::Vector3d p = cam.rotation() * g.center + cam.translation();
        // Full 3x3 perspective Jacobian of (fx x/z, fy y/z, z), then keep the image block.
        Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
        j(0, 0) = cam.fx / p.z();
        j(0, 2) = -cam.fx * p.x() / (p.z() * p.z());
        j(1, 1) = cam.fy / p.z();
        j(1, 2) = -cam.fy * p.y() / (p.z() * p.z());
        j(2, 2) = 1.0;
        const Eigen::Matrix3d full = j * cam.rotation() * covariance_from(g.scale, g.rotation) *
                                     cam.rotation().transpose() * j.transpose();
        const Eigen::Matrix2d got = project_covariance(covariance_from(g.scale, g.rotation), p, cam);
        EXPECT_LT((got - full.topLeftCorner<2, 2>()).cwiseAbs().maxCoeff(), 1e-9 * full.norm());
    }
}

TEST(Projection, BehindCameraIsCulled) {
    const auto cam = oracle::small_camera(8, 8);
    EXPECT_FALSE(project_gaussian(at({0, 0, -1}, 0.1, 0.5), 0, cam));
    EXPECT_FALSE(project_gaussian(at({0, 0, cam.near}, 0.1, 0.5), 0, cam));
}

TEST(Projection, OffscreenIsCulled) {
    const auto cam = oracle::small_camera(8, 8);
    EXPECT_FALSE(project_gaussian(at({50, 0, 2}, 0.01, 0.5), 0, cam));
}

TEST(Alpha, AtMeanIsClampedOpacity) {
    ProjectedGaussian pg;
    pg.mean = {3, 4};
    pg.opacity = 0.8;
    EXPECT_EQ(*evaluate_alpha(pg, {3, 4}), 0.8);
    pg.opacity = 0.999;
    EXPECT_EQ(*evaluate_alpha(pg, {3, 4}), 0.99);
}

TEST(Alpha, MahalanobisTwoGivesInverseE) {
    ProjectedGaussian pg;
    pg.mean = {0, 0};
    pg.opacity = 0.6;
    pg.cov = Eigen::Vector2d(2.0, 8.0).asDiagonal();
    pg.conic = pg.cov.inverse();
    // d^T cov^-1 d = 1/2 + 3/2 = 2.
    const auto a = evaluate_alpha(pg, {1.0, std::sqrt(12.0)});
    ASSERT_TRUE(a);
    EXPECT_NEAR(*a, 0.6 * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(*a / 0.6, 0.36788, 1e-5);
}

TEST(Alpha, ZeroOpacityAndCutoffAreBelowThreshold) {
    ProjectedGaussian pg;
    pg.opacity = 0.0;
    EXPECT_FALSE(evaluate_alpha(pg, {0, 0}));
    pg.opacity = 0.9;
    EXPECT_FALSE(evaluate_alpha(pg, {3.01, 0}));
    EXPECT_TRUE(evaluate_alpha(pg, {2.99, 0}));
}

TEST(Rasterize, EmptySceneGivesEmptyLists) {
    const auto lists = rasterize(GaussianScene{}, oracle::small_camera(5, 4));
    EXPECT_EQ(lists.pixel_count(), 20u);
    EXPECT_TRUE(lists.sources.empty());
}

TEST(Rasterize, ZeroAreaImageIsDomainError) {
    EXPECT_THROW(rasterize(std::span<const ProjectedGaussian>{}, 0, 4), DomainError);
}

TEST(Rasterize, GaussianOnPixelCentre) {
    auto cam = oracle::small_camera(8, 8);
    cam.cx = 3.0;
    cam.cy = 5.0;
    const GaussianScene scene({at({0, 0, 2}, 0.05, 0.8)});
    const auto lists = rasterize(scene, cam);
    const auto p = lists.pixel_index(3, 5);
    ASSERT_EQ(lists.ray_size(p), 1u);
    EXPECT_EQ(lists.ray_sources(p)[0], 0u);
    EXPECT_EQ(lists.ray_alphas(p)[0], 0.8);
}

TEST(Rasterize, MatchesNaiveLoop) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto scene = oracle::random_scene(rng, 50 + static_cast<std::size_t>(trial) * 2, 1.0, 3.0);
        const auto cam = oracle::small_camera(8 + trial % 9, 8 + trial % 5);
        EXPECT_EQ(rasterize(scene, cam), oracle::naive_rasterize(scene, cam)) << "trial " << trial;
    }
}

TEST(Rasterize, IndependentOfTileSizeAndWorkers) {
    std::mt19937_64 rng(22);
    const auto scene = oracle::random_scene(rng, 100, 1.0, 3.0);
    const auto cam = oracle::small_camera(37, 29);
    RasterConfig base;
    base.workers = 1;
    const auto reference = rasterize(scene, cam, base);
    for (int tile : {1, 3, 8, 16, 64})
        for (unsigned workers : {1u, 2u, 5u}) {
            RasterConfig cfg;
            cfg.tile_size = tile;
            cfg.workers = workers;
            EXPECT_EQ(rasterize(scene, cam, cfg), reference) << tile << "/" << workers;
        }
}

TEST(Rasterize, ListInvariants) {
    std::mt19937_64 rng(23);
    const auto scene = oracle::random_scene(rng, 100, 1.0, 3.0);
    const auto lists = rasterize(scene, oracle::small_camera(16, 16));
    for (std::size_t p = 0; p < lists.pixel_count(); ++p) {
        const auto d = lists.ray_depths(p);
        const auto s = lists.ray_sources(p);
        for (std::size_t i = 1; i < d.size(); ++i) {
            EXPECT_LE(d[i - 1], d[i]);
            if (d[i - 1] == d[i]) EXPECT_LT(s[i - 1], s[i]);
        }
        for (double a : lists.ray_alphas(p)) {
            EXPECT_GE(a, kAlphaMin);
            EXPECT_LE(a, kAlphaMax);
        }
    }
}

TEST(Rasterize, EqualDepthTiesBreakBySource) {
    const auto cam = oracle::small_camera(8, 8);
    const GaussianScene scene({at({0, 0, 2}, 0.2, 0.3), at({0.01, 0, 2}, 0.2, 0.4), at({0, 0.01, 2}, 0.2, 0.5)});
    const auto lists = rasterize(scene, cam);
    const auto s = lists.ray_sources(lists.pixel_index(4, 4));
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], 0u);
    EXPECT_EQ(s[1], 1u);
    EXPECT_EQ(s[2], 2u);
}

TEST(Rasterize, PermutationInvariantUpToRelabelling) {
    std::mt19937_64 rng(24);
    const auto scene = oracle::random_scene(rng, 60, 1.0, 3.0);
    std::vector<std::size_t> perm(scene.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<GaussianPrimitive> shuffled;
    for (std::size_t i : perm) shuffled.push_back(scene[i]);
    const auto cam = oracle::small_camera(16, 16);
    const auto a = rasterize(scene, cam);
    const auto b = rasterize(GaussianScene(shuffled), cam);
    ASSERT_EQ(a.offsets, b.offsets);
    EXPECT_EQ(a.depths, b.depths);
    EXPECT_EQ(a.alphas, b.alphas);
    for (std::size_t i = 0; i < a.sources.size(); ++i) EXPECT_EQ(a.sources[i], perm[b.sources[i]]);
}
