/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "oracles.hpp"

#include "qrender/distill.hpp"
#include "qrender/error.hpp"
#include "qrender/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace qrender;

namespace {

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> d;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

struct SingleGaussianFixture {
    GaussianScene scene;
    std::vector<CameraModel> cameras;
    std::vector<MaskSample> samples;
    Eigen::MatrixXd pool;
};

SingleGaussianFixture single_gaussian(std::size_t channels) {
    GaussianPrimitive g;
    g.center = {0, 0, 4};
    g.scale = {0.5, 0.5, 0.5};
    g.opacity = 0.8;
    SingleGaussianFixture f;
    f.scene = GaussianScene({g});
    f.cameras = {oracle::small_camera(16, 16)};
    MaskSample s;
    for (std::size_t p = 0; p < 256; ++p) s.pixels.push_back(p);
    s.target = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(channels));
    s.target[0] = 0.6;
    s.target[1] = 0.8;
    f.samples = {s};
    f.pool = -s.target.transpose();
    return f;
}

}  // namespace

TEST(Cosine, Basics) {
    const Eigen::Vector3d a(1, 0, 0), b(0, 2, 0), c(-3, 0, 0);
    EXPECT_EQ(cosine_similarity(a, a * 5.0), 1.0);
    EXPECT_EQ(cosine_similarity(a, b), 0.0);
    EXPECT_EQ(cosine_similarity(a, c), -1.0);
    EXPECT_THROW(cosine_similarity(a, Eigen::Vector3d::Zero()), DomainError);
}

TEST(Contrastive, KnownValue) {
    const Eigen::Vector2d f(2, 0), pos(1, 0);
    const std::vector<Eigen::VectorXd> neg{Eigen::Vector2d(0, 1)};
    EXPECT_NEAR(contrastive_loss(f, pos, neg), -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-15);
    EXPECT_THROW(contrastive_loss(f, pos, {}), DomainError);
    EXPECT_THROW(contrastive_loss(Eigen::Vector2d::Zero(), pos, neg), DomainError);
}

TEST(Contrastive, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 12);
        const Eigen::VectorXd f = random_vector(rng, n);
        const Eigen::VectorXd pos = random_vector(rng, n).normalized();
        std::vector<Eigen::VectorXd> neg;
        for (int j = 0; j < 1 + static_cast<int>(rng() % 6); ++j) neg.push_back(random_vector(rng, n).normalized());
        const auto lg = contrastive_loss_and_gradient(f, pos, neg);
        EXPECT_EQ(lg.loss, contrastive_loss(f, pos, neg));
        const double h = 1e-6;
        Eigen::VectorXd fd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd up = f, down = f;
            up[i] += h;
            down[i] -= h;
            fd[i] = (contrastive_loss(up, pos, neg) - contrastive_loss(down, pos, neg)) / (2 * h);
        }
        EXPECT_LT((fd - lg.gradient).norm() / std::max(1e-3, lg.gradient.norm()), 1e-6);
    }
}

TEST(Jacobian, MatchesFiniteDifferencesOfRenders) {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng() % 40;
        const auto a = oracle::random_alphas(rng, n);
        std::vector<double> d(n);
        std::iota(d.begin(), d.end(), 1.0);
        const auto values = oracle::random_values(rng, n, 4);
        for (Strategy s : {Strategy::volume, Strategy::quantile, Strategy::topk, Strategy::stratified}) {
            IntegratorConfig cfg;
            cfg.strategy = s;
            cfg.k = 5;
            const auto sel = select(cfg, a, d);
            const auto jac = grad_render_wrt_features(sel);
            std::vector<double> coef(n, 0.0);
            for (std::size_t i = 0; i < jac.sources.size(); ++i) coef[jac.sources[i]] = jac.coefficients[i];
            const double h = 1e-3;
            for (std::size_t i = 0; i < n; ++i) {
                Eigen::MatrixXd up = values, down = values;
                up(static_cast<Eigen::Index>(i), 2) += h;
                down(static_cast<Eigen::Index>(i), 2) -= h;
                const double fd = (blend(sel, up).value[2] - blend(sel, down).value[2]) / (2 * h);
                EXPECT_NEAR(fd, coef[i], 1e-9 * std::max(1.0, std::abs(coef[i])));
            }
        }
    }
}

TEST(Jacobian, EmptySelection) {
    const auto jac = grad_render_wrt_features(RaySelection{});
    EXPECT_FALSE(jac.has_selection);
    EXPECT_TRUE(jac.sources.empty());
}

TEST(Jacobian, PooledMapReproducesMeanRender) {
    const auto synth = generate_scene(SyntheticSceneSpec{150, 1.5, 1.0, 0.1, 0.4, 0.1, 0.8, 1, 0, 2});
    const auto cam = look_at({0, 0, -5}, {0, 0, 0}, Eigen::Vector3d::UnitY(), 20, 20, 25.0);
    const auto lists = rasterize(synth.scene, cam);
    const auto table = smooth_features(synth.scene, 5, 1);
    IntegratorConfig cfg;
    cfg.k = 6;
    std::vector<std::size_t> pixels;
    for (std::size_t p = 0; p < 400; p += 3) pixels.push_back(p);
    const auto map = pooled_jacobian(lists, pixels, cfg);
    EXPECT_TRUE(std::is_sorted(map.sources.begin(), map.sources.end()));
    EXPECT_EQ(std::set<std::uint32_t>(map.sources.begin(), map.sources.end()).size(), map.sources.size());

    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(5);
    for (std::size_t i = 0; i < map.sources.size(); ++i)
        for (int c = 0; c < 5; ++c) pooled[c] += map.coefficients[i] * table.row(map.sources[i])[static_cast<std::size_t>(c)];
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(5);
    for (std::size_t p : pixels) {
        const auto src = lists.ray_sources(p);
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(src.size()), 5);
        for (std::size_t i = 0; i < src.size(); ++i)
            for (int c = 0; c < 5; ++c) rows(static_cast<Eigen::Index>(i), c) = table.row(src[i])[static_cast<std::size_t>(c)];
        expected += blend(select(cfg, lists.ray_alphas(p), lists.ray_depths(p)), rows).value;
    }
    expected /= static_cast<double>(pixels.size());
    EXPECT_LT((pooled - expected).cwiseAbs().maxCoeff(), 1e-12);
    const std::vector<std::size_t> outside{400};
    EXPECT_THROW(pooled_jacobian(lists, outside, cfg), DomainError);
}

TEST(Distill, SingleGaussianConvergesToTarget) {
    const auto f = single_gaussian(4);
    TrainConfig cfg;
    cfg.steps = 2000;
    // Cosine gradients scale with 1/|f|; a tiny start inflates |f| on the first step.
    cfg.init_scale = 1.0;
    const auto result = optimize_features(f.scene, f.cameras, f.samples, 4, cfg, f.pool);
    Eigen::VectorXd row(4);
    for (int c = 0; c < 4; ++c) row[c] = result.features.row(0)[static_cast<std::size_t>(c)];
    EXPECT_GT(cosine_similarity(row, f.samples[0].target), 0.999);
    EXPECT_LT(result.loss_curve.back(), result.loss_curve.front());
}

TEST(Distill, SmallStepsDecreaseLossMonotonically) {
    const auto f = single_gaussian(4);
    TrainConfig cfg;
    cfg.steps = 200;
    cfg.learning_rate = 1e-3;
    cfg.momentum = 0.0;
    cfg.init_scale = 1.0;
    const auto result = optimize_features(f.scene, f.cameras, f.samples, 4, cfg, f.pool);
    for (std::size_t i = 1; i < result.loss_curve.size(); ++i)
        EXPECT_LE(result.loss_curve[i], result.loss_curve[i - 1]) << "step " << i;
}

TEST(Distill, DeterministicUnderSeed) {
    const auto synth = generate_scene(cluster_fixture_spec());
    const auto cams = cluster_fixture_cameras();
    const auto targets = orthonormal_targets(8, 16, 5);
    const auto samples = masks_from_labels(synth.scene, synth.labels, cams, targets);
    TrainConfig cfg;
    cfg.steps = 20;
    cfg.seed = 3;
    const auto a = optimize_features(synth.scene, cams, samples, 16, cfg);
    const auto b = optimize_features(synth.scene, cams, samples, 16, cfg);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.loss_curve, b.loss_curve);
    cfg.seed = 4;
    EXPECT_NE(optimize_features(synth.scene, cams, samples, 16, cfg).features, a.features);
}

TEST(Distill, CollapsedFeaturesRaiseTrainingError) {
    const auto f = single_gaussian(3);
    TrainConfig cfg;
    cfg.steps = 5;
    cfg.init_scale = 0.0;
    try {
        optimize_features(f.scene, f.cameras, f.samples, 3, cfg, f.pool);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.step(), 0);
    }
}

TEST(Distill, RejectsBadInputs) {
    const auto f = single_gaussian(3);
    TrainConfig cfg;
    cfg.learning_rate = -1.0;
    EXPECT_THROW(optimize_features(f.scene, f.cameras, f.samples, 3, cfg, f.pool), DomainError);
    cfg = TrainConfig{};
    cfg.momentum = 1.0;
    EXPECT_THROW(validate(cfg), DomainError);
    cfg = TrainConfig{};
    // The only candidate negative equals the target.
    EXPECT_THROW(optimize_features(f.scene, f.cameras, f.samples, 3, cfg), DomainError);
    auto samples = f.samples;
    samples[0].camera = 3;
    EXPECT_THROW(optimize_features(f.scene, f.cameras, samples, 3, cfg, f.pool), DomainError);
    samples = f.samples;
    samples[0].pixels.clear();
    EXPECT_THROW(optimize_features(f.scene, f.cameras, samples, 3, cfg, f.pool), DomainError);
    EXPECT_THROW(optimize_features(f.scene, f.cameras, f.samples, 4, cfg, f.pool), DomainError);
}

TEST(Classify, ArgmaxTiesAndZeroRows) {
    FeatureTable table(3, 2, std::vector<float>{1, 0, 1, 1, 0, 0});
    Eigen::MatrixXd q(2, 2);
    q << 1, 0, 0, 1;
    EXPECT_EQ(classify_gaussians(table, q), (std::vector<int>{0, 0, kUnlabeled}));
    EXPECT_THROW(classify_gaussians(table, Eigen::MatrixXd(0, 2)), DomainError);
}

TEST(Masks, PartitionPixelsPerCamera) {
    const auto synth = generate_scene(cluster_fixture_spec());
    const auto cams = cluster_fixture_cameras();
    const auto targets = orthonormal_targets(8, 16, 5);
    EXPECT_NEAR((targets * targets.transpose() - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    const auto samples = masks_from_labels(synth.scene, synth.labels, cams, targets);
    EXPECT_GE(samples.size(), 8u);
    std::vector<std::set<std::size_t>> seen(cams.size());
    std::set<int> ids;
    for (const auto& s : samples) {
        EXPECT_TRUE(ids.insert(s.id).second);
        bool matches = false;
        for (Eigen::Index r = 0; r < targets.rows(); ++r) matches |= (targets.row(r).transpose() == s.target);
        EXPECT_TRUE(matches);
        for (std::size_t p : s.pixels) EXPECT_TRUE(seen[s.camera].insert(p).second);
    }
}
