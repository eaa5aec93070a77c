/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/integrators.hpp"
#include "qrender/rasterizer.hpp"
#include "qrender/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace qrender {

struct MaskSample {
    /// Index into the camera list passed to optimize_features.
    std::size_t camera = 0;
    /// Pixel indices y * width + x; non-empty.
    std::vector<std::size_t> pixels;
    /// Unit-norm target embedding.
    Eigen::VectorXd target;
    int id = 0;
};

/// Throws DomainError when the sample violates its invariants.
void validate(const MaskSample& sample);

/// SGD with momentum: v <- momentum v + g, f <- f - learning_rate v.
struct TrainConfig {
    double learning_rate = 0.5;
    double momentum = 0.9;
    int steps = 2000;
    /// Negatives drawn per sample and step from the pool; the whole pool when it is smaller.
    int negatives = 7;
    IntegratorConfig integrator{};
    RasterConfig raster{};
    std::uint64_t seed = 0;
    /// Standard deviation of the initial features.
    double init_scale = 0.01;
};

/// Throws DomainError when learning_rate < 0, steps < 1 or momentum outside [0, 1).
void validate(const TrainConfig& cfg);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct LossAndGradient {
    double loss = 0.0;
    /// dL / d rendered.
    Eigen::VectorXd gradient;
};

/// -log(exp(s+) / (exp(s+) + sum_j exp(s-_j))) with s the cosine similarity to the
/// rendered vector. Throws DomainError for a zero rendered vector or no negatives.
LossAndGradient contrastive_loss_and_gradient(const Eigen::VectorXd& rendered, const Eigen::VectorXd& positive,
                                              std::span<const Eigen::VectorXd> negatives);
double contrastive_loss(const Eigen::VectorXd& rendered, const Eigen::VectorXd& positive,
                        std::span<const Eigen::VectorXd> negatives);

/// d rendered / d f_i = coefficient_i * I for each blended entry, zero elsewhere.
struct FeatureJacobian {
    std::vector<std::uint32_t> sources;
    std::vector<double> coefficients;
    bool has_selection = false;
};

/// `sources` maps ray positions to Gaussian ids; empty maps positions to themselves.
FeatureJacobian grad_render_wrt_features(const RaySelection& selection, std::span<const std::uint32_t> sources = {});

/// Linear map from the feature table to a mask's mean rendered feature, merged by Gaussian id.
struct PooledJacobian {
    std::vector<std::uint32_t> sources;
    std::vector<double> coefficients;
};

PooledJacobian pooled_jacobian(const IntersectionLists& lists, std::span<const std::size_t> pixels,
                               const IntegratorConfig& cfg);

struct TrainResult {
    FeatureTable features;
    /// Mean loss over samples before each step.
    std::vector<double> loss_curve;
};

/// Rasterises every camera once, then optimises the table against each sample
/// with negatives drawn from `negative_pool` minus rows equal to the sample's
/// target. An empty pool means the distinct sample targets. Throws
/// TrainingError on a non-finite loss.
TrainResult optimize_features(const GaussianScene& scene, std::span<const CameraModel> cameras,
                              std::span<const MaskSample> samples, std::size_t channels, const TrainConfig& cfg,
                              const Eigen::MatrixXd& negative_pool = {});

/// Continues from `initial` instead of a random table.
TrainResult optimize_features(const GaussianScene& scene, std::span<const CameraModel> cameras,
                              std::span<const MaskSample> samples, const FeatureTable& initial, const TrainConfig& cfg,
                              const Eigen::MatrixXd& negative_pool = {});

inline constexpr int kUnlabeled = -1;

/// Argmax cosine similarity against the query rows; ties go to the lowest query.
/// Zero rows are kUnlabeled.
std::vector<int> classify_gaussians(const FeatureTable& table, const Eigen::MatrixXd& queries);

/// One sample per (camera, label) holding the pixels whose largest dense blending
/// weight belongs to a Gaussian of that label. Targets are rows of `targets`.
std::vector<MaskSample> masks_from_labels(const GaussianScene& scene, std::span<const int> labels,
                                          std::span<const CameraModel> cameras, const Eigen::MatrixXd& targets,
                                          const RasterConfig& raster = {});

}  // namespace qrender
