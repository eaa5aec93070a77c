/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

namespace qrender {

/// SplitMix64 finaliser.
std::uint64_t mix_seed(std::uint64_t x);
/// Independent child seed for a named stream: mix(seed ^ mix(fnv1a(stream))).
std::uint64_t split_seed(std::uint64_t seed, std::string_view stream);

/// Clustered random scene.
///
/// Cluster k sits at the origin when there is one cluster, otherwise on a ring of
/// radius `extent` in the xz plane at angle 2 pi k / clusters. Gaussian i belongs
/// to cluster i mod clusters and is placed uniformly in a ball of radius
/// `cluster_radius` around it. Scales are log-uniform per axis, rotations
/// uniform, opacities uniform; SH coefficients are uniform in [-1.5, 1.5] for DC
/// and [-0.3, 0.3] for higher bands.
struct SyntheticSceneSpec {
    std::size_t count = 2000;
    double extent = 2.0;
    double cluster_radius = 1.0;
    double scale_min = 0.05;
    double scale_max = 0.2;
    double opacity_min = 0.05;
    double opacity_max = 0.9;
    int clusters = 1;
    int sh_degree = 0;
    std::uint64_t seed = 0;
};

/// Throws DomainError for inconsistent ranges.
void validate(const SyntheticSceneSpec& spec);

struct SyntheticScene {
    GaussianScene scene;
    std::vector<int> labels;
};

SyntheticScene generate_scene(const SyntheticSceneSpec& spec);

/// Per-Gaussian features that vary smoothly with position: a per-channel bias
/// plus three low-frequency sinusoids of the centre.
FeatureTable smooth_features(const GaussianScene& scene, std::size_t channels, std::uint64_t seed);

/// `count` x `channels` matrix with orthonormal rows. Requires count <= channels.
Eigen::MatrixXd orthonormal_targets(int count, std::size_t channels, std::uint64_t seed);

/// Cameras on a circle of `radius` around `target` at height `elevation`, all looking at `target`.
std::vector<CameraModel> orbit_cameras(int count, double radius, double elevation, const Eigen::Vector3d& target,
                                       int width, int height, double focal);

/// 2,000 faint, wide Gaussians filling a 128 x 128 view: long dense rays.
SyntheticSceneSpec standard_fixture_spec(std::uint64_t seed = 7);
CameraModel standard_fixture_camera();

/// Eight well-separated clusters for distillation.
SyntheticSceneSpec cluster_fixture_spec(std::uint64_t seed = 11);
/// One top-down view plus an oblique orbit, 64 x 64.
std::vector<CameraModel> cluster_fixture_cameras();

}  // namespace qrender
