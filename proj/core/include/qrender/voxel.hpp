/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/scene.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qrender {

/// Width of a composed voxel feature: xyz, rgb, opacity.
inline constexpr int kVoxelFeatureWidth = 7;

enum class SampleShape { center };
enum class Reduce { mean, max };

/// Throws DomainError for unknown names.
Reduce parse_reduce(std::string_view name);

struct VoxelSet {
    double grid_size = 1.0;
    /// Unique integer cells in first-occurrence order.
    std::vector<std::array<std::int32_t, 3>> coords;
    /// One row per unique cell; duplicates are merged by their arithmetic mean.
    Eigen::MatrixXd features;
    /// Sampled voxel -> unique cell.
    std::vector<std::int64_t> inverse;
    /// Sampled voxels per Gaussian; sums to inverse.size().
    std::vector<std::int64_t> counts;

    std::size_t unique_count() const noexcept { return coords.size(); }
};

/// [xyz, rgb, alpha * exp(-dist / 2)] with dist the Mahalanobis distance of xyz
/// from the Gaussian. RGB is the degree-0 colour.
Eigen::Matrix<double, 1, kVoxelFeatureWidth> compose_voxel_features(const GaussianPrimitive& g,
                                                                    const Eigen::Vector3d& voxel_xyz);

/// Throws DomainError unless grid_size is positive and finite.
VoxelSet voxelize(const GaussianScene& scene, double grid_size, SampleShape shape = SampleShape::center);

/// Scatters unique rows to every sampled voxel, then reduces each Gaussian's
/// segment. Empty segments give zero rows. Throws ContractViolation on
/// inconsistent shapes or out-of-range indices.
Eigen::MatrixXd devoxelize(const Eigen::MatrixXd& unique_predictions, std::span<const std::int64_t> inverse,
                           std::span<const std::int64_t> counts, Reduce reduce);

}  // namespace qrender
