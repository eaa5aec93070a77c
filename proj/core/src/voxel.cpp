/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/voxel.hpp"

#include "qrender/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>

namespace qrender {

Reduce parse_reduce(std::string_view name) {
    if (name == "mean") return Reduce::mean;
    if (name == "max") return Reduce::max;
    throw DomainError("unknown reduce mode '" + std::string(name) + "'");
}

Eigen::Matrix<double, 1, kVoxelFeatureWidth> compose_voxel_features(const GaussianPrimitive& g,
                                                                    const Eigen::Vector3d& voxel_xyz) {
    const Eigen::Matrix3d cov = covariance_from(g.scale, g.rotation);
    const Eigen::Vector3d d = voxel_xyz - g.center;
    const double dist = d.dot(cov.ldlt().solve(d));
    const auto rgb = evaluate_color(std::span<const double>(g.sh.data(), 3), 0, Eigen::Vector3d::UnitZ());
    Eigen::Matrix<double, 1, kVoxelFeatureWidth> f;
    f << voxel_xyz.x(), voxel_xyz.y(), voxel_xyz.z(), rgb[0], rgb[1], rgb[2], g.opacity * std::exp(-0.5 * dist);
    return f;
}

VoxelSet voxelize(const GaussianScene& scene, double grid_size, SampleShape shape) {
    if (!(grid_size > 0.0) || !std::isfinite(grid_size)) throw DomainError("grid size must be positive and finite");
    (void)shape;

    VoxelSet out;
    out.grid_size = grid_size;
    out.counts.assign(scene.size(), 1);
    out.inverse.resize(scene.size());

    std::map<std::array<std::int32_t, 3>, std::int64_t> seen;
    std::vector<Eigen::Matrix<double, 1, kVoxelFeatureWidth>> sums;
    std::vector<int> merged;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto& g = scene[i];
        std::array<std::int32_t, 3> cell{};
        for (int a = 0; a < 3; ++a) {
            const double c = std::floor(g.center[a] / grid_size);
            if (!(std::abs(c) <= std::numeric_limits<std::int32_t>::max()))
                throw DomainError("voxel coordinate does not fit in 32 bits");
            cell[static_cast<std::size_t>(a)] = static_cast<std::int32_t>(c);
        }
        const auto feature = compose_voxel_features(g, g.center);
        auto [it, inserted] = seen.try_emplace(cell, static_cast<std::int64_t>(out.coords.size()));
        if (inserted) {
            out.coords.push_back(cell);
            sums.push_back(feature);
            merged.push_back(1);
        } else {
            sums[static_cast<std::size_t>(it->second)] += feature;
            ++merged[static_cast<std::size_t>(it->second)];
        }
        out.inverse[i] = it->second;
    }

    out.features.resize(static_cast<Eigen::Index>(sums.size()), kVoxelFeatureWidth);
    for (std::size_t u = 0; u < sums.size(); ++u)
        out.features.row(static_cast<Eigen::Index>(u)) = merged[u] == 1 ? sums[u] : sums[u] / merged[u];
    return out;
}

Eigen::MatrixXd devoxelize(const Eigen::MatrixXd& unique_predictions, std::span<const std::int64_t> inverse,
                           std::span<const std::int64_t> counts, Reduce reduce) {
    std::int64_t total = 0;
    for (std::int64_t c : counts) {
        if (c < 0) throw ContractViolation("voxel counts must be non-negative");
        total += c;
    }
    if (total != static_cast<std::int64_t>(inverse.size()))
        throw ContractViolation("voxel counts must sum to the number of inverse indices");

    // Unique voxels -> all sampled voxels.
    Eigen::MatrixXd voxels(static_cast<Eigen::Index>(inverse.size()), unique_predictions.cols());
    for (std::size_t v = 0; v < inverse.size(); ++v) {
        if (inverse[v] < 0 || inverse[v] >= unique_predictions.rows())
            throw ContractViolation("inverse index " + std::to_string(inverse[v]) + " out of range");
        voxels.row(static_cast<Eigen::Index>(v)) = unique_predictions.row(inverse[v]);
    }

    // Segment reduce over cumulative offsets.
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(counts.size()), unique_predictions.cols());
    Eigen::Index begin = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        const auto n = static_cast<Eigen::Index>(counts[g]);
        if (n > 0) {
            // Sequential accumulation in segment order.
            auto row = out.row(static_cast<Eigen::Index>(g));
            row = voxels.row(begin);
            for (Eigen::Index v = begin + 1; v < begin + n; ++v) {
                if (reduce == Reduce::max) row = row.cwiseMax(voxels.row(v));
                else row += voxels.row(v);
            }
            if (reduce == Reduce::mean) row /= static_cast<double>(n);
        }
        begin += n;
    }
    return out;
}

}  // namespace qrender
