/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/scene.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qrender {

/// Upper clamp applied to every effective opacity.
inline constexpr double kAlphaMax = 0.99;
/// Effective opacities below this are dropped from ray lists.
inline constexpr double kAlphaMin = 1.0 / 255.0;

struct RasterConfig {
    int tile_size = 16;
    double alpha_min = kAlphaMin;
    double alpha_max = kAlphaMax;
    /// Pixels farther than this many standard deviations (Mahalanobis) are outside the footprint.
    double cutoff_sigma = 3.0;
    /// Low-pass filter added to the projected covariance diagonal, in px^2.
    double dilation = 0.3;
    unsigned workers = 0;
};

/// Screen-space footprint of one Gaussian.
struct ProjectedGaussian {
    std::uint32_t source = 0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
    /// Inverse of `cov`.
    Eigen::Matrix2d conic = Eigen::Matrix2d::Identity();
    /// Camera-space z of the centre.
    double depth = 0.0;
    double opacity = 0.0;
    std::array<float, 3> color{};
};

/// Projected covariance before dilation: first two rows/cols of J W Sigma W^T J^T.
Eigen::Matrix2d project_covariance(const Eigen::Matrix3d& cov3d, const Eigen::Vector3d& cam_point,
                                   const CameraModel& cam);

/// EWA projection. Returns nullopt when the centre is at or behind the near plane
/// or the cutoff ellipse's bounding box misses every pixel centre.
std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g, std::uint32_t source,
                                                  const CameraModel& cam, const RasterConfig& cfg = {});

/// alpha' = min(alpha_max, opacity * exp(-d^T conic d / 2)) at a pixel position.
/// Returns nullopt when the pixel is outside the cutoff ellipse or alpha' < alpha_min.
/// Pixel (x, y) is sampled at coordinates (x, y).
std::optional<double> evaluate_alpha(const ProjectedGaussian& pg, const Eigen::Vector2d& pixel,
                                     const RasterConfig& cfg = {});

/// Per-pixel depth-ordered intersection lists in CSR form. Entry arrays are
/// parallel; ray(p) spans [offsets[p], offsets[p+1]).
struct IntersectionLists {
    int width = 0;
    int height = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> sources;
    std::vector<double> alphas;
    std::vector<double> depths;

    std::size_t pixel_index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    std::size_t pixel_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t ray_size(std::size_t p) const { return offsets[p + 1] - offsets[p]; }
    std::span<const std::uint32_t> ray_sources(std::size_t p) const {
        return {sources.data() + offsets[p], ray_size(p)};
    }
    std::span<const double> ray_alphas(std::size_t p) const { return {alphas.data() + offsets[p], ray_size(p)}; }
    std::span<const double> ray_depths(std::size_t p) const { return {depths.data() + offsets[p], ray_size(p)}; }
    double mean_ray_length() const {
        return pixel_count() == 0 ? 0.0 : static_cast<double>(sources.size()) / static_cast<double>(pixel_count());
    }

    friend bool operator==(const IntersectionLists&, const IntersectionLists&) = default;
};

/// Projects every Gaussian; the result keeps scene order and omits culled ones.
std::vector<ProjectedGaussian> project_scene(const GaussianScene& scene, const CameraModel& cam,
                                             const RasterConfig& cfg = {});

/// Tile-binned rasterisation. Each ray lists the Gaussians with alpha' >= alpha_min
/// inside their cutoff ellipse, sorted by (depth, source index). The output does
/// not depend on tile size or worker count.
IntersectionLists rasterize(const GaussianScene& scene, const CameraModel& cam, const RasterConfig& cfg = {});
IntersectionLists rasterize(std::span<const ProjectedGaussian> projected, int width, int height,
                            const RasterConfig& cfg = {});

}  // namespace qrender
