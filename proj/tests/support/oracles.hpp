/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/integrators.hpp"
#include "qrender/rasterizer.hpp"
#include "qrender/scene.hpp"
#include "qrender/voxel.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace qrender::oracle {

/// Every Gaussian against every pixel, no tiles, one sort per pixel.
IntersectionLists naive_rasterize(const GaussianScene& scene, const CameraModel& cam, const RasterConfig& cfg = {});

/// Straight front-to-back compositing of Gaussian colours over naive lists.
RenderedMap naive_volume_rgb(const GaussianScene& scene, const CameraModel& cam, double early_stop);

/// w_i = T_i alpha_i with T_i = prod_{j<i} (1 - alpha_j), alphas clamped to 0.99.
std::vector<double> dense_weights(std::span<const double> alphas);
/// T after each entry.
std::vector<double> dense_profile(std::span<const double> alphas);

Eigen::MatrixXd naive_devoxelize(const Eigen::MatrixXd& unique, std::span<const std::int64_t> inverse,
                                 std::span<const std::int64_t> counts, Reduce reduce);

/// argmin_a sum |m - a r| by a coarse grid over [lo, hi] and successive refinement.
double grid_l1_scale(std::span<const std::pair<double, double>> pairs, double lo, double hi);

/// Random alphas in (0, max_alpha] with occasional values above the clamp.
std::vector<double> random_alphas(std::mt19937_64& rng, std::size_t n, double max_alpha = 0.6);
Eigen::MatrixXd random_values(std::mt19937_64& rng, std::size_t rows, std::size_t channels);
GaussianScene random_scene(std::mt19937_64& rng, std::size_t count, double extent, double depth);
CameraModel small_camera(int width, int height);

}  // namespace qrender::oracle
