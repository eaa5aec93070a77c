/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/rasterizer.hpp"
#include "qrender/scene.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrender {

/// Per-ray blending strategy.
///
///  - volume:     dense front-to-back compositing of every entry (early stop at T < early_stop).
///  - quantile:   blend only the entries at which the dense transmittance first crosses each
///                boundary 1 - k/(K+1), then divide by (1 - sparse residual).
///  - topk:       blend the K entries with the largest dense weights, in depth order, with
///                fresh transmittance, then normalise like quantile. This is our
///                reconstruction of the top-K baseline: it isolates the selection rule.
///  - stratified: two passes. Pass one measures the dense weight distribution over depth;
///                pass two places K transmittance targets 1 - W * Phi(z_k) for z_k uniform on
///                (-z_max, z_max) and selects first crossings like quantile. Degenerate depth
///                spread falls back to quantile.
enum class Strategy { volume, quantile, topk, stratified };

std::string_view to_string(Strategy s);
/// Throws DomainError for unknown names.
Strategy parse_strategy(std::string_view name);

struct IntegratorConfig {
    Strategy strategy = Strategy::quantile;
    int k = 40;
    /// Volume rendering stops once transmittance falls below this. 0 gives the exact dense sum.
    double early_stop = 1e-4;
    double z_max = 2.0;
};

/// Throws DomainError when k < 1 for a sparse strategy or early_stop is outside [0, 1).
void validate(const IntegratorConfig& cfg);

/// The entries a strategy blends and their (unnormalised) weights.
struct RaySelection {
    /// Ascending positions within the ray list.
    std::vector<std::size_t> positions;
    std::vector<double> weights;
    /// Transmittance left after blending the selected entries.
    double residual = 1.0;
    /// Sparse strategies divide by (1 - residual); volume does not.
    bool normalized = false;

    bool selected() const noexcept { return !positions.empty(); }
    /// Normalised weight of the i-th selected entry. These are also the Jacobian
    /// coefficients of the rendered value with respect to that entry's payload.
    double normalized_weight(std::size_t i) const {
        return normalized ? weights[i] / (1.0 - residual) : weights[i];
    }
    void clear() {
        positions.clear();
        weights.clear();
        residual = 1.0;
        normalized = false;
    }
};

/// Boundaries 1 - (k+1)/(K+1), k = 0..K-1.
std::vector<double> quantile_boundaries(int k);
/// Stratified targets 1 - total_weight * Phi(z_k), z_k = -z_max + 2 z_max k/(K+1), k = 1..K.
std::vector<double> stratified_boundaries(int k, double total_weight, double z_max);

RaySelection select_volume(std::span<const double> alphas, double early_stop);
/// Quantile Gaussian sampling, line for line.
RaySelection select_quantile(std::span<const double> alphas, int k);
/// First-crossing selection against any strictly decreasing boundary list. With
/// quantile_boundaries(k) this equals select_quantile.
RaySelection select_crossings(std::span<const double> alphas, std::span<const double> boundaries);
RaySelection select_topk(std::span<const double> alphas, int k);
RaySelection select_stratified(std::span<const double> alphas, std::span<const double> depths, int k,
                               double z_max = 2.0);
RaySelection select(const IntegratorConfig& cfg, std::span<const double> alphas, std::span<const double> depths);

struct RayResult {
    Eigen::VectorXd value;
    double residual = 1.0;
    std::vector<std::size_t> selected;
    /// False for an empty selection; value is then zero.
    bool has_selection = false;
};

/// Blends the payload rows (one row per ray entry) with a selection.
RayResult blend(const RaySelection& sel, const Eigen::MatrixXd& values);

RayResult v_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas, double early_stop = 1e-4);
RayResult q_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas, int k);
RayResult topk_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas, int k);
RayResult stratified_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas,
                                std::span<const double> depths, int k, double z_max = 2.0);

/// H x W x C image plus per-pixel residual transmittance and selection flag.
struct RenderedMap {
    int width = 0;
    int height = 0;
    std::size_t channels = 0;
    std::vector<float> values;
    std::vector<float> residual;
    /// 1 where the strategy blended at least one entry.
    std::vector<std::uint8_t> selected;

    std::size_t pixel_index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    std::span<const float> pixel(std::size_t p) const { return {values.data() + p * channels, channels}; }
    float at(int x, int y, std::size_t c) const { return values[pixel_index(x, y) * channels + c]; }

    friend bool operator==(const RenderedMap&, const RenderedMap&) = default;
};

/// View-dependent RGB of every Gaussian as an N x 3 table.
FeatureTable gaussian_colors(const GaussianScene& scene, const CameraModel& cam);

/// Applies the configured integrator to every ray. Payload rows are indexed by
/// Gaussian source index. Deterministic for any worker count.
RenderedMap render_image(const IntersectionLists& lists, const FeatureTable& payload, const IntegratorConfig& cfg,
                         unsigned workers = 0);

/// Rasterises then integrates. Without `features` the payload is the Gaussians' RGB.
RenderedMap render_image(const GaussianScene& scene, const FeatureTable* features, const CameraModel& cam,
                         const IntegratorConfig& cfg, const RasterConfig& raster = {});

struct TraceRecord {
    std::uint32_t gaussian = 0;
    double depth = 0.0;
    double alpha = 0.0;
    double t_before = 1.0;
    double t_after = 1.0;
    bool volume = false;
    bool quantile = false;
    bool topk = false;
    bool stratified = false;
};

/// Dense transmittance profile of one ray with the selections of every strategy.
struct TransmittanceTrace {
    std::size_t ray_id = 0;
    std::vector<TraceRecord> records;
    double quantile_residual = 1.0;
    double topk_residual = 1.0;
    double stratified_residual = 1.0;
};

/// `cfg.k` drives the sparse strategies, `cfg.early_stop` the volume flags.
TransmittanceTrace trace_ray(std::size_t ray_id, std::span<const std::uint32_t> sources,
                             std::span<const double> alphas, std::span<const double> depths,
                             const IntegratorConfig& cfg);
/// Throws DomainError for an out-of-bounds pixel.
TransmittanceTrace trace_transmittance(const IntersectionLists& lists, int x, int y, const IntegratorConfig& cfg);
TransmittanceTrace trace_transmittance(const GaussianScene& scene, const CameraModel& cam, int x, int y,
                                       const IntegratorConfig& cfg, const RasterConfig& raster = {});

}  // namespace qrender
