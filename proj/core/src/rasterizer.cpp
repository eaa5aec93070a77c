/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/rasterizer.hpp"

#include "qrender/error.hpp"
#include "qrender/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace qrender {

namespace {

struct PixelBox {
    int x0, y0, x1, y1;  // inclusive
};

// Inclusive pixel-centre bounding box of the cutoff ellipse, padded so that
// rounding can never drop a pixel that evaluate_alpha would accept.
std::optional<PixelBox> footprint(const ProjectedGaussian& pg, int width, int height, double cutoff) {
    const double rx = cutoff * std::sqrt(pg.cov(0, 0)) + 1e-6;
    const double ry = cutoff * std::sqrt(pg.cov(1, 1)) + 1e-6;
    const double lo_x = std::ceil(pg.mean.x() - rx);
    const double hi_x = std::floor(pg.mean.x() + rx);
    const double lo_y = std::ceil(pg.mean.y() - ry);
    const double hi_y = std::floor(pg.mean.y() + ry);
    if (!(hi_x >= 0.0 && lo_x <= width - 1 && hi_y >= 0.0 && lo_y <= height - 1)) return std::nullopt;
    return PixelBox{static_cast<int>(std::max(lo_x, 0.0)), static_cast<int>(std::max(lo_y, 0.0)),
                    static_cast<int>(std::min(hi_x, double(width - 1))),
                    static_cast<int>(std::min(hi_y, double(height - 1)))};
}

struct Entry {
    std::uint32_t source;
    double alpha;
    double depth;
};

}  // namespace

Eigen::Matrix2d project_covariance(const Eigen::Matrix3d& cov3d, const Eigen::Vector3d& cam_point,
                                   const CameraModel& cam) {
    const double x = cam_point.x(), y = cam_point.y(), z = cam_point.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx / z, 0.0, -cam.fx * x / (z * z),
           0.0, cam.fy / z, -cam.fy * y / (z * z);
    const Eigen::Matrix<double, 2, 3> t = jac * cam.rotation();
    Eigen::Matrix2d cov = t * cov3d * t.transpose();
    cov(1, 0) = cov(0, 1);
    return cov;
}

std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g, std::uint32_t source,
                                                  const CameraModel& cam, const RasterConfig& cfg) {
    const Eigen::Vector3d p = cam.rotation() * g.center + cam.translation();
    if (!(p.z() > cam.near)) return std::nullopt;

    ProjectedGaussian pg;
    pg.source = source;
    pg.depth = p.z();
    pg.opacity = g.opacity;
    pg.mean = {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
    pg.cov = project_covariance(covariance_from(g.scale, g.rotation), p, cam);
    pg.cov(0, 0) += cfg.dilation;
    pg.cov(1, 1) += cfg.dilation;
    const double det = pg.cov.determinant();
    if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;
    pg.conic << pg.cov(1, 1) / det, -pg.cov(0, 1) / det, -pg.cov(1, 0) / det, pg.cov(0, 0) / det;

    if (!footprint(pg, cam.width, cam.height, cfg.cutoff_sigma)) return std::nullopt;

    const Eigen::Vector3d dir = (g.center - cam.position()).normalized();
    const auto rgb = evaluate_color(g, dir);
    for (int c = 0; c < 3; ++c) pg.color[static_cast<std::size_t>(c)] = static_cast<float>(rgb[static_cast<std::size_t>(c)]);
    return pg;
}

std::optional<double> evaluate_alpha(const ProjectedGaussian& pg, const Eigen::Vector2d& pixel,
                                     const RasterConfig& cfg) {
    const Eigen::Vector2d d = pixel - pg.mean;
    const double maha = d.x() * (pg.conic(0, 0) * d.x() + pg.conic(0, 1) * d.y()) +
                        d.y() * (pg.conic(1, 0) * d.x() + pg.conic(1, 1) * d.y());
    if (!(maha <= cfg.cutoff_sigma * cfg.cutoff_sigma)) return std::nullopt;
    const double alpha = std::min(cfg.alpha_max, pg.opacity * std::exp(-0.5 * maha));
    if (!(alpha >= cfg.alpha_min)) return std::nullopt;
    return alpha;
}

std::vector<ProjectedGaussian> project_scene(const GaussianScene& scene, const CameraModel& cam,
                                             const RasterConfig& cfg) {
    validate(cam);
    std::vector<std::optional<ProjectedGaussian>> slots(scene.size());
    parallel_for(scene.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            slots[i] = project_gaussian(scene[i], static_cast<std::uint32_t>(i), cam, cfg);
    });
    std::vector<ProjectedGaussian> out;
    out.reserve(scene.size());
    for (auto& s : slots)
        if (s) out.push_back(*s);
    return out;
}

IntersectionLists rasterize(const GaussianScene& scene, const CameraModel& cam, const RasterConfig& cfg) {
    const auto projected = project_scene(scene, cam, cfg);
    return rasterize(projected, cam.width, cam.height, cfg);
}

IntersectionLists rasterize(std::span<const ProjectedGaussian> projected, int width, int height,
                            const RasterConfig& cfg) {
    if (width < 1 || height < 1) throw DomainError("rasterize needs a non-empty image");
    if (cfg.tile_size < 1) throw DomainError("tile size must be positive");

    const int tile = cfg.tile_size;
    const int tiles_x = (width + tile - 1) / tile;
    const int tiles_y = (height + tile - 1) / tile;
    const std::size_t tile_count = static_cast<std::size_t>(tiles_x) * static_cast<std::size_t>(tiles_y);

    // Bin projected Gaussians into every tile their footprint box touches.
    std::vector<std::vector<std::uint32_t>> bins(tile_count);
    for (std::uint32_t i = 0; i < projected.size(); ++i) {
        const auto box = footprint(projected[i], width, height, cfg.cutoff_sigma);
        if (!box) continue;
        for (int ty = box->y0 / tile; ty <= box->y1 / tile; ++ty)
            for (int tx = box->x0 / tile; tx <= box->x1 / tile; ++tx)
                bins[static_cast<std::size_t>(ty) * static_cast<std::size_t>(tiles_x) + static_cast<std::size_t>(tx)]
                    .push_back(i);
    }

    const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<std::vector<Entry>> staged(pixels);

    parallel_for(tile_count, cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            auto& bin = bins[t];
            std::sort(bin.begin(), bin.end(), [&](std::uint32_t a, std::uint32_t b) {
                const auto& pa = projected[a];
                const auto& pb = projected[b];
                if (pa.depth != pb.depth) return pa.depth < pb.depth;
                return pa.source < pb.source;
            });
            const int tx = static_cast<int>(t % static_cast<std::size_t>(tiles_x));
            const int ty = static_cast<int>(t / static_cast<std::size_t>(tiles_x));
            const int x_end = std::min(width, (tx + 1) * tile);
            const int y_end = std::min(height, (ty + 1) * tile);
            for (int y = ty * tile; y < y_end; ++y) {
                for (int x = tx * tile; x < x_end; ++x) {
                    auto& list = staged[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                        static_cast<std::size_t>(x)];
                    const Eigen::Vector2d pixel(x, y);
                    for (std::uint32_t idx : bin) {
                        const auto& pg = projected[idx];
                        if (auto a = evaluate_alpha(pg, pixel, cfg)) list.push_back({pg.source, *a, pg.depth});
                    }
                }
            }
        }
    });

    IntersectionLists out;
    out.width = width;
    out.height = height;
    out.offsets.resize(pixels + 1, 0);
    for (std::size_t p = 0; p < pixels; ++p) out.offsets[p + 1] = out.offsets[p] + staged[p].size();
    const std::size_t total = out.offsets.back();
    out.sources.resize(total);
    out.alphas.resize(total);
    out.depths.resize(total);
    for (std::size_t p = 0; p < pixels; ++p) {
        std::size_t k = out.offsets[p];
        for (const Entry& e : staged[p]) {
            out.sources[k] = e.source;
            out.alphas[k] = e.alpha;
            out.depths[k] = e.depth;
            ++k;
        }
    }
    return out;
}

}  // namespace qrender
