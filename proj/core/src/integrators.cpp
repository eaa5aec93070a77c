/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/integrators.hpp"

#include "qrender/error.hpp"
#include "qrender/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qrender {

namespace {

double clamp_alpha(double a) { return std::min(a, kAlphaMax); }

void require_k(int k) {
    if (k < 1) throw DomainError("K must be at least 1, got " + std::to_string(k));
}

void volume_into(std::span<const double> alphas, double early_stop, RaySelection& out) {
    out.clear();
    double t = 1.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = clamp_alpha(alphas[i]);
        out.positions.push_back(i);
        out.weights.push_back(t * a);
        t *= 1.0 - a;
        if (t < early_stop) break;
    }
    out.residual = t;
}

void quantile_into(std::span<const double> alphas, int k_max, RaySelection& out) {
    out.clear();
    out.normalized = true;
    const double parts = static_cast<double>(k_max) + 1.0;
    double t = 1.0;
    double t_q = 1.0;
    int k = 0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = clamp_alpha(alphas[i]);
        const double t_test = t * (1.0 - a);
        if (t_test < 1.0 - (k + 1) / parts) {
            ++k;
            out.positions.push_back(i);
            out.weights.push_back(t_q * a);
            t_q *= 1.0 - a;
            while (t_test < 1.0 - (k + 1) / parts) ++k;
        }
        if (t_test < 1.0 / parts) break;
        t = t_test;
    }
    out.residual = t_q;
}

void crossings_into(std::span<const double> alphas, std::span<const double> boundaries, RaySelection& out) {
    out.clear();
    out.normalized = true;
    const std::size_t n = boundaries.size();
    double t = 1.0;
    double t_q = 1.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < alphas.size() && k < n; ++i) {
        const double a = clamp_alpha(alphas[i]);
        const double t_test = t * (1.0 - a);
        if (t_test < boundaries[k]) {
            ++k;
            out.positions.push_back(i);
            out.weights.push_back(t_q * a);
            t_q *= 1.0 - a;
            while (k < n && t_test < boundaries[k]) ++k;
        }
        t = t_test;
    }
    out.residual = t_q;
}

// Re-blends already chosen positions with fresh transmittance.
void reblend(std::span<const double> alphas, RaySelection& out) {
    double t = 1.0;
    out.weights.resize(out.positions.size());
    for (std::size_t j = 0; j < out.positions.size(); ++j) {
        const double a = clamp_alpha(alphas[out.positions[j]]);
        out.weights[j] = t * a;
        t *= 1.0 - a;
    }
    out.residual = t;
    out.normalized = true;
}

struct Candidate {
    double weight;
    std::size_t position;
};

// Heap order placing the weakest candidate on top: smaller weight, then larger position.
bool stronger(const Candidate& l, const Candidate& r) {
    if (l.weight != r.weight) return l.weight > r.weight;
    return l.position < r.position;
}

void topk_into(std::span<const double> alphas, int k, std::vector<Candidate>& heap, RaySelection& out) {
    out.clear();
    heap.clear();
    const std::size_t cap = static_cast<std::size_t>(k);
    double t = 1.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = clamp_alpha(alphas[i]);
        const Candidate c{t * a, i};
        t *= 1.0 - a;
        if (heap.size() < cap) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), stronger);
        } else if (stronger(c, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), stronger);
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end(), stronger);
        }
    }
    out.positions.reserve(heap.size());
    for (const auto& c : heap) out.positions.push_back(c.position);
    std::sort(out.positions.begin(), out.positions.end());
    reblend(alphas, out);
}

void fill_stratified(int k, double total_weight, double z_max, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(k));
    const double parts = static_cast<double>(k) + 1.0;
    for (int j = 1; j <= k; ++j) {
        const double z = -z_max + 2.0 * z_max * j / parts;
        const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
        out[static_cast<std::size_t>(j - 1)] = 1.0 - total_weight * cdf;
    }
}

void stratified_into(std::span<const double> alphas, std::span<const double> depths, int k, double z_max,
                     std::vector<double>& boundaries, RaySelection& out) {
    if (depths.size() != alphas.size()) throw ContractViolation("depths must align with alphas");
    // Pass one: dense weight distribution over depth.
    double t = 1.0;
    double total = 0.0;
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = clamp_alpha(alphas[i]);
        const double w = t * a;
        t *= 1.0 - a;
        total += w;
        mean += w * depths[i];
        second += w * depths[i] * depths[i];
    }
    if (!(total > 0.0)) {
        out.clear();
        out.normalized = true;
        return;
    }
    mean /= total;
    const double variance = std::max(0.0, second / total - mean * mean);
    const double sigma = std::sqrt(variance);
    if (!(sigma > 1e-12 * std::max(1.0, std::abs(mean)))) {
        quantile_into(alphas, k, out);
        return;
    }
    // Pass two: first crossings of the z-score targets.
    fill_stratified(k, total, z_max, boundaries);
    crossings_into(alphas, boundaries, out);
}

// Accumulates sum_i w_i * row_i in double and applies the selection's normalisation.
template <class RowFn>
void blend_into(const RaySelection& sel, RowFn row, std::size_t channels, std::span<double> acc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    if (!sel.selected()) return;
    for (std::size_t j = 0; j < sel.positions.size(); ++j) {
        const double w = sel.weights[j];
        const auto* r = row(sel.positions[j]);
        for (std::size_t c = 0; c < channels; ++c) acc[c] += w * r[c];
    }
    if (sel.normalized) {
        const double norm = 1.0 - sel.residual;
        for (std::size_t c = 0; c < channels; ++c) acc[c] /= norm;
    }
}

struct Scratch {
    RaySelection selection;
    std::vector<Candidate> heap;
    std::vector<double> boundaries;
    std::vector<double> acc;
};

RayResult to_result(const RaySelection& sel, const Eigen::MatrixXd& values) {
    RayResult r;
    r.value = Eigen::VectorXd::Zero(values.cols());
    const std::size_t channels = static_cast<std::size_t>(values.cols());
    // Row-major copy so rows are contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = values;
    blend_into(
        sel, [&](std::size_t p) { return rows.data() + p * channels; }, channels,
        std::span<double>(r.value.data(), channels));
    r.residual = sel.residual;
    r.selected = sel.positions;
    r.has_selection = sel.selected();
    return r;
}

void require_rows(const Eigen::MatrixXd& values, std::span<const double> alphas) {
    if (static_cast<std::size_t>(values.rows()) != alphas.size())
        throw ContractViolation("payload rows (" + std::to_string(values.rows()) + ") must match alphas (" +
                                std::to_string(alphas.size()) + ")");
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::volume: return "volume";
        case Strategy::quantile: return "quantile";
        case Strategy::topk: return "topk";
        case Strategy::stratified: return "stratified";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "volume") return Strategy::volume;
    if (name == "quantile") return Strategy::quantile;
    if (name == "topk") return Strategy::topk;
    if (name == "stratified") return Strategy::stratified;
    throw DomainError("unknown strategy '" + std::string(name) + "'");
}

void validate(const IntegratorConfig& cfg) {
    if (cfg.strategy != Strategy::volume) require_k(cfg.k);
    if (!(cfg.early_stop >= 0.0 && cfg.early_stop < 1.0)) throw DomainError("early_stop must lie in [0, 1)");
    if (!(cfg.z_max > 0.0)) throw DomainError("z_max must be positive");
}

std::vector<double> quantile_boundaries(int k) {
    require_k(k);
    std::vector<double> b(static_cast<std::size_t>(k));
    const double parts = static_cast<double>(k) + 1.0;
    for (int j = 0; j < k; ++j) b[static_cast<std::size_t>(j)] = 1.0 - (j + 1) / parts;
    return b;
}

std::vector<double> stratified_boundaries(int k, double total_weight, double z_max) {
    require_k(k);
    std::vector<double> b;
    fill_stratified(k, total_weight, z_max, b);
    return b;
}

RaySelection select_volume(std::span<const double> alphas, double early_stop) {
    RaySelection out;
    volume_into(alphas, early_stop, out);
    return out;
}

RaySelection select_quantile(std::span<const double> alphas, int k) {
    require_k(k);
    RaySelection out;
    quantile_into(alphas, k, out);
    return out;
}

RaySelection select_crossings(std::span<const double> alphas, std::span<const double> boundaries) {
    for (std::size_t i = 1; i < boundaries.size(); ++i)
        if (!(boundaries[i] < boundaries[i - 1])) throw ContractViolation("boundaries must be strictly decreasing");
    RaySelection out;
    crossings_into(alphas, boundaries, out);
    return out;
}

RaySelection select_topk(std::span<const double> alphas, int k) {
    require_k(k);
    RaySelection out;
    std::vector<Candidate> heap;
    topk_into(alphas, k, heap, out);
    return out;
}

RaySelection select_stratified(std::span<const double> alphas, std::span<const double> depths, int k,
                               double z_max) {
    require_k(k);
    RaySelection out;
    std::vector<double> boundaries;
    stratified_into(alphas, depths, k, z_max, boundaries, out);
    return out;
}

RaySelection select(const IntegratorConfig& cfg, std::span<const double> alphas, std::span<const double> depths) {
    validate(cfg);
    switch (cfg.strategy) {
        case Strategy::volume: return select_volume(alphas, cfg.early_stop);
        case Strategy::quantile: return select_quantile(alphas, cfg.k);
        case Strategy::topk: return select_topk(alphas, cfg.k);
        case Strategy::stratified: return select_stratified(alphas, depths, cfg.k, cfg.z_max);
    }
    return {};
}

RayResult blend(const RaySelection& sel, const Eigen::MatrixXd& values) { return to_result(sel, values); }

RayResult v_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas, double early_stop) {
    require_rows(values, alphas);
    return to_result(select_volume(alphas, early_stop), values);
}

RayResult q_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas, int k) {
    require_rows(values, alphas);
    return to_result(select_quantile(alphas, k), values);
}

RayResult topk_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas, int k) {
    require_rows(values, alphas);
    return to_result(select_topk(alphas, k), values);
}

RayResult stratified_render_ray(const Eigen::MatrixXd& values, std::span<const double> alphas,
                                std::span<const double> depths, int k, double z_max) {
    require_rows(values, alphas);
    return to_result(select_stratified(alphas, depths, k, z_max), values);
}

FeatureTable gaussian_colors(const GaussianScene& scene, const CameraModel& cam) {
    FeatureTable colors(scene.size(), 3);
    const Eigen::Vector3d eye = cam.position();
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto rgb = evaluate_color(scene[i], (scene[i].center - eye).normalized());
        auto row = colors.row(i);
        for (std::size_t c = 0; c < 3; ++c) row[c] = static_cast<float>(rgb[c]);
    }
    return colors;
}

RenderedMap render_image(const IntersectionLists& lists, const FeatureTable& payload, const IntegratorConfig& cfg,
                         unsigned workers) {
    validate(cfg);
    const std::size_t channels = payload.channels();
    for (std::uint32_t s : lists.sources)
        if (s >= payload.rows()) throw ContractViolation("payload has fewer rows than referenced Gaussians");

    RenderedMap map;
    map.width = lists.width;
    map.height = lists.height;
    map.channels = channels;
    const std::size_t pixels = lists.pixel_count();
    map.values.assign(pixels * channels, 0.0f);
    map.residual.assign(pixels, 1.0f);
    map.selected.assign(pixels, 0);

    const float* table = payload.data();
    parallel_for(pixels, workers, [&](std::size_t begin, std::size_t end) {
        Scratch s;
        s.acc.resize(channels);
        for (std::size_t p = begin; p < end; ++p) {
            const auto sources = lists.ray_sources(p);
            const auto alphas = lists.ray_alphas(p);
            auto row = [&](std::size_t pos) { return table + static_cast<std::size_t>(sources[pos]) * channels; };
            double residual = 1.0;
            bool any = false;
            switch (cfg.strategy) {
                case Strategy::volume: {
                    // Fused dense loop: identical arithmetic to select_volume + blend.
                    std::fill(s.acc.begin(), s.acc.end(), 0.0);
                    double t = 1.0;
                    for (std::size_t i = 0; i < alphas.size(); ++i) {
                        const double a = clamp_alpha(alphas[i]);
                        const double w = t * a;
                        const float* r = row(i);
                        for (std::size_t c = 0; c < channels; ++c) s.acc[c] += w * r[c];
                        t *= 1.0 - a;
                        if (t < cfg.early_stop) break;
                    }
                    residual = t;
                    any = !alphas.empty();
                    break;
                }
                case Strategy::quantile: {
                    // Fused quantile sampling, blending and normalisation.
                    std::fill(s.acc.begin(), s.acc.end(), 0.0);
                    const double parts = static_cast<double>(cfg.k) + 1.0;
                    double t = 1.0;
                    double t_q = 1.0;
                    int k = 0;
                    for (std::size_t i = 0; i < alphas.size(); ++i) {
                        const double a = clamp_alpha(alphas[i]);
                        const double t_test = t * (1.0 - a);
                        if (t_test < 1.0 - (k + 1) / parts) {
                            ++k;
                            const double w = t_q * a;
                            const float* r = row(i);
                            for (std::size_t c = 0; c < channels; ++c) s.acc[c] += w * r[c];
                            t_q *= 1.0 - a;
                            any = true;
                            while (t_test < 1.0 - (k + 1) / parts) ++k;
                        }
                        if (t_test < 1.0 / parts) break;
                        t = t_test;
                    }
                    if (any) {
                        const double norm = 1.0 - t_q;
                        for (std::size_t c = 0; c < channels; ++c) s.acc[c] /= norm;
                    }
                    residual = t_q;
                    break;
                }
                case Strategy::topk:
                case Strategy::stratified: {
                    if (cfg.strategy == Strategy::topk)
                        topk_into(alphas, cfg.k, s.heap, s.selection);
                    else
                        stratified_into(alphas, lists.ray_depths(p), cfg.k, cfg.z_max, s.boundaries, s.selection);
                    blend_into(s.selection, row, channels, s.acc);
                    residual = s.selection.residual;
                    any = s.selection.selected();
                    break;
                }
            }
            float* out = map.values.data() + p * channels;
            for (std::size_t c = 0; c < channels; ++c) out[c] = static_cast<float>(s.acc[c]);
            map.residual[p] = static_cast<float>(residual);
            map.selected[p] = any ? 1 : 0;
        }
    });
    return map;
}

RenderedMap render_image(const GaussianScene& scene, const FeatureTable* features, const CameraModel& cam,
                         const IntegratorConfig& cfg, const RasterConfig& raster) {
    if (features && features->rows() != scene.size())
        throw ContractViolation("feature table rows must equal scene size");
    const IntersectionLists lists = rasterize(scene, cam, raster);
    if (features) return render_image(lists, *features, cfg, raster.workers);
    return render_image(lists, gaussian_colors(scene, cam), cfg, raster.workers);
}

TransmittanceTrace trace_ray(std::size_t ray_id, std::span<const std::uint32_t> sources,
                             std::span<const double> alphas, std::span<const double> depths,
                             const IntegratorConfig& cfg) {
    require_k(cfg.k);
    if (sources.size() != alphas.size() || depths.size() != alphas.size())
        throw ContractViolation("trace inputs must have equal length");
    TransmittanceTrace trace;
    trace.ray_id = ray_id;
    trace.records.resize(alphas.size());
    double t = 1.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = clamp_alpha(alphas[i]);
        auto& r = trace.records[i];
        r.gaussian = sources[i];
        r.depth = depths[i];
        r.alpha = a;
        r.t_before = t;
        t *= 1.0 - a;
        r.t_after = t;
    }
    const auto vol = select_volume(alphas, cfg.early_stop);
    const auto q = select_quantile(alphas, cfg.k);
    const auto top = select_topk(alphas, cfg.k);
    const auto strat = select_stratified(alphas, depths, cfg.k, cfg.z_max);
    for (auto p : vol.positions) trace.records[p].volume = true;
    for (auto p : q.positions) trace.records[p].quantile = true;
    for (auto p : top.positions) trace.records[p].topk = true;
    for (auto p : strat.positions) trace.records[p].stratified = true;
    trace.quantile_residual = q.residual;
    trace.topk_residual = top.residual;
    trace.stratified_residual = strat.residual;
    return trace;
}

TransmittanceTrace trace_transmittance(const IntersectionLists& lists, int x, int y, const IntegratorConfig& cfg) {
    if (x < 0 || y < 0 || x >= lists.width || y >= lists.height)
        throw DomainError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the image");
    const std::size_t p = lists.pixel_index(x, y);
    return trace_ray(p, lists.ray_sources(p), lists.ray_alphas(p), lists.ray_depths(p), cfg);
}

TransmittanceTrace trace_transmittance(const GaussianScene& scene, const CameraModel& cam, int x, int y,
                                       const IntegratorConfig& cfg, const RasterConfig& raster) {
    if (x < 0 || y < 0 || x >= cam.width || y >= cam.height)
        throw DomainError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the image");
    return trace_transmittance(rasterize(scene, cam, raster), x, y, cfg);
}

}  // namespace qrender
