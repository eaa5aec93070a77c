/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/bench.hpp"

#include "qrender/error.hpp"
#include "qrender/parallel.hpp"
#include "qrender/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace qrender {

CosineStats mean_cosine_similarity(const RenderedMap& a, const RenderedMap& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw DomainError("maps differ in shape");
    CosineStats s;
    double sum = 0.0;
    const std::size_t pixels = static_cast<std::size_t>(a.width) * static_cast<std::size_t>(a.height);
    for (std::size_t p = 0; p < pixels; ++p) {
        const auto x = a.pixel(p);
        const auto y = b.pixel(p);
        double dot = 0.0, nx = 0.0, ny = 0.0;
        for (std::size_t c = 0; c < a.channels; ++c) {
            dot += double(x[c]) * y[c];
            nx += double(x[c]) * x[c];
            ny += double(y[c]) * y[c];
        }
        if (nx == 0.0 || ny == 0.0) {
            ++s.skipped;
            continue;
        }
        sum += dot / std::sqrt(nx * ny);
        ++s.compared;
    }
    s.mean = s.compared ? sum / static_cast<double>(s.compared) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

double psnr(const RenderedMap& a, const RenderedMap& reference) {
    if (a.values.size() != reference.values.size() || a.values.empty()) throw DomainError("maps differ in shape");
    double se = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = double(a.values[i]) - reference.values[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.values.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

std::vector<BenchRecord> run_bench(const GaussianScene& scene, const CameraModel& cam, const BenchConfig& cfg,
                                   const RasterConfig& raster) {
    if (cfg.repeats < 1) throw DomainError("bench needs at least one repeat");
    const auto lists = rasterize(scene, cam, raster);
    std::vector<BenchRecord> out;
    for (const auto& payload_spec : cfg.payloads) {
        const FeatureTable payload = payload_spec.rgb ? gaussian_colors(scene, cam)
                                                      : smooth_features(scene, payload_spec.channels, cfg.seed);
        IntegratorConfig ref_cfg;
        ref_cfg.strategy = Strategy::volume;
        ref_cfg.early_stop = cfg.early_stop;
        const RenderedMap reference = render_image(lists, payload, ref_cfg, cfg.workers);

        for (Strategy strategy : cfg.strategies) {
            // Volume does not depend on K and is reported once with K = 0.
            const std::vector<int> ks = strategy == Strategy::volume ? std::vector<int>{0} : cfg.ks;
            for (int k : ks) {
                IntegratorConfig ic;
                ic.strategy = strategy;
                ic.k = k;
                ic.early_stop = cfg.early_stop;
                RenderedMap map = render_image(lists, payload, ic, cfg.workers);
                std::vector<double> times;
                for (int r = 0; r < cfg.repeats; ++r) {
                    const auto t0 = std::chrono::steady_clock::now();
                    map = render_image(lists, payload, ic, cfg.workers);
                    const auto t1 = std::chrono::steady_clock::now();
                    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                }
                std::sort(times.begin(), times.end());
                const std::size_t n = times.size();
                const double median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);

                BenchRecord rec;
                rec.strategy = strategy;
                rec.k = k;
                rec.channels = payload.channels();
                rec.rgb = payload_spec.rgb;
                rec.scene_id = cfg.scene_id;
                rec.width = cam.width;
                rec.height = cam.height;
                rec.time_ms = std::max(median, 1e-6);
                rec.fps = 1000.0 / rec.time_ms;
                const auto cos = mean_cosine_similarity(map, reference);
                rec.cos_sim = cos.mean;
                rec.psnr = payload_spec.rgb ? psnr(map, reference) : std::numeric_limits<double>::quiet_NaN();
                rec.mean_residual =
                    std::accumulate(map.residual.begin(), map.residual.end(), 0.0) / static_cast<double>(map.residual.size());
                rec.no_selection = static_cast<std::size_t>(std::count(map.selected.begin(), map.selected.end(), 0));
                out.push_back(std::move(rec));
            }
        }
    }
    return out;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records, unsigned workers) {
    out << "# threads=" << resolve_workers(workers) << '\n';
    out << "strategy,K,channels,scene_id,image_size,time_ms,fps,cos_sim,psnr,mean_residual\n";
    const auto old = out.precision(10);
    for (const auto& r : records) {
        out << to_string(r.strategy) << ',' << r.k << ',' << (r.rgb ? std::string("rgb") : std::to_string(r.channels))
            << ',' << r.scene_id << ',' << r.width << 'x' << r.height << ',' << r.time_ms << ',' << r.fps << ','
            << r.cos_sim << ',';
        if (!std::isnan(r.psnr)) out << r.psnr;
        out << ',' << r.mean_residual << '\n';
    }
    out.precision(old);
}

}  // namespace qrender
