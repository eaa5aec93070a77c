/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/integrators.hpp"
#include "qrender/rasterizer.hpp"
#include "qrender/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qrender {

struct CosineStats {
    /// Mean over pixels where both vectors are non-zero; NaN when there are none.
    double mean = 0.0;
    std::size_t compared = 0;
    /// Pixels skipped because either vector is zero.
    std::size_t skipped = 0;
};

CosineStats mean_cosine_similarity(const RenderedMap& a, const RenderedMap& b);
/// 10 log10(1 / MSE) over every value; +inf for identical maps.
double psnr(const RenderedMap& a, const RenderedMap& reference);

/// Channel count 3 with `rgb` set renders Gaussian colours; anything else renders
/// smooth synthetic features.
struct PayloadSpec {
    std::size_t channels = 3;
    bool rgb = false;
};

struct BenchConfig {
    std::vector<Strategy> strategies{Strategy::volume, Strategy::quantile};
    std::vector<int> ks{40};
    std::vector<PayloadSpec> payloads{{8, false}, {64, false}, {512, false}};
    int repeats = 3;
    unsigned workers = 0;
    std::uint64_t seed = 0;
    std::string scene_id = "scene";
    double early_stop = 1e-4;
};

struct BenchRecord {
    Strategy strategy = Strategy::volume;
    int k = 0;
    std::size_t channels = 0;
    bool rgb = false;
    std::string scene_id;
    int width = 0;
    int height = 0;
    /// Median integration wall time over the timed repeats.
    double time_ms = 0.0;
    double fps = 0.0;
    double cos_sim = 0.0;
    /// NaN for feature payloads.
    double psnr = 0.0;
    double mean_residual = 0.0;
    std::size_t no_selection = 0;
};

/// Times render_image over pre-rasterised lists. One untimed warm-up per row;
/// fidelity columns compare against the volume render of the same payload. Volume
/// rows ignore `ks` and report K = 0.
std::vector<BenchRecord> run_bench(const GaussianScene& scene, const CameraModel& cam, const BenchConfig& cfg,
                                   const RasterConfig& raster = {});

/// strategy,K,channels,scene_id,image_size,time_ms,fps,cos_sim,psnr,mean_residual
/// preceded by a "# threads=N" comment row.
void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records, unsigned workers);

}  // namespace qrender
