/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/bench.hpp"
#include "qrender/distill.hpp"
#include "qrender/error.hpp"
#include "qrender/integrators.hpp"
#include "qrender/io.hpp"
#include "qrender/ply.hpp"
#include "qrender/synth.hpp"
#include "qrender/theory.hpp"
#include "qrender/voxel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qrender;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* flag) {
    std::vector<int> out;
    for (const auto& item : split(s, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": '" + item + "' is not an integer");
        }
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    write_file(path, text);
}

struct Common {
    unsigned workers = 0;
};

int cmd_gen_scene(const std::string& spec_path, const std::string& out, const std::string& labels_out) {
    const auto spec = parse_scene_spec(read_file(spec_path));
    const auto synth = generate_scene(spec);
    write_ply_file(out, synth.scene);
    if (!labels_out.empty()) write_file(labels_out, labels_to_json(synth.labels, spec.clusters));
    std::cout << "wrote " << synth.scene.size() << " gaussians to " << out << '\n';
    return 0;
}

struct RenderArgs {
    std::string scene, camera, strategy = "quantile", features, out;
    int k = 40;
    std::size_t channels = 3;
    double early_stop = 1e-4;
};

int cmd_render(const RenderArgs& a, const Common& common) {
    const Strategy strategy = parse_strategy(a.strategy);
    auto ply = load_ply_file(a.scene);
    const auto cam = parse_camera_json(read_file(a.camera));
    IntegratorConfig cfg;
    cfg.strategy = strategy;
    cfg.k = a.k;
    cfg.early_stop = a.early_stop;
    RasterConfig raster;
    raster.workers = common.workers;

    std::optional<FeatureTable> features;
    if (!a.features.empty()) {
        features = read_feature_table(a.features);
    } else if (a.channels != 3) {
        if (!ply.features) throw UsageError("--channels " + std::to_string(a.channels) + " needs --features");
        features = std::move(ply.features);
    }
    if (features && features->channels() != a.channels && a.channels != 3)
        throw UsageError("--channels does not match the feature table width " + std::to_string(features->channels()));
    if (features && features->rows() != ply.scene.size())
        throw DomainError("feature table has " + std::to_string(features->rows()) + " rows for " +
                          std::to_string(ply.scene.size()) + " gaussians");

    const auto map = render_image(ply.scene, features ? &*features : nullptr, cam, cfg, raster);
    if (!features) {
        write_file(a.out, encode_ppm(map));
    } else {
        write_feature_map(a.out, map);
    }
    const auto missing = std::count(map.selected.begin(), map.selected.end(), 0);
    std::cerr << "rendered " << map.width << 'x' << map.height << 'x' << map.channels << " (" << missing
              << " pixels without selection)\n";
    return 0;
}

struct BenchArgs {
    std::string scene, camera, strategies = "volume,quantile", k_list = "40", c_list = "8,64,512", out = "-",
                                   scene_id;
    int repeats = 3;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a, const Common& common) {
    const auto ply = load_ply_file(a.scene);
    const auto cam = parse_camera_json(read_file(a.camera));
    BenchConfig cfg;
    cfg.strategies.clear();
    for (const auto& s : split(a.strategies, ',')) cfg.strategies.push_back(parse_strategy(s));
    if (cfg.strategies.empty()) throw UsageError("--strategies: empty list");
    cfg.ks = parse_int_list(a.k_list, "--k-list");
    cfg.payloads.clear();
    for (const auto& c : split(a.c_list, ',')) {
        if (c == "rgb") {
            cfg.payloads.push_back({3, true});
            continue;
        }
        const auto v = parse_int_list(c, "--c-list");
        if (v[0] < 1) throw UsageError("--c-list: channel counts must be positive");
        cfg.payloads.push_back({static_cast<std::size_t>(v[0]), false});
    }
    if (cfg.payloads.empty()) throw UsageError("--c-list: empty list");
    if (a.repeats < 1) throw UsageError("--repeats must be at least 1");
    cfg.repeats = a.repeats;
    cfg.workers = common.workers;
    cfg.seed = a.seed;
    cfg.scene_id = a.scene_id.empty() ? std::filesystem::path(a.scene).stem().string() : a.scene_id;
    RasterConfig raster;
    raster.workers = common.workers;

    const auto records = run_bench(ply.scene, cam, cfg, raster);
    std::ostringstream csv;
    write_bench_csv(csv, records, common.workers);
    write_text(a.out, csv.str());
    return 0;
}

struct ProfileArgs {
    std::string scene, camera, pixels, out = "-";
    int k = 10;
};

int cmd_profile(const ProfileArgs& a, const Common& common) {
    const auto ply = load_ply_file(a.scene);
    const auto cam = parse_camera_json(read_file(a.camera));
    RasterConfig raster;
    raster.workers = common.workers;
    IntegratorConfig cfg;
    cfg.k = a.k;
    validate(cfg);
    const auto lists = rasterize(ply.scene, cam, raster);

    std::vector<TransmittanceTrace> traces;
    for (const auto& item : split(a.pixels, ';')) {
        const auto xy = parse_int_list(item, "--pixels");
        if (xy.size() != 2) throw UsageError("--pixels: expected x,y pairs separated by ';'");
        traces.push_back(trace_transmittance(lists, xy[0], xy[1], cfg));
    }
    if (traces.empty()) throw UsageError("--pixels: no pixels given");

    std::ostringstream csv;
    write_trace_csv(csv, traces);
    write_text(a.out, csv.str());

    // T^Q <= 1/(K+1) is measured, not assumed.
    const double limit = 1.0 / (a.k + 1.0);
    std::ostream& log = a.out == "-" ? std::cerr : std::cout;
    log << "ray_id,entries,quantile_residual,limit,within_limit\n";
    for (const auto& t : traces)
        log << t.ray_id << ',' << t.records.size() << ',' << t.quantile_residual << ',' << limit << ','
            << (t.quantile_residual <= limit ? 1 : 0) << '\n';
    return 0;
}

struct TheoryArgs {
    int models = 1000;
    std::string k_list = "2,4,8,16,32,64,128", out = "-";
    std::uint64_t seed = 0;
    long steps = 1'000'000;
    int channels = 1;
};

int cmd_theory(const TheoryArgs& a) {
    if (a.models < 1) throw UsageError("--models must be at least 1");
    if (a.steps < 2) throw UsageError("--steps must be at least 2");
    const auto ks = parse_int_list(a.k_list, "--k-list");
    for (int k : ks)
        if (k < 1) throw UsageError("--k-list: K must be at least 1");

    theory::QuadratureReport aggregate;
    std::vector<double> ref_norm(ks.size(), 0.0);
    aggregate.rows.resize(ks.size());
    int violations = 0;
    for (int m = 0; m < a.models; ++m) {
        const auto model = theory::random_model(split_seed(a.seed, "model-" + std::to_string(m)), a.channels);
        const auto report = theory::verify_bound(model, ks, a.steps);
        violations += report.violations;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            aggregate.rows[i].k = ks[i];
            aggregate.rows[i].error += report.rows[i].error / a.models;
            aggregate.rows[i].bound += report.rows[i].bound / a.models;
            ref_norm[i] += report.rows[i].reference.norm() / a.models;
        }
    }
    std::vector<double> kx, ey;
    std::ostringstream csv;
    csv << "K,error,bound,reference_norm\n";
    csv.precision(17);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const auto& r = aggregate.rows[i];
        csv << r.k << ',' << r.error << ',' << r.bound << ',' << ref_norm[i] << '\n';
        kx.push_back(r.k);
        ey.push_back(r.error);
    }
    write_text(a.out, csv.str());
    std::ostream& log = a.out == "-" ? std::cerr : std::cout;
    log << "models=" << a.models << " violations=" << violations << " slope=" << theory::log_log_slope(kx, ey) << '\n';
    return 0;
}

int cmd_voxelize(const std::string& scene, double grid, const std::string& out) {
    const auto ply = load_ply_file(scene);
    const auto set = voxelize(ply.scene, grid);
    write_file(out, encode_voxels(set));
    std::cout << "gaussians=" << ply.scene.size() << " unique_voxels=" << set.unique_count() << " grid=" << grid << '\n';
    return 0;
}

struct DistillArgs {
    std::string scene, labels, cameras, out, metrics;
    std::size_t channels = 16;
    int steps = 2000;
    double lr = 0.5;
    double momentum = 0.9;
    int negatives = 7;
    int k = 40;
    std::string strategy = "quantile";
    std::uint64_t seed = 0;
};

int cmd_distill(const DistillArgs& a, const Common& common) {
    const auto ply = load_ply_file(a.scene);
    const auto labels = parse_labels_json(read_file(a.labels));
    if (labels.size() != ply.scene.size()) throw DomainError("labels file does not match the scene");
    int clusters = 0;
    for (int l : labels) clusters = std::max(clusters, l + 1);
    if (clusters < 2) throw DomainError("distillation needs at least two labels");

    std::vector<CameraModel> cameras;
    if (a.cameras.empty()) {
        cameras = cluster_fixture_cameras();
    } else {
        const auto j = nlohmann::json::parse(read_file(a.cameras), nullptr, false);
        if (!j.is_array()) throw SchemaError("$: expected an array of cameras");
        for (const auto& c : j) cameras.push_back(parse_camera_json(c.dump()));
    }

    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.momentum = a.momentum;
    cfg.steps = a.steps;
    cfg.negatives = a.negatives;
    cfg.seed = a.seed;
    cfg.integrator.strategy = parse_strategy(a.strategy);
    cfg.integrator.k = a.k;
    cfg.raster.workers = common.workers;

    const auto targets = orthonormal_targets(clusters, a.channels, a.seed);
    const auto samples = masks_from_labels(ply.scene, labels, cameras, targets, cfg.raster);
    const auto result = optimize_features(ply.scene, cameras, samples, a.channels, cfg);
    const auto predicted = classify_gaussians(result.features, targets);
    std::size_t correct = 0, unlabeled = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += predicted[i] == labels[i];
        unlabeled += predicted[i] == kUnlabeled;
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());

    write_feature_table(a.out, result.features, a.seed, a.steps);
    nlohmann::json metrics{{"accuracy", accuracy},
                           {"unlabeled", unlabeled},
                           {"samples", samples.size()},
                           {"steps", a.steps},
                           {"channels", a.channels},
                           {"seed", a.seed},
                           {"final_loss", result.loss_curve.back()},
                           {"loss_curve", result.loss_curve}};
    if (!a.metrics.empty()) write_file(a.metrics, metrics.dump(2) + "\n");
    std::cout << "accuracy=" << accuracy << " final_loss=" << result.loss_curve.back() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CPU Gaussian splatting renderer with sparse quantile integration"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--workers", common.workers, "Worker threads (0 = available parallelism)");

    std::function<int()> run;

    auto* gen = app.add_subcommand("gen-scene", "Generate a seeded synthetic scene");
    std::string gen_spec, gen_out, gen_labels;
    gen->add_option("--spec", gen_spec, "Scene spec JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Output PLY")->required();
    gen->add_option("--labels", gen_labels, "Output labels JSON");
    gen->callback([&] { run = [&] { return cmd_gen_scene(gen_spec, gen_out, gen_labels); }; });

    auto* render = app.add_subcommand("render", "Render RGB or a feature map");
    RenderArgs ra;
    render->add_option("--scene", ra.scene)->required()->check(CLI::ExistingFile);
    render->add_option("--camera", ra.camera)->required()->check(CLI::ExistingFile);
    render->add_option("--strategy", ra.strategy, "volume|quantile|topk|stratified")->capture_default_str();
    render->add_option("--k", ra.k)->capture_default_str();
    render->add_option("--channels", ra.channels, "3 renders RGB unless --features is given")->capture_default_str();
    render->add_option("--features", ra.features, "Feature table (raw f32 with .json sidecar)");
    render->add_option("--early-stop", ra.early_stop)->capture_default_str();
    render->add_option("--out", ra.out)->required();
    render->callback([&] { run = [&] { return cmd_render(ra, common); }; });

    auto* bench = app.add_subcommand("bench", "Time integrators and report fidelity against volume rendering");
    BenchArgs ba;
    bench->add_option("--scene", ba.scene)->required()->check(CLI::ExistingFile);
    bench->add_option("--camera", ba.camera)->required()->check(CLI::ExistingFile);
    bench->add_option("--strategies", ba.strategies)->capture_default_str();
    bench->add_option("--k-list", ba.k_list)->capture_default_str();
    bench->add_option("--c-list", ba.c_list, "Channel counts; 'rgb' benchmarks colours")->capture_default_str();
    bench->add_option("--repeats", ba.repeats)->capture_default_str();
    bench->add_option("--seed", ba.seed)->capture_default_str();
    bench->add_option("--scene-id", ba.scene_id);
    bench->add_option("--out", ba.out, "CSV path or '-'")->capture_default_str();
    bench->callback([&] { run = [&] { return cmd_bench(ba, common); }; });

    auto* profile = app.add_subcommand("profile", "Dense transmittance profile with every strategy's selection");
    ProfileArgs pa;
    profile->add_option("--scene", pa.scene)->required()->check(CLI::ExistingFile);
    profile->add_option("--camera", pa.camera)->required()->check(CLI::ExistingFile);
    profile->add_option("--pixels", pa.pixels, "x,y;x,y;...")->required();
    profile->add_option("--k", pa.k)->capture_default_str();
    profile->add_option("--out", pa.out, "CSV path or '-'")->capture_default_str();
    profile->callback([&] { run = [&] { return cmd_profile(pa, common); }; });

    auto* theory_cmd = app.add_subcommand("theory", "Right-Riemann error against the M/(2K) bound");
    TheoryArgs ta;
    theory_cmd->add_option("--models", ta.models)->capture_default_str();
    theory_cmd->add_option("--k-list", ta.k_list)->capture_default_str();
    theory_cmd->add_option("--seed", ta.seed)->capture_default_str();
    theory_cmd->add_option("--steps", ta.steps, "Simpson steps for the reference")->capture_default_str();
    theory_cmd->add_option("--channels", ta.channels)->capture_default_str();
    theory_cmd->add_option("--out", ta.out, "CSV path or '-'")->capture_default_str();
    theory_cmd->callback([&] { run = [&] { return cmd_theory(ta); }; });

    auto* vox = app.add_subcommand("voxelize", "Centre-sampled voxelisation");
    std::string vox_scene, vox_out;
    double vox_grid = 0.5;
    vox->add_option("--scene", vox_scene)->required()->check(CLI::ExistingFile);
    vox->add_option("--grid", vox_grid)->capture_default_str();
    vox->add_option("--out", vox_out)->required();
    vox->callback([&] { run = [&] { return cmd_voxelize(vox_scene, vox_grid, vox_out); }; });

    auto* distill = app.add_subcommand("distill", "Distil per-Gaussian features from label masks");
    DistillArgs da;
    distill->add_option("--scene", da.scene)->required()->check(CLI::ExistingFile);
    distill->add_option("--labels", da.labels)->required()->check(CLI::ExistingFile);
    distill->add_option("--cameras", da.cameras, "JSON array of cameras (default: fixture views)");
    distill->add_option("--channels", da.channels)->capture_default_str();
    distill->add_option("--steps", da.steps)->capture_default_str();
    distill->add_option("--lr", da.lr)->capture_default_str();
    distill->add_option("--momentum", da.momentum)->capture_default_str();
    distill->add_option("--negatives", da.negatives)->capture_default_str();
    distill->add_option("--strategy", da.strategy)->capture_default_str();
    distill->add_option("--k", da.k)->capture_default_str();
    distill->add_option("--seed", da.seed)->capture_default_str();
    distill->add_option("--out", da.out, "Feature table output")->required();
    distill->add_option("--metrics", da.metrics, "Metrics JSON output");
    distill->callback([&] { run = [&] { return cmd_distill(da, common); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return run();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
