/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/synth.hpp"

#include "qrender/error.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <random>

namespace qrender {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t seed, std::string_view stream) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix_seed(seed ^ mix_seed(h));
}

void validate(const SyntheticSceneSpec& s) {
    if (s.clusters < 1) throw DomainError("clusters must be at least 1");
    if (!(s.extent >= 0.0) || !(s.cluster_radius >= 0.0)) throw DomainError("extent and cluster_radius must be >= 0");
    if (!(s.scale_min > 0.0) || !(s.scale_max >= s.scale_min)) throw DomainError("scale range must be positive");
    if (!(s.opacity_min > 0.0) || !(s.opacity_max >= s.opacity_min) || !(s.opacity_max < 1.0))
        throw DomainError("opacity range must lie inside (0, 1)");
    if (s.sh_degree < 0 || s.sh_degree > 3) throw DomainError("sh_degree must be in 0..3");
}

SyntheticScene generate_scene(const SyntheticSceneSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(split_seed(spec.seed, "scene"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    std::vector<Eigen::Vector3d> centres;
    for (int k = 0; k < spec.clusters; ++k) {
        if (spec.clusters == 1) {
            centres.emplace_back(Eigen::Vector3d::Zero());
            continue;
        }
        const double angle = 2.0 * std::numbers::pi * k / spec.clusters;
        centres.emplace_back(spec.extent * std::cos(angle), 0.0, spec.extent * std::sin(angle));
    }

    const int coeffs = sh_coeff_count(spec.sh_degree);
    SyntheticScene out;
    std::vector<GaussianPrimitive> gaussians;
    gaussians.reserve(spec.count);
    out.labels.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(spec.clusters));
        GaussianPrimitive g;
        Eigen::Vector3d offset;
        do {
            offset = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
        } while (offset.squaredNorm() > 1.0);
        g.center = centres[static_cast<std::size_t>(label)] + spec.cluster_radius * offset;
        for (int a = 0; a < 3; ++a)
            g.scale[a] = std::exp(uniform(std::log(spec.scale_min), std::log(spec.scale_max)));
        Eigen::Vector4d q;
        do {
            q = {normal(rng), normal(rng), normal(rng), normal(rng)};
        } while (q.norm() < 1e-6);
        q.normalize();
        g.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
        g.opacity = uniform(spec.opacity_min, spec.opacity_max);
        g.sh_degree = spec.sh_degree;
        g.sh.assign(static_cast<std::size_t>(coeffs) * 3, 0.0);
        for (int k = 0; k < coeffs; ++k)
            for (int c = 0; c < 3; ++c)
                g.sh[static_cast<std::size_t>(k * 3 + c)] = k == 0 ? uniform(-1.5, 1.5) : uniform(-0.3, 0.3);
        gaussians.push_back(std::move(g));
        out.labels.push_back(label);
    }
    out.scene = GaussianScene(std::move(gaussians));
    return out;
}

FeatureTable smooth_features(const GaussianScene& scene, std::size_t channels, std::uint64_t seed) {
    if (channels < 1) throw DomainError("feature tables need at least one channel");
    std::mt19937_64 rng(split_seed(seed, "features"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    constexpr int kWaves = 3;

    std::vector<double> bias(channels);
    std::vector<std::array<Eigen::Vector3d, kWaves>> freq(channels);
    std::vector<std::array<double, kWaves>> amp(channels), shift(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        bias[c] = normal(rng);
        for (int w = 0; w < kWaves; ++w) {
            freq[c][static_cast<std::size_t>(w)] = {normal(rng), normal(rng), normal(rng)};
            amp[c][static_cast<std::size_t>(w)] = 0.5 * normal(rng);
            shift[c][static_cast<std::size_t>(w)] = phase(rng);
        }
    }

    FeatureTable table(scene.size(), channels);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        auto row = table.row(i);
        for (std::size_t c = 0; c < channels; ++c) {
            double v = bias[c];
            for (std::size_t w = 0; w < kWaves; ++w)
                v += amp[c][w] * std::sin(freq[c][w].dot(scene[i].center) + shift[c][w]);
            row[c] = static_cast<float>(v);
        }
    }
    return table;
}

Eigen::MatrixXd orthonormal_targets(int count, std::size_t channels, std::uint64_t seed) {
    if (count < 1 || static_cast<std::size_t>(count) > channels)
        throw DomainError("orthonormal targets need 1 <= count <= channels");
    std::mt19937_64 rng(split_seed(seed, "targets"));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(channels), count);
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                              Eigen::MatrixXd::Identity(a.rows(), count);
    return q.transpose();
}

std::vector<CameraModel> orbit_cameras(int count, double radius, double elevation, const Eigen::Vector3d& target,
                                       int width, int height, double focal) {
    std::vector<CameraModel> cams;
    for (int k = 0; k < count; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / count;
        const Eigen::Vector3d eye = target + Eigen::Vector3d(radius * std::cos(angle), elevation, radius * std::sin(angle));
        cams.push_back(look_at(eye, target, Eigen::Vector3d::UnitY(), width, height, focal));
    }
    return cams;
}

SyntheticSceneSpec standard_fixture_spec(std::uint64_t seed) {
    SyntheticSceneSpec s;
    s.count = 2000;
    s.clusters = 1;
    s.cluster_radius = 2.5;
    s.scale_min = 0.25;
    s.scale_max = 0.6;
    s.opacity_min = 0.02;
    s.opacity_max = 0.12;
    s.seed = seed;
    return s;
}

CameraModel standard_fixture_camera() {
    return look_at({0.0, 0.0, -6.0}, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY(), 128, 128, 150.0);
}

SyntheticSceneSpec cluster_fixture_spec(std::uint64_t seed) {
    SyntheticSceneSpec s;
    s.count = 400;
    s.clusters = 8;
    s.extent = 2.0;
    s.cluster_radius = 0.5;
    s.scale_min = 0.05;
    s.scale_max = 0.15;
    s.opacity_min = 0.2;
    s.opacity_max = 0.6;
    s.seed = seed;
    return s;
}

std::vector<CameraModel> cluster_fixture_cameras() {
    std::vector<CameraModel> cams;
    cams.push_back(look_at({0.0, 7.0, 0.0}, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 64, 64, 60.0));
    cams.push_back(look_at({0.0, -7.0, 0.0}, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 64, 64, 60.0));
    for (auto& c : orbit_cameras(4, 6.0, 3.0, Eigen::Vector3d::Zero(), 64, 64, 60.0)) cams.push_back(c);
    return cams;
}

}  // namespace qrender
