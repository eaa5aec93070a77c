/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/scene.hpp"

#include "qrender/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qrender {

namespace {

constexpr double kUnitTolerance = 1e-6;

constexpr double kShC1 = 0.4886025119029199;
constexpr std::array<double, 5> kShC2 = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                         -1.0925484305920792, 0.5462742152960396};
constexpr std::array<double, 7> kShC3 = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                         0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                         -0.5900435899266435};

bool finite3(const Eigen::Vector3d& v) { return v.allFinite(); }

}  // namespace

void validate(const GaussianPrimitive& g) {
    if (!finite3(g.center)) throw DomainError("gaussian center must be finite");
    if (!finite3(g.scale) || (g.scale.array() <= 0.0).any())
        throw DomainError("gaussian scale components must be finite and strictly positive");
    if (std::abs(g.rotation.norm() - 1.0) > kUnitTolerance)
        throw DomainError("gaussian rotation must be a unit quaternion");
    if (!(g.opacity > 0.0 && g.opacity < 1.0)) throw DomainError("gaussian opacity must lie strictly inside (0, 1)");
    if (g.sh_degree < 0 || g.sh_degree > 3) throw DomainError("SH degree must be in 0..3");
    if (g.sh.size() != static_cast<std::size_t>(sh_coeff_count(g.sh_degree) * 3))
        throw DomainError("SH coefficient count does not match degree " + std::to_string(g.sh_degree));
}

GaussianScene::GaussianScene(std::vector<GaussianPrimitive> gaussians) : gaussians_(std::move(gaussians)) {
    for (const auto& g : gaussians_) validate(g);
}

FeatureTable::FeatureTable(std::size_t rows, std::size_t channels, float fill)
    : rows_(rows), channels_(channels), values_(rows * channels, fill) {
    if (channels == 0) throw DomainError("feature table needs at least one channel");
}

FeatureTable::FeatureTable(std::size_t rows, std::size_t channels, std::vector<float> values)
    : rows_(rows), channels_(channels), values_(std::move(values)) {
    if (channels == 0) throw DomainError("feature table needs at least one channel");
    if (values_.size() != rows * channels) throw ContractViolation("feature table size does not match rows x channels");
}

void validate(const CameraModel& cam) {
    if (cam.width < 1 || cam.height < 1) throw DomainError("camera image size must be at least 1x1");
    if (!(cam.near > 0.0)) throw DomainError("camera near plane must be positive");
    if (!(cam.fx > 0.0 && cam.fy > 0.0)) throw DomainError("camera focal lengths must be positive");
    if (!cam.world_to_camera.allFinite()) throw DomainError("camera transform must be finite");
    const Eigen::Matrix3d r = cam.rotation();
    if (((r * r.transpose()) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
        throw DomainError("camera rotation must be orthonormal");
    const Eigen::RowVector4d last = cam.world_to_camera.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
        throw DomainError("camera transform must be rigid (last row 0 0 0 1)");
}

CameraModel look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                    int width, int height, double focal, double near) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d right = forward.cross(up);
    if (right.norm() < 1e-12) right = forward.unitOrthogonal();
    right.normalize();
    // Image y grows downwards.
    const Eigen::Vector3d down = forward.cross(right);

    CameraModel cam;
    Eigen::Matrix3d r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = forward.transpose();
    cam.world_to_camera.setIdentity();
    cam.world_to_camera.topLeftCorner<3, 3>() = r;
    cam.world_to_camera.topRightCorner<3, 1>() = -r * eye;
    cam.fx = cam.fy = focal;
    cam.width = width;
    cam.height = height;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    cam.near = near;
    return cam;
}

Eigen::Matrix3d covariance_from(const Eigen::Vector3d& scale, const Eigen::Quaterniond& rotation) {
    const double norm = rotation.norm();
    if (std::abs(norm - 1.0) > kUnitTolerance)
        throw ContractViolation("covariance_from requires a unit quaternion");
    const Eigen::Matrix3d r = Eigen::Quaterniond(rotation.coeffs() / norm).toRotationMatrix();
    const Eigen::Matrix3d m = r * scale.asDiagonal();
    Eigen::Matrix3d cov = m * m.transpose();
    // Exact symmetry.
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

std::array<double, 3> evaluate_color(std::span<const double> sh, int degree, const Eigen::Vector3d& direction) {
    if (degree < 0 || degree > 3) throw DomainError("SH degree must be in 0..3");
    if (sh.size() < static_cast<std::size_t>(sh_coeff_count(degree) * 3))
        throw ContractViolation("too few SH coefficients for degree");

    auto coeff = [&](int k, int ch) { return sh[static_cast<std::size_t>(k * 3 + ch)]; };
    const double x = direction.x(), y = direction.y(), z = direction.z();
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, yz = y * z, xz = x * z;

    std::array<double, 3> rgb{};
    for (int ch = 0; ch < 3; ++ch) {
        double v = kShC0 * coeff(0, ch);
        if (degree > 0) {
            v += -kShC1 * y * coeff(1, ch) + kShC1 * z * coeff(2, ch) - kShC1 * x * coeff(3, ch);
        }
        if (degree > 1) {
            v += kShC2[0] * xy * coeff(4, ch) + kShC2[1] * yz * coeff(5, ch) +
                 kShC2[2] * (2.0 * zz - xx - yy) * coeff(6, ch) + kShC2[3] * xz * coeff(7, ch) +
                 kShC2[4] * (xx - yy) * coeff(8, ch);
        }
        if (degree > 2) {
            v += kShC3[0] * y * (3.0 * xx - yy) * coeff(9, ch) + kShC3[1] * xy * z * coeff(10, ch) +
                 kShC3[2] * y * (4.0 * zz - xx - yy) * coeff(11, ch) +
                 kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * coeff(12, ch) +
                 kShC3[4] * x * (4.0 * zz - xx - yy) * coeff(13, ch) + kShC3[5] * z * (xx - yy) * coeff(14, ch) +
                 kShC3[6] * x * (xx - 3.0 * yy) * coeff(15, ch);
        }
        rgb[static_cast<std::size_t>(ch)] = std::clamp(v + 0.5, 0.0, 1.0);
    }
    return rgb;
}

GaussianScene apply_scene_scale(const GaussianScene& scene, double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("scene scale must be a positive finite number");
    std::vector<GaussianPrimitive> out(scene.begin(), scene.end());
    for (auto& g : out) {
        g.center /= a;
        g.scale /= a;
    }
    return GaussianScene(std::move(out));
}

double fit_scene_scale(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) throw EstimationError("scene scale fit needs at least one depth pair");

    struct Ratio {
        double value;
        double weight;
    };
    std::vector<Ratio> ratios;
    ratios.reserve(pairs.size());
    for (const auto& [mono, rendered] : pairs) {
        if (!std::isfinite(mono) || !std::isfinite(rendered) || rendered < 0.0)
            throw DomainError("inverse depths must be finite and rendered inverse depth non-negative");
        // Pairs with zero rendered depth add a constant |mono| to the objective.
        if (rendered > 0.0) ratios.push_back({mono / rendered, rendered});
    }
    if (ratios.empty()) throw EstimationError("all rendered inverse depths are zero");

    std::sort(ratios.begin(), ratios.end(), [](const Ratio& l, const Ratio& r) { return l.value < r.value; });
    const double total = std::accumulate(ratios.begin(), ratios.end(), 0.0,
                                         [](double acc, const Ratio& r) { return acc + r.weight; });
    // The objective sum_i w_i |r_i - a| is minimised where cumulative weight first reaches half.
    double cumulative = 0.0;
    for (const auto& r : ratios) {
        cumulative += r.weight;
        if (cumulative >= 0.5 * total) return r.value;
    }
    return ratios.back().value;
}

}  // namespace qrender
