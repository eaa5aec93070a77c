/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace qrender {

/// Zeroth-order real spherical-harmonic constant, Y_0^0.
inline constexpr double kShC0 = 0.28209479177387814;

/// Number of SH coefficients per colour channel for a given degree.
constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One anisotropic 3D Gaussian.
///
/// SH coefficients are stored coefficient-major: `sh[k * 3 + channel]` for
/// k in [0, (degree+1)^2). The rotation is a unit quaternion; `rotation.w()`
/// corresponds to the `rot_0` PLY property.
struct GaussianPrimitive {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    double opacity = 0.5;
    int sh_degree = 0;
    std::vector<double> sh = std::vector<double>(3, 0.0);
};

/// Throws DomainError when any GaussianPrimitive invariant is broken.
void validate(const GaussianPrimitive& g);

/// Ordered, immutable collection of Gaussians addressed by their index.
class GaussianScene {
public:
    GaussianScene() = default;
    /// Validates every primitive.
    explicit GaussianScene(std::vector<GaussianPrimitive> gaussians);

    std::size_t size() const noexcept { return gaussians_.size(); }
    bool empty() const noexcept { return gaussians_.empty(); }
    const GaussianPrimitive& operator[](std::size_t i) const { return gaussians_[i]; }
    auto begin() const noexcept { return gaussians_.begin(); }
    auto end() const noexcept { return gaussians_.end(); }
    std::span<const GaussianPrimitive> gaussians() const noexcept { return gaussians_; }

private:
    std::vector<GaussianPrimitive> gaussians_;
};

/// Row-major N x C table of per-Gaussian features in single precision.
class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::size_t rows, std::size_t channels, float fill = 0.0f);
    FeatureTable(std::size_t rows, std::size_t channels, std::vector<float> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t channels() const noexcept { return channels_; }
    std::span<const float> row(std::size_t i) const { return {values_.data() + i * channels_, channels_}; }
    std::span<float> row(std::size_t i) { return {values_.data() + i * channels_, channels_}; }
    const float* data() const noexcept { return values_.data(); }
    float* data() noexcept { return values_.data(); }
    const std::vector<float>& values() const noexcept { return values_; }

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t channels_ = 0;
    std::vector<float> values_;
};

/// Pinhole camera. Camera space is x right, y down, z forward (view depth = z).
struct CameraModel {
    Eigen::Matrix4d world_to_camera = Eigen::Matrix4d::Identity();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    double near = 0.01;

    Eigen::Matrix3d rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
    Eigen::Vector3d translation() const { return world_to_camera.topRightCorner<3, 1>(); }
    /// Camera centre in world coordinates.
    Eigen::Vector3d position() const { return -rotation().transpose() * translation(); }
};

void validate(const CameraModel& cam);

/// Camera at `eye` looking at `target`; `up` is the approximate world up direction.
CameraModel look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                    int width, int height, double focal, double near = 0.01);

/// R S S^T R^T. Throws ContractViolation if |q| deviates from 1 by more than 1e-6.
Eigen::Matrix3d covariance_from(const Eigen::Vector3d& scale, const Eigen::Quaterniond& rotation);

/// Real-SH colour for a unit view direction, with the +0.5 offset and [0, 1] clamp.
std::array<double, 3> evaluate_color(std::span<const double> sh, int degree, const Eigen::Vector3d& direction);

inline std::array<double, 3> evaluate_color(const GaussianPrimitive& g, const Eigen::Vector3d& direction) {
    return evaluate_color(g.sh, g.sh_degree, direction);
}

/// Divides every centre and scale by `a` (a > 0). Rotation, opacity and SH are untouched.
GaussianScene apply_scene_scale(const GaussianScene& scene, double a);

/// L1-optimal global scale for (inverse mono depth, inverse rendered depth) pairs:
/// argmin_a sum |mono - a * rendered|, solved exactly as a weighted median.
double fit_scene_scale(std::span<const std::pair<double, double>> pairs);

}  // namespace qrender
