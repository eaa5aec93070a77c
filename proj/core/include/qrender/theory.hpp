/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace qrender::theory {

/// One-dimensional emission-absorption ray.
///
/// Density is piecewise constant: `density[j]` on [breaks[j], breaks[j+1]), the last
/// segment extending to infinity. Payload is piecewise linear through `knots`
/// (rows of `values`) and constant after the last knot. Every density must be
/// strictly positive so that transmittance is strictly decreasing and can be
/// inverted in closed form.
struct ContinuousRayModel {
    std::vector<double> breaks{0.0};
    std::vector<double> density{1.0};
    std::vector<double> knots{0.0};
    /// knots.size() x C.
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(1, 1);
    /// End of the integration range used by quadrature and discretisation.
    double t_max = 1.0;

    Eigen::Index channels() const { return values.cols(); }
};

/// Throws DomainError when the model is malformed.
void validate(const ContinuousRayModel& model);

double optical_depth(const ContinuousRayModel& model, double t);
/// exp(-integral_0^t sigma).
double transmittance_at(const ContinuousRayModel& model, double t);
double density_at(const ContinuousRayModel& model, double t);
Eigen::VectorXd payload_at(const ContinuousRayModel& model, double t);
/// Inverse of transmittance_at on (0, 1]; u = 0 maps to +infinity.
double depth_at_transmittance(const ContinuousRayModel& model, double u);
/// c(t(u)); at u = 0 this is the payload after the last knot.
Eigen::VectorXd payload_at_transmittance(const ContinuousRayModel& model, double u);

/// integral_0^inf c sigma T dt: composite Simpson on [0, t_max] with `steps` total
/// uniform steps split across the smooth pieces, plus the exact tail c(t_max) T(t_max).
Eigen::VectorXd reference_integral(const ContinuousRayModel& model, long steps = 1'000'000);

/// integral_0^1 c(u) du by composite Simpson in transmittance space, split at the
/// transmittance of every density break and payload knot.
Eigen::VectorXd integral_in_u(const ContinuousRayModel& model, long steps = 1'000'000);

/// sum_{k=1}^{K+1} c(u_k) / (K+1) with u_k = 1 - k/(K+1): the sample at the end of
/// each transmittance interval in ray order.
Eigen::VectorXd right_riemann_in_u(const ContinuousRayModel& model, int k);

/// Per-channel sup |dc/du| over [0, 1].
Eigen::VectorXd payload_slope_bound(const ContinuousRayModel& model);

struct QuadratureRow {
    int k = 0;
    Eigen::VectorXd approximation;
    Eigen::VectorXd reference;
    /// max over channels of |reference - approximation|.
    double error = 0.0;
    /// M / (2K), M = max over channels of sup |dc/du|.
    double bound = 0.0;
};

struct QuadratureReport {
    std::vector<QuadratureRow> rows;
    /// Least-squares slope of log(error) against log(K); NaN with fewer than two positive errors.
    double slope = 0.0;
    int violations = 0;
};

QuadratureReport verify_bound(const ContinuousRayModel& model, std::span<const int> ks, long steps = 1'000'000);

/// Least-squares slope of log(y) on log(x) over entries with y > 0.
double log_log_slope(std::span<const double> x, std::span<const double> y);

struct Discretization {
    std::vector<double> alphas;
    std::vector<double> depths;
    /// n x C, payload at slab centres.
    Eigen::MatrixXd values;
};

/// n equal slabs on [0, t_max]; alpha_i = 1 - exp(-integral over slab of sigma).
Discretization discretize_model(const ContinuousRayModel& model, int n);

/// Random well-conditioned model: 2-5 density segments with sigma in [0.5, 3],
/// T(t_max) <= 1e-6, payload knots confined to where T >= 0.02.
ContinuousRayModel random_model(std::uint64_t seed, int channels = 1);

/// Writes "K,error,bound,reference_norm" rows.
void write_report_csv(std::ostream& out, const QuadratureReport& report);

}  // namespace qrender::theory
