/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/theory.hpp"

#include "qrender/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace qrender::theory {

namespace {

double segment_end(const ContinuousRayModel& m, std::size_t j) {
    return j + 1 < m.breaks.size() ? m.breaks[j + 1] : std::numeric_limits<double>::infinity();
}

std::size_t segment_of(const ContinuousRayModel& m, double t) {
    auto it = std::upper_bound(m.breaks.begin(), m.breaks.end(), t);
    return it == m.breaks.begin() ? 0 : static_cast<std::size_t>(it - m.breaks.begin()) - 1;
}

// Sorted breakpoints of the integrand on [0, t_max].
std::vector<double> pieces(const ContinuousRayModel& m) {
    std::vector<double> p{0.0, m.t_max};
    for (double b : m.breaks)
        if (b > 0.0 && b < m.t_max) p.push_back(b);
    for (double k : m.knots)
        if (k > 0.0 && k < m.t_max) p.push_back(k);
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
}

long even_steps(long total, double fraction) {
    long n = std::max<long>(2, static_cast<long>(std::llround(static_cast<double>(total) * fraction)));
    return n % 2 == 0 ? n : n + 1;
}

}  // namespace

void validate(const ContinuousRayModel& m) {
    if (m.breaks.empty() || m.breaks.front() != 0.0) throw DomainError("density breaks must start at 0");
    if (m.density.size() != m.breaks.size()) throw DomainError("one density per segment is required");
    for (std::size_t j = 1; j < m.breaks.size(); ++j)
        if (!(m.breaks[j] > m.breaks[j - 1])) throw DomainError("density breaks must be strictly increasing");
    for (double s : m.density)
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("densities must be positive and finite");
    if (m.knots.empty() || m.knots.front() != 0.0) throw DomainError("payload knots must start at 0");
    for (std::size_t j = 1; j < m.knots.size(); ++j)
        if (!(m.knots[j] > m.knots[j - 1])) throw DomainError("payload knots must be strictly increasing");
    if (static_cast<std::size_t>(m.values.rows()) != m.knots.size() || m.values.cols() < 1)
        throw DomainError("payload values must have one row per knot and at least one channel");
    if (!(m.t_max > 0.0) || m.knots.back() > m.t_max) throw DomainError("t_max must be positive and cover every knot");
}

double optical_depth(const ContinuousRayModel& m, double t) {
    double tau = 0.0;
    for (std::size_t j = 0; j < m.breaks.size() && t > m.breaks[j]; ++j)
        tau += m.density[j] * (std::min(t, segment_end(m, j)) - m.breaks[j]);
    return tau;
}

double transmittance_at(const ContinuousRayModel& m, double t) { return std::exp(-optical_depth(m, t)); }

double density_at(const ContinuousRayModel& m, double t) { return m.density[segment_of(m, t)]; }

Eigen::VectorXd payload_at(const ContinuousRayModel& m, double t) {
    if (t <= m.knots.front()) return m.values.row(0).transpose();
    if (t >= m.knots.back()) return m.values.row(m.values.rows() - 1).transpose();
    auto it = std::upper_bound(m.knots.begin(), m.knots.end(), t);
    const auto hi = static_cast<Eigen::Index>(it - m.knots.begin());
    const auto lo = hi - 1;
    const double f = (t - m.knots[static_cast<std::size_t>(lo)]) /
                     (m.knots[static_cast<std::size_t>(hi)] - m.knots[static_cast<std::size_t>(lo)]);
    return ((1.0 - f) * m.values.row(lo) + f * m.values.row(hi)).transpose();
}

double depth_at_transmittance(const ContinuousRayModel& m, double u) {
    if (!(u > 0.0)) return std::numeric_limits<double>::infinity();
    if (u >= 1.0) return 0.0;
    const double tau = -std::log(u);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.breaks.size(); ++j) {
        const double len = segment_end(m, j) - m.breaks[j];
        const double seg = m.density[j] * len;
        if (tau <= acc + seg) return m.breaks[j] + (tau - acc) / m.density[j];
        acc += seg;
    }
    return std::numeric_limits<double>::infinity();
}

Eigen::VectorXd payload_at_transmittance(const ContinuousRayModel& m, double u) {
    if (!(u > 0.0)) return m.values.row(m.values.rows() - 1).transpose();
    return payload_at(m, depth_at_transmittance(m, u));
}

Eigen::VectorXd reference_integral(const ContinuousRayModel& m, long steps) {
    validate(m);
    const auto p = pieces(m);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m.channels());
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double a = p[i], b = p[i + 1];
        const long n = even_steps(steps, (b - a) / m.t_max);
        const double h = (b - a) / static_cast<double>(n);
        const double sigma = density_at(m, 0.5 * (a + b));
        const double t_a = transmittance_at(m, a);
        // Integrand = (c_a + f (c_b - c_a)) sigma T, f = (t - a)/(b - a): accumulate both moments.
        double s0 = 0.0, s1 = 0.0;
        for (long j = 0; j <= n; ++j) {
            const double x = static_cast<double>(j) * h;
            const double w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            const double g = sigma * t_a * std::exp(-sigma * x);
            s0 += w * g;
            s1 += w * g * (x / (b - a));
        }
        s0 *= h / 3.0;
        s1 *= h / 3.0;
        const Eigen::VectorXd c_a = payload_at(m, a);
        const Eigen::VectorXd c_b = payload_at(m, b);
        total += c_a * s0 + (c_b - c_a) * s1;
    }
    total += payload_at(m, m.t_max) * transmittance_at(m, m.t_max);
    return total;
}

Eigen::VectorXd integral_in_u(const ContinuousRayModel& m, long steps) {
    validate(m);
    std::vector<double> us{0.0, 1.0};
    for (double t : pieces(m)) us.push_back(transmittance_at(m, t));
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());

    Eigen::VectorXd total = Eigen::VectorXd::Zero(m.channels());
    for (std::size_t i = 0; i + 1 < us.size(); ++i) {
        const double lo = us[i], hi = us[i + 1];
        const long n = even_steps(steps, hi - lo);
        const double h = (hi - lo) / static_cast<double>(n);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(m.channels());
        for (long j = 0; j <= n; ++j) {
            const double w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            // Endpoints are evaluated from the inside so each piece sees one smooth branch.
            double u = lo + static_cast<double>(j) * h;
            if (j == 0) u = lo + 1e-12 * (hi - lo);
            if (j == n) u = hi - 1e-12 * (hi - lo);
            s += w * payload_at_transmittance(m, u);
        }
        total += s * (h / 3.0);
    }
    return total;
}

Eigen::VectorXd right_riemann_in_u(const ContinuousRayModel& m, int k) {
    if (k < 1) throw DomainError("K must be at least 1");
    const double parts = static_cast<double>(k) + 1.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m.channels());
    for (int j = 1; j <= k + 1; ++j) sum += payload_at_transmittance(m, 1.0 - j / parts);
    return sum / parts;
}

Eigen::VectorXd payload_slope_bound(const ContinuousRayModel& m) {
    validate(m);
    Eigen::VectorXd bound = Eigen::VectorXd::Zero(m.channels());
    const auto p = pieces(m);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double a = p[i], b = p[i + 1];
        if (a >= m.knots.back()) break;
        const Eigen::VectorXd slope = (payload_at(m, b) - payload_at(m, a)) / (b - a);
        // dc/du = -c'(t) / (sigma u); largest at the far end of the piece.
        const double scale = 1.0 / (density_at(m, 0.5 * (a + b)) * transmittance_at(m, b));
        bound = bound.cwiseMax(slope.cwiseAbs() * scale);
    }
    return bound;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

QuadratureReport verify_bound(const ContinuousRayModel& m, std::span<const int> ks, long steps) {
    const Eigen::VectorXd reference = reference_integral(m, steps);
    const double slope_max = payload_slope_bound(m).maxCoeff();
    QuadratureReport report;
    std::vector<double> kx, ey;
    for (int k : ks) {
        QuadratureRow row;
        row.k = k;
        row.approximation = right_riemann_in_u(m, k);
        row.reference = reference;
        row.error = (reference - row.approximation).cwiseAbs().maxCoeff();
        row.bound = slope_max / (2.0 * k);
        if (row.error > row.bound) ++report.violations;
        kx.push_back(k);
        ey.push_back(row.error);
        report.rows.push_back(std::move(row));
    }
    report.slope = log_log_slope(kx, ey);
    return report;
}

Discretization discretize_model(const ContinuousRayModel& m, int n) {
    validate(m);
    if (n < 1) throw DomainError("discretisation needs at least one slab");
    Discretization d;
    d.alphas.resize(static_cast<std::size_t>(n));
    d.depths.resize(static_cast<std::size_t>(n));
    d.values.resize(n, m.channels());
    const double h = m.t_max / n;
    double tau_prev = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t1 = (i + 1 == n) ? m.t_max : h * (i + 1);
        const double tau = optical_depth(m, t1);
        d.alphas[static_cast<std::size_t>(i)] = -std::expm1(-(tau - tau_prev));
        tau_prev = tau;
        const double centre = h * (i + 0.5);
        d.depths[static_cast<std::size_t>(i)] = centre;
        d.values.row(i) = payload_at(m, centre).transpose();
    }
    return d;
}

ContinuousRayModel random_model(std::uint64_t seed, int channels) {
    if (channels < 1) throw DomainError("model needs at least one channel");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    ContinuousRayModel m;
    const int segments = 2 + static_cast<int>(rng() % 4);
    m.breaks = {0.0};
    m.density = {uniform(0.5, 3.0)};
    for (int j = 1; j < segments; ++j) {
        m.breaks.push_back(m.breaks.back() + uniform(0.2, 1.5));
        m.density.push_back(uniform(0.5, 3.0));
    }
    // T(t_max) = exp(-14) < 1e-6.
    m.t_max = depth_at_transmittance(m, std::exp(-14.0));

    const double t_c = depth_at_transmittance(m, uniform(0.02, 0.2));
    const int knots = 2 + static_cast<int>(rng() % 5);
    std::vector<double> interior;
    for (int j = 0; j < knots - 2; ++j) interior.push_back(uniform(0.0, t_c));
    std::sort(interior.begin(), interior.end());
    m.knots = {0.0};
    for (double t : interior)
        if (t > m.knots.back() + 1e-6 && t < t_c - 1e-6) m.knots.push_back(t);
    m.knots.push_back(t_c);
    m.values.resize(static_cast<Eigen::Index>(m.knots.size()), channels);
    for (Eigen::Index r = 0; r < m.values.rows(); ++r)
        for (Eigen::Index c = 0; c < channels; ++c) m.values(r, c) = uniform(-1.0, 1.0);
    return m;
}

void write_report_csv(std::ostream& out, const QuadratureReport& report) {
    out << "K,error,bound,reference_norm\n";
    out.precision(17);
    for (const auto& row : report.rows)
        out << row.k << ',' << row.error << ',' << row.bound << ',' << row.reference.norm() << '\n';
}

}  // namespace qrender::theory
