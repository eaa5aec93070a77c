/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/distill.hpp"

#include "qrender/error.hpp"
#include "qrender/parallel.hpp"
#include "qrender/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace qrender {

void validate(const MaskSample& s) {
    if (s.pixels.empty()) throw DomainError("mask sample " + std::to_string(s.id) + " has no pixels");
    if (s.target.size() == 0 || std::abs(s.target.norm() - 1.0) > 1e-6)
        throw DomainError("mask sample " + std::to_string(s.id) + " target must be unit norm");
}

void validate(const TrainConfig& cfg) {
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw DomainError("learning rate must be finite and non-negative");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw DomainError("momentum must be in [0, 1)");
    if (cfg.steps < 1) throw DomainError("steps must be at least 1");
    if (cfg.negatives < 1) throw DomainError("at least one negative per step is required");
    if (!(cfg.init_scale >= 0.0)) throw DomainError("init_scale must be non-negative");
    validate(cfg.integrator);
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine similarity of a zero vector is undefined");
    return a.dot(b) / (na * nb);
}

LossAndGradient contrastive_loss_and_gradient(const Eigen::VectorXd& rendered, const Eigen::VectorXd& positive,
                                              std::span<const Eigen::VectorXd> negatives) {
    if (negatives.empty()) throw DomainError("contrastive loss needs at least one negative");
    const double norm = rendered.norm();
    if (!(norm > 0.0)) throw DomainError("contrastive loss is undefined for a zero rendered vector");
    const Eigen::VectorXd unit = rendered / norm;

    // Softmax over [positive, negatives...] with the positive in the denominator.
    std::vector<double> sims;
    sims.reserve(negatives.size() + 1);
    sims.push_back(unit.dot(positive) / positive.norm());
    for (const auto& n : negatives) sims.push_back(unit.dot(n) / n.norm());
    const double top = *std::max_element(sims.begin(), sims.end());
    double denom = 0.0;
    for (double s : sims) denom += std::exp(s - top);
    const double log_denom = top + std::log(denom);

    LossAndGradient out;
    out.loss = log_denom - sims[0];
    // ds/df = (t/|t| - s f/|f|) / |f|.
    out.gradient = Eigen::VectorXd::Zero(rendered.size());
    auto add = [&](const Eigen::VectorXd& t, double s, double coeff) {
        out.gradient += coeff * (t / t.norm() - s * unit) / norm;
    };
    add(positive, sims[0], std::exp(sims[0] - log_denom) - 1.0);
    for (std::size_t j = 0; j < negatives.size(); ++j) add(negatives[j], sims[j + 1], std::exp(sims[j + 1] - log_denom));
    return out;
}

double contrastive_loss(const Eigen::VectorXd& rendered, const Eigen::VectorXd& positive,
                        std::span<const Eigen::VectorXd> negatives) {
    return contrastive_loss_and_gradient(rendered, positive, negatives).loss;
}

FeatureJacobian grad_render_wrt_features(const RaySelection& sel, std::span<const std::uint32_t> sources) {
    FeatureJacobian j;
    j.has_selection = sel.selected();
    for (std::size_t i = 0; i < sel.positions.size(); ++i) {
        const std::size_t pos = sel.positions[i];
        j.sources.push_back(sources.empty() ? static_cast<std::uint32_t>(pos) : sources[pos]);
        j.coefficients.push_back(sel.normalized_weight(i));
    }
    return j;
}

PooledJacobian pooled_jacobian(const IntersectionLists& lists, std::span<const std::size_t> pixels,
                               const IntegratorConfig& cfg) {
    std::vector<std::pair<std::uint32_t, double>> terms;
    const double share = 1.0 / static_cast<double>(pixels.size());
    const std::size_t count = static_cast<std::size_t>(lists.width) * static_cast<std::size_t>(lists.height);
    for (std::size_t p : pixels) {
        if (p >= count) throw DomainError("mask pixel outside the image");
        const auto sel = select(cfg, lists.ray_alphas(p), lists.ray_depths(p));
        const auto jac = grad_render_wrt_features(sel, lists.ray_sources(p));
        for (std::size_t i = 0; i < jac.sources.size(); ++i) terms.emplace_back(jac.sources[i], jac.coefficients[i] * share);
    }
    std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    PooledJacobian out;
    for (const auto& [src, c] : terms) {
        if (!out.sources.empty() && out.sources.back() == src) {
            out.coefficients.back() += c;
        } else {
            out.sources.push_back(src);
            out.coefficients.push_back(c);
        }
    }
    return out;
}

namespace {

FeatureTable to_table(const Eigen::MatrixXd& f) {
    FeatureTable t(static_cast<std::size_t>(f.rows()), static_cast<std::size_t>(f.cols()));
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index c = 0; c < f.cols(); ++c)
            t.row(static_cast<std::size_t>(i))[static_cast<std::size_t>(c)] = static_cast<float>(f(i, c));
    return t;
}

Eigen::MatrixXd to_matrix(const FeatureTable& t) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.channels()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t c = 0; c < t.channels(); ++c)
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t.row(i)[c];
    return f;
}

TrainResult train(const GaussianScene& scene, std::span<const CameraModel> cameras, std::span<const MaskSample> samples,
                  Eigen::MatrixXd features, const TrainConfig& cfg, const Eigen::MatrixXd& negative_pool) {
    validate(cfg);
    if (samples.empty()) throw DomainError("distillation needs at least one mask sample");
    const auto channels = features.cols();
    for (const auto& s : samples) {
        validate(s);
        if (s.camera >= cameras.size()) throw DomainError("mask sample refers to a missing camera");
        if (s.target.size() != channels) throw DomainError("target width differs from the feature width");
    }

    std::vector<Eigen::VectorXd> pool;
    if (negative_pool.size() == 0) {
        for (const auto& s : samples) {
            const bool known = std::any_of(pool.begin(), pool.end(), [&](const auto& p) { return p == s.target; });
            if (!known) pool.push_back(s.target);
        }
    } else {
        if (negative_pool.cols() != channels) throw DomainError("negative pool width differs from the feature width");
        for (Eigen::Index r = 0; r < negative_pool.rows(); ++r) pool.push_back(negative_pool.row(r).transpose());
    }
    std::vector<std::vector<std::size_t>> candidates(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        for (std::size_t p = 0; p < pool.size(); ++p)
            if ((pool[p] - samples[s].target).norm() > 1e-12) candidates[s].push_back(p);
        if (candidates[s].empty()) throw DomainError("mask sample " + std::to_string(samples[s].id) + " has no negatives");
    }

    // Geometry is fixed: each sample's pooled render is a constant linear map.
    std::vector<IntersectionLists> lists;
    for (const auto& cam : cameras) lists.push_back(rasterize(scene, cam, cfg.raster));
    std::vector<PooledJacobian> maps(samples.size());
    parallel_for(samples.size(), cfg.raster.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s)
            maps[s] = pooled_jacobian(lists[samples[s].camera], samples[s].pixels, cfg.integrator);
    });
    for (const auto& m : maps)
        for (std::uint32_t src : m.sources)
            if (src >= features.rows()) throw DomainError("feature table is smaller than the scene");

    std::mt19937_64 rng(split_seed(cfg.seed, "negatives"));
    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(features.rows(), channels);
    Eigen::MatrixXd grad(features.rows(), channels);
    std::vector<Eigen::VectorXd> negatives;
    TrainResult out;
    out.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));
    const double inv_samples = 1.0 / static_cast<double>(samples.size());

    for (int step = 0; step < cfg.steps; ++step) {
        grad.setZero();
        double loss = 0.0;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const auto& map = maps[s];
            if (map.sources.empty()) continue;
            Eigen::VectorXd rendered = Eigen::VectorXd::Zero(channels);
            for (std::size_t i = 0; i < map.sources.size(); ++i)
                rendered += map.coefficients[i] * features.row(map.sources[i]).transpose();

            auto& cand = candidates[s];
            const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(cfg.negatives));
            if (take < cand.size())
                for (std::size_t i = 0; i < take; ++i) {
                    std::uniform_int_distribution<std::size_t> pick(i, cand.size() - 1);
                    std::swap(cand[i], cand[pick(rng)]);
                }
            negatives.clear();
            for (std::size_t i = 0; i < take; ++i) negatives.push_back(pool[cand[i]]);

            if (!(rendered.norm() > 0.0) || !rendered.allFinite())
                throw TrainingError("rendered feature collapsed at step " + std::to_string(step), step);
            const auto lg = contrastive_loss_and_gradient(rendered, samples[s].target, negatives);
            loss += lg.loss * inv_samples;
            for (std::size_t i = 0; i < map.sources.size(); ++i)
                grad.row(map.sources[i]) += (map.coefficients[i] * inv_samples) * lg.gradient.transpose();
        }
        if (!std::isfinite(loss)) throw TrainingError("loss diverged at step " + std::to_string(step), step);
        out.loss_curve.push_back(loss);
        velocity = cfg.momentum * velocity + grad;
        features -= cfg.learning_rate * velocity;
        if (!features.allFinite()) throw TrainingError("features diverged at step " + std::to_string(step), step);
    }
    out.features = to_table(features);
    return out;
}

}  // namespace

TrainResult optimize_features(const GaussianScene& scene, std::span<const CameraModel> cameras,
                              std::span<const MaskSample> samples, std::size_t channels, const TrainConfig& cfg,
                              const Eigen::MatrixXd& negative_pool) {
    if (channels < 1) throw DomainError("feature tables need at least one channel");
    std::mt19937_64 rng(split_seed(cfg.seed, "init"));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd f(static_cast<Eigen::Index>(scene.size()), static_cast<Eigen::Index>(channels));
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index c = 0; c < f.cols(); ++c) f(i, c) = static_cast<float>(cfg.init_scale * normal(rng));
    return train(scene, cameras, samples, std::move(f), cfg, negative_pool);
}

TrainResult optimize_features(const GaussianScene& scene, std::span<const CameraModel> cameras,
                              std::span<const MaskSample> samples, const FeatureTable& initial, const TrainConfig& cfg,
                              const Eigen::MatrixXd& negative_pool) {
    if (initial.rows() != scene.size()) throw DomainError("feature table row count differs from the scene");
    return train(scene, cameras, samples, to_matrix(initial), cfg, negative_pool);
}

std::vector<int> classify_gaussians(const FeatureTable& table, const Eigen::MatrixXd& queries) {
    if (queries.rows() < 1) throw DomainError("classification needs at least one query");
    if (static_cast<std::size_t>(queries.cols()) != table.channels())
        throw DomainError("query width differs from the feature width");
    Eigen::MatrixXd q = queries;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        const double n = q.row(r).norm();
        if (!(n > 0.0)) throw DomainError("queries must be non-zero");
        q.row(r) /= n;
    }
    std::vector<int> labels(table.rows(), kUnlabeled);
    for (std::size_t i = 0; i < table.rows(); ++i) {
        Eigen::VectorXd f(q.cols());
        for (Eigen::Index c = 0; c < f.size(); ++c) f[c] = table.row(i)[static_cast<std::size_t>(c)];
        const double n = f.norm();
        if (!(n > 0.0)) continue;
        const Eigen::VectorXd scores = q * (f / n);
        int best = 0;
        for (Eigen::Index r = 1; r < scores.size(); ++r)
            if (scores[r] > scores[best]) best = static_cast<int>(r);
        labels[i] = best;
    }
    return labels;
}

std::vector<MaskSample> masks_from_labels(const GaussianScene& scene, std::span<const int> labels,
                                          std::span<const CameraModel> cameras, const Eigen::MatrixXd& targets,
                                          const RasterConfig& raster) {
    if (labels.size() != scene.size()) throw DomainError("one label per Gaussian is required");
    std::vector<MaskSample> out;
    for (std::size_t c = 0; c < cameras.size(); ++c) {
        const auto lists = rasterize(scene, cameras[c], raster);
        std::map<int, std::vector<std::size_t>> groups;
        const std::size_t pixels = static_cast<std::size_t>(lists.width) * static_cast<std::size_t>(lists.height);
        for (std::size_t p = 0; p < pixels; ++p) {
            const auto alphas = lists.ray_alphas(p);
            if (alphas.empty()) continue;
            double t = 1.0, best = -1.0;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < alphas.size(); ++i) {
                const double w = t * alphas[i];
                if (w > best) {
                    best = w;
                    arg = i;
                }
                t *= 1.0 - alphas[i];
            }
            const int label = labels[lists.ray_sources(p)[arg]];
            if (label >= 0) groups[label].push_back(p);
        }
        for (auto& [label, px] : groups) {
            if (label >= targets.rows()) throw DomainError("label without a target embedding");
            MaskSample s;
            s.camera = c;
            s.pixels = std::move(px);
            s.target = targets.row(label).transpose();
            s.id = static_cast<int>(out.size());
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace qrender
