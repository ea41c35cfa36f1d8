/*
 * Copyright 2026 The poolbo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef POOLBO_BMA_HPP
#define POOLBO_BMA_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "poolbo/acquisition.hpp"
#include "poolbo/dataset.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/gp.hpp"

namespace poolbo {

/// Posterior model probabilities from log evidences and log priors:
///   w_i = exp(log_ev_i + log_prior_i - logsumexp_j(log_ev_j + log_prior_j)).
/// Evaluated in log space, so evidences around -1e6 normalize as cleanly
/// as well-scaled ones.
inline std::vector<double> compute_weights(std::span<const double> log_evidences,
                                           std::span<const double> log_priors) {
    const std::size_t L = log_evidences.size();
    if (L < 1) throw Error("compute_weights needs at least one model");
    if (log_priors.size() != L) {
        throw Error("log_priors length does not match log_evidences");
    }
    std::vector<double> score(L);
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L; ++i) {
        if (!std::isfinite(log_evidences[i]) || !std::isfinite(log_priors[i])) {
            throw Error("compute_weights requires finite inputs");
        }
        score[i] = log_evidences[i] + log_priors[i];
        max_score = std::max(max_score, score[i]);
    }
    double total = 0.0;
    for (double& s : score) {
        s = std::exp(s - max_score);
        total += s;
    }
    for (double& s : score) s /= total;
    return score;
}

/// One fitted candidate model: its spec, the source-table columns it reads,
/// the scaling fitted on the shared training rows, and the GP itself.
struct EnsembleMember {
    ModelSpec spec;
    std::vector<Eigen::Index> columns;
    ScalingParams scaling;
    GpModel model;
};

/// The full model-averaging state: L fitted GPs over a shared training set
/// plus their posterior weights. Immutable after construction.
struct BmaEnsemble {
    std::vector<EnsembleMember> members;
    std::vector<double> log_evidences;
    std::vector<double> weights;

    std::size_t size() const { return members.size(); }
};

/// Fits one GP per spec on the shared training rows. Every member fit uses
/// the same optimizer seed, so identical specs produce identical members.
/// Feature scaling is per spec; the response scaling comes out identical
/// across members because all fits share the training rows, keeping the
/// log evidences comparable.
inline BmaEnsemble fit_ensemble(const ExperimentTable& table,
                                std::span<const RowIndex> training_indices,
                                std::span<const ModelSpec> specs,
                                const GpFitConfig& config, std::uint64_t rng_seed,
                                std::span<const KernelParams> warm_params = {}) {
    if (specs.empty()) throw Error("ensemble needs at least one model spec");
    if (training_indices.size() < 2) {
        throw Error("ensemble fit needs at least 2 training rows");
    }

    BmaEnsemble ensemble;
    ensemble.members.reserve(specs.size());
    std::vector<double> log_priors;
    log_priors.reserve(specs.size());

    for (std::size_t s = 0; s < specs.size(); ++s) {
        const ModelSpec& spec = specs[s];
        try {
            validate_spec(spec);
            EnsembleMember member;
            member.spec = spec;
            member.columns.reserve(spec.features.size());
            for (const auto& f : spec.features) {
                member.columns.push_back(table.column(f));
            }

            const ExperimentTable projected = project(table, spec);
            member.scaling = fit_scaling(projected, training_indices);
            const Eigen::MatrixXd X =
                member.scaling.standardize(rows_of(projected, training_indices));
            Eigen::VectorXd y = responses_of(projected, training_indices);
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                y(i) = member.scaling.standardize_response(y(i));
            }
            const KernelParams* warm =
                s < warm_params.size() ? &warm_params[s] : nullptr;
            member.model = fit(X, y, config, rng_seed, warm);
            ensemble.log_evidences.push_back(member.model.log_evidence);
            log_priors.push_back(std::log(spec.prior_weight));
            ensemble.members.push_back(std::move(member));
        } catch (const Error& e) {
            throw Error("model '" + spec.name + "': " + e.what());
        }
    }
    ensemble.weights = compute_weights(ensemble.log_evidences, log_priors);
    return ensemble;
}

/// Mixture predictive at one point: the weight-averaged mean and the full
/// mixture standard deviation (within-model variance plus between-model
/// spread), original response units, with per-component values retained.
struct MixturePrediction {
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> component_means;
    std::vector<double> component_stds;
};

namespace detail {

/// Member feature sub-vector from a full-table feature row.
inline Eigen::VectorXd member_features(const EnsembleMember& member,
                                       const Eigen::VectorXd& x_full) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(member.columns.size()));
    for (std::size_t j = 0; j < member.columns.size(); ++j) {
        if (member.columns[j] >= x_full.size()) {
            throw Error("model '" + member.spec.name +
                        "': feature vector too short for column index " +
                        std::to_string(member.columns[j]));
        }
        x(static_cast<Eigen::Index>(j)) = x_full(member.columns[j]);
    }
    return x;
}

/// Exact mixture moments from component moments and weights.
inline std::pair<double, double> mixture_moments(std::span<const double> weights,
                                                 std::span<const double> means,
                                                 std::span<const double> stds) {
    double mean = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) mean += weights[i] * means[i];
    double second = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        second += weights[i] * (stds[i] * stds[i] + means[i] * means[i]);
    }
    const double var = std::max(0.0, second - mean * mean);
    return {mean, std::sqrt(var)};
}

} // namespace detail

/// Mixture predictive at a full-table feature vector (original units).
inline MixturePrediction mixture_predict(const BmaEnsemble& ensemble,
                                         const Eigen::VectorXd& x_full) {
    if (ensemble.members.empty()) throw Error("empty ensemble");
    MixturePrediction out;
    out.component_means.reserve(ensemble.size());
    out.component_stds.reserve(ensemble.size());
    for (const EnsembleMember& member : ensemble.members) {
        const Prediction pred = predict(
            member.model, detail::member_features(member, x_full), member.scaling);
        out.component_means.push_back(pred.mean);
        out.component_stds.push_back(pred.std);
    }
    const auto [mean, std] = detail::mixture_moments(
        ensemble.weights, out.component_means, out.component_stds);
    out.mean = mean;
    out.std = std;
    return out;
}

/// Posterior-weighted average of per-model expected improvement,
///   sum_i w_i EI(mu_i(x), sigma_i(x), incumbent),
/// evaluated in standardized response units. With one model this is
/// exactly the single-model EI.
inline double averaged_ei(const BmaEnsemble& ensemble,
                          const Eigen::VectorXd& x_full,
                          const Incumbent& incumbent) {
    if (ensemble.members.empty()) throw Error("empty ensemble");
    double acc = 0.0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const EnsembleMember& member = ensemble.members[i];
        const Prediction pred = predict_standardized(
            member.model,
            member.scaling.standardize_row(detail::member_features(member, x_full)));
        const double incumbent_std =
            member.scaling.standardize_response(incumbent.value);
        acc += ensemble.weights[i] *
               expected_improvement(pred.mean, pred.std, incumbent_std);
    }
    return acc;
}

/// How the ensemble turns per-model beliefs into one acquisition score.
enum class AcqVariant {
    weighted_ei, ///< weight-averaged per-model EI (default)
    mixture_ei,  ///< EI of the moment-matched mixture predictive
};

/// Scores every pool row under the ensemble and returns them ranked, ties
/// broken by ascending pool index. EI is evaluated in standardized response
/// units; the reported mean/std are the mixture moments in original units.
inline std::vector<ScoredCandidate> rank_pool_bma(const BmaEnsemble& ensemble,
                                                  const ExperimentTable& table,
                                                  std::span<const RowIndex> pool,
                                                  const Incumbent& incumbent,
                                                  AcqVariant variant) {
    if (ensemble.members.empty()) throw Error("empty ensemble");
    if (pool.empty()) throw Error("cannot rank an empty pool");

    const std::size_t L = ensemble.size();
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> predictions;
    predictions.reserve(L);
    for (const EnsembleMember& member : ensemble.members) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(pool.size()),
                          static_cast<Eigen::Index>(member.columns.size()));
        for (std::size_t i = 0; i < pool.size(); ++i) {
            for (std::size_t j = 0; j < member.columns.size(); ++j) {
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    table.features(pool[i], member.columns[j]);
            }
        }
        predictions.push_back(
            predict_standardized_many(member.model, member.scaling.standardize(X)));
    }

    const double incumbent_std =
        ensemble.members.front().scaling.standardize_response(incumbent.value);
    const double response_std_scale =
        ensemble.members.front().scaling.response_std;
    const double response_mean_shift =
        ensemble.members.front().scaling.response_mean;

    std::vector<ScoredCandidate> scored;
    scored.reserve(pool.size());
    std::vector<double> means(L), stds(L);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t s = 0; s < L; ++s) {
            means[s] = predictions[s].first(row);
            stds[s] = predictions[s].second(row);
        }
        const auto [mix_mean, mix_std] =
            detail::mixture_moments(ensemble.weights, means, stds);
        double ei = 0.0;
        if (variant == AcqVariant::weighted_ei) {
            for (std::size_t s = 0; s < L; ++s) {
                ei += ensemble.weights[s] *
                      expected_improvement(means[s], stds[s], incumbent_std);
            }
        } else {
            ei = expected_improvement(mix_mean, mix_std, incumbent_std);
        }
        scored.push_back(ScoredCandidate{
            pool[i], ei, mix_mean * response_std_scale + response_mean_shift,
            mix_std * response_std_scale});
    }
    detail::sort_scored(scored);
    return scored;
}

} // namespace poolbo

#endif // POOLBO_BMA_HPP
