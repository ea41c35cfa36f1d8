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

#ifndef POOLBO_GP_HPP
#define POOLBO_GP_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "poolbo/dataset.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/random.hpp"

namespace poolbo {

/// Smallest diagonal boost ever applied to a kernel matrix, and the lower
/// limit for a model's noise variance.
inline constexpr double k_jitter_floor = 1e-10;

/// Isotropic squared-exponential kernel hyperparameters, in standardized
/// feature/response units.
struct KernelParams {
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    double noise_variance = 1e-2;
};

inline void validate_params(const KernelParams& p) {
    if (!(p.lengthscale > 0.0) || !std::isfinite(p.lengthscale)) {
        throw NumericError("lengthscale must be positive and finite");
    }
    if (!(p.signal_variance > 0.0) || !std::isfinite(p.signal_variance)) {
        throw NumericError("signal variance must be positive and finite");
    }
    if (!(p.noise_variance >= k_jitter_floor) || !std::isfinite(p.noise_variance)) {
        throw NumericError("noise variance must be finite and >= jitter floor");
    }
}

/// k(x1, x2) = signal_variance * exp(-|x1 - x2|^2 / (2 lengthscale^2)).
inline double kernel(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                     const KernelParams& params) {
    validate_params(params);
    if (x1.size() != x2.size()) {
        throw Error("kernel inputs have mismatched dimensions " +
                    std::to_string(x1.size()) + " vs " + std::to_string(x2.size()));
    }
    const double d2 = (x1 - x2).squaredNorm();
    return params.signal_variance *
           std::exp(-d2 / (2.0 * params.lengthscale * params.lengthscale));
}

namespace detail {

/// Pairwise squared distances between rows of X.
inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X) {
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = sq.replicate(1, X.rows()) +
                         sq.transpose().replicate(X.rows(), 1) -
                         2.0 * X * X.transpose();
    return d2.cwiseMax(0.0);
}

/// Noise-free kernel matrix from a precomputed squared-distance matrix.
inline Eigen::MatrixXd se_matrix(const Eigen::MatrixXd& sqdist,
                                 const KernelParams& params) {
    const double inv = -1.0 / (2.0 * params.lengthscale * params.lengthscale);
    return params.signal_variance * (sqdist * inv).array().exp().matrix();
}

} // namespace detail

/// Lower Cholesky factor of K + (noise + jitter) I. The jitter starts at
/// the floor and escalates tenfold up to 1e-4 when the factorization
/// reports the matrix as not positive definite; past that the problem is
/// reported as a numerical error.
inline Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& K,
                                            double noise_variance) {
    constexpr double k_jitter_max = 1e-4;
    for (double jitter = k_jitter_floor; jitter <= k_jitter_max; jitter *= 10.0) {
        Eigen::MatrixXd C = K;
        C.diagonal().array() += noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(C);
        if (llt.info() == Eigen::Success) {
            return llt.matrixL();
        }
    }
    throw NumericError(
        "kernel matrix of size " + std::to_string(K.rows()) +
        " not positive definite with noise " + std::to_string(noise_variance) +
        " even after jitter escalation to 1e-4");
}

/// Exact Gaussian-process state after fitting: standardized training data,
/// hyperparameters, the Cholesky factor of K + noise I, the solved weight
/// vector, and the log marginal likelihood of the training data.
struct GpModel {
    Eigen::MatrixXd inputs;     // m x p, standardized
    Eigen::VectorXd targets;    // m, standardized
    KernelParams params;
    Eigen::MatrixXd chol_lower; // L with L L^T = K + noise I (+ jitter)
    Eigen::VectorXd alpha;      // (K + noise I)^-1 targets
    double log_evidence = 0.0;
};

/// Posterior predictive mean and standard deviation at one point.
struct Prediction {
    double mean = 0.0;
    double std = 0.0;
};

/// log p(y | X, params) = -1/2 y^T a - sum_i log L_ii - m/2 log 2pi,
/// with a = (K + noise I)^-1 y computed through the Cholesky factor.
inline double log_marginal_likelihood(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const KernelParams& params) {
    validate_params(params);
    if (X.rows() != y.size()) throw Error("X rows do not match y length");
    if (X.rows() < 1) throw Error("log marginal likelihood needs >= 1 row");

    const Eigen::MatrixXd K = detail::se_matrix(detail::squared_distances(X), params);
    const Eigen::MatrixXd L = cholesky_with_jitter(K, params.noise_variance);
    const Eigen::VectorXd u = L.triangularView<Eigen::Lower>().solve(y);
    const double m = static_cast<double>(X.rows());
    return -0.5 * u.squaredNorm() - L.diagonal().array().log().sum() -
           0.5 * m * std::log(2.0 * std::numbers::pi);
}

namespace detail {

/// Log marginal likelihood as a function of log-hyperparameters, with its
/// analytic gradient. The squared-distance matrix is shared across
/// evaluations of one training set.
class LmlProblem {
public:
    LmlProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
        : X_(X), y_(y), sqdist_(squared_distances(X)) {}

    struct Eval {
        double value;
        std::array<double, 3> grad; // d/d log(lengthscale, signal, noise)
    };

    /// theta = (log lengthscale, log signal variance, log noise variance).
    Eval operator()(const std::array<double, 3>& theta) const {
        KernelParams p{std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])};
        const Eigen::MatrixXd B = se_matrix(sqdist_, p);
        const Eigen::MatrixXd L = cholesky_with_jitter(B, p.noise_variance);
        const auto lower = L.triangularView<Eigen::Lower>();

        const Eigen::VectorXd u = lower.solve(y_);
        const auto m = X_.rows();
        const double value = -0.5 * u.squaredNorm() -
                             L.diagonal().array().log().sum() -
                             0.5 * static_cast<double>(m) *
                                 std::log(2.0 * std::numbers::pi);

        const Eigen::VectorXd alpha = lower.transpose().solve(u);
        Eigen::MatrixXd Cinv = lower.solve(Eigen::MatrixXd::Identity(m, m));
        Cinv = Cinv.transpose() * Cinv;
        // d lml / d theta_j = 1/2 tr((alpha alpha^T - C^-1) dC/d theta_j)
        const Eigen::MatrixXd A = alpha * alpha.transpose() - Cinv;

        Eval out;
        out.value = value;
        const double inv_l2 = 1.0 / (p.lengthscale * p.lengthscale);
        out.grad[0] =
            0.5 * (A.array() * (B.array() * sqdist_.array() * inv_l2)).sum();
        out.grad[1] = 0.5 * (A.array() * B.array()).sum();
        out.grad[2] = 0.5 * p.noise_variance * A.trace();
        return out;
    }

private:
    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    Eigen::MatrixXd sqdist_;
};

} // namespace detail

/// Search box and optimizer settings for hyperparameter fitting.
struct GpFitConfig {
    int n_restarts = 5;
    int max_opt_iters = 120;
    double grad_tol = 1e-5;
    double lengthscale_min = 1e-2, lengthscale_max = 1e2;
    double signal_min = 1e-2, signal_max = 1e2;
    double noise_min = 1e-6, noise_max = 1e1;
};

/// Fits hyperparameters by maximizing the log marginal likelihood with
/// multi-restart Rprop ascent over log-parameter space inside the config's
/// box. The first start is a fixed heuristic (lengthscale sqrt(p), unit
/// signal, small noise); the rest are drawn uniformly in the log box from
/// the given seed. Deterministic per seed.
inline GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const GpFitConfig& config, std::uint64_t rng_seed,
                   const KernelParams* warm_start = nullptr) {
    if (X.rows() < 2) throw Error("gp fit needs at least 2 rows");
    if (X.rows() != y.size()) throw Error("X rows do not match y length");
    if (!X.allFinite() || !y.allFinite()) {
        throw NumericError("gp fit input contains non-finite values");
    }
    if (config.n_restarts < 1) throw ConfigError("n_restarts must be >= 1");

    const detail::LmlProblem problem(X, y);
    const std::array<double, 3> lo{std::log(config.lengthscale_min),
                                   std::log(config.signal_min),
                                   std::log(config.noise_min)};
    const std::array<double, 3> hi{std::log(config.lengthscale_max),
                                   std::log(config.signal_max),
                                   std::log(config.noise_max)};
    auto clamp_box = [&](std::array<double, 3>& t) {
        for (int j = 0; j < 3; ++j) t[j] = std::clamp(t[j], lo[j], hi[j]);
    };

    SplitMix64 rng(rng_seed);
    std::array<double, 3> best_theta{};
    double best_value = -std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < config.n_restarts; ++restart) {
        std::array<double, 3> theta;
        if (restart == 0 && warm_start != nullptr) {
            theta = {std::log(warm_start->lengthscale),
                     std::log(warm_start->signal_variance),
                     std::log(warm_start->noise_variance)};
        } else if (restart == 0) {
            theta = {std::log(std::sqrt(static_cast<double>(X.cols()))),
                     std::log(1.0), std::log(1e-2)};
        } else {
            for (int j = 0; j < 3; ++j) theta[j] = rng.uniform(lo[j], hi[j]);
        }
        clamp_box(theta);

        // iRprop-: sign-based steps with per-parameter adaptation.
        std::array<double, 3> step{0.1, 0.1, 0.1};
        std::array<double, 3> prev_grad{0.0, 0.0, 0.0};
        std::array<double, 3> prev_theta = theta;

        for (int iter = 0; iter < config.max_opt_iters; ++iter) {
            detail::LmlProblem::Eval eval;
            try {
                eval = problem(theta);
            } catch (const NumericError&) {
                // Retreat to the last good point with smaller steps.
                theta = prev_theta;
                for (auto& s : step) s *= 0.5;
                prev_grad = {0.0, 0.0, 0.0};
                continue;
            }
            if (eval.value > best_value) {
                best_value = eval.value;
                best_theta = theta;
            }
            double max_grad = 0.0;
            for (const double g : eval.grad) {
                max_grad = std::max(max_grad, std::abs(g));
            }
            if (max_grad < config.grad_tol) break;

            prev_theta = theta;
            for (int j = 0; j < 3; ++j) {
                double g = eval.grad[j];
                const double s = g * prev_grad[j];
                if (s > 0.0) {
                    step[j] = std::min(step[j] * 1.2, 1.0);
                } else if (s < 0.0) {
                    step[j] = std::max(step[j] * 0.5, 1e-6);
                    g = 0.0; // iRprop-: skip the move after a sign flip
                }
                if (g > 0.0) theta[j] += step[j];
                else if (g < 0.0) theta[j] -= step[j];
                prev_grad[j] = g;
            }
            clamp_box(theta);
        }
    }

    if (!std::isfinite(best_value)) {
        throw NumericError("hyperparameter search found no usable point");
    }

    GpModel model;
    model.inputs = X;
    model.targets = y;
    model.params = KernelParams{std::exp(best_theta[0]), std::exp(best_theta[1]),
                                std::exp(best_theta[2])};
    const Eigen::MatrixXd K =
        detail::se_matrix(detail::squared_distances(X), model.params);
    model.chol_lower = cholesky_with_jitter(K, model.params.noise_variance);
    model.alpha = model.chol_lower.triangularView<Eigen::Lower>().transpose().solve(
        model.chol_lower.triangularView<Eigen::Lower>().solve(y));
    model.log_evidence = best_value;
    return model;
}

/// Posterior predictive at a standardized input, in standardized units.
/// Negative variance from round-off clamps to zero.
inline Prediction predict_standardized(const GpModel& model,
                                       const Eigen::VectorXd& x_std) {
    if (x_std.size() != model.inputs.cols()) {
        throw Error("query dimension " + std::to_string(x_std.size()) +
                    " does not match model dimension " +
                    std::to_string(model.inputs.cols()));
    }
    const auto m = model.inputs.rows();
    Eigen::VectorXd k_star(m);
    const double inv =
        -1.0 / (2.0 * model.params.lengthscale * model.params.lengthscale);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double d2 = (model.inputs.row(i).transpose() - x_std).squaredNorm();
        k_star(i) = model.params.signal_variance * std::exp(d2 * inv);
    }
    const Eigen::VectorXd v =
        model.chol_lower.triangularView<Eigen::Lower>().solve(k_star);
    const double var =
        std::max(0.0, model.params.signal_variance - v.squaredNorm());
    return Prediction{k_star.dot(model.alpha), std::sqrt(var)};
}

/// Batched posterior predictive for many standardized inputs: means and
/// standard deviations, standardized units.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_standardized_many(
    const GpModel& model, const Eigen::MatrixXd& X_std) {
    if (X_std.cols() != model.inputs.cols()) {
        throw Error("query dimension does not match model dimension");
    }
    const auto m = model.inputs.rows();
    const auto q = X_std.rows();
    // Cross-kernel m x q.
    const Eigen::VectorXd train_sq = model.inputs.rowwise().squaredNorm();
    const Eigen::VectorXd query_sq = X_std.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = train_sq.replicate(1, q) +
                         query_sq.transpose().replicate(m, 1) -
                         2.0 * model.inputs * X_std.transpose();
    const double inv =
        -1.0 / (2.0 * model.params.lengthscale * model.params.lengthscale);
    const Eigen::MatrixXd K_star =
        model.params.signal_variance *
        (d2.cwiseMax(0.0) * inv).array().exp().matrix();

    const Eigen::MatrixXd V =
        model.chol_lower.triangularView<Eigen::Lower>().solve(K_star);
    Eigen::VectorXd means = K_star.transpose() * model.alpha;
    Eigen::VectorXd stds = (model.params.signal_variance -
                            V.colwise().squaredNorm().transpose().array())
                               .max(0.0)
                               .sqrt()
                               .matrix();
    return {std::move(means), std::move(stds)};
}

/// Posterior predictive at an original-units input; the scaling handles
/// standardization on the way in and unscales mean and std on the way out.
inline Prediction predict(const GpModel& model, const Eigen::VectorXd& x_star,
                          const ScalingParams& scaling) {
    if (x_star.size() != model.inputs.cols()) {
        throw Error("query dimension " + std::to_string(x_star.size()) +
                    " does not match model dimension " +
                    std::to_string(model.inputs.cols()));
    }
    const Prediction std_pred =
        predict_standardized(model, scaling.standardize_row(x_star));
    return Prediction{scaling.unstandardize_mean(std_pred.mean),
                      scaling.unstandardize_std(std_pred.std)};
}

} // namespace poolbo

#endif // POOLBO_GP_HPP
