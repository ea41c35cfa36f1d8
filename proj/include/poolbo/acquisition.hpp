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

#ifndef POOLBO_ACQUISITION_HPP
#define POOLBO_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "poolbo/dataset.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/gp.hpp"

namespace poolbo {

/// Standard normal density.
inline double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF through the complementary error function, accurate
/// to ~1e-12 absolute over the real line.
inline double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Expected improvement of a Gaussian belief N(mean, std^2) over the
/// incumbent value, for maximization:
///   EI = d Phi(d / s) + s phi(d / s),  d = mean - incumbent.
/// The zero-variance limit is max(d, 0). Always non-negative.
inline double expected_improvement(double mean, double std, double incumbent_value) {
    if (!std::isfinite(mean) || !std::isfinite(std) ||
        !std::isfinite(incumbent_value)) {
        throw Error("expected improvement requires finite inputs");
    }
    if (std < 0.0) throw Error("expected improvement requires std >= 0");
    const double delta = mean - incumbent_value;
    if (std == 0.0) return std::max(delta, 0.0);
    const double z = delta / std;
    return std::max(0.0, delta * std_normal_cdf(z) + std * std_normal_pdf(z));
}

/// Best observed experiment so far: its response (original units) and its
/// row in the table.
struct Incumbent {
    double value;
    RowIndex index;
};

/// One pool row with its acquisition score. `ei` is evaluated in
/// standardized response units; mean and std are reported in original
/// units.
struct ScoredCandidate {
    RowIndex pool_index;
    double ei;
    double predicted_mean;
    double predicted_std;
};

namespace detail {

/// Descending EI, ties broken by ascending pool index, so rankings do not
/// depend on the order candidates were scored in.
inline void sort_scored(std::vector<ScoredCandidate>& scored) {
    std::sort(scored.begin(), scored.end(),
              [](const ScoredCandidate& a, const ScoredCandidate& b) {
                  if (a.ei != b.ei) return a.ei > b.ei;
                  return a.pool_index < b.pool_index;
              });
}

} // namespace detail

/// Scores every pool row under the model by expected improvement and
/// returns them ranked. The scaling standardizes candidate features and the
/// incumbent so EI is evaluated on the scale the model was fitted on.
inline std::vector<ScoredCandidate> rank_pool(const GpModel& model,
                                              const ExperimentTable& table,
                                              std::span<const RowIndex> pool,
                                              const Incumbent& incumbent,
                                              const ScalingParams& scaling) {
    if (pool.empty()) throw Error("cannot rank an empty pool");
    const Eigen::MatrixXd X_std = scaling.standardize(rows_of(table, pool));
    const auto [means, stds] = predict_standardized_many(model, X_std);
    const double incumbent_std = scaling.standardize_response(incumbent.value);

    std::vector<ScoredCandidate> scored;
    scored.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        scored.push_back(ScoredCandidate{
            pool[i],
            expected_improvement(means(row), stds(row), incumbent_std),
            scaling.unstandardize_mean(means(row)),
            scaling.unstandardize_std(stds(row))});
    }
    detail::sort_scored(scored);
    return scored;
}

/// Greedy top-q batch: the first min(q, |ranked|) candidates of the ranked
/// list. With q = 1 this is exactly the acquisition argmax.
inline std::vector<RowIndex> select_batch(std::span<const ScoredCandidate> ranked,
                                          std::size_t q) {
    if (q < 1) throw Error("batch size must be >= 1");
    const std::size_t take = std::min(q, ranked.size());
    std::vector<RowIndex> batch;
    batch.reserve(take);
    for (std::size_t i = 0; i < take; ++i) batch.push_back(ranked[i].pool_index);
    return batch;
}

} // namespace poolbo

#endif // POOLBO_ACQUISITION_HPP
