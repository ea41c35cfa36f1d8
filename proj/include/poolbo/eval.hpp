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

#ifndef POOLBO_EVAL_HPP
#define POOLBO_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "poolbo/engine.hpp"
#include "poolbo/errors.hpp"

namespace poolbo {

/// Root mean squared error, sqrt((1/N) sum (y_i - yhat_i)^2).
inline double rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw Error("rmse length mismatch: " + std::to_string(y_true.size()) +
                    " vs " + std::to_string(y_pred.size()));
    }
    if (y_true.size() == 0) throw Error("rmse of empty vectors");
    if (!y_true.allFinite() || !y_pred.allFinite()) {
        throw Error("rmse requires finite entries");
    }
    return std::sqrt((y_true - y_pred).squaredNorm() /
                     static_cast<double>(y_true.size()));
}

/// Boxplot five-number summary.
struct Quartiles {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Aggregate statistics over a set of repeated runs. std_rmse uses the
/// sample (n-1) denominator; with a single run it is reported as 0 with
/// std_defined = false. mean_weights is filled only when every run carries
/// final weights.
struct RunSummary {
    std::vector<double> per_run_rmse;
    double mean_rmse = 0.0;
    double std_rmse = 0.0;
    bool std_defined = false;
    Quartiles quartiles;
    std::vector<double> mean_weights;
};

/// Quantile by linear interpolation between order statistics: the value at
/// fractional position q * (n - 1) of the sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("quantile of an empty sample");
    if (q < 0.0 || q > 1.0) throw Error("quantile level must lie in [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

/// Summary of raw per-run RMSE values.
inline RunSummary summarize_values(std::span<const double> per_run) {
    if (per_run.empty()) throw Error("summarize needs at least one run");
    RunSummary out;
    out.per_run_rmse.assign(per_run.begin(), per_run.end());

    double total = 0.0;
    for (double v : per_run) {
        if (!std::isfinite(v)) throw Error("summarize requires finite values");
        total += v;
    }
    const auto n = static_cast<double>(per_run.size());
    out.mean_rmse = total / n;

    if (per_run.size() > 1) {
        double ss = 0.0;
        for (double v : per_run) {
            ss += (v - out.mean_rmse) * (v - out.mean_rmse);
        }
        out.std_rmse = std::sqrt(ss / (n - 1.0));
        out.std_defined = true;
    }

    std::vector<double> sorted = out.per_run_rmse;
    std::sort(sorted.begin(), sorted.end());
    out.quartiles.min = sorted.front();
    out.quartiles.q1 = quantile_sorted(sorted, 0.25);
    out.quartiles.median = quantile_sorted(sorted, 0.5);
    out.quartiles.q3 = quantile_sorted(sorted, 0.75);
    out.quartiles.max = sorted.back();
    return out;
}

/// Summary of completed campaign results. Per-run RMSE is taken from each
/// result; mean_weights averages final_weights across runs when present.
inline RunSummary summarize(std::span<const CampaignResult> results) {
    if (results.empty()) throw Error("summarize needs at least one run");
    std::vector<double> values;
    values.reserve(results.size());
    for (const CampaignResult& r : results) values.push_back(r.test_rmse);
    RunSummary out = summarize_values(values);

    const std::size_t L = results.front().final_weights.size();
    bool weights_present = L > 0;
    for (const CampaignResult& r : results) {
        if (r.final_weights.size() != L) {
            throw Error("runs disagree on the number of model weights");
        }
        weights_present = weights_present && !r.final_weights.empty();
    }
    if (weights_present) {
        out.mean_weights.assign(L, 0.0);
        for (const CampaignResult& r : results) {
            for (std::size_t i = 0; i < L; ++i) {
                out.mean_weights[i] += r.final_weights[i];
            }
        }
        for (double& w : out.mean_weights) {
            w /= static_cast<double>(results.size());
        }
    }
    return out;
}

} // namespace poolbo

#endif // POOLBO_EVAL_HPP
