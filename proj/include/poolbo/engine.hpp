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

#ifndef POOLBO_ENGINE_HPP
#define POOLBO_ENGINE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "poolbo/acquisition.hpp"
#include "poolbo/bma.hpp"
#include "poolbo/dataset.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/gp.hpp"
#include "poolbo/random.hpp"

namespace poolbo {

/// Whether the campaign runs one fixed model or a model-averaged ensemble.
enum class Mode { bo, bma };

/// How the next batch is chosen: by acquisition score or uniformly at
/// random (the control policy used for sanity comparisons).
enum class Policy { ei, random };

/// Full description of one campaign. Total observation budget is
/// n_init + batch_size * n_iterations.
struct CampaignConfig {
    int n_init = 5;
    int batch_size = 3;
    int n_iterations = 40;
    Mode mode = Mode::bma;
    std::vector<ModelSpec> specs;
    GpFitConfig gp;
    std::uint64_t rng_seed = 0;
    AcqVariant acq_variant = AcqVariant::weighted_ei;
    Policy policy = Policy::ei;
    /// When true, each refit seeds its first optimizer start from the
    /// previous iteration's hyperparameters. Off by default so every
    /// iteration's model depends only on the observed data and the seed.
    bool warm_start = false;

    int budget() const { return n_init + batch_size * n_iterations; }

    void validate() const {
        if (n_init < 2) throw ConfigError("n_init must be at least 2");
        if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (n_iterations < 0) throw ConfigError("n_iterations must be >= 0");
        if (specs.empty()) throw ConfigError("at least one model spec required");
        if (mode == Mode::bo && specs.size() != 1) {
            throw ConfigError("bo mode requires exactly one model spec, got " +
                              std::to_string(specs.size()));
        }
        for (const ModelSpec& spec : specs) validate_spec(spec);
    }
};

/// Everything one campaign produced. selected_indices lists observed rows
/// in acquisition order (the sorted initial draw first, then each batch in
/// pick order). incumbent_trajectory holds the best observed response in
/// original units: entry 0 after initialization, entry i after iteration i.
/// Weight fields are populated in bma mode only; weight_trajectory has one
/// entry per in-loop refit and final_weights comes from the final fit on
/// the full observed set.
struct CampaignResult {
    std::vector<RowIndex> selected_indices;
    std::vector<RowIndex> test_indices;
    std::vector<double> incumbent_trajectory;
    std::vector<double> final_weights;
    std::vector<std::vector<double>> weight_trajectory;
    double test_rmse = 0.0;
    std::uint64_t run_seed = 0;
};

namespace detail {

inline void update_incumbent(const ExperimentTable& table,
                             std::span<const RowIndex> new_rows,
                             Incumbent& incumbent) {
    for (RowIndex r : new_rows) {
        // Strict comparison: on ties the earlier observation stays incumbent.
        if (table.responses(r) > incumbent.value) {
            incumbent.value = table.responses(r);
            incumbent.index = r;
        }
    }
}

inline std::vector<KernelParams> member_params(const BmaEnsemble& ensemble) {
    std::vector<KernelParams> out;
    out.reserve(ensemble.size());
    for (const EnsembleMember& m : ensemble.members) out.push_back(m.model.params);
    return out;
}

/// Mixture posterior means over a set of rows, original response units.
inline Eigen::VectorXd mixture_means(const BmaEnsemble& ensemble,
                                     const ExperimentTable& table,
                                     std::span<const RowIndex> rows) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t s = 0; s < ensemble.size(); ++s) {
        const EnsembleMember& member = ensemble.members[s];
        Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(member.columns.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < member.columns.size(); ++j) {
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    table.features(rows[i], member.columns[j]);
            }
        }
        const auto [means_std, stds_std] =
            predict_standardized_many(member.model, member.scaling.standardize(X));
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) += ensemble.weights[s] *
                      member.scaling.unstandardize_mean(means_std(i));
        }
    }
    return out;
}

} // namespace detail

/// Runs one seeded campaign: draw the initial design, then for each
/// iteration refit on everything observed, score the pool, pick the top
/// batch, and reveal its recorded responses; finish with a full refit and
/// an RMSE over every row never selected. Deterministic given the config.
inline CampaignResult run_campaign(const ExperimentTable& table,
                                   const CampaignConfig& config) {
    config.validate();
    const int budget = config.budget();
    if (table.n_rows() < budget) {
        throw Error("table has " + std::to_string(table.n_rows()) +
                    " rows, fewer than the budget " + std::to_string(budget));
    }

    SplitMix64 rng(config.rng_seed);
    const std::uint64_t partition_seed = rng.next();
    const PoolPartition part =
        partition(table, config.n_init, budget, partition_seed);

    std::vector<RowIndex> observed = part.initial_indices;
    std::vector<RowIndex> pool = part.pool_indices;

    CampaignResult result;
    result.run_seed = config.rng_seed;
    result.selected_indices = observed;

    Incumbent incumbent{-std::numeric_limits<double>::infinity(), -1};
    detail::update_incumbent(table, observed, incumbent);
    result.incumbent_trajectory.push_back(incumbent.value);

    std::vector<KernelParams> warm;
    for (int iter = 1; iter <= config.n_iterations; ++iter) {
        if (pool.size() < static_cast<std::size_t>(config.batch_size)) {
            throw Error("pool exhausted at iteration " + std::to_string(iter) +
                        ": " + std::to_string(pool.size()) + " candidates left, " +
                        std::to_string(config.batch_size) + " needed");
        }

        std::vector<RowIndex> batch;
        if (config.policy == Policy::ei) {
            const std::uint64_t fit_seed = rng.next();
            BmaEnsemble ensemble;
            try {
                ensemble = fit_ensemble(table, observed, config.specs, config.gp,
                                        fit_seed, warm);
            } catch (const Error& e) {
                throw Error("iteration " + std::to_string(iter) + ": " + e.what());
            }
            if (config.mode == Mode::bma) {
                result.weight_trajectory.push_back(ensemble.weights);
            }
            const std::vector<ScoredCandidate> ranked = rank_pool_bma(
                ensemble, table, pool, incumbent, config.acq_variant);
            batch = select_batch(ranked, config.batch_size);
            if (config.warm_start) warm = detail::member_params(ensemble);
        } else {
            // Control policy: a uniform batch, no surrogate in the loop.
            SplitMix64 sel(rng.next());
            const std::vector<std::size_t> picks =
                sample_without_replacement(pool.size(), config.batch_size, sel);
            batch.reserve(picks.size());
            for (std::size_t p : picks) batch.push_back(pool[p]);
        }

        for (RowIndex r : batch) {
            observed.push_back(r);
            result.selected_indices.push_back(r);
            pool.erase(std::find(pool.begin(), pool.end(), r));
        }
        detail::update_incumbent(table, batch, incumbent);
        result.incumbent_trajectory.push_back(incumbent.value);
    }

    const std::uint64_t final_seed = rng.next();
    BmaEnsemble final_ensemble;
    try {
        final_ensemble = fit_ensemble(table, observed, config.specs, config.gp,
                                      final_seed, warm);
    } catch (const Error& e) {
        throw Error("final fit: " + std::string(e.what()));
    }
    if (config.mode == Mode::bma) {
        result.final_weights = final_ensemble.weights;
    }

    result.test_indices = pool;
    if (pool.empty()) {
        throw Error("no test rows remain after the campaign (budget equals "
                    "table size)");
    }
    const Eigen::VectorXd predictions =
        detail::mixture_means(final_ensemble, table, pool);
    const Eigen::VectorXd truth = responses_of(table, pool);
    result.test_rmse = std::sqrt((truth - predictions).squaredNorm() /
                                 static_cast<double>(pool.size()));
    return result;
}

/// Outcome slot for one run of a repeated campaign. A failed run keeps its
/// index and seed and carries the error text instead of a result.
struct RepeatedRun {
    int run_index = 0;
    std::uint64_t seed = 0;
    std::optional<CampaignResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }
};

/// Runs n_runs campaigns with per-run seeds derive_seed(base_seed, i).
/// Runs may execute on up to n_workers threads; each run owns its state
/// and writes only its own slot, so the output is ordered by run index
/// and independent of worker count. A failing run is captured in place
/// and never aborts its siblings.
inline std::vector<RepeatedRun> run_repeated(const ExperimentTable& table,
                                             const CampaignConfig& config,
                                             int n_runs, std::uint64_t base_seed,
                                             int n_workers = 1) {
    if (n_runs < 1) throw Error("run_repeated needs at least one run");

    std::vector<RepeatedRun> runs(static_cast<std::size_t>(n_runs));
    for (int i = 0; i < n_runs; ++i) {
        runs[static_cast<std::size_t>(i)].run_index = i;
        runs[static_cast<std::size_t>(i)].seed = derive_seed(base_seed, i);
    }

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_runs) return;
            RepeatedRun& slot = runs[static_cast<std::size_t>(i)];
            CampaignConfig run_config = config;
            run_config.rng_seed = slot.seed;
            try {
                slot.result = run_campaign(table, run_config);
            } catch (const std::exception& e) {
                slot.error = e.what();
            }
        }
    };

    const int threads = std::clamp(n_workers, 1, n_runs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> crew;
        crew.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) crew.emplace_back(worker);
        for (std::thread& t : crew) t.join();
    }
    return runs;
}

/// Unwraps repeated-run outcomes, throwing on the first failure with the
/// run index attached.
inline std::vector<CampaignResult> require_all(std::span<const RepeatedRun> runs) {
    std::vector<CampaignResult> out;
    out.reserve(runs.size());
    for (const RepeatedRun& run : runs) {
        if (!run.ok()) {
            throw Error("run " + std::to_string(run.run_index) +
                        " failed: " + run.error);
        }
        out.push_back(*run.result);
    }
    return out;
}

} // namespace poolbo

#endif // POOLBO_ENGINE_HPP
