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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "poolbo/engine.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/eval.hpp"
#include "poolbo/random.hpp"

namespace {

using poolbo::CampaignConfig;
using poolbo::CampaignResult;
using poolbo::Mode;
using poolbo::ModelSpec;
using poolbo::Policy;
using poolbo::RowIndex;
using poolbo::run_campaign;
using poolbo::run_repeated;

/// Small but non-trivial shared fixture: a 60-row synthetic table with two
/// candidate models, of which only the first matches the generator.
class EngineTest : public ::testing::Test {
protected:
    void SetUp() override {
        table_ = poolbo::synth_table(
            60, ModelSpec{"gen", {"S1", "S2"}, 1.0}, 0.3, 21, 2);
        config_.n_init = 4;
        config_.batch_size = 2;
        config_.n_iterations = 3;
        config_.mode = Mode::bma;
        config_.specs = {ModelSpec{"TrueModel", {"S1", "S2"}, 1.0},
                         ModelSpec{"DistractorModel", {"D1", "D2"}, 1.0}};
        config_.gp.n_restarts = 2; // keep unit campaigns fast
        config_.rng_seed = 5;
    }

    poolbo::ExperimentTable table_;
    CampaignConfig config_;
};

void expect_identical(const CampaignResult& a, const CampaignResult& b) {
    EXPECT_EQ(a.selected_indices, b.selected_indices);
    EXPECT_EQ(a.test_indices, b.test_indices);
    ASSERT_EQ(a.incumbent_trajectory.size(), b.incumbent_trajectory.size());
    for (std::size_t i = 0; i < a.incumbent_trajectory.size(); ++i) {
        EXPECT_DOUBLE_EQ(a.incumbent_trajectory[i], b.incumbent_trajectory[i]);
    }
    ASSERT_EQ(a.final_weights.size(), b.final_weights.size());
    for (std::size_t i = 0; i < a.final_weights.size(); ++i) {
        EXPECT_DOUBLE_EQ(a.final_weights[i], b.final_weights[i]);
    }
    ASSERT_EQ(a.weight_trajectory.size(), b.weight_trajectory.size());
    for (std::size_t t = 0; t < a.weight_trajectory.size(); ++t) {
        ASSERT_EQ(a.weight_trajectory[t].size(), b.weight_trajectory[t].size());
        for (std::size_t i = 0; i < a.weight_trajectory[t].size(); ++i) {
            EXPECT_DOUBLE_EQ(a.weight_trajectory[t][i], b.weight_trajectory[t][i]);
        }
    }
    EXPECT_DOUBLE_EQ(a.test_rmse, b.test_rmse);
    EXPECT_EQ(a.run_seed, b.run_seed);
}

TEST_F(EngineTest, RepeatedRunsAreBitwiseIdentical) {
    const CampaignResult a = run_campaign(table_, config_);
    const CampaignResult b = run_campaign(table_, config_);
    expect_identical(a, b);
}

TEST_F(EngineTest, SeedsChangeTheOutcome) {
    const CampaignResult a = run_campaign(table_, config_);
    CampaignConfig other = config_;
    other.rng_seed = 6;
    const CampaignResult b = run_campaign(table_, other);
    EXPECT_NE(a.selected_indices, b.selected_indices);
}

TEST_F(EngineTest, BookkeepingInvariantsHold) {
    const CampaignResult r = run_campaign(table_, config_);
    const auto budget = static_cast<std::size_t>(config_.budget());

    ASSERT_EQ(r.selected_indices.size(), budget);
    std::set<RowIndex> selected(r.selected_indices.begin(),
                                r.selected_indices.end());
    EXPECT_EQ(selected.size(), budget); // no duplicates

    for (RowIndex t : r.test_indices) EXPECT_EQ(selected.count(t), 0u);
    EXPECT_EQ(r.selected_indices.size() + r.test_indices.size(),
              static_cast<std::size_t>(table_.n_rows()));
    for (RowIndex t : r.test_indices) {
        EXPECT_GE(t, 0);
        EXPECT_LT(t, table_.n_rows());
    }

    ASSERT_EQ(r.incumbent_trajectory.size(),
              static_cast<std::size_t>(config_.n_iterations) + 1);
    for (std::size_t i = 1; i < r.incumbent_trajectory.size(); ++i) {
        EXPECT_GE(r.incumbent_trajectory[i], r.incumbent_trajectory[i - 1]);
    }
    EXPECT_TRUE(std::isfinite(r.test_rmse));
    EXPECT_GE(r.test_rmse, 0.0);
    EXPECT_EQ(r.run_seed, config_.rng_seed);
}

TEST_F(EngineTest, IncumbentMatchesBestObservedPrefix) {
    const CampaignResult r = run_campaign(table_, config_);
    for (int i = 0; i <= config_.n_iterations; ++i) {
        const std::size_t observed =
            static_cast<std::size_t>(config_.n_init) +
            static_cast<std::size_t>(i) * static_cast<std::size_t>(config_.batch_size);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < observed; ++k) {
            best = std::max(best, table_.responses(r.selected_indices[k]));
        }
        EXPECT_DOUBLE_EQ(r.incumbent_trajectory[static_cast<std::size_t>(i)], best);
    }
}

TEST_F(EngineTest, WeightFieldsPopulatedInBmaMode) {
    const CampaignResult r = run_campaign(table_, config_);
    ASSERT_EQ(r.final_weights.size(), config_.specs.size());
    double sum = 0.0;
    for (double w : r.final_weights) {
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, 1.0);
        sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    ASSERT_EQ(r.weight_trajectory.size(),
              static_cast<std::size_t>(config_.n_iterations));
    for (const std::vector<double>& w : r.weight_trajectory) {
        EXPECT_EQ(w.size(), config_.specs.size());
    }
}

TEST_F(EngineTest, WeightFieldsEmptyInBoMode) {
    CampaignConfig bo = config_;
    bo.mode = Mode::bo;
    bo.specs = {config_.specs[0]};
    const CampaignResult r = run_campaign(table_, bo);
    EXPECT_TRUE(r.final_weights.empty());
    EXPECT_TRUE(r.weight_trajectory.empty());
}

TEST_F(EngineTest, SingleModelBmaSelectsExactlyLikeBo) {
    CampaignConfig bma1 = config_;
    bma1.specs = {config_.specs[0]};
    CampaignConfig bo = bma1;
    bo.mode = Mode::bo;

    const CampaignResult a = run_campaign(table_, bma1);
    const CampaignResult b = run_campaign(table_, bo);
    EXPECT_EQ(a.selected_indices, b.selected_indices);
    EXPECT_EQ(a.test_indices, b.test_indices);
    EXPECT_DOUBLE_EQ(a.test_rmse, b.test_rmse);
    // Only the weight bookkeeping differs between the modes.
    EXPECT_EQ(a.final_weights.size(), 1u);
    EXPECT_TRUE(b.final_weights.empty());
}

TEST_F(EngineTest, ZeroIterationsFitsOnceAndScoresTheRest) {
    CampaignConfig flat = config_;
    flat.n_iterations = 0;
    const CampaignResult r = run_campaign(table_, flat);
    EXPECT_EQ(r.selected_indices.size(),
              static_cast<std::size_t>(flat.n_init));
    EXPECT_EQ(r.test_indices.size(),
              static_cast<std::size_t>(table_.n_rows() - flat.n_init));
    EXPECT_EQ(r.incumbent_trajectory.size(), 1u);
    EXPECT_TRUE(r.weight_trajectory.empty());
    EXPECT_EQ(r.final_weights.size(), flat.specs.size());
    EXPECT_TRUE(std::isfinite(r.test_rmse));
}

TEST_F(EngineTest, RandomPolicyRunsWithoutSurrogates) {
    CampaignConfig rand = config_;
    rand.policy = Policy::random;
    const CampaignResult r = run_campaign(table_, rand);
    EXPECT_EQ(r.selected_indices.size(),
              static_cast<std::size_t>(rand.budget()));
    // In-loop weights never materialize; the final fit still reports them.
    EXPECT_TRUE(r.weight_trajectory.empty());
    EXPECT_EQ(r.final_weights.size(), rand.specs.size());

    const CampaignResult again = run_campaign(table_, rand);
    expect_identical(r, again);
}

TEST_F(EngineTest, WarmStartKeepsInvariantsAndDeterminism) {
    CampaignConfig warm = config_;
    warm.warm_start = true;
    const CampaignResult a = run_campaign(table_, warm);
    const CampaignResult b = run_campaign(table_, warm);
    expect_identical(a, b);
    EXPECT_EQ(a.selected_indices.size(),
              static_cast<std::size_t>(warm.budget()));
}

TEST_F(EngineTest, BudgetLargerThanTableThrows) {
    CampaignConfig big = config_;
    big.n_iterations = 100; // budget 4 + 200 > 60 rows
    EXPECT_THROW(run_campaign(table_, big), poolbo::Error);
}

TEST_F(EngineTest, ConfigValidationRejectsBadShapes) {
    CampaignConfig c = config_;
    c.n_init = 1;
    EXPECT_THROW(run_campaign(table_, c), poolbo::ConfigError);

    c = config_;
    c.batch_size = 0;
    EXPECT_THROW(run_campaign(table_, c), poolbo::ConfigError);

    c = config_;
    c.n_iterations = -1;
    EXPECT_THROW(run_campaign(table_, c), poolbo::ConfigError);

    c = config_;
    c.specs.clear();
    EXPECT_THROW(run_campaign(table_, c), poolbo::ConfigError);

    c = config_;
    c.mode = Mode::bo; // two specs in bo mode
    EXPECT_THROW(run_campaign(table_, c), poolbo::ConfigError);
}

TEST_F(EngineTest, RepeatedRunZeroMatchesDirectCampaign) {
    const std::uint64_t base = 77;
    const std::vector<poolbo::RepeatedRun> runs =
        run_repeated(table_, config_, 1, base);
    ASSERT_EQ(runs.size(), 1u);
    ASSERT_TRUE(runs[0].ok());
    EXPECT_EQ(runs[0].run_index, 0);
    EXPECT_EQ(runs[0].seed, poolbo::derive_seed(base, 0));

    CampaignConfig direct = config_;
    direct.rng_seed = poolbo::derive_seed(base, 0);
    expect_identical(*runs[0].result, run_campaign(table_, direct));
}

TEST_F(EngineTest, WorkerCountDoesNotChangeResults) {
    const std::vector<poolbo::RepeatedRun> serial =
        run_repeated(table_, config_, 3, 11, 1);
    const std::vector<poolbo::RepeatedRun> parallel =
        run_repeated(table_, config_, 3, 11, 4);
    ASSERT_EQ(serial.size(), parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].run_index, parallel[i].run_index);
        EXPECT_EQ(serial[i].seed, parallel[i].seed);
        ASSERT_TRUE(serial[i].ok());
        ASSERT_TRUE(parallel[i].ok());
        expect_identical(*serial[i].result, *parallel[i].result);
    }
}

TEST_F(EngineTest, DistinctSeedsAcrossRepeatedRuns) {
    const std::vector<poolbo::RepeatedRun> runs =
        run_repeated(table_, config_, 3, 123);
    EXPECT_NE(runs[0].seed, runs[1].seed);
    EXPECT_NE(runs[1].seed, runs[2].seed);
    ASSERT_TRUE(runs[0].ok() && runs[1].ok() && runs[2].ok());
    EXPECT_NE(runs[0].result->selected_indices, runs[1].result->selected_indices);
}

TEST_F(EngineTest, FailedRunsAreCapturedNotThrown) {
    CampaignConfig doomed = config_;
    doomed.n_iterations = 100; // infeasible budget for every run
    const std::vector<poolbo::RepeatedRun> runs =
        run_repeated(table_, doomed, 2, 9);
    ASSERT_EQ(runs.size(), 2u);
    for (const poolbo::RepeatedRun& run : runs) {
        EXPECT_FALSE(run.ok());
        EXPECT_FALSE(run.error.empty());
    }
    try {
        poolbo::require_all(runs);
        FAIL() << "expected Error";
    } catch (const poolbo::Error& e) {
        EXPECT_NE(std::string(e.what()).find("run 0"), std::string::npos);
    }
}

TEST_F(EngineTest, RequireAllPassesThroughSuccesses) {
    const std::vector<poolbo::RepeatedRun> runs =
        run_repeated(table_, config_, 2, 31);
    const std::vector<CampaignResult> results = poolbo::require_all(runs);
    ASSERT_EQ(results.size(), 2u);
    EXPECT_EQ(results[0].run_seed, runs[0].seed);
    EXPECT_EQ(results[1].run_seed, runs[1].seed);
}

// On a smooth single-model problem, acquisition-guided selection should
// reach incumbents at least as good as uniform selection on average. Run
// both policies over a few seeds and compare means; the margin uses the
// pooled standard error so a genuine regression trips it while ordinary
// noise does not.
TEST(EnginePolicy, EiFindsBetterIncumbentsThanRandomOnAverage) {
    const poolbo::ExperimentTable table = poolbo::synth_table(
        120, ModelSpec{"gen", {"S1", "S2"}, 1.0}, 0.1, 33, 2);

    CampaignConfig config;
    config.n_init = 4;
    config.batch_size = 2;
    config.n_iterations = 4;
    config.mode = Mode::bo;
    config.specs = {ModelSpec{"M", {"S1", "S2"}, 1.0}};
    config.gp.n_restarts = 2;

    const int n_runs = 8;
    std::vector<double> ei_final, random_final;
    for (const auto& run :
         run_repeated(table, config, n_runs, 2024)) {
        ASSERT_TRUE(run.ok()) << run.error;
        ei_final.push_back(run.result->incumbent_trajectory.back());
    }
    CampaignConfig control = config;
    control.policy = Policy::random;
    for (const auto& run :
         run_repeated(table, control, n_runs, 2024)) {
        ASSERT_TRUE(run.ok()) << run.error;
        random_final.push_back(run.result->incumbent_trajectory.back());
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto var_of = [&](const std::vector<double>& v) {
        const double m = mean_of(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return ss / static_cast<double>(v.size() - 1);
    };
    const double ei_mean = mean_of(ei_final);
    const double random_mean = mean_of(random_final);
    const double pooled_se = std::sqrt(
        (var_of(ei_final) + var_of(random_final)) / static_cast<double>(n_runs));
    EXPECT_GE(ei_mean, random_mean - 2.0 * pooled_se)
        << "ei mean " << ei_mean << " random mean " << random_mean;
}

} // namespace
