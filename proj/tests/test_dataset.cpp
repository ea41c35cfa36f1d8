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
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "poolbo/dataset.hpp"
#include "poolbo/errors.hpp"

namespace {

using poolbo::ExperimentTable;
using poolbo::LoadReport;
using poolbo::ModelSpec;
using poolbo::RowIndex;
using poolbo::TableSchema;

TableSchema small_schema() {
    return TableSchema{{"A", "B", "C"}, "Y"};
}

LoadReport load(const std::string& text, const TableSchema& schema) {
    std::istringstream in(text);
    return poolbo::load_table(in, schema);
}

TEST(LoadTable, ParsesCommaSeparatedWithHeader) {
    const LoadReport report = load(
        "A,B,C,Y\n"
        "1,2,3,10\n"
        "4,5,6,20\n",
        small_schema());
    EXPECT_EQ(report.table.n_rows(), 2);
    EXPECT_EQ(report.table.n_features(), 3);
    EXPECT_DOUBLE_EQ(report.table.features(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(report.table.features(1, 2), 6.0);
    EXPECT_DOUBLE_EQ(report.table.responses(1), 20.0);
    EXPECT_TRUE(report.rejected.empty());
    EXPECT_EQ(report.ignored_columns, 0u);
}

TEST(LoadTable, DetectsTabSeparatorFromHeader) {
    const LoadReport report = load(
        "A\tB\tC\tY\n"
        "1\t2\t3\t10\n",
        small_schema());
    EXPECT_EQ(report.table.n_rows(), 1);
    EXPECT_DOUBLE_EQ(report.table.features(0, 1), 2.0);
}

TEST(LoadTable, ReordersColumnsToSchemaAndIgnoresExtras) {
    const LoadReport report = load(
        "Y,C,Extra,B,A\n"
        "10,3,99,2,1\n",
        small_schema());
    EXPECT_DOUBLE_EQ(report.table.features(0, 0), 1.0); // A
    EXPECT_DOUBLE_EQ(report.table.features(0, 1), 2.0); // B
    EXPECT_DOUBLE_EQ(report.table.features(0, 2), 3.0); // C
    EXPECT_DOUBLE_EQ(report.table.responses(0), 10.0);
    EXPECT_EQ(report.ignored_columns, 1u);
}

TEST(LoadTable, MissingRequiredColumnNamesIt) {
    try {
        load("A,B,Y\n1,2,10\n", small_schema());
        FAIL() << "expected SchemaError";
    } catch (const poolbo::SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("'C'"), std::string::npos);
    }
}

TEST(LoadTable, DuplicateHeaderColumnRejected) {
    EXPECT_THROW(load("A,B,B,C,Y\n1,2,2,3,10\n", small_schema()),
                 poolbo::SchemaError);
}

TEST(LoadTable, RejectsBadRowsWithLineNumbers) {
    const LoadReport report = load(
        "A,B,C,Y\n"
        "1,2,3,10\n"
        "4,x,6,20\n"
        "7,8,9,30\n"
        "1,2,3\n",
        small_schema());
    EXPECT_EQ(report.table.n_rows(), 2);
    ASSERT_EQ(report.rejected.size(), 2u);
    EXPECT_EQ(report.rejected[0].line, 3u);
    EXPECT_NE(report.rejected[0].reason.find("'B'"), std::string::npos);
    EXPECT_EQ(report.rejected[1].line, 5u);
}

TEST(LoadTable, SkipsBlankLines) {
    const LoadReport report = load(
        "A,B,C,Y\n"
        "1,2,3,10\n"
        "\n"
        "4,5,6,20\n",
        small_schema());
    EXPECT_EQ(report.table.n_rows(), 2);
    EXPECT_TRUE(report.rejected.empty());
}

TEST(LoadTable, AllRowsBadIsAnError) {
    EXPECT_THROW(load("A,B,C,Y\nx,x,x,x\n", small_schema()), poolbo::Error);
    EXPECT_THROW(load("A,B,C,Y\n", small_schema()), poolbo::Error);
    EXPECT_THROW(load("", small_schema()), poolbo::Error);
}

TEST(LoadTable, NonFiniteValuesAreRejectedPerRow) {
    const LoadReport report = load(
        "A,B,C,Y\n"
        "1,2,3,10\n"
        "inf,5,6,20\n",
        small_schema());
    EXPECT_EQ(report.table.n_rows(), 1);
    EXPECT_EQ(report.rejected.size(), 1u);
}

TEST(NimsSchema, ListsTheFourteenFeatureColumnsAndResponse) {
    const TableSchema schema = poolbo::nims_fatigue_schema();
    const std::vector<std::string> expected = {
        "NT", "THT", "THQCr", "CT", "DT", "QmT", "TT",
        "TCr", "C",  "Si",    "Mn", "Ni", "Cr",  "Mo"};
    EXPECT_EQ(schema.feature_columns, expected);
    EXPECT_EQ(schema.response_column, "Fatigue");
}

TEST(Project, KeepsSpecOrderAndResponses) {
    const LoadReport report = load(
        "A,B,C,Y\n"
        "1,2,3,10\n"
        "4,5,6,20\n",
        small_schema());
    const ExperimentTable sub =
        poolbo::project(report.table, ModelSpec{"m", {"C", "A"}, 1.0});
    ASSERT_EQ(sub.n_features(), 2);
    EXPECT_EQ(sub.feature_names[0], "C");
    EXPECT_EQ(sub.feature_names[1], "A");
    EXPECT_DOUBLE_EQ(sub.features(1, 0), 6.0);
    EXPECT_DOUBLE_EQ(sub.features(1, 1), 4.0);
    EXPECT_DOUBLE_EQ(sub.responses(1), 20.0);
}

TEST(Project, UnknownFeatureNamesIt) {
    const LoadReport report = load("A,B,C,Y\n1,2,3,10\n", small_schema());
    try {
        poolbo::project(report.table, ModelSpec{"m", {"A", "X9"}, 1.0});
        FAIL() << "expected SchemaError";
    } catch (const poolbo::SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("X9"), std::string::npos);
    }
}

TEST(ValidateSpec, RejectsBadSpecs) {
    EXPECT_THROW(poolbo::validate_spec(ModelSpec{"", {"A"}, 1.0}),
                 poolbo::SchemaError);
    EXPECT_THROW(poolbo::validate_spec(ModelSpec{"m", {}, 1.0}),
                 poolbo::SchemaError);
    EXPECT_THROW(poolbo::validate_spec(ModelSpec{"m", {"A", "A"}, 1.0}),
                 poolbo::SchemaError);
    EXPECT_THROW(poolbo::validate_spec(ModelSpec{"m", {"A"}, 0.0}),
                 poolbo::SchemaError);
    EXPECT_THROW(poolbo::validate_spec(ModelSpec{"m", {"A"}, 1.5}),
                 poolbo::SchemaError);
    EXPECT_NO_THROW(poolbo::validate_spec(ModelSpec{"m", {"A"}, 0.25}));
}

TEST(FitScaling, MatchesHandComputedSampleStatistics) {
    const LoadReport report = load(
        "A,B,C,Y\n"
        "1,10,5,100\n"
        "3,10,6,110\n"
        "5,10,7,135\n",
        small_schema());
    const std::vector<RowIndex> rows = {0, 1, 2};
    const poolbo::ScalingParams sp = poolbo::fit_scaling(report.table, rows);

    EXPECT_DOUBLE_EQ(sp.feature_mean(0), 3.0);
    EXPECT_DOUBLE_EQ(sp.feature_std(0), 2.0); // sqrt(((4+0+4)/2))
    EXPECT_DOUBLE_EQ(sp.feature_mean(2), 6.0);
    EXPECT_DOUBLE_EQ(sp.feature_std(2), 1.0);
    EXPECT_DOUBLE_EQ(sp.response_mean, 115.0);
    EXPECT_NEAR(sp.response_std, std::sqrt((225.0 + 25.0 + 400.0) / 2.0), 1e-12);

    // B is constant on these rows: unit scale, recorded.
    EXPECT_DOUBLE_EQ(sp.feature_std(1), 1.0);
    ASSERT_EQ(sp.constant_features.size(), 1u);
    EXPECT_EQ(sp.constant_features[0], 1);
    EXPECT_FALSE(sp.constant_response);
}

TEST(FitScaling, RoundTripsThroughStandardization) {
    const poolbo::ExperimentTable table =
        poolbo::synth_table(30, ModelSpec{"t", {"S1", "S2"}, 1.0}, 0.5, 7);
    std::vector<RowIndex> rows;
    for (RowIndex i = 0; i < table.n_rows(); ++i) rows.push_back(i);
    const poolbo::ScalingParams sp = poolbo::fit_scaling(table, rows);

    const Eigen::VectorXd x = table.features.row(3).transpose();
    const Eigen::VectorXd back = sp.unstandardize_row(sp.standardize_row(x));
    EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-12);

    const Eigen::MatrixXd Z = sp.standardize(table.features);
    // Standardized columns have mean ~0 and sample std ~1.
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        const double mean = Z.col(j).mean();
        const double ss = (Z.col(j).array() - mean).square().sum();
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(std::sqrt(ss / (Z.rows() - 1.0)), 1.0, 1e-12);
    }

    const double y = table.responses(5);
    EXPECT_NEAR(sp.unstandardize_mean(sp.standardize_response(y)), y, 1e-12);
    EXPECT_DOUBLE_EQ(sp.unstandardize_std(1.0), sp.response_std);
}

TEST(FitScaling, NeedsAtLeastTwoRows) {
    const LoadReport report = load("A,B,C,Y\n1,2,3,10\n", small_schema());
    const std::vector<RowIndex> one = {0};
    EXPECT_THROW(poolbo::fit_scaling(report.table, one), poolbo::Error);
}

TEST(FitScaling, RejectsOutOfRangeRows) {
    const LoadReport report = load(
        "A,B,C,Y\n1,2,3,10\n4,5,6,20\n", small_schema());
    const std::vector<RowIndex> rows = {0, 5};
    EXPECT_THROW(poolbo::fit_scaling(report.table, rows), poolbo::Error);
}

TEST(Partition, SplitsSortedDisjointAndSized) {
    const poolbo::ExperimentTable table =
        poolbo::synth_table(20, ModelSpec{"t", {"S1"}, 1.0}, 0.0, 3);
    const poolbo::PoolPartition part = poolbo::partition(table, 5, 11, 99);

    EXPECT_EQ(part.initial_indices.size(), 5u);
    EXPECT_EQ(part.pool_indices.size(), 15u);
    EXPECT_TRUE(part.test_indices.empty());
    EXPECT_TRUE(std::is_sorted(part.initial_indices.begin(),
                               part.initial_indices.end()));
    EXPECT_TRUE(std::is_sorted(part.pool_indices.begin(),
                               part.pool_indices.end()));

    std::set<RowIndex> all(part.initial_indices.begin(),
                           part.initial_indices.end());
    all.insert(part.pool_indices.begin(), part.pool_indices.end());
    EXPECT_EQ(all.size(), 20u);
    EXPECT_EQ(*all.begin(), 0);
    EXPECT_EQ(*all.rbegin(), 19);
}

TEST(Partition, DeterministicPerSeedAndSensitiveToSeed) {
    const poolbo::ExperimentTable table =
        poolbo::synth_table(50, ModelSpec{"t", {"S1", "S2"}, 1.0}, 0.0, 3);
    const auto a = poolbo::partition(table, 5, 20, 1);
    const auto b = poolbo::partition(table, 5, 20, 1);
    const auto c = poolbo::partition(table, 5, 20, 2);
    EXPECT_EQ(a.initial_indices, b.initial_indices);
    EXPECT_EQ(a.pool_indices, b.pool_indices);
    EXPECT_NE(a.initial_indices, c.initial_indices);
}

TEST(Partition, RejectsInfeasibleSizes) {
    const poolbo::ExperimentTable table =
        poolbo::synth_table(20, ModelSpec{"t", {"S1"}, 1.0}, 0.0, 3);
    EXPECT_THROW(poolbo::partition(table, 5, 21, 0), poolbo::Error);
    EXPECT_THROW(poolbo::partition(table, 12, 11, 0), poolbo::Error);
    EXPECT_NO_THROW(poolbo::partition(table, 5, 20, 0));
}

TEST(SynthTable, ShapesAndNames) {
    const ModelSpec spec{"t", {"S1", "S2", "S3"}, 1.0};
    const poolbo::ExperimentTable table = poolbo::synth_table(40, spec, 1.0, 5, 2);
    EXPECT_EQ(table.n_rows(), 40);
    ASSERT_EQ(table.n_features(), 5);
    EXPECT_EQ(table.feature_names[0], "S1");
    EXPECT_EQ(table.feature_names[3], "D1");
    EXPECT_EQ(table.feature_names[4], "D2");
    EXPECT_TRUE(table.features.allFinite());
    EXPECT_TRUE((table.features.array() >= -1.0).all());
    EXPECT_TRUE((table.features.array() <= 1.0).all());
}

TEST(SynthTable, NoiselessResponseMatchesIndependentFormula) {
    const ModelSpec spec{"t", {"S1", "S2"}, 1.0};
    const poolbo::ExperimentTable table = poolbo::synth_table(25, spec, 0.0, 11, 3);
    for (Eigen::Index i = 0; i < table.n_rows(); ++i) {
        const double expected =
            25.0 + (10.0 / std::sqrt(2.0)) * (std::sin(2.0 * table.features(i, 0)) +
                                              std::sin(2.0 * table.features(i, 1)));
        EXPECT_NEAR(table.responses(i), expected, 1e-12) << "row " << i;
    }
}

TEST(SynthTable, ResponseIgnoresDistractors) {
    // The response identity holds row by row regardless of how many
    // distractor columns were generated alongside.
    const ModelSpec spec{"t", {"S1", "S2"}, 1.0};
    const auto wide = poolbo::synth_table(30, spec, 0.0, 17, 6);
    for (Eigen::Index i = 0; i < wide.n_rows(); ++i) {
        const double expected =
            25.0 + (10.0 / std::sqrt(2.0)) *
                       (std::sin(2.0 * wide.features(i, 0)) +
                        std::sin(2.0 * wide.features(i, 1)));
        EXPECT_NEAR(wide.responses(i), expected, 1e-12) << "row " << i;
    }
}

TEST(SynthTable, FeatureMatrixInvariantAcrossNoiseLevels) {
    const ModelSpec spec{"t", {"S1", "S2"}, 1.0};
    const auto quiet = poolbo::synth_table(30, spec, 0.0, 21, 2);
    const auto noisy = poolbo::synth_table(30, spec, 2.0, 21, 2);
    EXPECT_EQ((quiet.features - noisy.features).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT((quiet.responses - noisy.responses).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SynthTable, RejectsTinyTables) {
    EXPECT_THROW(poolbo::synth_table(9, ModelSpec{"t", {"S1"}, 1.0}, 0.0, 1),
                 poolbo::Error);
}

TEST(SubsetHelpers, ExtractInSubsetOrder) {
    const poolbo::ExperimentTable table =
        poolbo::synth_table(15, ModelSpec{"t", {"S1", "S2"}, 1.0}, 0.0, 9);
    const std::vector<RowIndex> rows = {4, 0, 9};
    const Eigen::MatrixXd X = poolbo::rows_of(table, rows);
    const Eigen::VectorXd y = poolbo::responses_of(table, rows);
    ASSERT_EQ(X.rows(), 3);
    EXPECT_DOUBLE_EQ(X(0, 1), table.features(4, 1));
    EXPECT_DOUBLE_EQ(X(2, 0), table.features(9, 0));
    EXPECT_DOUBLE_EQ(y(1), table.responses(0));
}

TEST(ValidateTable, CatchesStructuralProblems) {
    poolbo::ExperimentTable table;
    table.feature_names = {"A", "B"};
    table.features = Eigen::MatrixXd::Zero(3, 2);
    table.responses = Eigen::VectorXd::Zero(2); // row mismatch
    EXPECT_THROW(poolbo::validate_table(table), poolbo::SchemaError);

    table.responses = Eigen::VectorXd::Zero(3);
    EXPECT_NO_THROW(poolbo::validate_table(table));

    table.features(1, 1) = std::nan("");
    EXPECT_THROW(poolbo::validate_table(table), poolbo::SchemaError);
}

} // namespace
