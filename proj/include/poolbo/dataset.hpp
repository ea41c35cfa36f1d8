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

#ifndef POOLBO_DATASET_HPP
#define POOLBO_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "poolbo/errors.hpp"
#include "poolbo/random.hpp"

namespace poolbo {

using RowIndex = Eigen::Index;

/// Tabular record of previously conducted experiments: one feature vector
/// and one scalar response per row. Rows double as the finite pool of
/// candidate experiments a campaign may select from. Treated as immutable
/// once built; safe to share across concurrent campaign runs.
struct ExperimentTable {
    std::vector<std::string> feature_names;
    Eigen::MatrixXd features;  // n x p
    Eigen::VectorXd responses; // n

    Eigen::Index n_rows() const { return features.rows(); }
    Eigen::Index n_features() const { return features.cols(); }

    /// Position of a named column, or SchemaError.
    Eigen::Index column(std::string_view name) const {
        for (std::size_t j = 0; j < feature_names.size(); ++j) {
            if (feature_names[j] == name) return static_cast<Eigen::Index>(j);
        }
        throw SchemaError("unknown feature '" + std::string(name) + "'");
    }
};

/// Validates the basic table invariants. Creators call this before handing
/// a table out.
inline void validate_table(const ExperimentTable& table) {
    if (table.features.rows() != table.responses.size()) {
        throw SchemaError("feature rows (" + std::to_string(table.features.rows()) +
                          ") do not match response count (" +
                          std::to_string(table.responses.size()) + ")");
    }
    if (static_cast<std::size_t>(table.features.cols()) != table.feature_names.size()) {
        throw SchemaError("feature columns do not match feature name count");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : table.feature_names) {
        if (name.empty()) throw SchemaError("empty feature name");
        if (!seen.insert(name).second) {
            throw SchemaError("duplicate feature name '" + name + "'");
        }
    }
    if (!table.features.allFinite() || !table.responses.allFinite()) {
        throw SchemaError("table contains non-finite values");
    }
}

/// A named candidate predictive model: the subset of feature columns it
/// sees, plus a relative prior weight.
struct ModelSpec {
    std::string name;
    std::vector<std::string> features;
    double prior_weight = 1.0;
};

inline void validate_spec(const ModelSpec& spec) {
    if (spec.name.empty()) throw SchemaError("model spec with empty name");
    if (spec.features.empty()) {
        throw SchemaError("model spec '" + spec.name + "' lists no features");
    }
    std::unordered_set<std::string> seen;
    for (const auto& f : spec.features) {
        if (!seen.insert(f).second) {
            throw SchemaError("model spec '" + spec.name +
                              "' lists feature '" + f + "' twice");
        }
    }
    if (!(spec.prior_weight > 0.0) || spec.prior_weight > 1.0) {
        throw SchemaError("model spec '" + spec.name +
                          "' prior weight must lie in (0, 1]");
    }
}

/// Expected layout of an input file: named feature columns plus one
/// response column.
struct TableSchema {
    std::vector<std::string> feature_columns;
    std::string response_column;
};

/// The fixed 14-feature steel-fatigue schema: heat-treatment conditions and
/// alloy composition, with fatigue strength (MPa) as the response.
inline TableSchema nims_fatigue_schema() {
    return TableSchema{
        {"NT", "THT", "THQCr", "CT", "DT", "QmT", "TT", "TCr",
         "C", "Si", "Mn", "Ni", "Cr", "Mo"},
        "Fatigue"};
}

/// One input row rejected during ingestion, with its 1-based line number.
struct RowIssue {
    std::size_t line;
    std::string reason;
};

struct LoadReport {
    ExperimentTable table;
    std::vector<RowIssue> rejected;
    std::size_t ignored_columns = 0; // columns present in the file but not in the schema
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\r' || s.front() == '\n')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                          s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == delim) {
            cells.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return cells;
}

/// Locale-independent double parse of a whole cell.
inline std::optional<double> parse_cell(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

} // namespace detail

/// Reads a delimited text table (comma by default; tab accepted, detected
/// from the header row). The header is mandatory and must contain every
/// schema column; file columns are reordered to match the schema and extra
/// columns are ignored. Rows with missing or unparseable cells are rejected
/// and reported with their line numbers; an empty result is an error.
inline LoadReport load_table(std::istream& in, const TableSchema& schema) {
    std::string header;
    if (!std::getline(in, header)) throw Error("empty input: no header row");

    const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
    const auto header_cells = detail::split(header, delim);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < header_cells.size(); ++j) {
        const std::string name(header_cells[j]);
        if (name.empty()) continue;
        if (!position.emplace(name, j).second) {
            throw SchemaError("duplicate column '" + name + "' in header");
        }
    }

    std::vector<std::size_t> feature_pos;
    feature_pos.reserve(schema.feature_columns.size());
    for (const auto& name : schema.feature_columns) {
        const auto it = position.find(name);
        if (it == position.end()) {
            throw SchemaError("missing required column '" + name + "'");
        }
        feature_pos.push_back(it->second);
    }
    const auto resp_it = position.find(schema.response_column);
    if (resp_it == position.end()) {
        throw SchemaError("missing required column '" + schema.response_column + "'");
    }
    const std::size_t response_pos = resp_it->second;

    LoadReport report;
    report.ignored_columns =
        position.size() - schema.feature_columns.size() - 1;

    std::vector<double> values;  // row-major feature buffer
    std::vector<double> targets;
    const std::size_t p = schema.feature_columns.size();

    std::string line;
    std::size_t line_no = 1; // header was line 1
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, delim);

        std::string bad_column;
        std::vector<double> row(p + 1);
        for (std::size_t j = 0; j <= p; ++j) {
            const std::size_t pos = j < p ? feature_pos[j] : response_pos;
            const std::string_view cell =
                pos < cells.size() ? cells[pos] : std::string_view{};
            const auto parsed = detail::parse_cell(cell);
            if (!parsed) {
                bad_column = j < p ? schema.feature_columns[j]
                                   : schema.response_column;
                break;
            }
            row[j] = *parsed;
        }
        if (!bad_column.empty()) {
            report.rejected.push_back(
                {line_no, "missing or unparseable value in column '" +
                              bad_column + "'"});
            continue;
        }
        values.insert(values.end(), row.begin(), row.begin() + p);
        targets.push_back(row[p]);
    }

    const std::size_t n = targets.size();
    if (n == 0) throw Error("no usable data rows");

    ExperimentTable table;
    table.feature_names = schema.feature_columns;
    table.features.resize(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(p));
    table.responses.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            table.features(static_cast<Eigen::Index>(i),
                           static_cast<Eigen::Index>(j)) = values[i * p + j];
        }
        table.responses(static_cast<Eigen::Index>(i)) = targets[i];
    }
    validate_table(table);
    report.table = std::move(table);
    return report;
}

/// Table restricted to the spec's columns, in spec order, responses
/// unchanged.
inline ExperimentTable project(const ExperimentTable& table, const ModelSpec& spec) {
    validate_spec(spec);
    ExperimentTable out;
    out.feature_names = spec.features;
    out.features.resize(table.n_rows(),
                        static_cast<Eigen::Index>(spec.features.size()));
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
        out.features.col(static_cast<Eigen::Index>(j)) =
            table.features.col(table.column(spec.features[j]));
    }
    out.responses = table.responses;
    validate_table(out);
    return out;
}

/// Per-feature and response location/scale, fitted on a row subset.
/// Standard deviations use the n-1 denominator. A column that is constant
/// within the subset gets unit scale instead of zero; the affected columns
/// are recorded so callers can warn.
struct ScalingParams {
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_std;
    double response_mean = 0.0;
    double response_std = 1.0;
    std::vector<Eigen::Index> constant_features;
    bool constant_response = false;

    Eigen::VectorXd standardize_row(const Eigen::VectorXd& x) const {
        return (x - feature_mean).cwiseQuotient(feature_std);
    }
    Eigen::MatrixXd standardize(const Eigen::MatrixXd& X) const {
        return (X.rowwise() - feature_mean.transpose()).array().rowwise() /
               feature_std.transpose().array();
    }
    Eigen::VectorXd unstandardize_row(const Eigen::VectorXd& z) const {
        return z.cwiseProduct(feature_std) + feature_mean;
    }
    double standardize_response(double y) const {
        return (y - response_mean) / response_std;
    }
    double unstandardize_mean(double z) const {
        return z * response_std + response_mean;
    }
    double unstandardize_std(double s) const { return s * response_std; }
};

/// Fits scaling on `rows` only; never feed test rows here.
inline ScalingParams fit_scaling(const ExperimentTable& table,
                                 std::span<const RowIndex> rows) {
    if (rows.size() < 2) {
        throw Error("scaling needs at least 2 rows, got " +
                    std::to_string(rows.size()));
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = table.n_features();
    for (const RowIndex r : rows) {
        if (r < 0 || r >= table.n_rows()) {
            throw Error("row index " + std::to_string(r) + " out of range");
        }
    }

    ScalingParams sp;
    sp.feature_mean.resize(p);
    sp.feature_std.resize(p);

    constexpr double k_constant_tol = 1e-12;
    for (Eigen::Index j = 0; j < p; ++j) {
        double sum = 0.0;
        for (const RowIndex r : rows) sum += table.features(r, j);
        const double mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (const RowIndex r : rows) {
            const double d = table.features(r, j) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(m - 1));
        sp.feature_mean(j) = mean;
        if (sd < k_constant_tol) {
            sp.feature_std(j) = 1.0;
            sp.constant_features.push_back(j);
        } else {
            sp.feature_std(j) = sd;
        }
    }

    double sum = 0.0;
    for (const RowIndex r : rows) sum += table.responses(r);
    sp.response_mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (const RowIndex r : rows) {
        const double d = table.responses(r) - sp.response_mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    if (sd < k_constant_tol) {
        sp.response_std = 1.0;
        sp.constant_response = true;
    } else {
        sp.response_std = sd;
    }
    return sp;
}

/// Row-index split of a table into the initial design, the selection pool,
/// and (after a campaign finishes) the held-out test rows.
struct PoolPartition {
    std::vector<RowIndex> initial_indices;
    std::vector<RowIndex> pool_indices;
    std::vector<RowIndex> test_indices;
};

/// Draws `n_init` initial rows uniformly without replacement; everything
/// else starts in the pool. Test rows stay empty here: the campaign engine
/// moves unselected pool rows to the test set once the budget is spent.
inline PoolPartition partition(const ExperimentTable& table, std::size_t n_init,
                               std::size_t budget, std::uint64_t rng_seed) {
    const auto n = static_cast<std::size_t>(table.n_rows());
    if (budget > n) {
        throw Error("budget " + std::to_string(budget) + " exceeds table size " +
                    std::to_string(n));
    }
    if (n_init > budget) {
        throw Error("n_init " + std::to_string(n_init) + " exceeds budget " +
                    std::to_string(budget));
    }

    SplitMix64 rng(rng_seed);
    auto drawn = sample_without_replacement(n, n_init, rng);
    std::sort(drawn.begin(), drawn.end());

    PoolPartition part;
    part.initial_indices.reserve(n_init);
    for (const std::size_t i : drawn) {
        part.initial_indices.push_back(static_cast<RowIndex>(i));
    }
    std::vector<bool> taken(n, false);
    for (const std::size_t i : drawn) taken[i] = true;
    part.pool_indices.reserve(n - n_init);
    for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) part.pool_indices.push_back(static_cast<RowIndex>(i));
    }
    return part;
}

/// Synthetic experiment table for tests and CI: the response depends only
/// on the spec's columns, so model-weight behaviour has a known ground
/// truth. Columns are the spec's features followed by `n_distractors`
/// independent distractor columns named D1, D2, ...
///
/// Features are uniform on [-1, 1]. With k true features z_1..z_k,
///   response = 25 + (10 / sqrt(k)) * sum_j sin(2 z_j) + noise_std * N(0,1).
inline ExperimentTable synth_table(std::size_t n, const ModelSpec& spec_true,
                                   double noise_std, std::uint64_t rng_seed,
                                   std::optional<std::size_t> n_distractors =
                                       std::nullopt) {
    if (n < 10) throw Error("synthetic table needs n >= 10");
    validate_spec(spec_true);
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw Error("noise_std must be finite and non-negative");
    }

    const std::size_t k = spec_true.features.size();
    const std::size_t d = n_distractors.value_or(k);
    const std::size_t p = k + d;

    ExperimentTable table;
    table.feature_names = spec_true.features;
    for (std::size_t j = 0; j < d; ++j) {
        table.feature_names.push_back("D" + std::to_string(j + 1));
    }
    table.features.resize(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(p));
    table.responses.resize(static_cast<Eigen::Index>(n));

    SplitMix64 rng(rng_seed);
    const double amplitude = 10.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < p; ++j) {
            table.features(row, static_cast<Eigen::Index>(j)) =
                rng.uniform(-1.0, 1.0);
        }
        double signal = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            signal += std::sin(2.0 * table.features(row, static_cast<Eigen::Index>(j)));
        }
        // The draw happens even at noise_std = 0 so the feature matrix is
        // identical across noise levels for a given seed.
        const double noise = noise_std * rng.normal();
        table.responses(row) = 25.0 + amplitude * signal + noise;
    }
    validate_table(table);
    return table;
}

/// Feature rows of a subset, stacked in subset order.
inline Eigen::MatrixXd rows_of(const ExperimentTable& table,
                               std::span<const RowIndex> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        table.n_features());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = table.features.row(rows[i]);
    }
    return out;
}

/// Responses of a subset, in subset order.
inline Eigen::VectorXd responses_of(const ExperimentTable& table,
                                    std::span<const RowIndex> rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = table.responses(rows[i]);
    }
    return out;
}

} // namespace poolbo

#endif // POOLBO_DATASET_HPP
