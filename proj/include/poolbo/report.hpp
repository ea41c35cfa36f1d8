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

#ifndef POOLBO_REPORT_HPP
#define POOLBO_REPORT_HPP

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "poolbo/engine.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/eval.hpp"

namespace poolbo {
namespace detail {

/// Shortest-round-trip-safe decimal form of a double; locale independent.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_u64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
    return buf;
}

inline double parse_double_field(std::string_view text, const std::string& field) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw SchemaError("unparseable " + field + " value '" +
                          std::string(text) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64_field(std::string_view text,
                                     const std::string& field) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw SchemaError("unparseable " + field + " value '" +
                          std::string(text) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_on(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

/// Field sanitizer for free-text CSV cells (error messages).
inline std::string csv_safe(std::string text) {
    for (char& c : text) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return text;
}

} // namespace detail

/// FNV-1a 64-bit digest of a byte string, rendered as 16 hex digits.
inline std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

/// Whole file as raw bytes.
inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline const char* k_results_header =
    "run,seed,status,rmse,final_incumbent,n_selected,selected_indices,"
    "final_weights,error";

/// One parsed line of a results file. Numeric fields are meaningful only
/// when status is "ok".
struct ResultRow {
    int run = 0;
    std::uint64_t seed = 0;
    std::string status;
    double rmse = 0.0;
    double final_incumbent = 0.0;
    int n_selected = 0;
    std::vector<RowIndex> selected_indices;
    std::vector<double> final_weights;
    std::string error;

    bool ok() const { return status == "ok"; }
};

/// Writes the per-run results table. One row per run, in run order; list
/// cells are semicolon-joined; doubles carry full round-trip precision.
inline void write_results_csv(std::ostream& out,
                              std::span<const RepeatedRun> runs) {
    out << k_results_header << "\n";
    for (const RepeatedRun& run : runs) {
        out << run.run_index << "," << detail::fmt_u64(run.seed) << ",";
        if (run.ok()) {
            const CampaignResult& r = *run.result;
            out << "ok," << detail::fmt_double(r.test_rmse) << ","
                << detail::fmt_double(r.incumbent_trajectory.back()) << ","
                << r.selected_indices.size() << ",";
            for (std::size_t i = 0; i < r.selected_indices.size(); ++i) {
                if (i) out << ";";
                out << r.selected_indices[i];
            }
            out << ",";
            for (std::size_t i = 0; i < r.final_weights.size(); ++i) {
                if (i) out << ";";
                out << detail::fmt_double(r.final_weights[i]);
            }
            out << ",";
        } else {
            out << "failed,,,,,," << detail::csv_safe(run.error);
        }
        out << "\n";
    }
}

/// Parses a results file, insisting on the exact schema written by
/// write_results_csv and naming any missing field.
inline std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("results file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string_view> expected =
        detail::split_on(k_results_header, ',');
    const std::vector<std::string_view> got = detail::split_on(line, ',');
    for (std::string_view name : expected) {
        bool found = false;
        for (std::string_view g : got) found = found || g == name;
        if (!found) {
            throw SchemaError("results file is missing column '" +
                              std::string(name) + "'");
        }
    }
    if (got.size() != expected.size() ||
        !std::equal(got.begin(), got.end(), expected.begin())) {
        throw SchemaError("results file columns differ from the documented "
                          "schema");
    }

    std::vector<ResultRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string_view> cells = detail::split_on(line, ',');
        if (cells.size() != expected.size()) {
            throw SchemaError("results line " + std::to_string(line_no) +
                              " has " + std::to_string(cells.size()) +
                              " fields, expected " +
                              std::to_string(expected.size()));
        }
        ResultRow row;
        row.run = static_cast<int>(detail::parse_u64_field(cells[0], "run"));
        row.seed = detail::parse_u64_field(cells[1], "seed");
        row.status = std::string(cells[2]);
        row.error = std::string(cells[8]);
        if (row.status == "ok") {
            row.rmse = detail::parse_double_field(cells[3], "rmse");
            row.final_incumbent =
                detail::parse_double_field(cells[4], "final_incumbent");
            row.n_selected =
                static_cast<int>(detail::parse_u64_field(cells[5], "n_selected"));
            if (!cells[6].empty()) {
                for (std::string_view part : detail::split_on(cells[6], ';')) {
                    row.selected_indices.push_back(static_cast<RowIndex>(
                        detail::parse_u64_field(part, "selected_indices")));
                }
            }
            if (!cells[7].empty()) {
                for (std::string_view part : detail::split_on(cells[7], ';')) {
                    row.final_weights.push_back(
                        detail::parse_double_field(part, "final_weights"));
                }
            }
        } else if (row.status != "failed") {
            throw SchemaError("results line " + std::to_string(line_no) +
                              " has unknown status '" + row.status + "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Writes the per-fit weight table for model-averaged runs. fit_index runs
/// 1..n_iterations for in-loop refits; the final full-data fit is row
/// n_iterations + 1. n_observed is the training size of that fit.
inline void write_weights_csv(std::ostream& out,
                              std::span<const RepeatedRun> runs,
                              const CampaignConfig& config) {
    out << "run,fit_index,n_observed";
    for (const ModelSpec& spec : config.specs) {
        out << ",w_" << spec.name;
    }
    out << "\n";
    for (const RepeatedRun& run : runs) {
        if (!run.ok()) continue;
        const CampaignResult& r = *run.result;
        for (std::size_t t = 0; t < r.weight_trajectory.size(); ++t) {
            out << run.run_index << "," << (t + 1) << ","
                << config.n_init + static_cast<int>(t) * config.batch_size;
            for (double w : r.weight_trajectory[t]) {
                out << "," << detail::fmt_double(w);
            }
            out << "\n";
        }
        if (!r.final_weights.empty()) {
            out << run.run_index << "," << (r.weight_trajectory.size() + 1)
                << "," << r.selected_indices.size();
            for (double w : r.final_weights) {
                out << "," << detail::fmt_double(w);
            }
            out << "\n";
        }
    }
}

/// Writes a summary as a plot-ready delimited table plus totals.
inline void write_summary_table(std::ostream& out, const std::string& label,
                                const RunSummary& summary) {
    out << label << "," << summary.per_run_rmse.size() << ","
        << detail::fmt_double(summary.mean_rmse) << ","
        << detail::fmt_double(summary.std_rmse) << ","
        << detail::fmt_double(summary.quartiles.min) << ","
        << detail::fmt_double(summary.quartiles.q1) << ","
        << detail::fmt_double(summary.quartiles.median) << ","
        << detail::fmt_double(summary.quartiles.q3) << ","
        << detail::fmt_double(summary.quartiles.max) << "\n";
}

inline const char* k_summary_table_header =
    "label,n_runs,mean_rmse,std_rmse,min,q1,median,q3,max";

} // namespace poolbo

#endif // POOLBO_REPORT_HPP
