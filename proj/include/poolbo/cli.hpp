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

#ifndef POOLBO_CLI_HPP
#define POOLBO_CLI_HPP

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "poolbo/dataset.hpp"
#include "poolbo/engine.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/eval.hpp"
#include "poolbo/report.hpp"
#include "poolbo/version.hpp"

namespace poolbo {

/// Parses a model-spec config file: a JSON object whose "models" array
/// lists {"name", "features", optional "prior_weight"} entries.
inline std::vector<ModelSpec> load_model_specs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open specs file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("specs file " + path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("models") ||
        !doc["models"].is_array() || doc["models"].empty()) {
        throw ConfigError("specs file " + path +
                          ": expected an object with a non-empty "
                          "\"models\" array");
    }
    std::vector<ModelSpec> specs;
    for (const auto& entry : doc["models"]) {
        ModelSpec spec;
        if (!entry.is_object() || !entry.contains("name") ||
            !entry["name"].is_string() || !entry.contains("features") ||
            !entry["features"].is_array()) {
            throw ConfigError("specs file " + path +
                              ": every model needs a \"name\" string and a "
                              "\"features\" array");
        }
        spec.name = entry["name"].get<std::string>();
        for (const auto& f : entry["features"]) {
            if (!f.is_string()) {
                throw ConfigError("specs file " + path + ": model '" +
                                  spec.name + "' has a non-string feature");
            }
            spec.features.push_back(f.get<std::string>());
        }
        if (entry.contains("prior_weight")) {
            if (!entry["prior_weight"].is_number()) {
                throw ConfigError("specs file " + path + ": model '" +
                                  spec.name + "' prior_weight must be a number");
            }
            spec.prior_weight = entry["prior_weight"].get<double>();
        }
        try {
            validate_spec(spec);
        } catch (const Error& e) {
            throw ConfigError("specs file " + path + ": " + e.what());
        }
        for (const ModelSpec& earlier : specs) {
            if (earlier.name == spec.name) {
                throw ConfigError("specs file " + path +
                                  ": duplicate model name '" + spec.name + "'");
            }
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

/// Derives a table schema from a delimited file's header line: the named
/// response column plus every other column as a feature, in file order.
inline TableSchema schema_from_header(const std::string& file_bytes,
                                      const std::string& response) {
    const std::size_t eol = file_bytes.find('\n');
    std::string line = file_bytes.substr(0, eol);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw SchemaError("data file has no header line");
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';

    TableSchema schema;
    schema.response_column = response;
    bool saw_response = false;
    for (std::string_view cell : detail::split_on(line, sep)) {
        const std::string name(cell);
        if (name == response) {
            saw_response = true;
        } else {
            schema.feature_columns.push_back(name);
        }
    }
    if (!saw_response) {
        throw SchemaError("data file header has no '" + response + "' column");
    }
    if (schema.feature_columns.empty()) {
        throw SchemaError("data file header has no feature columns besides '" +
                          response + "'");
    }
    return schema;
}

/// Options shared by data-loading commands.
struct DataOptions {
    std::string data_path;
    std::string table_schema = "nims"; ///< "nims" or "header"
    std::string response = "Fatigue";  ///< response column for "header" mode
};

/// Loads a table under the selected schema mode and returns both the load
/// report and the raw bytes (for digesting).
inline std::pair<LoadReport, std::string> load_table_cli(const DataOptions& opt) {
    const std::string bytes = read_file_bytes(opt.data_path);
    TableSchema schema;
    if (opt.table_schema == "nims") {
        schema = nims_fatigue_schema();
    } else if (opt.table_schema == "header") {
        schema = schema_from_header(bytes, opt.response);
    } else {
        throw ConfigError("unknown table schema '" + opt.table_schema +
                          "' (expected nims or header)");
    }
    std::istringstream in(bytes);
    return {load_table(in, schema), bytes};
}

struct RunOptions {
    DataOptions data;
    std::string specs_path;
    std::string out_dir = "out";
    std::string mode = "bma";   ///< "bo" or "bma"
    std::string model;          ///< bo: pick this spec by name from the file
    std::string acq_variant = "weighted-ei"; ///< or "mixture-ei"
    std::string policy = "ei";  ///< or "random"
    int n_init = 5;
    int batch = 3;
    int iters = 40;
    int runs = 20;
    int threads = 1;
    std::uint64_t seed = 0;
    bool warm_start = false;
    int gp_restarts = 5;
};

namespace detail {

inline Mode parse_mode(const std::string& s) {
    if (s == "bo") return Mode::bo;
    if (s == "bma") return Mode::bma;
    throw ConfigError("unknown mode '" + s + "' (expected bo or bma)");
}

inline Policy parse_policy(const std::string& s) {
    if (s == "ei") return Policy::ei;
    if (s == "random") return Policy::random;
    throw ConfigError("unknown policy '" + s + "' (expected ei or random)");
}

inline AcqVariant parse_variant(const std::string& s) {
    if (s == "weighted-ei") return AcqVariant::weighted_ei;
    if (s == "mixture-ei") return AcqVariant::mixture_ei;
    throw ConfigError("unknown acquisition variant '" + s +
                      "' (expected weighted-ei or mixture-ei)");
}

inline std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json quartiles_json(const Quartiles& q) {
    return {{"min", q.min},
            {"q1", q.q1},
            {"median", q.median},
            {"q3", q.q3},
            {"max", q.max}};
}

} // namespace detail

/// Everything needed to reproduce a run command: resolved config, data
/// digest, derived seeds, tool version. The timestamp is the only field
/// exempt from byte-for-byte reproducibility.
struct RunManifest {
    nlohmann::json doc;

    std::string dump() const { return doc.dump(2) + "\n"; }
};

inline RunManifest build_manifest(const RunOptions& opt,
                                  const CampaignConfig& config,
                                  const LoadReport& report,
                                  const std::string& data_bytes) {
    nlohmann::json models = nlohmann::json::array();
    for (const ModelSpec& spec : config.specs) {
        models.push_back({{"name", spec.name},
                          {"features", spec.features},
                          {"prior_weight", spec.prior_weight}});
    }
    nlohmann::json seeds = nlohmann::json::array();
    for (int i = 0; i < opt.runs; ++i) seeds.push_back(derive_seed(opt.seed, i));
    nlohmann::json outputs =
        nlohmann::json::array({"results.csv", "summary.json"});
    if (config.mode == Mode::bma) outputs.push_back("weights.csv");
    outputs.push_back("manifest.json");

    RunManifest manifest;
    manifest.doc = {
        {"tool", "poolbo"},
        {"tool_version", k_version},
        {"command", "run"},
        {"timestamp", detail::iso_utc_now()},
        {"data",
         {{"path", opt.data.data_path},
          {"digest_fnv1a64", fnv1a64_hex(data_bytes)},
          {"table_schema", opt.data.table_schema},
          {"response", opt.data.response},
          {"n_rows", report.table.n_rows()},
          {"n_features", report.table.n_features()},
          {"n_rejected_rows", report.rejected.size()}}},
        {"config",
         {{"mode", opt.mode},
          {"policy", opt.policy},
          {"acq_variant", opt.acq_variant},
          {"n_init", config.n_init},
          {"batch_size", config.batch_size},
          {"n_iterations", config.n_iterations},
          {"budget", config.budget()},
          {"runs", opt.runs},
          {"base_seed", opt.seed},
          {"threads", opt.threads},
          {"warm_start", config.warm_start},
          {"gp",
           {{"n_restarts", config.gp.n_restarts},
            {"max_opt_iters", config.gp.max_opt_iters},
            {"grad_tol", config.gp.grad_tol},
            {"lengthscale_bounds",
             {config.gp.lengthscale_min, config.gp.lengthscale_max}},
            {"signal_bounds", {config.gp.signal_min, config.gp.signal_max}},
            {"noise_bounds", {config.gp.noise_min, config.gp.noise_max}}}}}},
        {"models", models},
        {"seeds", seeds},
        {"outputs", outputs},
    };
    return manifest;
}

inline nlohmann::json summary_json(const std::string& label,
                                   std::span<const RepeatedRun> runs,
                                   const RunSummary* summary,
                                   std::span<const ModelSpec> specs) {
    nlohmann::json failed = nlohmann::json::array();
    for (const RepeatedRun& run : runs) {
        if (!run.ok()) {
            failed.push_back({{"run", run.run_index}, {"error", run.error}});
        }
    }
    nlohmann::json doc = {
        {"label", label},
        {"n_runs", runs.size()},
        {"n_failed", failed.size()},
        {"failed_runs", failed},
    };
    if (summary != nullptr) {
        doc["mean_rmse"] = summary->mean_rmse;
        doc["std_rmse"] = summary->std_rmse;
        doc["std_defined"] = summary->std_defined;
        doc["quartiles"] = detail::quartiles_json(summary->quartiles);
        doc["per_run_rmse"] = summary->per_run_rmse;
        if (!summary->mean_weights.empty()) {
            nlohmann::json weights;
            for (std::size_t i = 0; i < summary->mean_weights.size(); ++i) {
                weights[specs[i].name] = summary->mean_weights[i];
            }
            doc["mean_weights"] = weights;
        }
    }
    return doc;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
    if (!out) throw Error("failed writing file: " + path.string());
}

} // namespace detail

/// Runs repeated campaigns and writes results.csv, summary.json, a
/// weights.csv for model-averaged runs, and manifest.json into out_dir.
/// Returns 0 iff every run succeeded and all files were written.
inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        CampaignConfig config;
        config.mode = detail::parse_mode(opt.mode);
        config.policy = detail::parse_policy(opt.policy);
        config.acq_variant = detail::parse_variant(opt.acq_variant);
        config.n_init = opt.n_init;
        config.batch_size = opt.batch;
        config.n_iterations = opt.iters;
        config.warm_start = opt.warm_start;
        config.gp.n_restarts = opt.gp_restarts;
        if (opt.runs < 1) throw ConfigError("--runs must be at least 1");
        if (opt.threads < 1) throw ConfigError("--threads must be at least 1");

        std::vector<ModelSpec> specs = load_model_specs(opt.specs_path);
        if (config.mode == Mode::bo) {
            if (!opt.model.empty()) {
                std::vector<ModelSpec> chosen;
                for (ModelSpec& spec : specs) {
                    if (spec.name == opt.model) chosen.push_back(std::move(spec));
                }
                if (chosen.empty()) {
                    throw ConfigError("no model named '" + opt.model +
                                      "' in " + opt.specs_path);
                }
                specs = std::move(chosen);
            } else if (specs.size() != 1) {
                throw ConfigError(
                    "bo mode needs exactly one model; pass --model to pick "
                    "one of the " +
                    std::to_string(specs.size()) + " in " + opt.specs_path);
            }
        }
        config.specs = std::move(specs);
        config.validate();

        const auto [report, bytes] = load_table_cli(opt.data);
        if (report.table.n_rows() < config.budget()) {
            throw ConfigError("budget " + std::to_string(config.budget()) +
                              " exceeds the " +
                              std::to_string(report.table.n_rows()) +
                              " usable data rows");
        }
        for (const RowIssue& issue : report.rejected) {
            err << "warning: skipped data line " << issue.line << ": "
                << issue.reason << "\n";
        }

        const std::vector<RepeatedRun> runs =
            run_repeated(report.table, config, opt.runs, opt.seed, opt.threads);

        int n_ok = 0;
        std::vector<CampaignResult> completed;
        for (const RepeatedRun& run : runs) {
            if (run.ok()) {
                ++n_ok;
                completed.push_back(*run.result);
            } else {
                err << "run " << run.run_index << " failed: " << run.error
                    << "\n";
            }
        }

        RunSummary summary;
        const bool have_summary = n_ok > 0;
        if (have_summary) summary = summarize(completed);

        const std::filesystem::path dir(opt.out_dir);
        std::filesystem::create_directories(dir);

        std::ostringstream results;
        write_results_csv(results, runs);
        detail::write_text_file(dir / "results.csv", results.str());

        const nlohmann::json sdoc =
            summary_json(opt.mode, runs, have_summary ? &summary : nullptr,
                         config.specs);
        detail::write_text_file(dir / "summary.json", sdoc.dump(2) + "\n");

        if (config.mode == Mode::bma) {
            std::ostringstream weights;
            write_weights_csv(weights, runs, config);
            detail::write_text_file(dir / "weights.csv", weights.str());
        }

        const RunManifest manifest = build_manifest(opt, config, report, bytes);
        detail::write_text_file(dir / "manifest.json", manifest.dump());

        out << "runs: " << n_ok << " ok, " << (opt.runs - n_ok) << " failed\n";
        if (have_summary) {
            out << "mean_rmse: " << summary.mean_rmse << "\n";
            out << "std_rmse: " << summary.std_rmse << "\n";
            if (!summary.mean_weights.empty()) {
                out << "mean_weights:";
                for (std::size_t i = 0; i < summary.mean_weights.size(); ++i) {
                    out << " " << config.specs[i].name << "="
                        << summary.mean_weights[i];
                }
                out << "\n";
            }
        }
        out << "wrote: " << (dir / "results.csv").string() << "\n";
        return n_ok == opt.runs ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

struct CompareOptions {
    std::string results_a;
    std::string results_b;
    std::string out_path; ///< optional; the table always goes to stdout
};

namespace detail {

inline RunSummary summarize_results_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open results file: " + path);
    const std::vector<ResultRow> rows = read_results_csv(in);
    std::vector<double> values;
    for (const ResultRow& row : rows) {
        if (row.ok()) values.push_back(row.rmse);
    }
    if (values.empty()) {
        throw Error("results file " + path + " has no successful runs");
    }
    return summarize_values(values);
}

} // namespace detail

/// Reads two results files and emits their side-by-side summary table.
inline int cmd_compare(const CompareOptions& opt, std::ostream& out,
                       std::ostream& err) {
    try {
        const RunSummary a = detail::summarize_results_file(opt.results_a);
        const RunSummary b = detail::summarize_results_file(opt.results_b);
        std::ostringstream table;
        table << k_summary_table_header << "\n";
        write_summary_table(table, detail::csv_safe(opt.results_a), a);
        write_summary_table(table, detail::csv_safe(opt.results_b), b);
        out << table.str();
        if (!opt.out_path.empty()) {
            detail::write_text_file(opt.out_path, table.str());
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

struct ValidateOptions {
    DataOptions data;
    std::string specs_path;
    int n_init = 5;
    int batch = 3;
    int iters = 40;
};

/// Checks the data file, the spec config, feature coverage, and budget
/// feasibility. Prints one line per check; exit 0 iff all pass.
inline int cmd_validate(const ValidateOptions& opt, std::ostream& out,
                        std::ostream& err) {
    std::vector<std::string> problems;

    LoadReport report;
    bool have_table = false;
    try {
        report = load_table_cli(opt.data).first;
        have_table = true;
        out << "ok: data file " << opt.data.data_path << " ("
            << report.table.n_rows() << " rows, " << report.table.n_features()
            << " features)\n";
        if (!report.rejected.empty()) {
            out << "warning: " << report.rejected.size()
                << " data lines rejected (first: line "
                << report.rejected.front().line << ", "
                << report.rejected.front().reason << ")\n";
        }
    } catch (const std::exception& e) {
        problems.push_back("data file: " + std::string(e.what()));
    }

    try {
        const std::vector<ModelSpec> specs = load_model_specs(opt.specs_path);
        out << "ok: specs file " << opt.specs_path << " (" << specs.size()
            << " models)\n";
        if (have_table) {
            for (const ModelSpec& spec : specs) {
                for (const std::string& feature : spec.features) {
                    try {
                        report.table.column(feature);
                    } catch (const std::exception&) {
                        problems.push_back("model '" + spec.name +
                                           "': feature '" + feature +
                                           "' not in the data file");
                    }
                }
            }
        }
    } catch (const std::exception& e) {
        problems.push_back("specs file: " + std::string(e.what()));
    }

    const int budget = opt.n_init + opt.batch * opt.iters;
    if (have_table) {
        if (report.table.n_rows() >= budget) {
            out << "ok: budget " << budget << " fits the "
                << report.table.n_rows() << " usable rows\n";
        } else {
            problems.push_back("budget " + std::to_string(budget) +
                               " exceeds the " +
                               std::to_string(report.table.n_rows()) +
                               " usable rows");
        }
    }

    for (const std::string& problem : problems) {
        err << "fail: " << problem << "\n";
    }
    out << (problems.empty() ? "validation passed\n" : "validation failed\n");
    return problems.empty() ? 0 : 1;
}

struct SynthOptions {
    std::string out_path;
    int n_rows = 437;
    int n_true_features = 3;
    int n_distractors = 3;
    double noise_std = 1.0;
    std::uint64_t seed = 1;
};

/// Generates a synthetic benchmark table whose response depends only on
/// the S-prefixed feature block, and writes it as a CSV with a "Response"
/// column, loadable with --table-schema header --response Response.
inline int cmd_synth(const SynthOptions& opt, std::ostream& out,
                     std::ostream& err) {
    try {
        if (opt.n_rows < 10) throw ConfigError("need at least 10 rows");
        if (opt.n_true_features < 1) {
            throw ConfigError("need at least one true feature");
        }
        if (opt.n_distractors < 0) {
            throw ConfigError("distractor count must be >= 0");
        }
        ModelSpec spec_true;
        spec_true.name = "TrueModel";
        for (int j = 1; j <= opt.n_true_features; ++j) {
            spec_true.features.push_back("S" + std::to_string(j));
        }
        const ExperimentTable table = synth_table(
            static_cast<std::size_t>(opt.n_rows), spec_true, opt.noise_std,
            opt.seed, static_cast<std::size_t>(opt.n_distractors));

        std::ostringstream csv;
        for (const std::string& name : table.feature_names) csv << name << ",";
        csv << "Response\n";
        for (Eigen::Index i = 0; i < table.n_rows(); ++i) {
            for (Eigen::Index j = 0; j < table.n_features(); ++j) {
                csv << detail::fmt_double(table.features(i, j)) << ",";
            }
            csv << detail::fmt_double(table.responses(i)) << "\n";
        }
        detail::write_text_file(opt.out_path, csv.str());
        out << "wrote " << table.n_rows() << " rows to " << opt.out_path
            << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace poolbo

#endif // POOLBO_CLI_HPP
