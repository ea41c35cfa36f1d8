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

#include <iostream>

#include <CLI11.hpp>

#include "poolbo/poolbo.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Pool-based sequential experiment design: single-model "
                 "Bayesian optimization and Bayesian-model-averaged "
                 "optimization over Gaussian-process surrogates"};
    app.require_subcommand(1);
    app.set_version_flag("--version", poolbo::k_version);

    poolbo::RunOptions run_opt;
    CLI::App* run = app.add_subcommand(
        "run", "Run repeated seeded campaigns and write result files");
    run->add_option("--data", run_opt.data.data_path, "Input data file (CSV/TSV)")
        ->required();
    run->add_option("--specs", run_opt.specs_path,
                    "Model spec config (JSON)")
        ->required();
    run->add_option("--table-schema", run_opt.data.table_schema,
                    "Data schema: nims (fixed fatigue columns) or header "
                    "(columns from the file header)")
        ->check(CLI::IsMember({"nims", "header"}));
    run->add_option("--response", run_opt.data.response,
                    "Response column name for --table-schema header");
    run->add_option("--mode", run_opt.mode, "bo or bma")
        ->check(CLI::IsMember({"bo", "bma"}));
    run->add_option("--model", run_opt.model,
                    "bo mode: pick this model by name from the specs file");
    run->add_option("--acq-variant", run_opt.acq_variant,
                    "weighted-ei or mixture-ei")
        ->check(CLI::IsMember({"weighted-ei", "mixture-ei"}));
    run->add_option("--policy", run_opt.policy,
                    "ei or random (uniform control policy)")
        ->check(CLI::IsMember({"ei", "random"}));
    run->add_option("--n-init", run_opt.n_init, "Initial design size");
    run->add_option("--batch", run_opt.batch, "Experiments added per iteration");
    run->add_option("--iters", run_opt.iters, "Number of iterations");
    run->add_option("--runs", run_opt.runs, "Number of repeated campaigns");
    run->add_option("--seed", run_opt.seed, "Base seed for run-seed derivation");
    run->add_option("--threads", run_opt.threads, "Worker threads for runs");
    run->add_option("--out-dir", run_opt.out_dir, "Output directory");
    run->add_flag("--warm-start", run_opt.warm_start,
                  "Seed each refit from the previous iteration's "
                  "hyperparameters");
    run->add_option("--gp-restarts", run_opt.gp_restarts,
                    "Optimizer restarts per model fit");

    poolbo::CompareOptions cmp_opt;
    CLI::App* cmp = app.add_subcommand(
        "compare", "Summarize two results files side by side");
    cmp->add_option("results_a", cmp_opt.results_a, "First results.csv")
        ->required();
    cmp->add_option("results_b", cmp_opt.results_b, "Second results.csv")
        ->required();
    cmp->add_option("--out", cmp_opt.out_path,
                    "Also write the comparison table to this file");

    poolbo::ValidateOptions val_opt;
    CLI::App* val = app.add_subcommand(
        "validate", "Check a data file and spec config without running");
    val->add_option("--data", val_opt.data.data_path, "Input data file")
        ->required();
    val->add_option("--specs", val_opt.specs_path, "Model spec config (JSON)")
        ->required();
    val->add_option("--table-schema", val_opt.data.table_schema,
                    "nims or header")
        ->check(CLI::IsMember({"nims", "header"}));
    val->add_option("--response", val_opt.data.response,
                    "Response column name for --table-schema header");
    val->add_option("--n-init", val_opt.n_init, "Initial design size");
    val->add_option("--batch", val_opt.batch, "Experiments added per iteration");
    val->add_option("--iters", val_opt.iters, "Number of iterations");

    poolbo::SynthOptions synth_opt;
    CLI::App* synth = app.add_subcommand(
        "synth", "Generate a synthetic benchmark table");
    synth->add_option("--out", synth_opt.out_path, "Output CSV path")
        ->required();
    synth->add_option("--rows", synth_opt.n_rows, "Number of rows");
    synth->add_option("--true-features", synth_opt.n_true_features,
                      "Number of response-driving features S1..Sk");
    synth->add_option("--distractors", synth_opt.n_distractors,
                      "Number of inert features D1..Dd");
    synth->add_option("--noise", synth_opt.noise_std,
                      "Observation noise standard deviation");
    synth->add_option("--seed", synth_opt.seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return poolbo::cmd_run(run_opt, std::cout, std::cerr);
    if (cmp->parsed()) return poolbo::cmd_compare(cmp_opt, std::cout, std::cerr);
    if (val->parsed()) return poolbo::cmd_validate(val_opt, std::cout, std::cerr);
    if (synth->parsed()) return poolbo::cmd_synth(synth_opt, std::cout, std::cerr);
    return 1;
}
