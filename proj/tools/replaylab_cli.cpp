// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// replaylab command-line driver. Everything goes through the C interface.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "replaylab/replaylab.h"

namespace {

struct Overrides {
    std::string config;
    std::string preset;
    std::optional<long long> seed;
    std::string out;
    std::optional<std::size_t> threads;
    std::string strategy;
    bool quiet = false;
};

// Exit codes: 0 success, 1 runtime failure, 2 bad configuration or input.
int exit_code(rl_status s) {
    switch (s) {
        case RL_OK: return 0;
        case RL_ERR_CONFIG:
        case RL_ERR_INPUT:
        case RL_ERR_NULL_ARG: return 2;
        default: return 1;
    }
}

int report_failure(const char* what, rl_status s) {
    std::fprintf(stderr, "replaylab: %s failed (%s): %s\n", what, rl_status_name(s), rl_last_error());
    return exit_code(s);
}

void print_progress(const char* message, void*) { std::fprintf(stderr, "[replaylab] %s\n", message); }

void add_common(CLI::App* cmd, Overrides& o, bool with_strategy) {
    cmd->add_option("-c,--config", o.config, "experiment config (JSON)");
    cmd->add_option("--preset", o.preset, "built-in config when --config is absent: default or ci")
        ->check(CLI::IsMember({"default", "ci"}));
    cmd->add_option("--seed", o.seed, "run this single seed instead of the configured list");
    cmd->add_option("-o,--out", o.out, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads for gradient scoring")->check(CLI::PositiveNumber);
    if (with_strategy) cmd->add_option("--strategy", o.strategy, "run only this strategy (name or config label)");
    cmd->add_flag("-q,--quiet", o.quiet, "no progress messages");
}

// Loads the config and applies command-line overrides. Returns an exit code
// on failure.
std::optional<int> build_experiment(const Overrides& o, rl_experiment** exp) {
    rl_status s;
    if (!o.config.empty()) {
        s = rl_experiment_load(o.config.c_str(), exp);
        if (s != RL_OK) return report_failure("loading config", s);
    } else {
        s = rl_experiment_preset(o.preset.empty() ? "default" : o.preset.c_str(), exp);
        if (s != RL_OK) return report_failure("loading preset", s);
    }
    if (o.seed) s = rl_experiment_set_seed(*exp, *o.seed);
    if (s == RL_OK && !o.out.empty()) s = rl_experiment_set_output_dir(*exp, o.out.c_str());
    if (s == RL_OK && o.threads) s = rl_experiment_set_threads(*exp, *o.threads);
    if (s == RL_OK && !o.strategy.empty()) s = rl_experiment_select_strategy(*exp, o.strategy.c_str());
    if (s == RL_OK && !o.quiet) s = rl_experiment_set_progress(*exp, print_progress, nullptr);
    if (s != RL_OK) {
        const int code = report_failure("applying overrides", s);
        rl_experiment_free(*exp);
        *exp = nullptr;
        return code;
    }
    return std::nullopt;
}

int print_table(const rl_report* report) {
    size_t needed = 0;
    rl_status s = rl_report_render_table(report, nullptr, 0, &needed);
    if (s != RL_OK) return report_failure("rendering report", s);
    std::string text(needed, '\0');
    s = rl_report_render_table(report, text.data(), text.size(), &needed);
    if (s != RL_OK) return report_failure("rendering report", s);
    text.resize(needed - 1);
    std::fputs(text.c_str(), stdout);
    return 0;
}

using Pipeline = rl_status (*)(const rl_experiment*, rl_report**);

int run_pipeline(const Overrides& o, Pipeline fn, const char* what) {
    rl_experiment* exp = nullptr;
    if (auto code = build_experiment(o, &exp)) return *code;
    rl_report* report = nullptr;
    const rl_status s = fn(exp, &report);
    rl_experiment_free(exp);
    if (s != RL_OK) return report_failure(what, s);
    const int code = print_table(report);
    rl_report_free(report);
    return code;
}

int gen_data(const Overrides& o) {
    rl_experiment* exp = nullptr;
    if (auto code = build_experiment(o, &exp)) return *code;
    const rl_status s = rl_gen_data(exp);
    rl_experiment_free(exp);
    if (s != RL_OK) return report_failure("gen-data", s);
    return 0;
}

int show_report(const std::string& path) {
    rl_report* report = nullptr;
    const rl_status s = rl_report_load(path.c_str(), &report);
    if (s != RL_OK) return report_failure("reading report", s);
    const int code = print_table(report);
    rl_report_free(report);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"replaylab: replay-based domain-incremental finetuning experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rl_version()));

    Overrides o;
    auto* gen = app.add_subcommand("gen-data", "write old/new x train/val/test split files under <out>/data/seed-N");
    add_common(gen, o, false);
    auto* pre = app.add_subcommand("pretrain", "train scratch-clear and keep its best checkpoint");
    add_common(pre, o, false);
    auto* fin = app.add_subcommand("finetune", "finetune the pretrained checkpoint with each strategy");
    add_common(fin, o, true);
    auto* run = app.add_subcommand("run", "scratch baselines plus every configured strategy");
    add_common(run, o, true);
    auto* sweep = app.add_subcommand("sweep", "one finetune run per grid value of the sweep section");
    add_common(sweep, o, true);

    std::string report_path;
    auto* rep = app.add_subcommand("report", "print the table of an existing report.json");
    rep->add_option("path", report_path, "report.json, or a directory containing one")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*gen) return gen_data(o);
    if (*pre) return run_pipeline(o, rl_pretrain, "pretrain");
    if (*fin) return run_pipeline(o, rl_finetune, "finetune");
    if (*run) return run_pipeline(o, rl_run, "run");
    if (*sweep) return run_pipeline(o, rl_sweep, "sweep");
    if (*rep) {
        std::string path = report_path;
        if (!path.empty() && path.back() != '/' && path.size() > 5 && path.substr(path.size() - 5) == ".json")
            return show_report(path);
        return show_report(path + "/report.json");
    }
    return 2;
}
