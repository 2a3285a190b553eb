// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and the end-to-end pipeline: data generation,
// scratch baselines, strategy finetuning, hyperparameter sweeps.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "replaylab/dataset.hpp"
#include "replaylab/metrics.hpp"
#include "replaylab/strategies.hpp"
#include "replaylab/trainer.hpp"

namespace replaylab {

struct DataConfig {
    DomainSpec old_domain{};
    DomainSpec new_domain{};
    SplitRatios ratios{};
    std::uint64_t seed = 2023;
    /// When set, splits are loaded from `<dir>/{old,new}_{train,val,test}.txt`
    /// instead of being generated.
    std::optional<std::filesystem::path> dir;

    DataConfig();
};

struct PhaseConfig {
    int epochs = 80;
    std::size_t batch_size = 8;
    double lr = 0.01;
    int eval_every = 1;
};

struct StrategyEntry {
    StrategyConfig config{};
    std::string label;
};

enum class SweepKnob { d_fraction, k, n_resample };

std::string_view to_string(SweepKnob k);

struct SweepConfig {
    SweepKnob knob = SweepKnob::n_resample;
    std::vector<double> values;
    StrategyEntry base{StrategyConfig::defaults(StrategyKind::gmir), "gmir"};
    /// Run grid points on separate threads.
    bool parallel = false;
};

struct ExperimentConfig {
    DataConfig data{};
    ModelConfig model{};
    PhaseConfig pretrain{};
    PhaseConfig finetune{};
    /// Subset of {"clear", "adverse", "all"}.
    std::vector<std::string> scratch_runs{"clear", "adverse", "all"};
    std::vector<StrategyEntry> strategies;
    std::optional<SweepConfig> sweep;
    std::vector<std::int64_t> seeds{1};
    std::filesystem::path output_dir{"out"};
    std::size_t threads = 1;
    /// Start checkpoint for finetuning instead of the scratch-clear run.
    std::optional<std::filesystem::path> pretrained_checkpoint;

    void validate() const;

    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    std::string to_json() const;
};

/// Reference-size defaults: 3631 old and 3365 new samples, 60/15/25 split,
/// every strategy at its default hyperparameters.
ExperimentConfig default_experiment();

/// Same task scaled to 500/465 samples.
ExperimentConfig ci_experiment();

/// Grid for one knob: D {0.2, 0.5, 1.0}, K {0.01, 0.05, 0.2}, n {2, 5, 10, 20, 40}.
std::vector<double> sweep_preset(SweepKnob knob);

struct DomainData {
    DatasetSplits old_splits;
    DatasetSplits new_splits;
    bool generated = true;
};

/// Splits for one seed: generated from the config, or loaded when data.dir is set.
DomainData make_data(const ExperimentConfig& config, std::int64_t seed);

/// Writes the six split files for `seed` into `dir`; returns their paths.
std::vector<std::filesystem::path> write_data(const DomainData& data, const std::filesystem::path& dir);

using Progress = std::function<void(const std::string&)>;

struct RunOptions {
    /// Write checkpoints, run logs and report files under config.output_dir.
    bool write_artifacts = true;
    Progress progress;
};

/// Scratch baselines plus one finetune row per strategy, for every seed.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Only the scratch-clear run; its best checkpoint lands in
/// `<output_dir>/seed-N/scratch-clear.ckpt`.
ExperimentReport run_pretrain(const ExperimentConfig& config, const RunOptions& options = {});

/// Where finetuning looks for the start checkpoint of `seed`.
std::filesystem::path pretrained_checkpoint_path(const ExperimentConfig& config, std::int64_t seed);

/// Strategy runs from an existing checkpoint; the remaining scratch runs
/// are trained to supply the new-domain lower bound.
ExperimentReport run_finetune(const ExperimentConfig& config, const RunOptions& options = {});

/// One finetune run per grid value with a shared pretrained checkpoint per seed.
ExperimentReport run_sweep(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes report.json and report.txt into `dir`, plus timing.json which
/// repeats report.json with wall-clock seconds.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace replaylab
