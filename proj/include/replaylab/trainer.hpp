// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pretraining on the old domain and strategy-driven finetuning on the new one.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "replaylab/dataset.hpp"
#include "replaylab/ledger.hpp"
#include "replaylab/net.hpp"
#include "replaylab/replay.hpp"
#include "replaylab/strategies.hpp"

namespace replaylab {

struct TrainConfig {
    ModelConfig model{};
    int epochs = 80;
    std::size_t batch_size = 8;
    double lr = 0.01;
    std::uint64_t seed = 0;
    /// Finetuning only.
    StrategyConfig strategy{};
    /// Validation runs every eval_every epochs and always after the last one.
    int eval_every = 1;
    ScoringOptions scoring{};

    void validate() const;
};

struct Checkpoint {
    ParamVector params;
    ModelConfig model{};
    double best_val_metric = 0.0;
    int epoch = 0;

    bool operator==(const Checkpoint&) const = default;
};

/// Text format:
///   replaylab-checkpoint 1
///   model input_dim=.. hidden=.. classes=.. activation=..
///   epoch E
///   best_val V
///   count P
///   P lines, one parameter each (17 significant digits)
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// A buffer snapshot taken at a resampling event.
struct ResampleEvent {
    int epoch = 0;
    std::string strategy;
    std::vector<std::int64_t> sample_ids;
    std::vector<double> scores;
};

struct EpochRecord {
    std::string phase;
    std::string run;
    int epoch = 0;
    double train_loss = 0.0;
    std::uint64_t steps = 0;
    std::optional<double> old_val;
    std::optional<double> new_val;
    std::optional<ResampleEvent> resample;
    std::vector<std::string> notes;
};

/// One JSON object per line, appended in epoch order.
struct RunLog {
    std::vector<EpochRecord> records;

    std::string to_jsonl() const;
    void append_to(const std::filesystem::path& path) const;
};

/// Called before every parameter update with the batch and the buffer in force.
using StepObserver = std::function<void(int epoch, Minibatch batch, const ReplayBuffer* active)>;

struct TrainResult {
    Checkpoint best;
    Checkpoint final_state;
    TimingLedger timing;
    RunLog log;
};

/// Validation sets for best-checkpoint selection: the criterion is the mean
/// accuracy over the non-null sets.
struct ValidationSets {
    const Dataset* old_val = nullptr;
    const Dataset* new_val = nullptr;
};

/// Plain minibatch SGD from a fresh initialization.
TrainResult train_from_scratch(const TrainConfig& config, const Dataset& train, ValidationSets val,
                               const std::string& run_label = "scratch");

/// Old-domain pretraining: train_from_scratch on the old train split, selected on old-val.
Checkpoint pretrain(const TrainConfig& config, const Dataset& old_train, const Dataset& old_val);

struct FinetuneData {
    const Dataset* new_train = nullptr;
    const Dataset* new_val = nullptr;
    /// Complete old-domain train split (retrieval pool is derived from it).
    const Dataset* old_train = nullptr;
    const Dataset* old_val = nullptr;
};

struct FinetuneResult : TrainResult {
    std::vector<ResampleEvent> resample_log;
    /// Buffer in force at the start of epoch 1.
    std::optional<ReplayBuffer> initial_buffer;
};

FinetuneResult finetune(const TrainConfig& config, const Checkpoint& start, const FinetuneData& data,
                        const StepObserver& observer = {});

}  // namespace replaylab
