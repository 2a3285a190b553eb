// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finetuning strategies: replay selectors, A-GEM projection, EWC, and the
// Strategy object the trainer drives through four hooks.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "replaylab/dataset.hpp"
#include "replaylab/ledger.hpp"
#include "replaylab/net.hpp"
#include "replaylab/replay.hpp"

namespace replaylab {

enum class StrategyKind {
    naive,
    low_lr,
    ewc,
    mir_epoch,
    agem,
    agem_plus,
    gss,
    fixed_sampling,
    random_resampling,
    gmir,
    gmir_plus,
};

std::string_view to_string(StrategyKind k);
StrategyKind strategy_kind_from_string(std::string_view name);

/// Every strategy kind in display order.
const std::vector<StrategyKind>& all_strategy_kinds();

/// Buffer size as an absolute count or as a fraction of the old train split.
struct BufferSize {
    double value = 0.05;
    bool is_fraction = true;

    std::size_t resolve(std::size_t old_train_size) const;
    bool operator==(const BufferSize&) const = default;
};

struct StrategyConfig {
    StrategyKind kind = StrategyKind::gmir;
    BufferSize k{};
    /// Share of the old train split kept as the retrieval pool.
    double d_fraction = 1.0;
    int n_resample = 10;
    std::optional<double> lr_override;
    /// low-lr finetunes at base lr times this factor (0.01 -> 0.003).
    double low_lr_factor = 0.3;
    double ewc_lambda = 0.4;
    double gss_param_fraction = 0.01;

    /// Defaults for a kind; mir-epoch scores a 20% ledger as in the reference setup.
    static StrategyConfig defaults(StrategyKind kind);

    void validate() const;
    bool uses_buffer() const;
    std::string label() const;

    bool operator==(const StrategyConfig&) const = default;
};

struct AgemOutcome {
    bool projected = false;
    bool degenerate_reference = false;
};

/// Removes the component of g that opposes g_ref when <g, g_ref> < 0.
/// A degenerate g_ref leaves g untouched and sets `degenerate_reference`.
GradVector agem_project(const GradVector& g, const GradVector& g_ref, AgemOutcome* outcome = nullptr);

/// Top-k loss increase (curr - prev), ties by ascending ID. Scores carry the deltas.
ReplayBuffer mir_epoch_select(const std::map<std::int64_t, double>& losses_prev,
                              const std::map<std::int64_t, double>& losses_curr, std::size_t k);

/// ceil(fraction * P) distinct coordinates, ascending, drawn with `seed`.
std::vector<std::size_t> gss_coordinates(std::size_t param_count, double param_fraction,
                                         std::uint64_t seed);

/// k samples whose restricted gradients have the smallest maximum cosine
/// similarity to any other pool sample. Scores carry that maximum.
ReplayBuffer gss_select(const ModelConfig& config, const ParamVector& params, const Dataset& pool,
                        std::size_t k, double param_fraction, std::uint64_t seed);

struct FisherDiagonal {
    std::vector<double> values;
    ParamVector reference_params;
};

/// Empirical diagonal Fisher: mean of squared per-sample gradients at params_star.
FisherDiagonal ewc_fisher(const ModelConfig& config, const ParamVector& params_star,
                          const Dataset& d_old_train);

/// lambda * F (.) (params - reference); gradient of (lambda/2) sum F (theta - theta*)^2.
GradVector ewc_penalty_grad(const ParamVector& params, const FisherDiagonal& fisher, double lambda);

/// (lambda/2) sum F (theta - theta*)^2.
double ewc_penalty(const ParamVector& params, const FisherDiagonal& fisher, double lambda);

/// True when a buffer-refreshing strategy resamples after `completed_epochs`
/// of `total_epochs`: a positive multiple of n with at least one epoch left.
bool resample_due(const StrategyConfig& strategy, int completed_epochs, int total_epochs);

struct ResampleContext {
    int completed_epochs = 0;
    int total_epochs = 0;
    const ModelConfig* model = nullptr;
    const ParamVector* params = nullptr;
    /// Gradient of the final minibatch of the previous epoch, untransformed.
    const GradVector* last_g = nullptr;
    /// Retrieval pool (the d_fraction subset of the old train split). A
    /// fractional k resolves against this pool's size.
    const Dataset* d_old_pool = nullptr;
    const Dataset* d_new = nullptr;
    std::uint64_t seed = 0;
    ScoringOptions scoring{};
    /// mir-epoch only: the loss ledger before and after the last epoch.
    const std::map<std::int64_t, double>* losses_prev = nullptr;
    const std::map<std::int64_t, double>* losses_curr = nullptr;
    /// Receives selection work counts when set.
    TimingLedger* ledger = nullptr;
};

/// New buffer when the strategy's schedule fires, otherwise nullopt.
std::optional<ReplayBuffer> strategy_resample(const StrategyConfig& strategy, const ResampleContext& ctx);

/// Inputs the trainer hands to a strategy for one finetuning run.
struct FinetuneInputs {
    const ModelConfig* model = nullptr;
    const Dataset* d_new = nullptr;
    /// Complete old-domain train split.
    const Dataset* d_old_train = nullptr;
    int total_epochs = 0;
    std::size_t batch_size = 8;
    double base_lr = 0.01;
    std::uint64_t seed = 0;
    ScoringOptions scoring{};
};

/// Stateful strategy instance. The trainer calls on_finetune_start once, then
/// per epoch on_epoch_start and batch_source, and transform_gradient before
/// every parameter update.
class Strategy {
public:
    Strategy(StrategyConfig config, FinetuneInputs inputs);
    Strategy(const Strategy&) = delete;
    Strategy& operator=(const Strategy&) = delete;

    const StrategyConfig& config() const { return config_; }

    /// Builds the retrieval pool, the initial random buffer, the Fisher
    /// diagonal or the loss ledger depending on the kind.
    void on_finetune_start(const ParamVector& start_params, TimingLedger& ledger);

    /// Returns the new buffer when a resampling event fires at this boundary.
    std::optional<ReplayBuffer> on_epoch_start(int completed_epochs, const ParamVector& params,
                                               const GradVector* last_g, TimingLedger& ledger);

    /// Samples one epoch iterates over (unshuffled): D_n, or D_n plus the buffer.
    std::vector<const Sample*> batch_source() const;

    /// A-GEM projection or the EWC penalty; identity for the other kinds.
    void transform_gradient(GradVector& g, const ParamVector& params, int epoch, std::size_t step,
                            TimingLedger& ledger);

    double learning_rate() const;

    const std::optional<ReplayBuffer>& buffer() const { return buffer_; }
    const Dataset& retrieval_pool() const { return pool_; }
    /// Drains warnings raised since the previous call (e.g. degenerate A-GEM reference).
    std::vector<std::string> take_warnings();

private:
    std::map<std::int64_t, double> ledger_losses(const ParamVector& params, TimingLedger& ledger) const;
    std::vector<const Sample*> buffer_samples() const;

    StrategyConfig config_;
    FinetuneInputs in_;
    Dataset pool_;
    std::unordered_map<std::int64_t, const Sample*> pool_index_;
    std::optional<ReplayBuffer> buffer_;
    std::optional<FisherDiagonal> fisher_;
    std::map<std::int64_t, double> losses_prev_;
    std::vector<std::string> warnings_;
};

}  // namespace replaylab
