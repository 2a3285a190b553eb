// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-domain accuracy, transfer relative to scratch lower bounds, training-time
// reduction, and the experiment report.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replaylab/dataset.hpp"
#include "replaylab/ledger.hpp"
#include "replaylab/net.hpp"

namespace replaylab {

/// Accuracy in percent of argmax predictions on `test`.
double evaluate(const ModelConfig& config, const ParamVector& params, const Dataset& test);

struct DomainResult {
    std::string run_label;
    double old_metric = 0.0;
    double new_metric = 0.0;
};

struct TransferResult {
    double backward_transfer = 0.0;
    double forward_transfer = 0.0;
    double mean_metric = 0.0;
};

/// BWT = old - lb_old, FWT = new - lb_new, mean = (old + new) / 2.
TransferResult transfer_metrics(const DomainResult& run, double lb_old, double lb_new);

/// Percent saved relative to the baseline; negative when the method is slower.
double time_reduction(double baseline_hours, double method_hours);

enum class RunKind { scratch, finetune };

struct ReportRow {
    DomainResult result;
    RunKind kind = RunKind::finetune;
    std::int64_t seed = 0;
    /// Sweep grid value, when the row belongs to a sweep.
    std::optional<double> grid_value;
    std::optional<TransferResult> transfer;
    TimingLedger timing;

    double mean_metric() const { return 0.5 * (result.old_metric + result.new_metric); }
};

/// Mean and sample standard deviation over seeds for one run label.
struct AggregateRow {
    std::string run_label;
    RunKind kind = RunKind::finetune;
    std::optional<double> grid_value;
    std::size_t seeds = 0;
    double old_mean = 0.0, old_sd = 0.0;
    double new_mean = 0.0, new_sd = 0.0;
    double mean_mean = 0.0, mean_sd = 0.0;
    std::optional<double> bwt_mean, bwt_sd, fwt_mean, fwt_sd;
    double train_steps_mean = 0.0;
    double scoring_evals_mean = 0.0;
    double total_work_mean = 0.0;
};

struct ExperimentReport {
    std::string title;
    /// JSON text of the configuration that produced the report.
    std::string config_echo;
    std::vector<std::int64_t> seeds;
    std::string sweep_knob;
    std::vector<ReportRow> rows;
    std::vector<std::string> notes;

    /// Fills `transfer` of finetune rows from the scratch rows of the same
    /// seed; rows stay without transfer when a lower bound is missing.
    void attach_transfer();

    std::vector<AggregateRow> aggregate() const;
};

/// Mean and sample standard deviation (n - 1); sd is 0 for fewer than two values.
std::pair<double, double> mean_sd(const std::vector<double>& values);

/// Aligned text table: method | old | new | mean, with signed transfers.
std::string render_table(const ExperimentReport& report);

/// Structured form, one record per row plus aggregates. Wall-clock seconds
/// are left out by default so that reruns produce identical bytes.
std::string report_to_json(const ExperimentReport& report, bool include_wallclock = false);
ExperimentReport report_from_json(const std::string& text);

}  // namespace replaylab
