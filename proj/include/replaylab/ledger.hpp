// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Work and wall-clock accounting for a training run.

#pragma once

#include <cstdint>

namespace replaylab {

/// Hardware-independent counters plus wall-clock seconds per phase.
///
/// `scoring_grad_evals` counts every per-sample gradient evaluated to pick a
/// replay buffer. For averaged-gradient selection it includes the new-domain
/// evaluations, which are also broken out in `average_grad_evals`.
struct TimingLedger {
    std::uint64_t train_steps = 0;
    std::uint64_t train_sample_grads = 0;
    std::uint64_t scoring_grad_evals = 0;
    std::uint64_t average_grad_evals = 0;
    std::uint64_t loss_evals = 0;
    std::uint64_t reference_grad_evals = 0;
    std::uint64_t fisher_grad_evals = 0;
    std::uint64_t projections = 0;
    std::uint64_t resample_events = 0;

    double seconds_train = 0.0;
    double seconds_selection = 0.0;
    double seconds_eval = 0.0;
    double seconds_total = 0.0;

    /// Steps plus scoring evaluations: the unit used to compare methods.
    std::uint64_t total_work() const { return train_steps + scoring_grad_evals; }

    TimingLedger& operator+=(const TimingLedger& o) {
        train_steps += o.train_steps;
        train_sample_grads += o.train_sample_grads;
        scoring_grad_evals += o.scoring_grad_evals;
        average_grad_evals += o.average_grad_evals;
        loss_evals += o.loss_evals;
        reference_grad_evals += o.reference_grad_evals;
        fisher_grad_evals += o.fisher_grad_evals;
        projections += o.projections;
        resample_events += o.resample_events;
        seconds_train += o.seconds_train;
        seconds_selection += o.seconds_selection;
        seconds_eval += o.seconds_eval;
        seconds_total += o.seconds_total;
        return *this;
    }
};

}  // namespace replaylab
