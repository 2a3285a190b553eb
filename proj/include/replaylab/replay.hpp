// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gradient interference scoring and replay-buffer selection.
//
// A sample interferes with the current update when its own loss gradient points
// against the update gradient: score = -cos(g, g_i). Selection keeps the K most
// interfering samples of the old-domain pool.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "replaylab/dataset.hpp"
#include "replaylab/net.hpp"

namespace replaylab {

/// Gradients with a smaller Euclidean norm carry no direction.
inline constexpr double kDegenerateNorm = 1e-12;

struct InterferenceScore {
    std::int64_t sample_id = 0;
    double score = 0.0;

    bool operator==(const InterferenceScore&) const = default;
};

struct ReplayBuffer {
    std::vector<std::int64_t> sample_ids;
    int selected_at_epoch = 0;
    /// Aligned with sample_ids when the selector produces scores.
    std::vector<InterferenceScore> scores;

    std::size_t size() const { return sample_ids.size(); }
    bool operator==(const ReplayBuffer&) const = default;
};

/// -<g, g_i> / (|g| |g_i|), or nullopt when either norm is below kDegenerateNorm.
std::optional<double> interference_score(std::span<const double> g, std::span<const double> g_i);

/// Score used for ranking: a degenerate sample gradient cannot interfere and
/// gets -1, the least interfering value.
double ranked_interference_score(std::span<const double> g, std::span<const double> g_i);

GradVector per_sample_gradient(const ModelConfig& config, const ParamVector& params,
                               const Sample& sample);

/// Mean per-sample gradient over every sample of `d_new`.
GradVector average_new_domain_gradient(const ModelConfig& config, const ParamVector& params,
                                       const Dataset& d_new);

struct ScoringOptions {
    /// Workers for scoring; results do not depend on this value.
    std::size_t threads = 1;
};

/// Interference score of every pool sample against `g`, in pool order.
/// One per-sample gradient is alive per worker at a time.
std::vector<InterferenceScore> score_pool(const GradVector& g, const ModelConfig& config,
                                          const ParamVector& params, const Dataset& pool,
                                          const ScoringOptions& options = {});

/// The k highest scores, ties by ascending sample ID, in rank order.
std::vector<InterferenceScore> top_k_highest(std::vector<InterferenceScore> scores, std::size_t k);

/// The k lowest scores, ties by ascending sample ID, in rank order.
std::vector<InterferenceScore> top_k_lowest(std::vector<InterferenceScore> scores, std::size_t k);

/// Top-k most interfering samples of `pool` with respect to `g`.
ReplayBuffer gmir_select(const GradVector& g, const ModelConfig& config, const ParamVector& params,
                         const Dataset& pool, std::size_t k, const ScoringOptions& options = {});

/// Uniform sample of k distinct pool IDs.
ReplayBuffer random_select(const Dataset& pool, std::size_t k, std::uint64_t seed);

}  // namespace replaylab
