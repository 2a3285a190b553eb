// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/replay.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "replaylab/error.hpp"
#include "replaylab/rng.hpp"

namespace replaylab {

std::optional<double> interference_score(std::span<const double> g, std::span<const double> g_i) {
    const double ng = norm(g);
    const double ni = norm(g_i);
    if (ng < kDegenerateNorm || ni < kDegenerateNorm) return std::nullopt;
    const double s = -dot(g, g_i) / (ng * ni);
    return std::clamp(s, -1.0, 1.0);
}

double ranked_interference_score(std::span<const double> g, std::span<const double> g_i) {
    return interference_score(g, g_i).value_or(-1.0);
}

GradVector per_sample_gradient(const ModelConfig& config, const ParamVector& params,
                               const Sample& sample) {
    GradVector g(params.size());
    accumulate_sample_grad(config, params, sample, 1.0, g.span());
    return g;
}

GradVector average_new_domain_gradient(const ModelConfig& config, const ParamVector& params,
                                       const Dataset& d_new) {
    if (d_new.empty()) throw InputError("new-domain dataset is empty");
    GradVector g(params.size());
    // Sum first, divide once: matches the explicit mean regardless of N.
    for (const auto& s : d_new.samples) accumulate_sample_grad(config, params, s, 1.0, g.span());
    const double inv = 1.0 / static_cast<double>(d_new.size());
    for (double& v : g.values) v *= inv;
    return g;
}

std::vector<InterferenceScore> score_pool(const GradVector& g, const ModelConfig& config,
                                          const ParamVector& params, const Dataset& pool,
                                          const ScoringOptions& options) {
    if (g.size() != params.size()) throw ConfigError("gradient and parameter lengths differ");
    const std::size_t n = pool.size();
    std::vector<InterferenceScore> out(n);

    auto work = [&](std::size_t from, std::size_t to) {
        GradVector g_i(params.size());
        for (std::size_t k = from; k < to; ++k) {
            std::fill(g_i.values.begin(), g_i.values.end(), 0.0);
            accumulate_sample_grad(config, params, pool.samples[k], 1.0, g_i.span());
            out[k] = {pool.samples[k].id, ranked_interference_score(g.span(), g_i.span())};
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        work(0, n);
        return out;
    }
    // Each worker writes a disjoint index range, so the merged vector is
    // identical for any worker count.
    std::vector<std::thread> pool_threads;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t from = std::min(n, w * chunk), to = std::min(n, from + chunk);
        pool_threads.emplace_back([&, w, from, to] {
            try {
                work(from, to);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool_threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

namespace {

template <class Better>
std::vector<InterferenceScore> top_k(std::vector<InterferenceScore> scores, std::size_t k, Better better) {
    if (k > scores.size()) throw InputError("k exceeds the number of candidates");
    auto cmp = [&](const InterferenceScore& a, const InterferenceScore& b) {
        if (a.score != b.score) return better(a.score, b.score);
        return a.sample_id < b.sample_id;
    };
    std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k), scores.end(), cmp);
    scores.resize(k);
    return scores;
}

}  // namespace

std::vector<InterferenceScore> top_k_highest(std::vector<InterferenceScore> scores, std::size_t k) {
    return top_k(std::move(scores), k, std::greater<double>{});
}

std::vector<InterferenceScore> top_k_lowest(std::vector<InterferenceScore> scores, std::size_t k) {
    return top_k(std::move(scores), k, std::less<double>{});
}

ReplayBuffer gmir_select(const GradVector& g, const ModelConfig& config, const ParamVector& params,
                         const Dataset& pool, std::size_t k, const ScoringOptions& options) {
    if (k == 0) throw InputError("buffer size must be positive");
    if (k > pool.size())
        throw InputError("buffer size " + std::to_string(k) + " exceeds pool size " +
                         std::to_string(pool.size()));
    if (norm(g.span()) < kDegenerateNorm) throw InputError("reference gradient is degenerate");

    ReplayBuffer buf;
    buf.scores = top_k_highest(score_pool(g, config, params, pool, options), k);
    buf.sample_ids.reserve(k);
    for (const auto& s : buf.scores) buf.sample_ids.push_back(s.sample_id);
    return buf;
}

ReplayBuffer random_select(const Dataset& pool, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw InputError("buffer size must be positive");
    if (k > pool.size())
        throw InputError("buffer size " + std::to_string(k) + " exceeds pool size " +
                         std::to_string(pool.size()));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    ReplayBuffer buf;
    buf.sample_ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) buf.sample_ids.push_back(pool.samples[idx[i]].id);
    return buf;
}

}  // namespace replaylab
