// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/strategies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "replaylab/error.hpp"
#include "replaylab/rng.hpp"
#include "streams.hpp"

namespace replaylab {

namespace {

struct KindName {
    StrategyKind kind;
    std::string_view name;
};

constexpr KindName kKindNames[] = {
    {StrategyKind::naive, "naive"},
    {StrategyKind::low_lr, "low-lr"},
    {StrategyKind::ewc, "ewc"},
    {StrategyKind::mir_epoch, "mir-epoch"},
    {StrategyKind::agem, "agem"},
    {StrategyKind::agem_plus, "agem-plus"},
    {StrategyKind::gss, "gss"},
    {StrategyKind::fixed_sampling, "fixed-sampling"},
    {StrategyKind::random_resampling, "random-resampling"},
    {StrategyKind::gmir, "gmir"},
    {StrategyKind::gmir_plus, "gmir-plus"},
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(StrategyKind k) {
    for (const auto& kn : kKindNames)
        if (kn.kind == k) return kn.name;
    return "?";
}

StrategyKind strategy_kind_from_string(std::string_view name) {
    for (const auto& kn : kKindNames)
        if (kn.name == name) return kn.kind;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const std::vector<StrategyKind>& all_strategy_kinds() {
    static const std::vector<StrategyKind> kinds = [] {
        std::vector<StrategyKind> v;
        for (const auto& kn : kKindNames) v.push_back(kn.kind);
        return v;
    }();
    return kinds;
}

std::size_t BufferSize::resolve(std::size_t old_train_size) const {
    if (!is_fraction) return static_cast<std::size_t>(value);
    return std::max<std::size_t>(1, static_cast<std::size_t>(
                                        std::llround(value * static_cast<double>(old_train_size))));
}

StrategyConfig StrategyConfig::defaults(StrategyKind kind) {
    StrategyConfig c;
    c.kind = kind;
    if (kind == StrategyKind::mir_epoch) c.d_fraction = 0.2;
    return c;
}

bool StrategyConfig::uses_buffer() const {
    switch (kind) {
        case StrategyKind::naive:
        case StrategyKind::low_lr:
        case StrategyKind::ewc:
            return false;
        default:
            return true;
    }
}

void StrategyConfig::validate() const {
    if (uses_buffer()) {
        if (k.is_fraction ? !(k.value > 0.0 && k.value <= 1.0) : k.value < 1.0)
            throw ConfigError("buffer size k must be at least one sample");
        if (!k.is_fraction && k.value != std::floor(k.value))
            throw ConfigError("buffer size k must be an integer count");
    }
    if (n_resample < 1) throw ConfigError("n_resample must be at least 1");
    if (!(d_fraction > 0.0 && d_fraction <= 1.0)) throw ConfigError("d_fraction must lie in (0, 1]");
    if (lr_override && !(*lr_override > 0.0)) throw ConfigError("lr_override must be positive");
    if (!(low_lr_factor > 0.0)) throw ConfigError("low_lr_factor must be positive");
    if (!(ewc_lambda >= 0.0)) throw ConfigError("ewc_lambda must be nonnegative");
    if (!(gss_param_fraction > 0.0 && gss_param_fraction <= 1.0))
        throw ConfigError("gss_param_fraction must lie in (0, 1]");
}

std::string StrategyConfig::label() const { return std::string(to_string(kind)); }

GradVector agem_project(const GradVector& g, const GradVector& g_ref, AgemOutcome* outcome) {
    if (g.size() != g_ref.size()) throw ConfigError("gradient lengths differ");
    AgemOutcome local;
    AgemOutcome& o = outcome ? *outcome : local;
    o = {};
    const double ref_sq = dot(g_ref.span(), g_ref.span());
    if (std::sqrt(ref_sq) < kDegenerateNorm) {
        o.degenerate_reference = true;
        return g;
    }
    const double d = dot(g.span(), g_ref.span());
    if (d >= 0.0) return g;
    o.projected = true;
    GradVector out = g;
    const double c = d / ref_sq;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * g_ref[i];
    return out;
}

ReplayBuffer mir_epoch_select(const std::map<std::int64_t, double>& losses_prev,
                              const std::map<std::int64_t, double>& losses_curr, std::size_t k) {
    if (losses_prev.size() != losses_curr.size())
        throw InputError("loss ledgers cover different samples");
    std::vector<InterferenceScore> deltas;
    deltas.reserve(losses_curr.size());
    auto it = losses_prev.begin();
    for (const auto& [id, curr] : losses_curr) {
        if (it->first != id) throw InputError("loss ledgers cover different samples");
        deltas.push_back({id, curr - it->second});
        ++it;
    }
    if (k == 0) throw InputError("buffer size must be positive");
    if (k > deltas.size()) throw InputError("buffer size exceeds loss ledger size");
    ReplayBuffer buf;
    buf.scores = top_k_highest(std::move(deltas), k);
    for (const auto& s : buf.scores) buf.sample_ids.push_back(s.sample_id);
    return buf;
}

std::vector<std::size_t> gss_coordinates(std::size_t param_count, double param_fraction,
                                         std::uint64_t seed) {
    if (!(param_fraction > 0.0 && param_fraction <= 1.0))
        throw InputError("param_fraction must lie in (0, 1]");
    const auto m = std::min(param_count, static_cast<std::size_t>(
                                             std::ceil(param_fraction * static_cast<double>(param_count))));
    std::vector<std::size_t> idx(param_count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(param_count - i)]);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ReplayBuffer gss_select(const ModelConfig& config, const ParamVector& params, const Dataset& pool,
                        std::size_t k, double param_fraction, std::uint64_t seed) {
    if (k == 0) throw InputError("buffer size must be positive");
    if (k > pool.size()) throw InputError("buffer size exceeds pool size");
    const auto coords = gss_coordinates(params.size(), param_fraction, seed);
    const std::size_t n = pool.size(), m = coords.size();

    // Unit-normalized restricted gradients; degenerate rows are flagged.
    std::vector<double> rows(n * m, 0.0);
    std::vector<char> degenerate(n, 0);
    GradVector g(params.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(g.values.begin(), g.values.end(), 0.0);
        accumulate_sample_grad(config, params, pool.samples[i], 1.0, g.span());
        double sq = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            rows[i * m + c] = g[coords[c]];
            sq += g[coords[c]] * g[coords[c]];
        }
        const double nrm = std::sqrt(sq);
        if (nrm < kDegenerateNorm) {
            degenerate[i] = 1;
            continue;
        }
        for (std::size_t c = 0; c < m; ++c) rows[i * m + c] /= nrm;
    }

    std::vector<InterferenceScore> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;  // a lone sample has no neighbours
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double sim = 1.0;
            if (!degenerate[i] && !degenerate[j]) {
                sim = 0.0;
                for (std::size_t c = 0; c < m; ++c) sim += rows[i * m + c] * rows[j * m + c];
                sim = std::clamp(sim, -1.0, 1.0);
            }
            best = any ? std::max(best, sim) : sim;
            any = true;
        }
        scores[i] = {pool.samples[i].id, best};
    }
    ReplayBuffer buf;
    buf.scores = top_k_lowest(std::move(scores), k);
    for (const auto& s : buf.scores) buf.sample_ids.push_back(s.sample_id);
    return buf;
}

FisherDiagonal ewc_fisher(const ModelConfig& config, const ParamVector& params_star,
                          const Dataset& d_old_train) {
    if (d_old_train.empty()) throw InputError("Fisher estimation needs at least one sample");
    FisherDiagonal f;
    f.values.assign(params_star.size(), 0.0);
    f.reference_params = params_star;
    GradVector g(params_star.size());
    for (const auto& s : d_old_train.samples) {
        std::fill(g.values.begin(), g.values.end(), 0.0);
        accumulate_sample_grad(config, params_star, s, 1.0, g.span());
        for (std::size_t i = 0; i < g.size(); ++i) f.values[i] += g[i] * g[i];
    }
    const double inv = 1.0 / static_cast<double>(d_old_train.size());
    for (double& v : f.values) v *= inv;
    return f;
}

GradVector ewc_penalty_grad(const ParamVector& params, const FisherDiagonal& fisher, double lambda) {
    if (params.size() != fisher.values.size() || params.size() != fisher.reference_params.size())
        throw ConfigError("Fisher layout does not match parameters");
    GradVector g(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        g[i] = lambda * fisher.values[i] * (params[i] - fisher.reference_params[i]);
    return g;
}

double ewc_penalty(const ParamVector& params, const FisherDiagonal& fisher, double lambda) {
    if (params.size() != fisher.values.size() || params.size() != fisher.reference_params.size())
        throw ConfigError("Fisher layout does not match parameters");
    double s = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double d = params[i] - fisher.reference_params[i];
        s += fisher.values[i] * d * d;
    }
    return 0.5 * lambda * s;
}

bool resample_due(const StrategyConfig& strategy, int completed_epochs, int total_epochs) {
    if (completed_epochs <= 0 || completed_epochs >= total_epochs) return false;
    switch (strategy.kind) {
        case StrategyKind::mir_epoch:
            return true;
        case StrategyKind::gmir:
        case StrategyKind::gmir_plus:
        case StrategyKind::random_resampling:
        case StrategyKind::agem_plus:
        case StrategyKind::gss:
            return completed_epochs % strategy.n_resample == 0;
        default:
            return false;
    }
}

std::optional<ReplayBuffer> strategy_resample(const StrategyConfig& strategy, const ResampleContext& ctx) {
    if (!resample_due(strategy, ctx.completed_epochs, ctx.total_epochs)) return std::nullopt;
    if (!ctx.d_old_pool) throw ConfigError("resampling needs a retrieval pool");
    const std::size_t k = strategy.k.resolve(ctx.d_old_pool->size());
    ReplayBuffer buf;
    TimingLedger scratch;
    TimingLedger& ledger = ctx.ledger ? *ctx.ledger : scratch;

    switch (strategy.kind) {
        case StrategyKind::gmir: {
            if (!ctx.last_g || !ctx.model || !ctx.params) throw ConfigError("gmir needs the last gradient");
            buf = gmir_select(*ctx.last_g, *ctx.model, *ctx.params, *ctx.d_old_pool, k, ctx.scoring);
            ledger.scoring_grad_evals += ctx.d_old_pool->size();
            break;
        }
        case StrategyKind::gmir_plus: {
            if (!ctx.d_new || !ctx.model || !ctx.params) throw ConfigError("gmir-plus needs the new-domain data");
            const GradVector avg = average_new_domain_gradient(*ctx.model, *ctx.params, *ctx.d_new);
            buf = gmir_select(avg, *ctx.model, *ctx.params, *ctx.d_old_pool, k, ctx.scoring);
            ledger.scoring_grad_evals += ctx.d_old_pool->size() + ctx.d_new->size();
            ledger.average_grad_evals += ctx.d_new->size();
            break;
        }
        case StrategyKind::random_resampling:
        case StrategyKind::agem_plus:
            buf = random_select(*ctx.d_old_pool, k,
                                derive_seed(ctx.seed, streams::kResample,
                                            static_cast<std::uint64_t>(ctx.completed_epochs)));
            break;
        case StrategyKind::gss: {
            if (!ctx.model || !ctx.params) throw ConfigError("gss needs the model parameters");
            buf = gss_select(*ctx.model, *ctx.params, *ctx.d_old_pool, k, strategy.gss_param_fraction,
                             derive_seed(ctx.seed, streams::kGssCoordinates));
            ledger.scoring_grad_evals += ctx.d_old_pool->size();
            break;
        }
        case StrategyKind::mir_epoch: {
            if (!ctx.losses_prev || !ctx.losses_curr) throw ConfigError("mir-epoch needs loss ledgers");
            buf = mir_epoch_select(*ctx.losses_prev, *ctx.losses_curr, k);
            break;
        }
        default:
            return std::nullopt;
    }
    buf.selected_at_epoch = ctx.completed_epochs;
    ++ledger.resample_events;
    return buf;
}

Strategy::Strategy(StrategyConfig config, FinetuneInputs inputs) : config_(config), in_(inputs) {
    config_.validate();
    if (!in_.model || !in_.d_new || !in_.d_old_train) throw ConfigError("strategy inputs are incomplete");
}

void Strategy::on_finetune_start(const ParamVector& start_params, TimingLedger& ledger) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset& old_train = *in_.d_old_train;

    if (config_.d_fraction >= 1.0) {
        pool_ = old_train;
    } else {
        const auto n = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(config_.d_fraction * static_cast<double>(old_train.size()))));
        auto ids = random_select(old_train, n, derive_seed(in_.seed, streams::kRetrievalPool)).sample_ids;
        std::sort(ids.begin(), ids.end());
        pool_ = subset(old_train, ids);
    }
    pool_index_.clear();
    for (const auto& s : pool_.samples) pool_index_.emplace(s.id, &s);

    if (config_.uses_buffer()) {
        const std::size_t k = config_.k.resolve(old_train.size());
        if (k > pool_.size())
            throw ConfigError("buffer size " + std::to_string(k) + " exceeds retrieval pool of " +
                              std::to_string(pool_.size()));
        buffer_ = random_select(pool_, k, derive_seed(in_.seed, streams::kInitialBuffer));
        buffer_->selected_at_epoch = 0;
    }
    if (config_.kind == StrategyKind::ewc) {
        fisher_ = ewc_fisher(*in_.model, start_params, old_train);
        ledger.fisher_grad_evals += old_train.size();
    }
    if (config_.kind == StrategyKind::mir_epoch) losses_prev_ = ledger_losses(start_params, ledger);
    ledger.seconds_selection += seconds_since(t0);
}

std::map<std::int64_t, double> Strategy::ledger_losses(const ParamVector& params, TimingLedger& ledger) const {
    std::map<std::int64_t, double> out;
    for (const auto& s : pool_.samples) out.emplace(s.id, loss(forward(*in_.model, params, s.features), s.label));
    ledger.loss_evals += pool_.size();
    return out;
}

std::optional<ReplayBuffer> Strategy::on_epoch_start(int completed_epochs, const ParamVector& params,
                                                     const GradVector* last_g, TimingLedger& ledger) {
    if (!resample_due(config_, completed_epochs, in_.total_epochs)) return std::nullopt;
    const auto t0 = std::chrono::steady_clock::now();

    // The resampling pool must be sized against the full old split for k.
    StrategyConfig effective = config_;
    effective.k = BufferSize{static_cast<double>(config_.k.resolve(in_.d_old_train->size())), false};

    ResampleContext ctx;
    ctx.completed_epochs = completed_epochs;
    ctx.total_epochs = in_.total_epochs;
    ctx.model = in_.model;
    ctx.params = &params;
    ctx.last_g = last_g;
    ctx.d_old_pool = &pool_;
    ctx.d_new = in_.d_new;
    ctx.seed = in_.seed;
    ctx.scoring = in_.scoring;
    ctx.ledger = &ledger;

    std::map<std::int64_t, double> losses_curr;
    if (config_.kind == StrategyKind::mir_epoch) {
        losses_curr = ledger_losses(params, ledger);
        ctx.losses_prev = &losses_prev_;
        ctx.losses_curr = &losses_curr;
    }
    auto buf = strategy_resample(effective, ctx);
    if (config_.kind == StrategyKind::mir_epoch) losses_prev_ = std::move(losses_curr);
    if (buf) buffer_ = *buf;
    ledger.seconds_selection += seconds_since(t0);
    return buf;
}

std::vector<const Sample*> Strategy::buffer_samples() const {
    std::vector<const Sample*> out;
    if (!buffer_) return out;
    out.reserve(buffer_->size());
    for (auto id : buffer_->sample_ids) out.push_back(pool_index_.at(id));
    return out;
}

std::vector<const Sample*> Strategy::batch_source() const {
    auto src = in_.d_new->views();
    const bool joint = config_.uses_buffer() && config_.kind != StrategyKind::agem &&
                       config_.kind != StrategyKind::agem_plus;
    if (joint) {
        const auto replay = buffer_samples();
        src.insert(src.end(), replay.begin(), replay.end());
    }
    return src;
}

void Strategy::transform_gradient(GradVector& g, const ParamVector& params, int epoch, std::size_t step,
                                  TimingLedger& ledger) {
    switch (config_.kind) {
        case StrategyKind::ewc: {
            const GradVector pen = ewc_penalty_grad(params, *fisher_, config_.ewc_lambda);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += pen[i];
            break;
        }
        case StrategyKind::agem:
        case StrategyKind::agem_plus: {
            auto replay = buffer_samples();
            Rng rng(derive_seed(in_.seed, streams::kAgemReference,
                                (static_cast<std::uint64_t>(epoch) << 32) | static_cast<std::uint64_t>(step)));
            const std::size_t b = std::min(in_.batch_size, replay.size());
            for (std::size_t i = 0; i < b; ++i) std::swap(replay[i], replay[i + rng.below(replay.size() - i)]);
            const GradVector g_ref = grad(*in_.model, params, Minibatch(replay.data(), b));
            ledger.reference_grad_evals += b;
            AgemOutcome outcome;
            g = agem_project(g, g_ref, &outcome);
            if (outcome.projected) ++ledger.projections;
            if (outcome.degenerate_reference)
                warnings_.push_back("degenerate A-GEM reference gradient at epoch " + std::to_string(epoch) +
                                    ", step " + std::to_string(step) + "; projection skipped");
            break;
        }
        default:
            break;
    }
}

double Strategy::learning_rate() const {
    if (config_.lr_override) return *config_.lr_override;
    if (config_.kind == StrategyKind::low_lr) return in_.base_lr * config_.low_lr_factor;
    return in_.base_lr;
}

std::vector<std::string> Strategy::take_warnings() {
    std::vector<std::string> out;
    out.swap(warnings_);
    return out;
}

}  // namespace replaylab
