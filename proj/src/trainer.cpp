// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "replaylab/error.hpp"
#include "replaylab/metrics.hpp"
#include "replaylab/rng.hpp"
#include "streams.hpp"
#include "textio.hpp"

namespace replaylab {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void TrainConfig::validate() const {
    model.validate();
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
    strategy.validate();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (ckpt.params.size() != ckpt.model.param_count())
        throw ConfigError("checkpoint parameters do not match its model");
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "replaylab-checkpoint 1\n"
       << "model " << describe(ckpt.model) << "\n"
       << "epoch " << ckpt.epoch << "\n"
       << "best_val " << textio::format_exact(ckpt.best_val_metric) << "\n"
       << "count " << ckpt.params.size() << "\n";
    for (double v : ckpt.params.values) os << textio::format_exact(v) << "\n";
    if (!os) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    auto expect = [&](std::string_view prefix) {
        std::string line;
        if (!std::getline(is, line) || line.rfind(prefix, 0) != 0)
            throw IoError(path.string() + ": expected '" + std::string(prefix) + "' line");
        return line.substr(prefix.size());
    };
    if (expect("replaylab-checkpoint ") != "1") throw IoError(path.string() + ": unsupported version");
    Checkpoint c;
    c.model = parse_model_description(expect("model "));
    c.epoch = static_cast<int>(textio::parse_int(expect("epoch ")));
    c.best_val_metric = textio::parse_double(expect("best_val "));
    const auto count = static_cast<std::size_t>(textio::parse_int(expect("count ")));
    if (count != c.model.param_count()) throw IoError(path.string() + ": count does not match model");
    c.params = ParamVector(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string line;
        if (!std::getline(is, line)) throw IoError(path.string() + ": truncated");
        c.params[i] = textio::parse_double(line);
    }
    return c;
}

std::string RunLog::to_jsonl() const {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j{{"phase", r.phase}, {"run", r.run}, {"epoch", r.epoch},
                         {"train_loss", r.train_loss}, {"steps", r.steps}};
        if (r.old_val) j["old_val"] = *r.old_val;
        if (r.new_val) j["new_val"] = *r.new_val;
        if (r.resample) {
            j["resample"] = {{"epoch", r.resample->epoch},
                             {"strategy", r.resample->strategy},
                             {"ids", r.resample->sample_ids},
                             {"scores", r.resample->scores}};
        }
        if (!r.notes.empty()) j["notes"] = r.notes;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void RunLog::append_to(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::app);
    if (!os) throw IoError("cannot write " + path.string());
    os << to_jsonl();
}

namespace {

struct LoopSpec {
    const TrainConfig* config = nullptr;
    ParamVector start;
    const Dataset* plain_source = nullptr;  // used when strategy is null
    Strategy* strategy = nullptr;
    ValidationSets val;
    std::string phase;
    std::string run;
    double lr = 0.0;
    const StepObserver* observer = nullptr;
};

struct LoopOutput {
    TrainResult result;
    std::vector<ResampleEvent> events;
};

ResampleEvent to_event(const ReplayBuffer& buf, const std::string& strategy) {
    ResampleEvent ev;
    ev.epoch = buf.selected_at_epoch;
    ev.strategy = strategy;
    ev.sample_ids = buf.sample_ids;
    for (const auto& s : buf.scores) ev.scores.push_back(s.score);
    return ev;
}

LoopOutput run_loop(LoopSpec spec) {
    const TrainConfig& cfg = *spec.config;
    const auto t_start = Clock::now();
    LoopOutput out;
    TimingLedger& ledger = out.result.timing;
    ParamVector params = std::move(spec.start);

    Checkpoint best;
    best.model = cfg.model;
    best.best_val_metric = -std::numeric_limits<double>::infinity();
    std::optional<GradVector> last_g;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.phase = spec.phase;
        rec.run = spec.run;
        rec.epoch = epoch;

        if (spec.strategy && epoch > 1) {
            auto buf = spec.strategy->on_epoch_start(epoch - 1, params, last_g ? &*last_g : nullptr, ledger);
            if (buf) {
                rec.resample = to_event(*buf, spec.strategy->config().label());
                out.events.push_back(*rec.resample);
            }
        }

        const auto t_train = Clock::now();
        std::vector<const Sample*> source =
            spec.strategy ? spec.strategy->batch_source() : spec.plain_source->views();
        Rng shuffler(derive_seed(cfg.seed, streams::kShuffle, static_cast<std::uint64_t>(epoch)));
        shuffler.shuffle(std::span<const Sample*>(source));

        const ReplayBuffer* active =
            spec.strategy && spec.strategy->buffer() ? &*spec.strategy->buffer() : nullptr;
        double loss_sum = 0.0;
        std::size_t step = 0;
        for (std::size_t from = 0; from < source.size(); from += cfg.batch_size, ++step) {
            const std::size_t to = std::min(source.size(), from + cfg.batch_size);
            Minibatch batch(source.data() + from, to - from);
            double batch_loss = 0.0;
            GradVector g = grad(cfg.model, params, batch, batch_loss);
            loss_sum += batch_loss * static_cast<double>(batch.size());
            if (to == source.size()) last_g = g;  // before any transform
            if (spec.observer && *spec.observer) (*spec.observer)(epoch, batch, active);
            if (spec.strategy) {
                spec.strategy->transform_gradient(g, params, epoch, step, ledger);
                for (auto& w : spec.strategy->take_warnings()) rec.notes.push_back(std::move(w));
            }
            sgd_step_inplace(params, g, spec.lr);
            ++ledger.train_steps;
            ledger.train_sample_grads += batch.size();
        }
        rec.steps = step;
        rec.train_loss = source.empty() ? 0.0 : loss_sum / static_cast<double>(source.size());
        ledger.seconds_train += seconds_since(t_train);

        if (spec.strategy && epoch == cfg.epochs && spec.strategy->config().uses_buffer()) {
            StrategyConfig probe = spec.strategy->config();
            if (resample_due(probe, epoch, epoch + 1))
                rec.notes.push_back("resampling after the final epoch skipped");
        }

        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            const auto t_eval = Clock::now();
            double sum = 0.0;
            int n = 0;
            if (spec.val.old_val) {
                rec.old_val = evaluate(cfg.model, params, *spec.val.old_val);
                sum += *rec.old_val;
                ++n;
            }
            if (spec.val.new_val) {
                rec.new_val = evaluate(cfg.model, params, *spec.val.new_val);
                sum += *rec.new_val;
                ++n;
            }
            const double metric = n > 0 ? sum / n : -rec.train_loss;
            if (metric > best.best_val_metric) {
                best.best_val_metric = metric;
                best.params = params;
                best.epoch = epoch;
            }
            ledger.seconds_eval += seconds_since(t_eval);
        }
        out.result.log.records.push_back(std::move(rec));
    }

    out.result.best = std::move(best);
    out.result.final_state = Checkpoint{params, cfg.model, out.result.best.best_val_metric, cfg.epochs};
    ledger.seconds_total += seconds_since(t_start);
    return out;
}

}  // namespace

TrainResult train_from_scratch(const TrainConfig& config, const Dataset& train, ValidationSets val,
                               const std::string& run_label) {
    config.validate();
    if (train.empty()) throw InputError("training set is empty");
    LoopSpec spec;
    spec.config = &config;
    spec.start = init_params(config.model, derive_seed(config.seed, streams::kInit));
    spec.plain_source = &train;
    spec.val = val;
    spec.phase = "scratch";
    spec.run = run_label;
    spec.lr = config.lr;
    return run_loop(std::move(spec)).result;
}

Checkpoint pretrain(const TrainConfig& config, const Dataset& old_train, const Dataset& old_val) {
    return train_from_scratch(config, old_train, ValidationSets{&old_val, nullptr}, "pretrain").best;
}

FinetuneResult finetune(const TrainConfig& config, const Checkpoint& start, const FinetuneData& data,
                        const StepObserver& observer) {
    config.validate();
    if (!data.new_train || !data.old_train) throw ConfigError("finetuning needs new and old train splits");
    if (!(start.model == config.model) || start.params.size() != config.model.param_count())
        throw ConfigError("checkpoint layout does not match the configured model");
    if (data.new_train->empty()) throw InputError("new-domain training set is empty");

    FinetuneInputs in;
    in.model = &config.model;
    in.d_new = data.new_train;
    in.d_old_train = data.old_train;
    in.total_epochs = config.epochs;
    in.batch_size = config.batch_size;
    in.base_lr = config.lr;
    in.seed = config.seed;
    in.scoring = config.scoring;
    Strategy strategy(config.strategy, in);

    TimingLedger start_ledger;
    const auto t0 = Clock::now();
    strategy.on_finetune_start(start.params, start_ledger);
    start_ledger.seconds_total += seconds_since(t0);

    LoopSpec spec;
    spec.config = &config;
    spec.start = start.params;
    spec.strategy = &strategy;
    spec.val = ValidationSets{data.old_val, data.new_val};
    spec.phase = "finetune";
    spec.run = config.strategy.label();
    spec.lr = strategy.learning_rate();
    spec.observer = &observer;

    FinetuneResult result;
    result.initial_buffer = strategy.buffer();
    LoopOutput loop = run_loop(std::move(spec));
    static_cast<TrainResult&>(result) = std::move(loop.result);
    result.timing += start_ledger;
    result.resample_log = std::move(loop.events);
    return result;
}

}  // namespace replaylab
