// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/replaylab.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "replaylab/error.hpp"
#include "replaylab/experiment.hpp"
#include "replaylab/metrics.hpp"
#include "replaylab/net.hpp"
#include "replaylab/replay.hpp"
#include "replaylab/strategies.hpp"

struct rl_experiment {
    replaylab::ExperimentConfig config;
    rl_progress_fn progress = nullptr;
    void* progress_user = nullptr;
};

struct rl_report {
    replaylab::ExperimentReport report;
};

struct rl_model {
    replaylab::ModelConfig config;
    replaylab::ParamVector params;
};

namespace {

thread_local std::string g_last_error;

rl_status fail(rl_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

// Runs `fn` and maps library exceptions onto status codes.
template <class F>
rl_status guarded(F&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const replaylab::ConfigError& e) {
        return fail(RL_ERR_CONFIG, e.what());
    } catch (const replaylab::InputError& e) {
        return fail(RL_ERR_INPUT, e.what());
    } catch (const replaylab::IoError& e) {
        return fail(RL_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(RL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RL_ERR_INTERNAL, "unknown error");
    }
}

rl_status null_arg(const char* what) { return fail(RL_ERR_NULL_ARG, std::string(what) + " is NULL"); }

rl_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (!buf) return RL_OK;
    if (cap < text.size() + 1)
        return fail(RL_ERR_BUFFER_TOO_SMALL, "buffer holds " + std::to_string(cap) + " bytes, " +
                                                  std::to_string(text.size() + 1) + " needed");
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';
    return RL_OK;
}

replaylab::RunOptions run_options(const rl_experiment* exp) {
    replaylab::RunOptions o;
    if (exp->progress) {
        rl_progress_fn fn = exp->progress;
        void* user = exp->progress_user;
        o.progress = [fn, user](const std::string& m) { fn(m.c_str(), user); };
    }
    return o;
}

template <class Run>
rl_status run_pipeline(const rl_experiment* exp, rl_report** out, Run run) {
    if (!exp) return null_arg("experiment");
    return guarded([&] {
        auto report = run(exp->config, run_options(exp));
        if (out) *out = new rl_report{std::move(report)};
        return RL_OK;
    });
}

}  // namespace

extern "C" {

RL_API const char* rl_last_error(void) { return g_last_error.c_str(); }

RL_API const char* rl_version(void) { return "1.0.0"; }

RL_API const char* rl_status_name(rl_status status) {
    switch (status) {
        case RL_OK: return "ok";
        case RL_ERR_NULL_ARG: return "null argument";
        case RL_ERR_CONFIG: return "configuration error";
        case RL_ERR_INPUT: return "input error";
        case RL_ERR_IO: return "i/o error";
        case RL_ERR_BUFFER_TOO_SMALL: return "buffer too small";
        case RL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

RL_API rl_status rl_experiment_preset(const char* name, rl_experiment** out) {
    if (!name) return null_arg("name");
    if (!out) return null_arg("out");
    return guarded([&] {
        const std::string n = name;
        if (n == "default") {
            *out = new rl_experiment{replaylab::default_experiment()};
        } else if (n == "ci") {
            *out = new rl_experiment{replaylab::ci_experiment()};
        } else {
            return fail(RL_ERR_CONFIG, "unknown preset '" + n + "' (expected default or ci)");
        }
        return RL_OK;
    });
}

RL_API rl_status rl_experiment_load(const char* path, rl_experiment** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = new rl_experiment{replaylab::ExperimentConfig::load(path)};
        return RL_OK;
    });
}

RL_API rl_status rl_experiment_from_json(const char* text, rl_experiment** out) {
    if (!text) return null_arg("text");
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = new rl_experiment{replaylab::ExperimentConfig::from_json(text)};
        return RL_OK;
    });
}

RL_API void rl_experiment_free(rl_experiment* exp) { delete exp; }

RL_API rl_status rl_experiment_set_seed(rl_experiment* exp, int64_t seed) {
    return rl_experiment_set_seeds(exp, &seed, 1);
}

RL_API rl_status rl_experiment_set_seeds(rl_experiment* exp, const int64_t* seeds, size_t count) {
    if (!exp) return null_arg("experiment");
    if (!seeds) return null_arg("seeds");
    if (count == 0) return fail(RL_ERR_CONFIG, "at least one seed is required");
    return guarded([&] {
        exp->config.seeds.assign(seeds, seeds + count);
        return RL_OK;
    });
}

RL_API rl_status rl_experiment_set_output_dir(rl_experiment* exp, const char* dir) {
    if (!exp) return null_arg("experiment");
    if (!dir) return null_arg("dir");
    return guarded([&] {
        exp->config.output_dir = dir;
        return RL_OK;
    });
}

RL_API rl_status rl_experiment_set_threads(rl_experiment* exp, size_t threads) {
    if (!exp) return null_arg("experiment");
    if (threads == 0) return fail(RL_ERR_CONFIG, "threads must be at least 1");
    exp->config.threads = threads;
    return RL_OK;
}

RL_API rl_status rl_experiment_select_strategy(rl_experiment* exp, const char* name) {
    if (!exp) return null_arg("experiment");
    if (!name) return null_arg("name");
    return guarded([&] {
        auto& list = exp->config.strategies;
        auto it = std::find_if(list.begin(), list.end(), [&](const auto& e) { return e.label == name; });
        if (it != list.end()) {
            replaylab::StrategyEntry keep = *it;
            list = {keep};
        } else {
            const auto kind = replaylab::strategy_kind_from_string(name);
            list = {{replaylab::StrategyConfig::defaults(kind), std::string(name)}};
        }
        if (exp->config.sweep) {
            exp->config.sweep->base = list.front();
        }
        return RL_OK;
    });
}

RL_API rl_status rl_experiment_to_json(const rl_experiment* exp, char* buf, size_t cap, size_t* needed) {
    if (!exp) return null_arg("experiment");
    return guarded([&] { return copy_out(exp->config.to_json(), buf, cap, needed); });
}

RL_API rl_status rl_experiment_set_progress(rl_experiment* exp, rl_progress_fn fn, void* user) {
    if (!exp) return null_arg("experiment");
    exp->progress = fn;
    exp->progress_user = user;
    return RL_OK;
}

RL_API rl_status rl_gen_data(const rl_experiment* exp) {
    if (!exp) return null_arg("experiment");
    return guarded([&] {
        exp->config.validate();
        for (auto seed : exp->config.seeds) {
            const auto data = replaylab::make_data(exp->config, seed);
            replaylab::write_data(data, exp->config.output_dir / "data" / ("seed-" + std::to_string(seed)));
        }
        return RL_OK;
    });
}

RL_API rl_status rl_pretrain(const rl_experiment* exp, rl_report** out) {
    return run_pipeline(exp, out, [](const auto& c, const auto& o) { return replaylab::run_pretrain(c, o); });
}

RL_API rl_status rl_finetune(const rl_experiment* exp, rl_report** out) {
    return run_pipeline(exp, out, [](const auto& c, const auto& o) { return replaylab::run_finetune(c, o); });
}

RL_API rl_status rl_run(const rl_experiment* exp, rl_report** out) {
    return run_pipeline(exp, out, [](const auto& c, const auto& o) { return replaylab::run_experiment(c, o); });
}

RL_API rl_status rl_sweep(const rl_experiment* exp, rl_report** out) {
    return run_pipeline(exp, out, [](const auto& c, const auto& o) { return replaylab::run_sweep(c, o); });
}

RL_API rl_status rl_report_load(const char* path, rl_report** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] {
        std::FILE* f = std::fopen(path, "rb");
        if (!f) return fail(RL_ERR_IO, std::string("cannot open report ") + path);
        std::string text;
        char chunk[4096];
        size_t got;
        while ((got = std::fread(chunk, 1, sizeof chunk, f)) > 0) text.append(chunk, got);
        std::fclose(f);
        *out = new rl_report{replaylab::report_from_json(text)};
        return RL_OK;
    });
}

RL_API void rl_report_free(rl_report* report) { delete report; }

RL_API size_t rl_report_row_count(const rl_report* report) { return report ? report->report.rows.size() : 0; }

RL_API rl_status rl_report_row_at(const rl_report* report, size_t index, rl_report_row* row) {
    if (!report) return null_arg("report");
    if (!row) return null_arg("row");
    if (index >= report->report.rows.size())
        return fail(RL_ERR_INPUT, "row index " + std::to_string(index) + " out of range");
    const auto& r = report->report.rows[index];
    *row = rl_report_row{};
    row->label = r.result.run_label.c_str();
    row->is_scratch = r.kind == replaylab::RunKind::scratch;
    row->seed = r.seed;
    row->has_grid_value = r.grid_value.has_value();
    row->grid_value = r.grid_value.value_or(0.0);
    row->old_metric = r.result.old_metric;
    row->new_metric = r.result.new_metric;
    row->mean_metric = r.mean_metric();
    row->has_transfer = r.transfer.has_value();
    if (r.transfer) {
        row->bwt = r.transfer->backward_transfer;
        row->fwt = r.transfer->forward_transfer;
    }
    row->train_steps = r.timing.train_steps;
    row->scoring_grad_evals = r.timing.scoring_grad_evals;
    row->resample_events = r.timing.resample_events;
    row->total_work = r.timing.total_work();
    return RL_OK;
}

RL_API rl_status rl_report_render_table(const rl_report* report, char* buf, size_t cap, size_t* needed) {
    if (!report) return null_arg("report");
    return guarded([&] { return copy_out(replaylab::render_table(report->report), buf, cap, needed); });
}

RL_API rl_status rl_report_to_json(const rl_report* report, char* buf, size_t cap, size_t* needed) {
    if (!report) return null_arg("report");
    return guarded([&] { return copy_out(replaylab::report_to_json(report->report), buf, cap, needed); });
}

RL_API rl_status rl_model_create(size_t input_dim, const size_t* hidden, size_t n_hidden, size_t num_classes,
                                 const char* activation, rl_model** out) {
    if (!out) return null_arg("out");
    if (n_hidden > 0 && !hidden) return null_arg("hidden");
    return guarded([&] {
        replaylab::ModelConfig c;
        c.input_dim = input_dim;
        c.hidden_dims.assign(hidden, hidden + n_hidden);
        c.num_classes = num_classes;
        c.activation = replaylab::activation_from_string(activation ? activation : "relu");
        c.validate();
        *out = new rl_model{c, replaylab::ParamVector(c.param_count())};
        return RL_OK;
    });
}

RL_API rl_status rl_model_load(const char* path, rl_model** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] {
        replaylab::ModelConfig c;
        auto p = replaylab::load_params(path, c);
        *out = new rl_model{c, std::move(p)};
        return RL_OK;
    });
}

RL_API void rl_model_free(rl_model* model) { delete model; }

RL_API size_t rl_model_param_count(const rl_model* model) { return model ? model->params.size() : 0; }

RL_API rl_status rl_model_init(rl_model* model, uint64_t seed) {
    if (!model) return null_arg("model");
    return guarded([&] {
        model->params = replaylab::init_params(model->config, seed);
        return RL_OK;
    });
}

RL_API rl_status rl_model_get_params(const rl_model* model, double* out, size_t n) {
    if (!model) return null_arg("model");
    if (!out) return null_arg("out");
    if (n != model->params.size())
        return fail(RL_ERR_INPUT, "expected " + std::to_string(model->params.size()) + " values");
    std::copy(model->params.values.begin(), model->params.values.end(), out);
    return RL_OK;
}

RL_API rl_status rl_model_set_params(rl_model* model, const double* values, size_t n) {
    if (!model) return null_arg("model");
    if (!values) return null_arg("values");
    if (n != model->params.size())
        return fail(RL_ERR_INPUT, "expected " + std::to_string(model->params.size()) + " values");
    std::copy(values, values + n, model->params.values.begin());
    return RL_OK;
}

RL_API rl_status rl_model_forward(const rl_model* model, const double* features, size_t dim, double* logits,
                                  size_t n_logits) {
    if (!model) return null_arg("model");
    if (!features) return null_arg("features");
    if (!logits) return null_arg("logits");
    if (dim != model->config.input_dim) return fail(RL_ERR_INPUT, "feature dimension mismatch");
    if (n_logits != model->config.num_classes) return fail(RL_ERR_INPUT, "logit count mismatch");
    return guarded([&] {
        const auto out = replaylab::forward(model->config, model->params, {features, dim});
        std::copy(out.begin(), out.end(), logits);
        return RL_OK;
    });
}

RL_API rl_status rl_model_sample_gradient(const rl_model* model, const double* features, size_t dim, size_t label,
                                          double* grad, size_t n, double* loss) {
    if (!model) return null_arg("model");
    if (!features) return null_arg("features");
    if (!grad) return null_arg("grad");
    if (dim != model->config.input_dim) return fail(RL_ERR_INPUT, "feature dimension mismatch");
    if (n != model->params.size()) return fail(RL_ERR_INPUT, "gradient length mismatch");
    return guarded([&] {
        replaylab::Sample s;
        s.features.assign(features, features + dim);
        s.label = label;
        std::fill(grad, grad + n, 0.0);
        const double l = replaylab::accumulate_sample_grad(model->config, model->params, s, 1.0, {grad, n});
        if (loss) *loss = l;
        return RL_OK;
    });
}

RL_API rl_status rl_model_save(const rl_model* model, const char* path) {
    if (!model) return null_arg("model");
    if (!path) return null_arg("path");
    return guarded([&] {
        replaylab::save_params(path, model->config, model->params);
        return RL_OK;
    });
}

RL_API rl_status rl_interference_score(const double* g, const double* g_i, size_t n, double* score, int* defined) {
    if (!g || !g_i) return null_arg("gradient");
    if (!score) return null_arg("score");
    return guarded([&] {
        const auto s = replaylab::interference_score({g, n}, {g_i, n});
        *score = s.value_or(-1.0);
        if (defined) *defined = s.has_value();
        return RL_OK;
    });
}

RL_API rl_status rl_agem_project(const double* g, const double* g_ref, size_t n, double* out, int* projected) {
    if (!g || !g_ref) return null_arg("gradient");
    if (!out) return null_arg("out");
    return guarded([&] {
        replaylab::AgemOutcome outcome;
        const auto r = replaylab::agem_project(replaylab::GradVector(std::vector<double>(g, g + n)),
                                               replaylab::GradVector(std::vector<double>(g_ref, g_ref + n)), &outcome);
        std::copy(r.values.begin(), r.values.end(), out);
        if (projected) *projected = outcome.projected;
        return RL_OK;
    });
}

RL_API rl_status rl_transfer_metrics(double old_metric, double new_metric, double lb_old, double lb_new, double* bwt,
                                     double* fwt, double* mean) {
    return guarded([&] {
        const auto t = replaylab::transfer_metrics({"", old_metric, new_metric}, lb_old, lb_new);
        if (bwt) *bwt = t.backward_transfer;
        if (fwt) *fwt = t.forward_transfer;
        if (mean) *mean = t.mean_metric;
        return RL_OK;
    });
}

RL_API rl_status rl_time_reduction(double baseline, double method, double* percent) {
    if (!percent) return null_arg("percent");
    return guarded([&] {
        *percent = replaylab::time_reduction(baseline, method);
        return RL_OK;
    });
}

}  // extern "C"
