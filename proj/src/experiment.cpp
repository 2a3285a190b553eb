// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "replaylab/error.hpp"
#include "replaylab/rng.hpp"
#include "streams.hpp"

namespace replaylab {

using nlohmann::json;

namespace {

constexpr double kDefaultSigma = 0.15;
constexpr double kDefaultGapDegrees = 30.0;
constexpr double kDefaultGapNoiseFactor = 1.5;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& section) {
    if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("unknown key '" + it.key() + "' in section '" + section + "'");
    }
}

void note(const RunOptions& o, const std::string& msg) {
    if (o.progress) o.progress(msg);
}

}  // namespace

DataConfig::DataConfig() {
    old_domain.domain = DomainTag::old_domain;
    old_domain.size = 3631;
    old_domain.sigma = kDefaultSigma;
    new_domain.domain = DomainTag::new_domain;
    new_domain.size = 3365;
    new_domain.rotation = deg2rad(kDefaultGapDegrees);
    new_domain.sigma = kDefaultSigma * kDefaultGapNoiseFactor;
}

std::string_view to_string(SweepKnob k) {
    switch (k) {
        case SweepKnob::d_fraction: return "d_fraction";
        case SweepKnob::k: return "k";
        case SweepKnob::n_resample: return "n_resample";
    }
    return "?";
}

namespace {

SweepKnob knob_from_string(std::string_view s) {
    if (s == "d_fraction" || s == "D") return SweepKnob::d_fraction;
    if (s == "k" || s == "K") return SweepKnob::k;
    if (s == "n_resample" || s == "n") return SweepKnob::n_resample;
    throw ConfigError("unknown sweep knob '" + std::string(s) + "'");
}

}  // namespace

std::vector<double> sweep_preset(SweepKnob knob) {
    switch (knob) {
        case SweepKnob::d_fraction: return {0.2, 0.5, 1.0};
        case SweepKnob::k: return {0.01, 0.05, 0.2};
        case SweepKnob::n_resample: return {2, 5, 10, 20, 40};
    }
    return {};
}

ExperimentConfig default_experiment() {
    ExperimentConfig c;
    for (StrategyKind k : all_strategy_kinds())
        c.strategies.push_back({StrategyConfig::defaults(k), std::string(to_string(k))});
    return c;
}

ExperimentConfig ci_experiment() {
    ExperimentConfig c = default_experiment();
    c.data.old_domain.size = 500;
    c.data.new_domain.size = 465;
    return c;
}

void ExperimentConfig::validate() const {
    data.old_domain.validate();
    data.new_domain.validate();
    if (data.old_domain.domain != DomainTag::old_domain || data.new_domain.domain != DomainTag::new_domain)
        throw ConfigError("domain tags of the data section are inconsistent");
    const SplitRatios& r = data.ratios;
    if (!(r.train > 0.0) || !(r.val > 0.0) || !(r.test > 0.0))
        throw ConfigError("data.split ratios must be strictly positive");
    if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) throw ConfigError("data.split ratios must sum to 1");
    model.validate();
    if (model.input_dim != 2) throw ConfigError("the synthetic generators produce 2-D features");
    if (model.num_classes != 2) throw ConfigError("the synthetic generators produce 2 classes");
    for (const PhaseConfig* p : {&pretrain, &finetune}) {
        if (p->epochs < 1) throw ConfigError("epochs must be at least 1");
        if (p->batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (!(p->lr > 0.0)) throw ConfigError("lr must be positive");
        if (p->eval_every < 1) throw ConfigError("eval_every must be at least 1");
    }
    for (const auto& r : scratch_runs)
        if (r != "clear" && r != "adverse" && r != "all") throw ConfigError("unknown scratch run '" + r + "'");
    std::set<std::string> labels;
    for (const auto& s : strategies) {
        s.config.validate();
        if (!labels.insert(s.label).second) throw ConfigError("duplicate strategy label '" + s.label + "'");
    }
    if (sweep) {
        sweep->base.config.validate();
        if (sweep->values.empty()) throw ConfigError("sweep grid is empty");
    }
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (threads < 1) throw ConfigError("threads must be at least 1");
}

namespace {

json domain_json(const DomainSpec& d) {
    return json{{"generator", std::string(to_string(d.generator))},
                {"offset", {d.offset[0], d.offset[1]}},
                {"rotation", d.rotation},
                {"sigma", d.sigma},
                {"size", d.size}};
}

void domain_from_json(const json& j, DomainSpec& d, const std::string& section) {
    check_keys(j, {"generator", "offset", "rotation_deg", "rotation", "sigma", "size"}, section);
    if (j.contains("generator")) d.generator = generator_from_string(j["generator"].get<std::string>());
    if (j.contains("offset")) {
        const auto v = j["offset"].get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError(section + ".offset must have two entries");
        d.offset = {v[0], v[1]};
    }
    if (j.contains("rotation_deg") && j.contains("rotation"))
        throw ConfigError(section + ": give rotation or rotation_deg, not both");
    if (j.contains("rotation_deg")) d.rotation = deg2rad(j["rotation_deg"].get<double>());
    if (j.contains("rotation")) d.rotation = j["rotation"].get<double>();
    if (j.contains("sigma")) d.sigma = j["sigma"].get<double>();
    if (j.contains("size")) d.size = j["size"].get<std::size_t>();
}

json phase_json(const PhaseConfig& p) {
    return json{{"epochs", p.epochs}, {"batch_size", p.batch_size}, {"lr", p.lr}, {"eval_every", p.eval_every}};
}

void phase_from_json(const json& j, PhaseConfig& p, const std::string& section) {
    check_keys(j, {"epochs", "batch_size", "lr", "eval_every"}, section);
    p.epochs = j.value("epochs", p.epochs);
    p.batch_size = j.value("batch_size", p.batch_size);
    p.lr = j.value("lr", p.lr);
    p.eval_every = j.value("eval_every", p.eval_every);
}

json strategy_json(const StrategyEntry& e) {
    const auto& c = e.config;
    json j{{"kind", std::string(to_string(c.kind))},
           {"label", e.label},
           {"d_fraction", c.d_fraction},
           {"n_resample", c.n_resample},
           {"low_lr_factor", c.low_lr_factor},
           {"ewc_lambda", c.ewc_lambda},
           {"gss_param_fraction", c.gss_param_fraction}};
    if (c.k.is_fraction)
        j["k"] = c.k.value;
    else
        j["k_count"] = static_cast<std::int64_t>(c.k.value);
    if (c.lr_override) j["lr"] = *c.lr_override;
    return j;
}

StrategyEntry strategy_from_json(const json& j) {
    if (j.is_string()) {
        const auto kind = strategy_kind_from_string(j.get<std::string>());
        return {StrategyConfig::defaults(kind), j.get<std::string>()};
    }
    check_keys(j, {"kind", "label", "k", "k_count", "d_fraction", "n_resample", "lr", "low_lr_factor",
                   "ewc_lambda", "gss_param_fraction"},
               "strategy");
    if (!j.contains("kind")) throw ConfigError("strategy entry needs a 'kind'");
    StrategyEntry e;
    e.config = StrategyConfig::defaults(strategy_kind_from_string(j["kind"].get<std::string>()));
    e.label = j.value("label", std::string(to_string(e.config.kind)));
    auto& c = e.config;
    if (j.contains("k") && j.contains("k_count")) throw ConfigError("give k or k_count, not both");
    if (j.contains("k")) c.k = BufferSize{j["k"].get<double>(), true};
    if (j.contains("k_count")) c.k = BufferSize{static_cast<double>(j["k_count"].get<std::int64_t>()), false};
    c.d_fraction = j.value("d_fraction", c.d_fraction);
    c.n_resample = j.value("n_resample", c.n_resample);
    if (j.contains("lr")) c.lr_override = j["lr"].get<double>();
    c.low_lr_factor = j.value("low_lr_factor", c.low_lr_factor);
    c.ewc_lambda = j.value("ewc_lambda", c.ewc_lambda);
    c.gss_param_fraction = j.value("gss_param_fraction", c.gss_param_fraction);
    return e;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        check_keys(j, {"data", "model", "pretrain", "finetune", "scratch_runs", "strategies", "sweep", "seeds",
                       "output_dir", "threads", "pretrained_checkpoint"},
                   "top level");
        ExperimentConfig c = default_experiment();
        if (j.contains("data")) {
            const json& d = j["data"];
            check_keys(d, {"preset", "old", "new", "split", "seed", "dir"}, "data");
            if (d.contains("preset")) {
                const auto p = d["preset"].get<std::string>();
                if (p == "ci")
                    c.data = ci_experiment().data;
                else if (p != "full")
                    throw ConfigError("unknown data preset '" + p + "'");
            }
            if (d.contains("old")) domain_from_json(d["old"], c.data.old_domain, "data.old");
            if (d.contains("new")) domain_from_json(d["new"], c.data.new_domain, "data.new");
            if (d.contains("split")) {
                const auto r = d["split"].get<std::vector<double>>();
                if (r.size() != 3) throw ConfigError("data.split must list train, val, test ratios");
                c.data.ratios = {r[0], r[1], r[2]};
            }
            c.data.seed = d.value("seed", c.data.seed);
            if (d.contains("dir")) c.data.dir = d["dir"].get<std::string>();
        }
        if (j.contains("model")) {
            const json& m = j["model"];
            check_keys(m, {"input_dim", "hidden_dims", "num_classes", "activation"}, "model");
            c.model.input_dim = m.value("input_dim", c.model.input_dim);
            c.model.hidden_dims = m.value("hidden_dims", c.model.hidden_dims);
            c.model.num_classes = m.value("num_classes", c.model.num_classes);
            if (m.contains("activation")) c.model.activation = activation_from_string(m["activation"].get<std::string>());
        }
        if (j.contains("pretrain")) phase_from_json(j["pretrain"], c.pretrain, "pretrain");
        if (j.contains("finetune")) phase_from_json(j["finetune"], c.finetune, "finetune");
        if (j.contains("scratch_runs")) c.scratch_runs = j["scratch_runs"].get<std::vector<std::string>>();
        if (j.contains("strategies")) {
            c.strategies.clear();
            for (const auto& s : j["strategies"]) c.strategies.push_back(strategy_from_json(s));
        }
        if (j.contains("sweep") && !j["sweep"].is_null()) {
            const json& s = j["sweep"];
            check_keys(s, {"strategy", "grid", "preset", "parallel"}, "sweep");
            SweepConfig sw;
            if (s.contains("strategy")) sw.base = strategy_from_json(s["strategy"]);
            if (s.contains("grid") && s.contains("preset")) throw ConfigError("sweep: give grid or preset, not both");
            if (s.contains("grid")) {
                const json& g = s["grid"];
                if (!g.is_object() || g.size() != 1)
                    throw ConfigError("sweep grid must vary exactly one hyperparameter");
                sw.knob = knob_from_string(g.begin().key());
                sw.values = g.begin().value().get<std::vector<double>>();
            } else if (s.contains("preset")) {
                sw.knob = knob_from_string(s["preset"].get<std::string>());
                sw.values = sweep_preset(sw.knob);
            } else {
                throw ConfigError("sweep section needs a grid or a preset");
            }
            sw.parallel = s.value("parallel", false);
            c.sweep = sw;
        }
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::int64_t>>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
        if (j.contains("pretrained_checkpoint"))
            c.pretrained_checkpoint = j["pretrained_checkpoint"].get<std::string>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return from_json(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["data"] = {{"old", domain_json(data.old_domain)},
                 {"new", domain_json(data.new_domain)},
                 {"split", {data.ratios.train, data.ratios.val, data.ratios.test}},
                 {"seed", data.seed}};
    if (data.dir) j["data"]["dir"] = data.dir->string();
    j["model"] = {{"input_dim", model.input_dim},
                  {"hidden_dims", model.hidden_dims},
                  {"num_classes", model.num_classes},
                  {"activation", std::string(to_string(model.activation))}};
    j["pretrain"] = phase_json(pretrain);
    j["finetune"] = phase_json(finetune);
    j["scratch_runs"] = scratch_runs;
    j["strategies"] = json::array();
    for (const auto& s : strategies) j["strategies"].push_back(strategy_json(s));
    if (sweep) {
        j["sweep"] = {{"strategy", strategy_json(sweep->base)},
                      {"grid", {{std::string(to_string(sweep->knob)), sweep->values}}},
                      {"parallel", sweep->parallel}};
    }
    j["seeds"] = seeds;
    j["output_dir"] = output_dir.string();
    j["threads"] = threads;
    if (pretrained_checkpoint) j["pretrained_checkpoint"] = pretrained_checkpoint->string();
    return j.dump(2) + "\n";
}

DomainData make_data(const ExperimentConfig& config, std::int64_t seed) {
    DomainData out;
    if (config.data.dir) {
        const auto& dir = *config.data.dir;
        auto load = [&](const char* name) { return load_dataset(dir / name); };
        out.old_splits = {load("old_train.txt"), load("old_val.txt"), load("old_test.txt")};
        out.new_splits = {load("new_train.txt"), load("new_val.txt"), load("new_test.txt")};
        out.generated = false;
        return out;
    }
    const auto s = static_cast<std::uint64_t>(seed);
    DomainSpec old_spec = config.data.old_domain;
    DomainSpec new_spec = config.data.new_domain;
    old_spec.seed = derive_seed(config.data.seed, streams::kOldDomain, s);
    new_spec.seed = derive_seed(config.data.seed, streams::kNewDomain, s);
    out.old_splits = split(generate_domain(old_spec), config.data.ratios,
                           derive_seed(config.data.seed, streams::kOldSplit, s));
    out.new_splits = split(generate_domain(new_spec), config.data.ratios,
                           derive_seed(config.data.seed, streams::kNewSplit, s));
    return out;
}

std::vector<std::filesystem::path> write_data(const DomainData& data, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> paths;
    auto put = [&](const Dataset& d, const char* name) {
        paths.push_back(dir / name);
        save_dataset(paths.back(), d);
    };
    put(data.old_splits.train, "old_train.txt");
    put(data.old_splits.val, "old_val.txt");
    put(data.old_splits.test, "old_test.txt");
    put(data.new_splits.train, "new_train.txt");
    put(data.new_splits.val, "new_val.txt");
    put(data.new_splits.test, "new_test.txt");
    return paths;
}

namespace {

TrainConfig phase_train_config(const ExperimentConfig& c, const PhaseConfig& p, std::int64_t seed) {
    TrainConfig t;
    t.model = c.model;
    t.epochs = p.epochs;
    t.batch_size = p.batch_size;
    t.lr = p.lr;
    t.eval_every = p.eval_every;
    t.seed = static_cast<std::uint64_t>(seed);
    t.scoring.threads = c.threads;
    return t;
}

ReportRow scratch_row(const std::string& label, std::int64_t seed, const TrainResult& r, const ModelConfig& model,
                      const DomainData& data) {
    ReportRow row;
    row.kind = RunKind::scratch;
    row.seed = seed;
    row.result.run_label = label;
    row.result.old_metric = evaluate(model, r.best.params, data.old_splits.test);
    row.result.new_metric = evaluate(model, r.best.params, data.new_splits.test);
    row.timing = r.timing;
    return row;
}

struct SeedArtifacts {
    std::filesystem::path dir;
    bool enabled = false;

    void log(const RunLog& log) const {
        if (enabled) log.append_to(dir / "runlog.jsonl");
    }
    void events(const std::vector<ResampleEvent>& evs) const {
        if (!enabled) return;
        std::ofstream os(dir / "resample.jsonl", std::ios::app);
        for (const auto& e : evs) {
            os << json{{"epoch", e.epoch}, {"strategy", e.strategy}, {"ids", e.sample_ids}, {"scores", e.scores}}
                      .dump()
               << '\n';
        }
    }
    void checkpoint(const std::string& name, const Checkpoint& c) const {
        if (enabled) save_checkpoint(dir / (name + ".ckpt"), c);
    }
};

SeedArtifacts prepare_seed_dir(const ExperimentConfig& config, const RunOptions& options, std::int64_t seed,
                               bool fresh = true) {
    SeedArtifacts a;
    a.enabled = options.write_artifacts;
    if (!a.enabled) return a;
    a.dir = config.output_dir / ("seed-" + std::to_string(seed));
    std::error_code ec;
    std::filesystem::create_directories(a.dir, ec);
    if (ec) throw IoError("cannot create directory " + a.dir.string() + ": " + ec.message());
    if (!fresh) return a;
    std::filesystem::remove(a.dir / "runlog.jsonl", ec);
    std::filesystem::remove(a.dir / "resample.jsonl", ec);
    return a;
}

// Scratch baselines for one seed; returns the finetuning start checkpoint when
// one is available.
std::optional<Checkpoint> run_scratch(const ExperimentConfig& config, std::int64_t seed, const DomainData& data,
                                      const std::vector<std::string>& runs, const SeedArtifacts& art,
                                      ExperimentReport& report, const RunOptions& options) {
    const TrainConfig tc = phase_train_config(config, config.pretrain, seed);
    std::optional<Checkpoint> start;
    for (const auto& run : runs) {
        const std::string label = "scratch-" + run;
        note(options, "seed " + std::to_string(seed) + ": " + label);
        TrainResult r;
        if (run == "clear") {
            r = train_from_scratch(tc, data.old_splits.train, {&data.old_splits.val, nullptr}, label);
            start = r.best;
        } else if (run == "adverse") {
            r = train_from_scratch(tc, data.new_splits.train, {nullptr, &data.new_splits.val}, label);
        } else {
            const Dataset all = merge(data.old_splits.train, data.new_splits.train);
            r = train_from_scratch(tc, all, {&data.old_splits.val, &data.new_splits.val}, label);
        }
        art.log(r.log);
        art.checkpoint(label, r.best);
        report.rows.push_back(scratch_row(label, seed, r, config.model, data));
    }
    if (config.pretrained_checkpoint) start = load_checkpoint(*config.pretrained_checkpoint);
    return start;
}

ReportRow finetune_row(const ExperimentConfig& config, std::int64_t seed, const DomainData& data,
                       const Checkpoint& start, const StrategyEntry& entry, const SeedArtifacts& art,
                       std::optional<double> grid_value, const std::string& artifact_name) {
    TrainConfig tc = phase_train_config(config, config.finetune, seed);
    tc.strategy = entry.config;
    FinetuneData fd{&data.new_splits.train, &data.new_splits.val, &data.old_splits.train, &data.old_splits.val};
    FinetuneResult r = finetune(tc, start, fd);
    for (auto& rec : r.log.records) rec.run = entry.label;
    art.log(r.log);
    art.events(r.resample_log);
    art.checkpoint(artifact_name, r.best);

    ReportRow row;
    row.kind = RunKind::finetune;
    row.seed = seed;
    row.grid_value = grid_value;
    row.result.run_label = entry.label;
    row.result.old_metric = evaluate(config.model, r.best.params, data.old_splits.test);
    row.result.new_metric = evaluate(config.model, r.best.params, data.new_splits.test);
    row.timing = r.timing;
    return row;
}

ExperimentReport new_report(const ExperimentConfig& config, const std::string& title) {
    ExperimentReport report;
    report.title = title;
    report.config_echo = config.to_json();
    report.seeds = config.seeds;
    return report;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    const bool has_clear = std::find(config.scratch_runs.begin(), config.scratch_runs.end(), "clear") !=
                           config.scratch_runs.end();
    if (!config.strategies.empty() && !has_clear && !config.pretrained_checkpoint)
        throw ConfigError("finetune runs need the scratch-clear run or a pretrained_checkpoint");

    ExperimentReport report = new_report(config, "replay finetuning experiment");
    for (std::int64_t seed : config.seeds) {
        const DomainData data = make_data(config, seed);
        if (!data.generated && seed == config.seeds.front())
            report.notes.push_back("datasets loaded from " + config.data.dir->string() + " for every seed");
        const SeedArtifacts art = prepare_seed_dir(config, options, seed);
        const auto start = run_scratch(config, seed, data, config.scratch_runs, art, report, options);
        for (const auto& entry : config.strategies) {
            note(options, "seed " + std::to_string(seed) + ": finetune " + entry.label);
            report.rows.push_back(
                finetune_row(config, seed, data, *start, entry, art, std::nullopt, "finetune-" + entry.label));
        }
    }
    report.attach_transfer();
    if (options.write_artifacts) write_report(report, config.output_dir);
    return report;
}

ExperimentReport run_pretrain(const ExperimentConfig& config, const RunOptions& options) {
    ExperimentConfig c = config;
    c.scratch_runs = {"clear"};
    c.strategies.clear();
    c.pretrained_checkpoint.reset();
    ExperimentReport report = run_experiment(c, options);
    report.title = "pretraining";
    if (options.write_artifacts) write_report(report, config.output_dir);
    return report;
}

std::filesystem::path pretrained_checkpoint_path(const ExperimentConfig& config, std::int64_t seed) {
    if (config.pretrained_checkpoint) return *config.pretrained_checkpoint;
    return config.output_dir / ("seed-" + std::to_string(seed)) / "scratch-clear.ckpt";
}

ExperimentReport run_finetune(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    if (config.strategies.empty()) throw ConfigError("finetune needs at least one strategy");

    std::vector<std::string> bounds;
    for (const auto& r : config.scratch_runs)
        if (r != "clear") bounds.push_back(r);

    ExperimentReport report = new_report(config, "replay finetuning");
    report.notes.push_back("scratch-clear rows evaluate the pretrained checkpoint; their work counters are zero");
    for (std::int64_t seed : config.seeds) {
        const auto ckpt_path = pretrained_checkpoint_path(config, seed);
        if (!std::filesystem::exists(ckpt_path))
            throw IoError("pretrained checkpoint not found: " + ckpt_path.string());
        const Checkpoint start = load_checkpoint(ckpt_path);
        const DomainData data = make_data(config, seed);
        const SeedArtifacts art = prepare_seed_dir(config, options, seed, false);

        ReportRow clear;
        clear.kind = RunKind::scratch;
        clear.seed = seed;
        clear.result.run_label = "scratch-clear";
        clear.result.old_metric = evaluate(config.model, start.params, data.old_splits.test);
        clear.result.new_metric = evaluate(config.model, start.params, data.new_splits.test);
        report.rows.push_back(clear);

        ExperimentConfig c = config;
        c.pretrained_checkpoint.reset();
        run_scratch(c, seed, data, bounds, art, report, options);
        for (const auto& entry : config.strategies) {
            note(options, "seed " + std::to_string(seed) + ": finetune " + entry.label);
            report.rows.push_back(
                finetune_row(config, seed, data, start, entry, art, std::nullopt, "finetune-" + entry.label));
        }
    }
    report.attach_transfer();
    if (options.write_artifacts) write_report(report, config.output_dir);
    return report;
}

ExperimentReport run_sweep(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    if (!config.sweep) throw ConfigError("config has no sweep section");
    const SweepConfig& sw = *config.sweep;

    ExperimentReport report = new_report(config, "hyperparameter sweep");
    report.sweep_knob = std::string(to_string(sw.knob));
    for (std::int64_t seed : config.seeds) {
        const DomainData data = make_data(config, seed);
        const SeedArtifacts art = prepare_seed_dir(config, options, seed);
        std::vector<std::string> runs{"clear", "adverse", "all"};
        const auto start = run_scratch(config, seed, data, runs, art, report, options);

        std::vector<StrategyEntry> points;
        for (double v : sw.values) {
            StrategyEntry e = sw.base;
            switch (sw.knob) {
                case SweepKnob::d_fraction: e.config.d_fraction = v; break;
                case SweepKnob::k:
                    e.config.k = v < 1.0 ? BufferSize{v, true} : BufferSize{v, false};
                    break;
                case SweepKnob::n_resample:
                    if (v != std::floor(v)) throw ConfigError("n_resample grid values must be integers");
                    e.config.n_resample = static_cast<int>(v);
                    break;
            }
            e.config.validate();
            points.push_back(e);
        }

        std::vector<ReportRow> rows(points.size());
        auto run_point = [&](std::size_t i) {
            std::ostringstream name;
            name << "sweep-" << to_string(sw.knob) << "-" << sw.values[i];
            rows[i] = finetune_row(config, seed, data, *start, points[i], art, sw.values[i], name.str());
        };
        if (sw.parallel && points.size() > 1) {
            // Run logs are written after the workers finish; see below.
            SeedArtifacts quiet = art;
            quiet.enabled = false;
            std::vector<std::exception_ptr> errors(points.size());
            std::vector<std::thread> workers;
            for (std::size_t i = 0; i < points.size(); ++i) {
                workers.emplace_back([&, i] {
                    try {
                        std::ostringstream name;
                        name << "sweep-" << to_string(sw.knob) << "-" << sw.values[i];
                        rows[i] = finetune_row(config, seed, data, *start, points[i], quiet, sw.values[i], name.str());
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                });
            }
            for (auto& w : workers) w.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
            if (art.enabled) report.notes.push_back("grid points ran concurrently; per-point run logs not written");
        } else {
            for (std::size_t i = 0; i < points.size(); ++i) {
                note(options, "seed " + std::to_string(seed) + ": sweep " + std::string(to_string(sw.knob)) + "=" +
                                  std::to_string(sw.values[i]));
                run_point(i);
            }
        }
        for (auto& r : rows) report.rows.push_back(std::move(r));
    }
    report.attach_transfer();
    if (options.write_artifacts) write_report(report, config.output_dir);
    return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    {
        std::ofstream os(dir / "report.json");
        if (!os) throw IoError("cannot write " + (dir / "report.json").string());
        os << report_to_json(report);
    }
    {
        std::ofstream os(dir / "report.txt");
        if (!os) throw IoError("cannot write " + (dir / "report.txt").string());
        os << render_table(report);
    }
    if (!report.config_echo.empty()) {
        std::ofstream os(dir / "config.json");
        if (!os) throw IoError("cannot write " + (dir / "config.json").string());
        os << report.config_echo;
    }
    {
        std::ofstream os(dir / "timing.json");
        if (!os) throw IoError("cannot write " + (dir / "timing.json").string());
        os << report_to_json(report, true);
    }
}

}  // namespace replaylab
