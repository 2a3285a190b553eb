// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "replaylab/error.hpp"

namespace replaylab {

using nlohmann::json;

double evaluate(const ModelConfig& config, const ParamVector& params, const Dataset& test) {
    if (test.empty()) throw InputError("cannot evaluate on an empty dataset");
    std::size_t correct = 0;
    for (const auto& s : test.samples)
        if (predict(config, params, s.features) == s.label) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

TransferResult transfer_metrics(const DomainResult& run, double lb_old, double lb_new) {
    return {run.old_metric - lb_old, run.new_metric - lb_new, 0.5 * (run.old_metric + run.new_metric)};
}

double time_reduction(double baseline_hours, double method_hours) {
    if (!(baseline_hours > 0.0)) throw InputError("baseline time must be positive");
    return 100.0 * (baseline_hours - method_hours) / baseline_hours;
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double v : values) m += v;
    m /= static_cast<double>(values.size());
    if (values.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

constexpr const char* kScratchOld = "scratch-clear";
constexpr const char* kScratchNew = "scratch-adverse";

const char* kind_name(RunKind k) { return k == RunKind::scratch ? "scratch" : "finetune"; }

RunKind kind_from_name(const std::string& s) {
    if (s == "scratch") return RunKind::scratch;
    if (s == "finetune") return RunKind::finetune;
    throw IoError("unknown run kind '" + s + "'");
}

json timing_json(const TimingLedger& t, bool wallclock) {
    json j{{"train_steps", t.train_steps},
                {"train_sample_grads", t.train_sample_grads},
                {"scoring_grad_evals", t.scoring_grad_evals},
                {"average_grad_evals", t.average_grad_evals},
                {"loss_evals", t.loss_evals},
                {"reference_grad_evals", t.reference_grad_evals},
                {"fisher_grad_evals", t.fisher_grad_evals},
                {"projections", t.projections},
                {"resample_events", t.resample_events},
                {"total_work", t.total_work()}};
    if (wallclock) {
        j["seconds_train"] = t.seconds_train;
        j["seconds_selection"] = t.seconds_selection;
        j["seconds_eval"] = t.seconds_eval;
        j["seconds_total"] = t.seconds_total;
    }
    return j;
}

TimingLedger timing_from_json(const json& j) {
    TimingLedger t;
    t.train_steps = j.at("train_steps").get<std::uint64_t>();
    t.train_sample_grads = j.at("train_sample_grads").get<std::uint64_t>();
    t.scoring_grad_evals = j.at("scoring_grad_evals").get<std::uint64_t>();
    t.average_grad_evals = j.at("average_grad_evals").get<std::uint64_t>();
    t.loss_evals = j.at("loss_evals").get<std::uint64_t>();
    t.reference_grad_evals = j.at("reference_grad_evals").get<std::uint64_t>();
    t.fisher_grad_evals = j.at("fisher_grad_evals").get<std::uint64_t>();
    t.projections = j.at("projections").get<std::uint64_t>();
    t.resample_events = j.at("resample_events").get<std::uint64_t>();
    t.seconds_train = j.value("seconds_train", 0.0);
    t.seconds_selection = j.value("seconds_selection", 0.0);
    t.seconds_eval = j.value("seconds_eval", 0.0);
    t.seconds_total = j.value("seconds_total", 0.0);
    return t;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string signed2(double v) {
    char buf[32];
    // Avoid printing "-0.00".
    if (std::abs(v) < 0.005) v = 0.0;
    std::snprintf(buf, sizeof buf, "%+.2f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

void ExperimentReport::attach_transfer() {
    std::map<std::int64_t, double> lb_old, lb_new;
    for (const auto& r : rows) {
        if (r.kind != RunKind::scratch) continue;
        if (r.result.run_label == kScratchOld) lb_old[r.seed] = r.result.old_metric;
        if (r.result.run_label == kScratchNew) lb_new[r.seed] = r.result.new_metric;
    }
    for (auto& r : rows) {
        r.transfer.reset();
        if (r.kind != RunKind::finetune) continue;
        auto o = lb_old.find(r.seed);
        auto n = lb_new.find(r.seed);
        if (o != lb_old.end() && n != lb_new.end()) r.transfer = transfer_metrics(r.result, o->second, n->second);
    }
}

std::vector<AggregateRow> ExperimentReport::aggregate() const {
    // Group by (label, grid value) keeping first-appearance order.
    std::vector<AggregateRow> out;
    std::vector<std::vector<const ReportRow*>> groups;
    for (const auto& r : rows) {
        std::size_t g = 0;
        for (; g < out.size(); ++g)
            if (out[g].run_label == r.result.run_label && out[g].grid_value == r.grid_value) break;
        if (g == out.size()) {
            AggregateRow a;
            a.run_label = r.result.run_label;
            a.kind = r.kind;
            a.grid_value = r.grid_value;
            out.push_back(a);
            groups.emplace_back();
        }
        groups[g].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        std::vector<double> o, n, m, b, f, steps, scoring, work;
        for (const ReportRow* r : groups[g]) {
            o.push_back(r->result.old_metric);
            n.push_back(r->result.new_metric);
            m.push_back(r->mean_metric());
            if (r->transfer) {
                b.push_back(r->transfer->backward_transfer);
                f.push_back(r->transfer->forward_transfer);
            }
            steps.push_back(static_cast<double>(r->timing.train_steps));
            scoring.push_back(static_cast<double>(r->timing.scoring_grad_evals));
            work.push_back(static_cast<double>(r->timing.total_work()));
        }
        auto& a = out[g];
        a.seeds = groups[g].size();
        std::tie(a.old_mean, a.old_sd) = mean_sd(o);
        std::tie(a.new_mean, a.new_sd) = mean_sd(n);
        std::tie(a.mean_mean, a.mean_sd) = mean_sd(m);
        if (b.size() == groups[g].size()) {
            auto [bm, bs] = mean_sd(b);
            auto [fm, fs] = mean_sd(f);
            a.bwt_mean = bm;
            a.bwt_sd = bs;
            a.fwt_mean = fm;
            a.fwt_sd = fs;
        }
        a.train_steps_mean = mean_sd(steps).first;
        a.scoring_evals_mean = mean_sd(scoring).first;
        a.total_work_mean = mean_sd(work).first;
    }
    return out;
}

std::string render_table(const ExperimentReport& report) {
    const auto agg = report.aggregate();
    const bool multi = report.seeds.size() > 1;
    std::ostringstream os;
    if (!report.title.empty()) os << report.title << "\n";
    os << "seeds:";
    for (auto s : report.seeds) os << ' ' << s;
    os << "\n\n";

    auto cell = [&](double mean, double sd, std::optional<double> transfer) {
        std::string s = fixed2(mean);
        if (multi) s += " ±" + fixed2(sd);
        if (transfer) s += " (" + signed2(*transfer) + ")";
        return s;
    };

    std::vector<std::array<std::string, 5>> lines;
    const std::string method_header = report.sweep_knob.empty() ? "method" : "method [" + report.sweep_knob + "]";
    lines.push_back({method_header, "old", "new", "mean", "work"});
    for (const auto& a : agg) {
        std::string label = a.run_label;
        if (a.grid_value) {
            char buf[48];
            std::snprintf(buf, sizeof buf, " [%g]", *a.grid_value);
            label += buf;
        }
        char work[48];
        std::snprintf(work, sizeof work, "%.0f", a.total_work_mean);
        lines.push_back({label, cell(a.old_mean, a.old_sd, a.bwt_mean), cell(a.new_mean, a.new_sd, a.fwt_mean),
                         cell(a.mean_mean, a.mean_sd, std::nullopt), work});
    }
    std::array<std::size_t, 5> width{};
    for (const auto& l : lines)
        for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], l[c].size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t c = 0; c < 5; ++c) {
            os << pad(lines[i][c], width[c]);
            os << (c + 1 < 5 ? " | " : "\n");
        }
        if (i == 0) {
            for (std::size_t c = 0; c < 5; ++c) os << std::string(width[c], '-') << (c + 1 < 5 ? "-+-" : "\n");
        }
    }
    if (!report.notes.empty()) {
        os << "\n";
        for (const auto& n : report.notes) os << "note: " << n << "\n";
    }
    return os.str();
}

std::string report_to_json(const ExperimentReport& report, bool include_wallclock) {
    json j;
    j["format"] = "replaylab-report";
    j["version"] = 1;
    j["title"] = report.title;
    j["seeds"] = report.seeds;
    j["sweep_knob"] = report.sweep_knob;
    j["notes"] = report.notes;
    j["config"] = report.config_echo.empty() ? json(nullptr) : json::parse(report.config_echo);
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row{{"label", r.result.run_label},
                 {"kind", kind_name(r.kind)},
                 {"seed", r.seed},
                 {"old", r.result.old_metric},
                 {"new", r.result.new_metric},
                 {"mean", r.mean_metric()},
                 {"timing", timing_json(r.timing, include_wallclock)}};
        row["grid_value"] = r.grid_value ? json(*r.grid_value) : json(nullptr);
        if (r.transfer) {
            row["bwt"] = r.transfer->backward_transfer;
            row["fwt"] = r.transfer->forward_transfer;
        } else {
            row["bwt"] = nullptr;
            row["fwt"] = nullptr;
        }
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    json aggs = json::array();
    for (const auto& a : report.aggregate()) {
        json row{{"label", a.run_label},       {"kind", kind_name(a.kind)},   {"seeds", a.seeds},
                 {"old_mean", a.old_mean},     {"old_sd", a.old_sd},          {"new_mean", a.new_mean},
                 {"new_sd", a.new_sd},         {"mean_mean", a.mean_mean},    {"mean_sd", a.mean_sd},
                 {"train_steps_mean", a.train_steps_mean},
                 {"scoring_evals_mean", a.scoring_evals_mean},
                 {"total_work_mean", a.total_work_mean}};
        row["grid_value"] = a.grid_value ? json(*a.grid_value) : json(nullptr);
        auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        row["bwt_mean"] = opt(a.bwt_mean);
        row["bwt_sd"] = opt(a.bwt_sd);
        row["fwt_mean"] = opt(a.fwt_mean);
        row["fwt_sd"] = opt(a.fwt_sd);
        aggs.push_back(std::move(row));
    }
    j["aggregates"] = std::move(aggs);
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
    ExperimentReport r;
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "replaylab-report") throw IoError("not a replaylab report");
        r.title = j.value("title", "");
        r.seeds = j.at("seeds").get<std::vector<std::int64_t>>();
        r.sweep_knob = j.value("sweep_knob", "");
        r.notes = j.value("notes", std::vector<std::string>{});
        if (!j.at("config").is_null()) r.config_echo = j.at("config").dump();
        for (const auto& row : j.at("rows")) {
            ReportRow rr;
            rr.result.run_label = row.at("label").get<std::string>();
            rr.kind = kind_from_name(row.at("kind").get<std::string>());
            rr.seed = row.at("seed").get<std::int64_t>();
            rr.result.old_metric = row.at("old").get<double>();
            rr.result.new_metric = row.at("new").get<double>();
            if (!row.at("grid_value").is_null()) rr.grid_value = row.at("grid_value").get<double>();
            if (!row.at("bwt").is_null())
                rr.transfer = TransferResult{row.at("bwt").get<double>(), row.at("fwt").get<double>(),
                                             rr.mean_metric()};
            rr.timing = timing_from_json(row.at("timing"));
            r.rows.push_back(std::move(rr));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed report: ") + e.what());
    }
    return r;
}

}  // namespace replaylab
