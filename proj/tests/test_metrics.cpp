// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "published_tables.hpp"
#include "replaylab/dataset.hpp"
#include "replaylab/error.hpp"
#include "replaylab/metrics.hpp"
#include "replaylab/rng.hpp"

using namespace replaylab;

namespace {

// Printed precision of the published tables, with room for binary rounding
// of values that sit exactly on a half-cent.
constexpr double kPrinted = 0.005 + 1e-9;

Dataset labelled(const std::vector<std::pair<std::vector<double>, std::size_t>>& rows) {
    Dataset d;
    std::int64_t id = 0;
    for (const auto& [x, y] : rows) d.samples.push_back(Sample{id++, x, y, DomainTag::old_domain});
    return d;
}

}  // namespace

TEST_CASE("evaluate") {
    // One ReLU unit gives the rule "x0 > 0 -> class 1"; ties go to class 0.
    ModelConfig c;
    c.hidden_dims = {1};
    ParamVector p(c.param_count());
    // hidden: w = [1, 0], b = 0; output: w = [[-1], [1]], b = [0, 0]
    p.values = {1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0};
    const Dataset d = labelled({{{1.0, 0.0}, 1},
                                {{2.0, 5.0}, 1},
                                {{-1.0, 0.0}, 0},
                                {{0.5, -3.0}, 0},
                                {{-0.5, 1.0}, 1},
                                {{3.0, 3.0}, 1},
                                {{-2.0, -2.0}, 0},
                                {{0.1, 0.1}, 0}});
    // Hand count: predictions 1,1,tie->0,1,tie->0,1,tie->0,1 give 5 of 8 right.
    CHECK(evaluate(c, p, d) == doctest::Approx(62.5));

    ParamVector constant(c.param_count());
    constant.values.back() = 1.0;  // class-1 bias
    const Dataset balanced = labelled({{{0, 0}, 0}, {{1, 1}, 1}, {{2, 2}, 0}, {{3, 3}, 1}});
    CHECK(evaluate(c, constant, balanced) == 50.0);
    const Dataset ones = labelled({{{0, 0}, 1}, {{1, 1}, 1}});
    CHECK(evaluate(c, constant, ones) == 100.0);
    CHECK_THROWS_AS(evaluate(c, constant, Dataset{}), InputError);
}

TEST_CASE("evaluate is permutation invariant") {
    ModelConfig c;
    const auto p = init_params(c, 3);
    DomainSpec s;
    s.size = 200;
    Dataset d = generate_domain(s);
    const double a = evaluate(c, p, d);
    Rng(5).shuffle(std::span<Sample>(d.samples));
    CHECK(evaluate(c, p, d) == a);
}

TEST_CASE("transfer metrics examples") {
    const auto t = transfer_metrics({"gmir", 44.88, 43.81}, 43.85, 43.12);
    CHECK(std::abs(t.backward_transfer - 1.03) <= kPrinted);
    CHECK(std::abs(t.forward_transfer - 0.69) <= kPrinted);
    const auto z = transfer_metrics({"x", 50.0, 60.0}, 50.0, 60.0);
    CHECK(z.backward_transfer == 0.0);
    CHECK(z.forward_transfer == 0.0);
    CHECK(z.mean_metric == 55.0);
}

TEST_CASE("published transfer values reproduce to printed precision") {
    for (const auto& block : published::detection_results()) {
        for (const auto& row : block.rows) {
            INFO(block.detector << " " << row.method);
            const auto t = transfer_metrics({row.method, row.old_ap, row.new_ap}, block.lb_old, block.lb_new);
            CHECK(std::abs(t.backward_transfer - row.bwt) <= kPrinted);
            CHECK(std::abs(t.forward_transfer - row.fwt) <= kPrinted);
            if (row.map_consistent)
                CHECK(std::abs(t.mean_metric - row.map) <= kPrinted);
            else
                CHECK(std::abs(t.mean_metric - row.map) > kPrinted);
        }
    }
}

TEST_CASE("published time reductions reproduce to printed precision") {
    for (const auto& row : published::training_times()) {
        INFO(row.method);
        CHECK(std::abs(time_reduction(published::kScratchAllHours, row.hours) - row.reduction) <= kPrinted);
    }
    CHECK(time_reduction(16.0, 8.6) == doctest::Approx(46.25).epsilon(1e-12));
    CHECK(time_reduction(16.0, 20.2) == doctest::Approx(-26.25).epsilon(1e-12));
    CHECK(time_reduction(16.0, 16.0) == 0.0);
    CHECK_THROWS_AS(time_reduction(0.0, 1.0), InputError);
    CHECK_THROWS_AS(time_reduction(-1.0, 1.0), InputError);
}

TEST_CASE("mean and sample standard deviation") {
    auto [m, s] = mean_sd({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    CHECK(m == 5.0);
    CHECK(s == doctest::Approx(std::sqrt(32.0 / 7.0)));
    auto [m1, s1] = mean_sd({3.0});
    CHECK(m1 == 3.0);
    CHECK(s1 == 0.0);
}

namespace {

ExperimentReport sample_report() {
    ExperimentReport r;
    r.title = "t";
    r.config_echo = "{}";
    r.seeds = {1, 2};
    for (std::int64_t seed : {1, 2}) {
        const double d = static_cast<double>(seed);
        r.rows.push_back({{"scratch-clear", 90.0 + d, 70.0}, RunKind::scratch, seed, std::nullopt, std::nullopt, {}});
        r.rows.push_back({{"scratch-adverse", 80.0, 88.0 + d}, RunKind::scratch, seed, std::nullopt, std::nullopt, {}});
        ReportRow naive{{"naive", 85.0, 90.0}, RunKind::finetune, seed, std::nullopt, std::nullopt, {}};
        naive.timing.train_steps = 100;
        naive.timing.scoring_grad_evals = 7;
        naive.timing.seconds_total = 1.5 * d;
        r.rows.push_back(naive);
    }
    r.notes = {"a note"};
    return r;
}

}  // namespace

TEST_CASE("attach_transfer uses same-seed lower bounds") {
    auto r = sample_report();
    r.attach_transfer();
    for (const auto& row : r.rows) {
        if (row.kind == RunKind::scratch) {
            CHECK_FALSE(row.transfer.has_value());
            continue;
        }
        REQUIRE(row.transfer.has_value());
        const double d = static_cast<double>(row.seed);
        CHECK(row.transfer->backward_transfer == doctest::Approx(85.0 - (90.0 + d)));
        CHECK(row.transfer->forward_transfer == doctest::Approx(90.0 - (88.0 + d)));
    }

    ExperimentReport only_clear;
    only_clear.rows.push_back({{"scratch-clear", 90.0, 70.0}, RunKind::scratch, 1, std::nullopt, std::nullopt, {}});
    only_clear.rows.push_back({{"naive", 85.0, 90.0}, RunKind::finetune, 1, std::nullopt, std::nullopt, {}});
    only_clear.attach_transfer();
    CHECK_FALSE(only_clear.rows[1].transfer.has_value());
}

TEST_CASE("aggregate rows") {
    auto r = sample_report();
    r.attach_transfer();
    const auto agg = r.aggregate();
    REQUIRE(agg.size() == 3);
    const auto it = std::find_if(agg.begin(), agg.end(), [](auto& a) { return a.run_label == "naive"; });
    REQUIRE(it != agg.end());
    CHECK(it->seeds == 2);
    CHECK(*it->bwt_mean == doctest::Approx(85.0 - 91.5));
    CHECK(*it->bwt_sd == doctest::Approx(std::sqrt(0.5)));
    CHECK(it->total_work_mean == 107.0);
}

TEST_CASE("report json round trip and wall-clock exclusion") {
    auto r = sample_report();
    r.attach_transfer();
    const auto text = report_to_json(r);
    CHECK(text.find("seconds") == std::string::npos);
    CHECK(report_to_json(r, true).find("seconds") != std::string::npos);
    const auto back = report_from_json(text);
    CHECK(back.rows.size() == r.rows.size());
    CHECK(report_to_json(back) == text);
    CHECK_THROWS(report_from_json("{\"format\": \"something-else\"}"));
}

TEST_CASE("table rendering") {
    auto r = sample_report();
    r.attach_transfer();
    const auto table = render_table(r);
    CHECK(table.find("method") != std::string::npos);
    CHECK(table.find("naive") != std::string::npos);
    CHECK(table.find("(-6.50)") != std::string::npos);
    CHECK(table.find("(+0.50)") != std::string::npos);
}
