// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "replaylab/dataset.hpp"
#include "replaylab/error.hpp"
#include "replaylab/replay.hpp"
#include "replaylab/rng.hpp"
#include "replaylab/strategies.hpp"

using namespace replaylab;

namespace {

std::set<std::int64_t> id_set(const ReplayBuffer& b) { return {b.sample_ids.begin(), b.sample_ids.end()}; }

Dataset toy_domain(std::size_t n, std::uint64_t seed, DomainTag tag = DomainTag::old_domain) {
    DomainSpec s;
    s.size = n;
    s.seed = seed;
    s.domain = tag;
    return generate_domain(s);
}

GradVector random_grad(Rng& rng, std::size_t n) {
    GradVector g(n);
    for (auto& v : g.values) v = rng.normal();
    return g;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
    CHECK(all_strategy_kinds().size() == 11);
    for (auto k : all_strategy_kinds()) CHECK(strategy_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(strategy_kind_from_string("mir"), ConfigError);
}

TEST_CASE("reference defaults") {
    const auto g = StrategyConfig::defaults(StrategyKind::gmir);
    CHECK(g.k.is_fraction);
    CHECK(g.k.value == 0.05);
    CHECK(g.n_resample == 10);
    CHECK(g.d_fraction == 1.0);
    CHECK(StrategyConfig::defaults(StrategyKind::ewc).ewc_lambda == 0.4);
    CHECK(StrategyConfig::defaults(StrategyKind::gss).gss_param_fraction == 0.01);
    CHECK(0.01 * StrategyConfig::defaults(StrategyKind::low_lr).low_lr_factor == doctest::Approx(0.003));
    // 5% of the reference clear split.
    CHECK(BufferSize{}.resolve(3600) == 180);
    CHECK(BufferSize{12, false}.resolve(3600) == 12);
    CHECK(BufferSize{0.001, true}.resolve(10) == 1);
}

TEST_CASE("invalid strategy configs") {
    auto c = StrategyConfig::defaults(StrategyKind::gmir);
    c.n_resample = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = StrategyConfig::defaults(StrategyKind::gss);
    c.gss_param_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.gss_param_fraction = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = StrategyConfig::defaults(StrategyKind::ewc);
    c.ewc_lambda = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = StrategyConfig::defaults(StrategyKind::gmir);
    c.d_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = StrategyConfig::defaults(StrategyKind::naive);
    c.lr_override = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("A-GEM projection examples") {
    GradVector g(std::vector<double>{1.0, 1.0}), ref(std::vector<double>{0.0, -1.0});
    AgemOutcome out;
    const auto p = agem_project(g, ref, &out);
    CHECK(out.projected);
    CHECK(p.values == std::vector<double>{1.0, 0.0});

    CHECK(agem_project(g, g) == g);
    GradVector neg(std::vector<double>{-1.0, -1.0});
    const auto z = agem_project(neg, g);
    CHECK(std::abs(z[0]) <= 1e-15);
    CHECK(std::abs(z[1]) <= 1e-15);

    AgemOutcome degenerate;
    CHECK(agem_project(g, GradVector(2), &degenerate) == g);
    CHECK(degenerate.degenerate_reference);
    CHECK_FALSE(degenerate.projected);
}

TEST_CASE("A-GEM projection contract over random pairs") {
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.below(64);
        const auto g = random_grad(rng, n);
        const auto ref = random_grad(rng, n);
        const auto p = agem_project(g, ref);
        CHECK(dot(p.span(), ref.span()) >= -1e-10);
        if (dot(g.span(), ref.span()) >= 0) CHECK(p == g);
        const auto pp = agem_project(p, ref);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(pp[i] - p[i]) <= 1e-12);
    }
}

TEST_CASE("mir_epoch_select examples and oracle") {
    std::map<std::int64_t, double> prev{{1, 0.0}, {2, 0.0}, {3, 0.0}};
    std::map<std::int64_t, double> curr{{1, 0.5}, {2, -0.3}, {3, 0.1}};
    CHECK(id_set(mir_epoch_select(prev, curr, 2)) == std::set<std::int64_t>{1, 3});

    std::map<std::int64_t, double> same{{4, 1.0}, {9, 1.0}, {2, 1.0}, {7, 1.0}};
    CHECK(id_set(mir_epoch_select(same, same, 2)) == std::set<std::int64_t>{2, 4});

    std::map<std::int64_t, double> other{{1, 0.0}, {2, 0.0}, {4, 0.0}};
    CHECK_THROWS_AS(mir_epoch_select(prev, other, 1), InputError);
    CHECK_THROWS_AS(mir_epoch_select(prev, curr, 4), InputError);

    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        std::map<std::int64_t, double> a, b;
        const std::size_t n = 2 + rng.below(49);
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = static_cast<std::int64_t>(rng.below(100000));
            // Coarse values force plenty of ties.
            a[id] = static_cast<double>(rng.below(5));
            b[id] = static_cast<double>(rng.below(5));
        }
        const std::size_t k = 1 + rng.below(a.size());
        const auto sel = mir_epoch_select(a, b, k);
        CHECK(sel.size() == k);
        CHECK(id_set(sel) == oracle::brute_force_mir(a, b, k));
    }
}

TEST_CASE("gss_coordinates") {
    const auto all = gss_coordinates(130, 1.0, 4);
    CHECK(all.size() == 130);
    CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 130);
    const auto some = gss_coordinates(130, 0.01, 4);
    CHECK(some.size() == 2);
    CHECK(gss_coordinates(130, 0.01, 4) == some);
    for (auto c : gss_coordinates(1000, 0.3, 9)) CHECK(c < 1000);
    CHECK(gss_coordinates(1000, 0.3, 9).size() == 300);
}

TEST_CASE("gss_select matches the pairwise oracle at full parameter fraction") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ModelConfig c;
        c.hidden_dims = {6};
        const std::size_t n = seed % 2 ? 30 : 50;
        const Dataset pool = toy_domain(n, seed);
        const ParamVector p = init_params(c, seed * 7);
        const auto net = oracle::unpack(c.layer_widths(), p.values);
        std::vector<oracle::Candidate> cands;
        for (const auto& s : pool.samples) {
            oracle::Candidate cand{s.id, {}};
            oracle::loss_and_grad(net, s.features, s.label, &cand.grad);
            cands.push_back(cand);
        }
        for (std::size_t k : {1u, 5u, 12u}) {
            const auto sel = gss_select(c, p, pool, k, 1.0, seed);
            CHECK(sel.size() == k);
            CHECK(id_set(sel) == oracle::brute_force_gss(cands, k));
        }
    }
}

TEST_CASE("gss_select with k equal to the pool returns everything") {
    ModelConfig c;
    const Dataset pool = toy_domain(12, 3);
    CHECK(gss_select(c, init_params(c, 1), pool, 12, 0.5, 2).size() == 12);
    CHECK_THROWS_AS(gss_select(c, init_params(c, 1), pool, 13, 0.5, 2), InputError);
}

TEST_CASE("EWC Fisher is the mean squared per-sample gradient") {
    ModelConfig c;
    c.hidden_dims = {4};
    const auto p = init_params(c, 3);
    const Dataset d = toy_domain(10, 6);
    const auto f = ewc_fisher(c, p, d);
    CHECK(f.reference_params == p);
    std::vector<double> want(p.size(), 0.0);
    for (const auto& s : d.samples) {
        const auto g = per_sample_gradient(c, p, s);
        for (std::size_t i = 0; i < want.size(); ++i) want[i] += g[i] * g[i] / 10.0;
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(f.values[i] >= 0.0);
        CHECK(std::abs(f.values[i] - want[i]) <= 1e-12);
    }

    const Dataset one = subset(d, {d.samples[2].id});
    const auto g2 = per_sample_gradient(c, p, d.samples[2]);
    const auto f1 = ewc_fisher(c, p, one);
    for (std::size_t i = 0; i < g2.size(); ++i) CHECK(f1.values[i] == doctest::Approx(g2[i] * g2[i]));

    Dataset twice = d;
    for (auto s : d.samples) {
        s.id += 1000;
        twice.samples.push_back(s);
    }
    const auto f2 = ewc_fisher(c, p, twice);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(f2.values[i] - f.values[i]) <= 1e-12);
}

TEST_CASE("EWC penalty gradient") {
    ModelConfig c;
    c.hidden_dims = {5};
    const auto anchor = init_params(c, 8);
    const auto fisher = ewc_fisher(c, anchor, toy_domain(20, 2));
    const double lambda = StrategyConfig::defaults(StrategyKind::ewc).ewc_lambda;
    CHECK(lambda == 0.4);

    for (double v : ewc_penalty_grad(anchor, fisher, lambda).values) CHECK(v == 0.0);
    CHECK(ewc_penalty(anchor, fisher, lambda) == 0.0);

    Rng rng(5);
    ParamVector moved = anchor;
    for (auto& v : moved.values) v += rng.uniform(-0.5, 0.5);
    for (double v : ewc_penalty_grad(moved, fisher, 0.0).values) CHECK(v == 0.0);

    const auto g = ewc_penalty_grad(moved, fisher, lambda);
    const auto fd = oracle::central_difference(
        [&](const oracle::Vec& x) { return ewc_penalty(ParamVector(x), fisher, lambda); }, moved.values, 1e-5);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g[i]) < 1e-9 && std::abs(fd[i]) < 1e-9) continue;
        INFO("coordinate " << i);
        CHECK(oracle::relative_error(g[i], fd[i]) < 1e-6);
    }
}

TEST_CASE("resample schedule") {
    auto gmir = StrategyConfig::defaults(StrategyKind::gmir);
    std::vector<int> fired;
    for (int e = 0; e <= 80; ++e)
        if (resample_due(gmir, e, 80)) fired.push_back(e);
    CHECK(fired == std::vector<int>{10, 20, 30, 40, 50, 60, 70});

    for (auto kind : {StrategyKind::gmir_plus, StrategyKind::random_resampling, StrategyKind::gss,
                      StrategyKind::agem_plus}) {
        auto c = StrategyConfig::defaults(kind);
        c.n_resample = 3;
        CHECK(resample_due(c, 3, 10));
        CHECK(resample_due(c, 9, 10));
        CHECK_FALSE(resample_due(c, 4, 10));
        CHECK_FALSE(resample_due(c, 0, 10));
    }

    auto mir = StrategyConfig::defaults(StrategyKind::mir_epoch);
    for (int e = 1; e < 80; ++e) CHECK(resample_due(mir, e, 80));
    CHECK_FALSE(resample_due(mir, 80, 80));

    for (auto kind : {StrategyKind::naive, StrategyKind::low_lr, StrategyKind::ewc, StrategyKind::fixed_sampling,
                      StrategyKind::agem})
        for (int e = 0; e <= 80; ++e) CHECK_FALSE(resample_due(StrategyConfig::defaults(kind), e, 80));
}

TEST_CASE("strategy_resample drives the right selector") {
    ModelConfig model;
    model.hidden_dims = {6};
    const Dataset pool = toy_domain(40, 1);
    const Dataset d_new = toy_domain(16, 2, DomainTag::new_domain);
    const ParamVector p = init_params(model, 3);
    Rng rng(8);
    const GradVector last_g = random_grad(rng, p.size());

    ResampleContext ctx;
    ctx.total_epochs = 80;
    ctx.model = &model;
    ctx.params = &p;
    ctx.last_g = &last_g;
    ctx.d_old_pool = &pool;
    ctx.d_new = &d_new;
    ctx.seed = 4;
    TimingLedger ledger;
    ctx.ledger = &ledger;

    auto gmir = StrategyConfig::defaults(StrategyKind::gmir);
    gmir.k = BufferSize{4, false};
    for (int e = 1; e <= 9; ++e) {
        ctx.completed_epochs = e;
        CHECK_FALSE(strategy_resample(gmir, ctx).has_value());
    }
    ctx.completed_epochs = 10;
    const auto b = strategy_resample(gmir, ctx);
    REQUIRE(b.has_value());
    CHECK(b->size() == 4);
    CHECK(b->selected_at_epoch == 10);
    CHECK(*b == [&] {
        auto want = gmir_select(last_g, model, p, pool, 4);
        want.selected_at_epoch = 10;
        return want;
    }());
    CHECK(ledger.scoring_grad_evals == pool.size());
    CHECK(ledger.resample_events == 1);

    auto plus = StrategyConfig::defaults(StrategyKind::gmir_plus);
    plus.k = BufferSize{4, false};
    const auto bp = strategy_resample(plus, ctx);
    REQUIRE(bp.has_value());
    CHECK(id_set(*bp) == id_set(gmir_select(average_new_domain_gradient(model, p, d_new), model, p, pool, 4)));
    CHECK(ledger.average_grad_evals == d_new.size());

    CHECK_FALSE(strategy_resample(StrategyConfig::defaults(StrategyKind::naive), ctx).has_value());
    CHECK_FALSE(strategy_resample(StrategyConfig::defaults(StrategyKind::fixed_sampling), ctx).has_value());

    auto random = StrategyConfig::defaults(StrategyKind::random_resampling);
    random.k = BufferSize{4, false};
    const auto r1 = strategy_resample(random, ctx);
    REQUIRE(r1.has_value());
    CHECK(r1->size() == 4);
    CHECK(*strategy_resample(random, ctx) == *r1);
}
