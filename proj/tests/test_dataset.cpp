// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "doctest.h"
#include "replaylab/dataset.hpp"
#include "replaylab/error.hpp"

using namespace replaylab;

namespace {

DomainSpec spec(std::size_t size, std::uint64_t seed, DomainTag tag = DomainTag::old_domain) {
    DomainSpec s;
    s.size = size;
    s.seed = seed;
    s.domain = tag;
    return s;
}

std::set<std::int64_t> ids(const Dataset& d) {
    std::set<std::int64_t> out;
    for (const auto& s : d.samples) out.insert(s.id);
    return out;
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "replaylab-tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
    CHECK(generate_domain(spec(200, 3)) == generate_domain(spec(200, 3)));
    CHECK_FALSE(generate_domain(spec(200, 3)) == generate_domain(spec(200, 4)));
}

TEST_CASE("generated domains are valid and class balanced") {
    for (auto gen : {Generator::two_moons, Generator::gaussian_clusters}) {
        for (std::size_t n : {10u, 11u, 501u, 3631u}) {
            DomainSpec s = spec(n, 17);
            s.generator = gen;
            const Dataset d = generate_domain(s);
            CHECK(d.size() == n);
            CHECK_NOTHROW(d.validate());
            const auto ones = std::count_if(d.samples.begin(), d.samples.end(), [](auto& x) { return x.label == 1; });
            const double share = static_cast<double>(ones) / static_cast<double>(n);
            CHECK(share >= 0.45);
            CHECK(share <= 0.55);
        }
    }
}

TEST_CASE("new-domain IDs are disjoint from old-domain IDs") {
    const auto a = generate_domain(spec(100, 1));
    const auto b = generate_domain(spec(100, 1, DomainTag::new_domain));
    CHECK(b.domain == DatasetDomain::new_domain);
    for (const auto& s : b.samples) {
        CHECK(s.id >= kNewDomainIdBase);
        CHECK(s.domain == DomainTag::new_domain);
    }
    CHECK(merge(a, b).size() == 200);
}

TEST_CASE("shift parameters transform the clean generator") {
    DomainSpec base = spec(50, 9);
    DomainSpec moved = base;
    moved.offset = {0.5, -1.0};
    const auto a = generate_domain(base);
    const auto b = generate_domain(moved);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b.samples[i].features[0] == doctest::Approx(a.samples[i].features[0] + 0.5));
        CHECK(b.samples[i].features[1] == doctest::Approx(a.samples[i].features[1] - 1.0));
    }

    // A rotation about the moons centroid preserves distances to it.
    DomainSpec turned = base;
    turned.rotation = std::numbers::pi / 6.0;
    const auto r = generate_domain(turned);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = std::hypot(a.samples[i].features[0] - 0.5, a.samples[i].features[1] - 0.25);
        const double dr = std::hypot(r.samples[i].features[0] - 0.5, r.samples[i].features[1] - 0.25);
        CHECK(dr == doctest::Approx(da).epsilon(1e-12));
    }
}

TEST_CASE("degenerate domain specs are input errors") {
    DomainSpec s = spec(100, 1);
    s.sigma = 0.0;
    CHECK_THROWS_AS(generate_domain(s), InputError);
    s.sigma = -1.0;
    CHECK_THROWS_AS(generate_domain(s), InputError);
    CHECK_THROWS_AS(generate_domain(spec(9, 1)), InputError);
}

TEST_CASE("1000 samples split 600/150/250") {
    const auto d = generate_domain(spec(1000, 5));
    const auto s = split(d, {}, 42);
    CHECK(s.train.size() == 600);
    CHECK(s.val.size() == 150);
    CHECK(s.test.size() == 250);
    CHECK(s.train.split == SplitTag::train);
    CHECK(s.val.split == SplitTag::val);
    CHECK(s.test.split == SplitTag::test);
}

TEST_CASE("splits partition the IDs for many sizes and seeds") {
    for (std::size_t n : {10u, 37u, 333u, 3365u}) {
        const auto d = generate_domain(spec(n, n));
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto s = split(d, {}, seed);
            std::set<std::int64_t> all;
            for (const Dataset* part : {&s.train, &s.val, &s.test}) {
                const auto part_ids = ids(*part);
                CHECK(part_ids.size() == part->size());
                for (auto id : part_ids) CHECK(all.insert(id).second);
                CHECK(std::is_sorted(part->samples.begin(), part->samples.end(),
                                     [](auto& a, auto& b) { return a.id < b.id; }));
            }
            CHECK(all == ids(d));
            CHECK(std::abs(static_cast<double>(s.train.size()) - 0.60 * n) <= 1.0);
            CHECK(std::abs(static_cast<double>(s.val.size()) - 0.15 * n) <= 1.0);
            CHECK(std::abs(static_cast<double>(s.test.size()) - 0.25 * n) <= 1.0);
        }
        CHECK(split(d, {}, 3).train == split(d, {}, 3).train);
    }
}

TEST_CASE("bad split ratios are input errors") {
    const auto d = generate_domain(spec(100, 1));
    CHECK_THROWS_AS(split(d, {1.0, 0.0, 0.0}, 1), InputError);
    CHECK_THROWS_AS(split(d, {0.5, 0.2, 0.2}, 1), InputError);
    CHECK_THROWS_AS(split(d, {0.7, -0.1, 0.4}, 1), InputError);
}

TEST_CASE("merge") {
    const auto a = generate_domain(spec(30, 1));
    const auto b = generate_domain(spec(20, 2, DomainTag::new_domain));
    const auto m = merge(a, b);
    CHECK(m.size() == a.size() + b.size());
    CHECK(m.domain == DatasetDomain::all);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(m.samples[i] == a.samples[i]);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(m.samples[a.size() + i].domain == DomainTag::new_domain);

    Dataset empty;
    CHECK(merge(a, empty).samples == a.samples);
    CHECK_THROWS_AS(merge(a, a), InputError);
}

TEST_CASE("subset keeps the requested samples") {
    const auto a = generate_domain(spec(30, 1));
    const auto s = subset(a, {3, 7, 11});
    CHECK(ids(s) == std::set<std::int64_t>{3, 7, 11});
    CHECK_THROWS(subset(a, {999}));
}

TEST_CASE("dataset files round-trip exactly") {
    const auto d = split(generate_domain(spec(80, 8, DomainTag::new_domain)), {}, 1).val;
    const auto path = temp_file("dataset.txt");
    save_dataset(path, d);
    CHECK(load_dataset(path) == d);
}

TEST_CASE("malformed dataset files are rejected") {
    const auto path = temp_file("bad-dataset.txt");
    {
        std::ofstream os(path);
        os << "replaylab-dataset 1 input_dim=2 classes=2 domain=old split=train count=2\n";
        os << "0 0 old 0.1 0.2\n";
        os << "0 1 old 0.3 0.4\n";
    }
    CHECK_THROWS(load_dataset(path));
    {
        std::ofstream os(path);
        os << "replaylab-dataset 1 input_dim=2 classes=2 domain=old split=train count=1\n";
        os << "0 5 old 0.1 0.2\n";
    }
    CHECK_THROWS(load_dataset(path));
    CHECK_THROWS_AS(load_dataset(temp_file("missing-dataset.txt")), IoError);
}
