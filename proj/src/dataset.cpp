// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "replaylab/error.hpp"
#include "replaylab/rng.hpp"
#include "textio.hpp"

namespace replaylab {

std::string_view to_string(Generator g) {
    return g == Generator::two_moons ? "two-moons" : "gaussian-clusters";
}

Generator generator_from_string(std::string_view name) {
    if (name == "two-moons") return Generator::two_moons;
    if (name == "gaussian-clusters") return Generator::gaussian_clusters;
    throw ConfigError("unknown generator '" + std::string(name) + "'");
}

std::string_view to_string(DatasetDomain d) {
    switch (d) {
        case DatasetDomain::old_domain: return "old";
        case DatasetDomain::new_domain: return "new";
        case DatasetDomain::all: return "all";
    }
    return "?";
}

std::string_view to_string(SplitTag s) {
    switch (s) {
        case SplitTag::train: return "train";
        case SplitTag::val: return "val";
        case SplitTag::test: return "test";
        case SplitTag::unsplit: return "unsplit";
    }
    return "?";
}

DatasetDomain dataset_domain_from_string(std::string_view name) {
    if (name == "old") return DatasetDomain::old_domain;
    if (name == "new") return DatasetDomain::new_domain;
    if (name == "all") return DatasetDomain::all;
    throw IoError("unknown dataset domain '" + std::string(name) + "'");
}

SplitTag split_from_string(std::string_view name) {
    if (name == "train") return SplitTag::train;
    if (name == "val") return SplitTag::val;
    if (name == "test") return SplitTag::test;
    if (name == "unsplit") return SplitTag::unsplit;
    throw IoError("unknown split tag '" + std::string(name) + "'");
}

void DomainSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("domain sigma must be positive");
    if (size < 10) throw InputError("domain size must be at least 10");
    if (size >= static_cast<std::size_t>(kNewDomainIdBase))
        throw InputError("domain size must be below 1000000");
    if (!std::isfinite(rotation) || !std::isfinite(offset[0]) || !std::isfinite(offset[1]))
        throw InputError("domain shift parameters must be finite");
}

std::vector<const Sample*> Dataset::views() const {
    std::vector<const Sample*> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(&s);
    return v;
}

void Dataset::validate() const {
    std::unordered_set<std::int64_t> seen;
    seen.reserve(samples.size());
    for (const auto& s : samples) {
        if (!seen.insert(s.id).second) throw InputError("duplicate sample id " + std::to_string(s.id));
        if (s.features.size() != input_dim)
            throw InputError("sample " + std::to_string(s.id) + " has wrong feature length");
        if (s.label >= num_classes)
            throw InputError("sample " + std::to_string(s.id) + " has label out of range");
    }
}

Dataset generate_domain(const DomainSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    // Centroid of the clean problem; rotation is applied about it.
    const double cx = spec.generator == Generator::two_moons ? 0.5 : 0.0;
    const double cy = spec.generator == Generator::two_moons ? 0.25 : 0.0;
    const double c = std::cos(spec.rotation), s = std::sin(spec.rotation);

    Dataset d;
    d.domain = spec.domain == DomainTag::old_domain ? DatasetDomain::old_domain
                                                     : DatasetDomain::new_domain;
    d.split = SplitTag::unsplit;
    d.samples.reserve(spec.size);
    const std::int64_t base = spec.domain == DomainTag::old_domain ? 0 : kNewDomainIdBase;

    for (std::size_t i = 0; i < spec.size; ++i) {
        const std::size_t label = i % 2;
        double x = 0.0, y = 0.0;
        if (spec.generator == Generator::two_moons) {
            const double t = rng.uniform() * std::numbers::pi;
            if (label == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
        } else {
            x = label == 0 ? -1.0 : 1.0;
            y = 0.0;
        }
        x += spec.sigma * rng.normal();
        y += spec.sigma * rng.normal();
        const double rx = cx + c * (x - cx) - s * (y - cy) + spec.offset[0];
        const double ry = cy + s * (x - cx) + c * (y - cy) + spec.offset[1];
        d.samples.push_back(Sample{base + static_cast<std::int64_t>(i), {rx, ry}, label, spec.domain});
    }
    return d;
}

DatasetSplits split(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed) {
    if (!(ratios.train > 0.0) || !(ratios.val > 0.0) || !(ratios.test > 0.0))
        throw InputError("split ratios must be strictly positive");
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw InputError("split ratios must sum to 1");

    const std::size_t n = dataset.size();
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.train));
    const auto n_val = std::min(n - n_train,
                                static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.val)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    auto part = [&](std::size_t from, std::size_t to, SplitTag tag) {
        Dataset p;
        p.input_dim = dataset.input_dim;
        p.num_classes = dataset.num_classes;
        p.domain = dataset.domain;
        p.split = tag;
        for (std::size_t k = from; k < to; ++k) p.samples.push_back(dataset.samples[order[k]]);
        std::sort(p.samples.begin(), p.samples.end(),
                  [](const Sample& a, const Sample& b) { return a.id < b.id; });
        return p;
    };
    return DatasetSplits{part(0, n_train, SplitTag::train),
                         part(n_train, n_train + n_val, SplitTag::val),
                         part(n_train + n_val, n, SplitTag::test)};
}

Dataset merge(const Dataset& a, const Dataset& b) {
    if (a.input_dim != b.input_dim) throw InputError("cannot merge datasets of different input_dim");
    if (a.num_classes != b.num_classes) throw InputError("cannot merge datasets of different class count");
    std::unordered_set<std::int64_t> ids;
    ids.reserve(a.size());
    for (const auto& s : a.samples) ids.insert(s.id);
    for (const auto& s : b.samples)
        if (ids.contains(s.id)) throw InputError("id collision on merge: " + std::to_string(s.id));

    Dataset m;
    m.input_dim = a.input_dim;
    m.num_classes = a.num_classes;
    m.domain = DatasetDomain::all;
    m.split = a.split == b.split ? a.split : SplitTag::unsplit;
    m.samples.reserve(a.size() + b.size());
    m.samples.insert(m.samples.end(), a.samples.begin(), a.samples.end());
    m.samples.insert(m.samples.end(), b.samples.begin(), b.samples.end());
    return m;
}

Dataset subset(const Dataset& dataset, const std::vector<std::int64_t>& ids) {
    std::unordered_map<std::int64_t, std::size_t> index;
    index.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) index.emplace(dataset.samples[i].id, i);
    Dataset out;
    out.input_dim = dataset.input_dim;
    out.num_classes = dataset.num_classes;
    out.domain = dataset.domain;
    out.split = dataset.split;
    out.samples.reserve(ids.size());
    for (auto id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw InputError("unknown sample id " + std::to_string(id));
        out.samples.push_back(dataset.samples[it->second]);
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "replaylab-dataset 1 input_dim=" << dataset.input_dim << " classes=" << dataset.num_classes
       << " domain=" << to_string(dataset.domain) << " split=" << to_string(dataset.split)
       << " count=" << dataset.size() << "\n";
    for (const auto& s : dataset.samples) {
        os << s.id << ' ' << s.label << ' ' << to_string(s.domain);
        for (double f : s.features) os << ' ' << textio::format_exact(f);
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
    const auto header = textio::split_ws(line);
    if (header.size() < 2 || header[0] != "replaylab-dataset" || header[1] != "1")
        throw IoError(path.string() + ": not a replaylab dataset file");

    Dataset d;
    d.input_dim = static_cast<std::size_t>(textio::parse_int(textio::keyed(header, "input_dim")));
    d.num_classes = static_cast<std::size_t>(textio::parse_int(textio::keyed(header, "classes")));
    d.domain = dataset_domain_from_string(textio::keyed(header, "domain"));
    d.split = split_from_string(textio::keyed(header, "split"));
    const auto count = static_cast<std::size_t>(textio::parse_int(textio::keyed(header, "count")));
    d.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw IoError(path.string() + ": truncated");
        const auto tok = textio::split_ws(line);
        if (tok.size() != 3 + d.input_dim) throw IoError(path.string() + ": malformed record");
        Sample s;
        s.id = textio::parse_int(tok[0]);
        s.label = static_cast<std::size_t>(textio::parse_int(tok[1]));
        s.domain = domain_from_string(tok[2]);
        for (std::size_t k = 0; k < d.input_dim; ++k) s.features.push_back(textio::parse_double(tok[3 + k]));
        d.samples.push_back(std::move(s));
    }
    try {
        d.validate();
    } catch (const InputError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return d;
}

}  // namespace replaylab
