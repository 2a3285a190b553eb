// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic two-domain classification data: generation, partitioning, merging
// and the on-disk text format.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "replaylab/net.hpp"

namespace replaylab {

enum class Generator { gaussian_clusters, two_moons };

std::string_view to_string(Generator g);
Generator generator_from_string(std::string_view name);

/// How one domain is drawn. The base generator produces the clean 2-D
/// problem; `rotation` (radians, about the base problem's centroid) and
/// `offset` then move it, and `sigma` is the isotropic noise level.
struct DomainSpec {
    Generator generator = Generator::two_moons;
    std::array<double, 2> offset{0.0, 0.0};
    double rotation = 0.0;
    double sigma = 0.15;
    std::size_t size = 3631;
    std::uint64_t seed = 0;
    DomainTag domain = DomainTag::old_domain;

    void validate() const;
};

enum class DatasetDomain { old_domain, new_domain, all };
enum class SplitTag { train, val, test, unsplit };

std::string_view to_string(DatasetDomain d);
std::string_view to_string(SplitTag s);
DatasetDomain dataset_domain_from_string(std::string_view name);
SplitTag split_from_string(std::string_view name);

struct Dataset {
    std::vector<Sample> samples;
    std::size_t input_dim = 2;
    std::size_t num_classes = 2;
    DatasetDomain domain = DatasetDomain::old_domain;
    SplitTag split = SplitTag::unsplit;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    /// Pointers into `samples`, in storage order.
    std::vector<const Sample*> views() const;

    /// Throws InputError on duplicate IDs, ragged features or labels out of range.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

/// IDs of new-domain samples start here so both domains can be merged.
inline constexpr std::int64_t kNewDomainIdBase = 1'000'000;

Dataset generate_domain(const DomainSpec& spec);

struct SplitRatios {
    double train = 0.60;
    double val = 0.15;
    double test = 0.25;
};

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Seeded random partition. Each part is stored in ascending-ID order.
DatasetSplits split(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed);

/// Concatenation with domain = all; per-sample domain tags are preserved.
Dataset merge(const Dataset& a, const Dataset& b);

/// Subset in the order given by `ids`; throws InputError for unknown IDs.
Dataset subset(const Dataset& dataset, const std::vector<std::int64_t>& ids);

/// Header line
///   replaylab-dataset 1 input_dim=D classes=C domain=old|new|all split=S count=N
/// then N records `id label domain f_1 ... f_D`, reals at 17 significant digits.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace replaylab
