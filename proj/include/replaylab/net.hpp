// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fully connected softmax classifier with exact backpropagation over flat
// parameter and gradient vectors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace replaylab {

enum class Activation { relu, tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct ModelConfig {
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden_dims{32};
    std::size_t num_classes = 2;
    Activation activation = Activation::relu;

    /// Throws ConfigError when any dimension is zero or num_classes < 2.
    void validate() const;

    /// Total number of weights and biases P.
    std::size_t param_count() const;

    /// Layer widths including input and output: {input_dim, hidden..., num_classes}.
    std::vector<std::size_t> layer_widths() const;

    bool operator==(const ModelConfig&) const = default;
};

/// Flat real vector tagged with its role so parameters and gradients cannot be
/// mixed up at call sites.
///
/// Layout (shared by both roles): layers in order from input to output; within
/// a layer the weight matrix row-major as [out][in], followed by the out biases.
template <class Tag>
struct FlatVector {
    std::vector<double> values;

    FlatVector() = default;
    explicit FlatVector(std::size_t n, double fill = 0.0) : values(n, fill) {}
    explicit FlatVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<double> span() { return values; }
    std::span<const double> span() const { return values; }

    bool operator==(const FlatVector&) const = default;
};

struct ParamTag {};
struct GradTag {};
using ParamVector = FlatVector<ParamTag>;
using GradVector = FlatVector<GradTag>;

enum class DomainTag { old_domain, new_domain };

std::string_view to_string(DomainTag d);
DomainTag domain_from_string(std::string_view name);

struct Sample {
    std::int64_t id = 0;
    std::vector<double> features;
    std::size_t label = 0;
    DomainTag domain = DomainTag::old_domain;

    bool operator==(const Sample&) const = default;
};

/// A minibatch is a non-owning view over samples held by some Dataset.
using Minibatch = std::span<const Sample* const>;

ParamVector init_params(const ModelConfig& config, std::uint64_t seed);

std::vector<double> forward(const ModelConfig& config, const ParamVector& params,
                            std::span<const double> features);

/// Softmax cross-entropy, computed with log-sum-exp.
double loss(std::span<const double> logits, std::size_t label);

/// Gradient of the mean loss over the batch.
GradVector grad(const ModelConfig& config, const ParamVector& params, Minibatch batch);

/// Same as grad() but also reports the mean loss of the batch.
GradVector grad(const ModelConfig& config, const ParamVector& params, Minibatch batch,
                double& mean_loss);

/// Adds weight * d loss(sample) / d params into `out` and returns the sample loss.
double accumulate_sample_grad(const ModelConfig& config, const ParamVector& params,
                              const Sample& sample, double weight, std::span<double> out);

ParamVector sgd_step(const ParamVector& params, const GradVector& g, double lr);

/// In-place variant used by the training loops.
void sgd_step_inplace(ParamVector& params, const GradVector& g, double lr);

std::size_t predict(const ModelConfig& config, const ParamVector& params,
                    std::span<const double> features);

// Vector helpers over equal-length spans.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// One-line `key=value` echo of a config, e.g.
/// "input_dim=2 hidden=32 classes=2 activation=relu". Used by file headers.
std::string describe(const ModelConfig& config);
ModelConfig parse_model_description(std::string_view text);

/// Textual parameter file: config echo followed by P values at 17 significant
/// digits, which round-trips every double exactly.
void save_params(const std::filesystem::path& path, const ModelConfig& config,
                 const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path, ModelConfig& config_out);

}  // namespace replaylab
