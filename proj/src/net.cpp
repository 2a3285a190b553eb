// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0

#include "replaylab/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "replaylab/error.hpp"
#include "replaylab/rng.hpp"
#include "textio.hpp"

namespace replaylab {

std::string_view to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(DomainTag d) {
    return d == DomainTag::old_domain ? "old" : "new";
}

DomainTag domain_from_string(std::string_view name) {
    if (name == "old") return DomainTag::old_domain;
    if (name == "new") return DomainTag::new_domain;
    throw InputError("unknown domain tag '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    for (std::size_t h : hidden_dims)
        if (h == 0) throw ConfigError("hidden layer widths must be positive");
}

std::vector<std::size_t> ModelConfig::layer_widths() const {
    std::vector<std::size_t> w;
    w.reserve(hidden_dims.size() + 2);
    w.push_back(input_dim);
    w.insert(w.end(), hidden_dims.begin(), hidden_dims.end());
    w.push_back(num_classes);
    return w;
}

std::size_t ModelConfig::param_count() const {
    const auto w = layer_widths();
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) p += w[l + 1] * w[l] + w[l + 1];
    return p;
}

namespace {

void check_params(const ModelConfig& config, const ParamVector& params) {
    if (params.size() != config.param_count())
        throw ConfigError("parameter vector has " + std::to_string(params.size()) +
                          " entries, model expects " + std::to_string(config.param_count()));
}

void check_features(const ModelConfig& config, std::span<const double> x) {
    if (x.size() != config.input_dim)
        throw ConfigError("feature vector has " + std::to_string(x.size()) +
                          " entries, model expects " + std::to_string(config.input_dim));
}

double activate(Activation a, double z) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the pre-activation z and the activation value.
double activate_deriv(Activation a, double z, double value) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - value * value;
}

// Activations of every layer for one input; acts[0] is the input itself and
// acts.back() holds the logits. pre[l] is the pre-activation of layer l+1.
struct Trace {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pre;
};

Trace run_forward(const ModelConfig& config, std::span<const double> params,
                  std::span<const double> x) {
    const auto w = config.layer_widths();
    const std::size_t layers = w.size() - 1;
    Trace t;
    t.acts.resize(layers + 1);
    t.pre.resize(layers);
    t.acts[0].assign(x.begin(), x.end());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = w[l], out = w[l + 1];
        const double* weights = params.data() + off;
        const double* bias = weights + out * in;
        auto& z = t.pre[l];
        z.resize(out);
        const auto& a = t.acts[l];
        for (std::size_t o = 0; o < out; ++o) {
            double s = bias[o];
            const double* row = weights + o * in;
            for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
            z[o] = s;
        }
        if (l + 1 < layers) {
            auto& next = t.acts[l + 1];
            next.resize(out);
            for (std::size_t o = 0; o < out; ++o) next[o] = activate(config.activation, z[o]);
        } else {
            t.acts[l + 1] = z;
        }
        off += out * in + out;
    }
    return t;
}

}  // namespace

ParamVector init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ParamVector p(config.param_count());
    Rng rng(seed);
    const auto w = config.layer_widths();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const std::size_t in = w[l], out = w[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t k = 0; k < out * in; ++k) p[off + k] = rng.uniform(-limit, limit);
        off += out * in + out;  // biases stay zero
    }
    return p;
}

std::vector<double> forward(const ModelConfig& config, const ParamVector& params,
                            std::span<const double> features) {
    check_params(config, params);
    check_features(config, features);
    return run_forward(config, params.span(), features).acts.back();
}

double loss(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size())
        throw InputError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double z : logits) s += std::exp(z - m);
    return std::max(0.0, m + std::log(s) - logits[label]);
}

double accumulate_sample_grad(const ModelConfig& config, const ParamVector& params,
                              const Sample& sample, double weight, std::span<double> out) {
    check_params(config, params);
    check_features(config, sample.features);
    if (out.size() != params.size()) throw ConfigError("gradient buffer has wrong length");
    if (sample.label >= config.num_classes)
        throw InputError("label " + std::to_string(sample.label) + " out of range");

    const auto w = config.layer_widths();
    const std::size_t layers = w.size() - 1;
    const Trace t = run_forward(config, params.span(), sample.features);
    const auto& logits = t.acts.back();

    // d loss / d logits = softmax - onehot
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> delta(logits.size());
    double s = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        delta[c] = std::exp(logits[c] - m);
        s += delta[c];
    }
    for (double& d : delta) d /= s;
    const double sample_loss = std::max(0.0, -std::log(delta[sample.label]));
    delta[sample.label] -= 1.0;

    std::vector<std::size_t> offsets(layers);
    for (std::size_t l = 0, off = 0; l < layers; ++l) {
        offsets[l] = off;
        off += w[l + 1] * w[l] + w[l + 1];
    }

    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = w[l], outw = w[l + 1];
        const double* weights = params.values.data() + offsets[l];
        double* gw = out.data() + offsets[l];
        double* gb = gw + outw * in;
        const auto& a = t.acts[l];
        for (std::size_t o = 0; o < outw; ++o) {
            const double d = weight * delta[o];
            double* row = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
            gb[o] += d;
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t o = 0; o < outw; ++o) {
            const double* row = weights + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
        }
        const auto& z = t.pre[l - 1];
        for (std::size_t i = 0; i < in; ++i)
            prev[i] *= activate_deriv(config.activation, z[i], a[i]);
        delta = std::move(prev);
    }
    return sample_loss;
}

GradVector grad(const ModelConfig& config, const ParamVector& params, Minibatch batch,
                double& mean_loss) {
    if (batch.empty()) throw InputError("minibatch must not be empty");
    GradVector g(params.size());
    const double weight = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const Sample* s : batch) total += accumulate_sample_grad(config, params, *s, weight, g.span());
    mean_loss = total / static_cast<double>(batch.size());
    return g;
}

GradVector grad(const ModelConfig& config, const ParamVector& params, Minibatch batch) {
    double ignored = 0.0;
    return grad(config, params, batch, ignored);
}

ParamVector sgd_step(const ParamVector& params, const GradVector& g, double lr) {
    ParamVector out = params;
    sgd_step_inplace(out, g, lr);
    return out;
}

void sgd_step_inplace(ParamVector& params, const GradVector& g, double lr) {
    if (params.size() != g.size()) throw ConfigError("gradient and parameter lengths differ");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * g[i];
}

std::size_t predict(const ModelConfig& config, const ParamVector& params,
                    std::span<const double> features) {
    const auto logits = forward(config, params, features);
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::string describe(const ModelConfig& config) {
    std::ostringstream os;
    os << "input_dim=" << config.input_dim << " hidden=";
    for (std::size_t i = 0; i < config.hidden_dims.size(); ++i)
        os << (i ? "," : "") << config.hidden_dims[i];
    if (config.hidden_dims.empty()) os << "none";
    os << " classes=" << config.num_classes << " activation=" << to_string(config.activation);
    return os.str();
}

ModelConfig parse_model_description(std::string_view text) {
    const auto tokens = textio::split_ws(text);
    ModelConfig c;
    c.input_dim = static_cast<std::size_t>(textio::parse_int(textio::keyed(tokens, "input_dim")));
    c.num_classes = static_cast<std::size_t>(textio::parse_int(textio::keyed(tokens, "classes")));
    c.activation = activation_from_string(textio::keyed(tokens, "activation"));
    c.hidden_dims.clear();
    const std::string hidden = textio::keyed(tokens, "hidden");
    if (hidden != "none") {
        std::stringstream ss(hidden);
        std::string part;
        while (std::getline(ss, part, ','))
            c.hidden_dims.push_back(static_cast<std::size_t>(textio::parse_int(part)));
    }
    c.validate();
    return c;
}

void save_params(const std::filesystem::path& path, const ModelConfig& config,
                 const ParamVector& params) {
    check_params(config, params);
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "replaylab-params 1\n" << "model " << describe(config) << "\n"
       << "count " << params.size() << "\n";
    for (double v : params.values) os << textio::format_exact(v) << "\n";
    if (!os) throw IoError("write failed: " + path.string());
}

ParamVector load_params(const std::filesystem::path& path, ModelConfig& config_out) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "replaylab-params 1")
        throw IoError(path.string() + ": not a replaylab parameter file");
    if (!std::getline(is, line) || line.rfind("model ", 0) != 0)
        throw IoError(path.string() + ": missing model line");
    config_out = parse_model_description(std::string_view(line).substr(6));
    if (!std::getline(is, line) || line.rfind("count ", 0) != 0)
        throw IoError(path.string() + ": missing count line");
    const auto count = static_cast<std::size_t>(textio::parse_int(line.substr(6)));
    if (count != config_out.param_count())
        throw IoError(path.string() + ": count does not match model");
    ParamVector p(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw IoError(path.string() + ": truncated");
        p[i] = textio::parse_double(line);
    }
    return p;
}

}  // namespace replaylab
