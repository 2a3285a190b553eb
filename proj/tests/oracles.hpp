// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used as test oracles. They share no code with the
// library: the network is stored as nested matrices, selection is done by
// scoring everything and fully sorting.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

struct Layer {
    Mat w;  // [out][in]
    Vec b;
};

struct Net {
    std::vector<Layer> layers;
    bool tanh_act = false;
};

/// Unpacks a flat vector laid out layer by layer: weights [out][in] then biases.
inline Net unpack(const std::vector<std::size_t>& widths, const Vec& flat, bool tanh_act = false) {
    Net net;
    net.tanh_act = tanh_act;
    std::size_t at = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.w.assign(widths[l + 1], Vec(widths[l]));
        for (auto& row : layer.w)
            for (auto& v : row) v = flat.at(at++);
        layer.b.resize(widths[l + 1]);
        for (auto& v : layer.b) v = flat.at(at++);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

inline Vec pack(const Net& net) {
    Vec flat;
    for (const auto& layer : net.layers) {
        for (const auto& row : layer.w) flat.insert(flat.end(), row.begin(), row.end());
        flat.insert(flat.end(), layer.b.begin(), layer.b.end());
    }
    return flat;
}

inline double act(const Net& n, double z) { return n.tanh_act ? std::tanh(z) : (z > 0 ? z : 0.0); }
inline double act_prime(const Net& n, double z) {
    if (n.tanh_act) {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    return z > 0 ? 1.0 : 0.0;
}

inline Vec logits(const Net& net, const Vec& x) {
    Vec a = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& L = net.layers[l];
        Vec z(L.b);
        for (std::size_t o = 0; o < z.size(); ++o)
            for (std::size_t i = 0; i < a.size(); ++i) z[o] += L.w[o][i] * a[i];
        if (l + 1 < net.layers.size())
            for (auto& v : z) v = act(net, v);
        a = z;
    }
    return a;
}

inline double xent(const Vec& z, std::size_t label) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s) - z[label];
}

/// Loss and analytic gradient (flat layout) for one sample.
inline double loss_and_grad(const Net& net, const Vec& x, std::size_t label, Vec* grad_out) {
    std::vector<Vec> pre, post{x};
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& L = net.layers[l];
        Vec z(L.b);
        for (std::size_t o = 0; o < z.size(); ++o)
            for (std::size_t i = 0; i < post.back().size(); ++i) z[o] += L.w[o][i] * post.back()[i];
        pre.push_back(z);
        if (l + 1 < net.layers.size())
            for (auto& v : z) v = act(net, v);
        post.push_back(z);
    }
    const Vec& z = post.back();
    const double loss = xent(z, label);
    if (!grad_out) return loss;

    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    Vec delta(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) delta[k] = std::exp(z[k] - m) / s - (k == label ? 1.0 : 0.0);

    Net g = net;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& L = net.layers[l];
        const Vec& in = post[l];
        for (std::size_t o = 0; o < delta.size(); ++o) {
            for (std::size_t i = 0; i < in.size(); ++i) g.layers[l].w[o][i] = delta[o] * in[i];
            g.layers[l].b[o] = delta[o];
        }
        if (l == 0) break;
        Vec next(in.size(), 0.0);
        for (std::size_t i = 0; i < in.size(); ++i) {
            for (std::size_t o = 0; o < delta.size(); ++o) next[i] += L.w[o][i] * delta[o];
            next[i] *= act_prime(net, pre[l - 1][i]);
        }
        delta = next;
    }
    *grad_out = pack(g);
    return loss;
}

/// Central finite difference of f at x along every coordinate.
inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec x, double h) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        out[i] = (up - down) / (2.0 * h);
    }
    return out;
}

inline double cosine_or_nan(const Vec& a, const Vec& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (std::sqrt(aa) < 1e-12 || std::sqrt(bb) < 1e-12) return std::nan("");
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct Candidate {
    std::int64_t id;
    Vec grad;
};

/// Scores every candidate with -cos (degenerate gradients get -1), sorts all of
/// them by (score desc, id asc) and returns the first k IDs as a set.
inline std::set<std::int64_t> brute_force_gmir(const Vec& g, const std::vector<Candidate>& pool, std::size_t k) {
    std::vector<std::pair<double, std::int64_t>> scored;
    for (const auto& c : pool) {
        const double cs = cosine_or_nan(g, c.grad);
        scored.push_back({std::isnan(cs) ? -1.0 : std::clamp(-cs, -1.0, 1.0), c.id});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < k; ++i) ids.insert(scored[i].second);
    return ids;
}

/// Top k of (curr - prev) with ascending-ID tie-break.
inline std::set<std::int64_t> brute_force_mir(const std::map<std::int64_t, double>& prev,
                                              const std::map<std::int64_t, double>& curr, std::size_t k) {
    std::vector<std::pair<double, std::int64_t>> d;
    for (const auto& [id, v] : curr) d.push_back({v - prev.at(id), id});
    std::sort(d.begin(), d.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < k; ++i) ids.insert(d[i].second);
    return ids;
}

/// Each candidate's score is its maximum cosine to any other candidate (a
/// degenerate pair counts as +1, a lone candidate scores -1); the k smallest
/// scores win, ties by ascending ID.
inline std::set<std::int64_t> brute_force_gss(const std::vector<Candidate>& pool, std::size_t k) {
    std::vector<std::pair<double, std::int64_t>> scored;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double worst = -1.0;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            if (i == j) continue;
            const double c = cosine_or_nan(pool[i].grad, pool[j].grad);
            worst = std::max(worst, std::isnan(c) ? 1.0 : c);
        }
        scored.push_back({worst, pool[i].id});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < k; ++i) ids.insert(scored[i].second);
    return ids;
}

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace oracle
