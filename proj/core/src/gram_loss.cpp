// SPDX-License-Identifier: Apache-2.0
#include "stylebal/gram_loss.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stylebal/error.hpp"

namespace stylebal {

GramMatrix::GramMatrix(std::size_t channels, std::vector<double> data, bool nonneg)
    : channels_(channels), data_(std::move(data)), nonneg_(nonneg) {
    if (channels_ == 0 || data_.size() != channels_ * channels_)
        throw DimensionError("gram data length " + std::to_string(data_.size()) +
                             " does not match channels " + std::to_string(channels_));
    if (nonneg_ && std::any_of(data_.begin(), data_.end(), [](double v) { return !(v >= 0.0); }))
        throw PreconditionError("gram flagged non-negative holds a negative entry");
}

GramMatrix GramMatrix::zeros(std::size_t channels) {
    return GramMatrix(channels, std::vector<double>(channels * channels, 0.0), true);
}

double GramMatrix::norm() const { return frobenius_norm(view()); }

void LossConfig::validate() const {
    if (style_layers.empty()) throw ConfigError("loss config needs at least one style layer");
    std::set<std::string> seen;
    for (const auto& layer : style_layers) {
        if (!seen.insert(layer.tap).second) throw ConfigError("duplicate style tap '" + layer.tap + "'");
        if (!(layer.weight >= 0.0))
            throw ConfigError("style weight for '" + layer.tap + "' must be non-negative");
    }
    if (content_layer.empty()) throw ConfigError("loss config needs a content layer");
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
}

std::vector<std::string> LossConfig::style_taps() const {
    std::vector<std::string> taps;
    taps.reserve(style_layers.size());
    for (const auto& layer : style_layers) taps.push_back(layer.tap);
    return taps;
}

LossConfig LossConfig::defaults() {
    LossConfig cfg;
    cfg.style_layers = {{"b1_r2", 1.0}, {"b2_r2", 1.0}, {"b3_r3", 1.0}, {"b4_r3", 1.0}};
    cfg.content_layer = "b3_r3";
    return cfg;
}

void TaskBatch::validate() const {
    if (tasks.size() != lambdas.size())
        throw DimensionError("task batch has " + std::to_string(tasks.size()) + " tasks but " +
                             std::to_string(lambdas.size()) + " weights");
    for (double l : lambdas)
        if (!(l > 0.0)) throw PreconditionError("task weights must be positive");
}

TaskBatch TaskBatch::uniform(std::vector<std::pair<std::string, std::string>> tasks) {
    TaskBatch batch;
    const double w = tasks.empty() ? 0.0 : 1.0 / static_cast<double>(tasks.size());
    batch.lambdas.assign(tasks.size(), w);
    batch.tasks = std::move(tasks);
    return batch;
}

GramMatrix gram(const FeatureMap& f) {
    const std::size_t c = f.channels();
    const std::size_t pixels = f.shape().pixels();
    const auto data = f.data();
    std::vector<double> g(c * c, 0.0);
    // Upper triangle accumulated in pixel order, mirrored afterwards.
    for (std::size_t p = 0; p < pixels; ++p) {
        const double* row = data.data() + p * c;
        for (std::size_t i = 0; i < c; ++i) {
            const double vi = row[i];
            if (vi == 0.0) continue;
            double* gi = g.data() + i * c;
            for (std::size_t j = i; j < c; ++j) gi[j] += vi * row[j];
        }
    }
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < i; ++j) g[i * c + j] = g[j * c + i];
    return GramMatrix(c, std::move(g), f.nonneg());
}

double norm_constant(const FeatureMap& f, Normalization mode) {
    switch (mode) {
        case Normalization::spatial_product:
            return static_cast<double>(f.shape().pixels());
        case Normalization::channels_squared:
            break;
    }
    return static_cast<double>(f.channels() * f.channels());
}

namespace {

void require_same_channels(const GramMatrix& a, const GramMatrix& b) {
    if (a.channels() != b.channels())
        throw DimensionError("gram channel mismatch: " + std::to_string(a.channels()) + " vs " +
                             std::to_string(b.channels()));
}

void require_positive(double n) {
    if (!(n > 0.0)) throw PreconditionError("normalization constant must be positive");
}

double squared_norm(const GramMatrix& g) {
    double s = 0.0;
    for (double v : g.data()) s += v * v;
    return s;
}

}  // namespace

double classic_layer_loss(const GramMatrix& gs, const GramMatrix& gp, double n) {
    require_same_channels(gs, gp);
    require_positive(n);
    const auto a = gs.data();
    const auto b = gp.data();
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s / n;
}

double sup_bound(const GramMatrix& gs, const GramMatrix& gp, double n) {
    require_same_channels(gs, gp);
    require_positive(n);
    if (!gs.nonneg() || !gp.nonneg())
        throw PreconditionError("supremum bound requires non-negative Gram matrices");
    return (squared_norm(gs) + squared_norm(gp)) / n;
}

double inf_bound(const GramMatrix& gs, const GramMatrix& gp, double n) {
    require_same_channels(gs, gp);
    require_positive(n);
    const double d = gs.norm() - gp.norm();
    return d * d / n;
}

double balanced_layer_loss(const GramMatrix& gs, const GramMatrix& gp, double n) {
    const double sup = sup_bound(gs, gp, n);
    if (sup == 0.0) return 0.0;
    // Rounding can push the ratio a few ulps past 1 on disjoint-support pairs.
    return std::clamp(classic_layer_loss(gs, gp, n) / sup, 0.0, 1.0);
}

LayerLossReport layer_report(std::string tap, const GramMatrix& gs, const GramMatrix& gp, double n) {
    LayerLossReport r;
    r.tap = std::move(tap);
    r.classic = classic_layer_loss(gs, gp, n);
    r.sup = sup_bound(gs, gp, n);
    r.inf = inf_bound(gs, gp, n);
    r.balanced = r.sup == 0.0 ? 0.0 : std::clamp(r.classic / r.sup, 0.0, 1.0);
    return r;
}

double style_loss_total(std::span<const std::pair<LayerSpec, double>> layers) {
    double total = 0.0;
    for (const auto& [spec, loss] : layers) {
        if (!(spec.weight >= 0.0)) throw PreconditionError("layer weight must be non-negative");
        total += spec.weight * loss;
    }
    return total;
}

double content_loss(const FeatureMap& fc, const FeatureMap& fp) {
    if (fc.shape() != fp.shape())
        throw DimensionError("content features differ in shape: " + to_string(fc.shape()) + " vs " +
                             to_string(fp.shape()));
    return mse(flatten_spatial(fc), flatten_spatial(fp));
}

double nst_total(double content, double style, double beta) {
    if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
    return content + beta * style;
}

double batch_aggregate(std::span<const double> losses, std::span<const double> lambdas) {
    if (losses.size() != lambdas.size())
        throw DimensionError("batch has " + std::to_string(losses.size()) + " losses but " +
                             std::to_string(lambdas.size()) + " weights");
    double total = 0.0;
    for (std::size_t k = 0; k < losses.size(); ++k) total += lambdas[k] * losses[k];
    return total;
}

GramMatrix interpolated_style_target(const GramMatrix& gs, const GramMatrix& gc, double alpha) {
    require_same_channels(gs, gc);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in [0, 1]");
    const auto a = gs.data();
    const auto b = gc.data();
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = alpha * a[k] + (1.0 - alpha) * b[k];
    return GramMatrix(gs.channels(), std::move(out), gs.nonneg() && gc.nonneg());
}

}  // namespace stylebal
