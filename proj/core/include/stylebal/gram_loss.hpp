// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylebal/tensor.hpp"

namespace stylebal {

/// C x C second-order feature statistic G = F^T F over the (H*W) x C reshape.
class GramMatrix {
public:
    GramMatrix() = default;
    /// Throws DimensionError when data is not channels^2 long and
    /// PreconditionError when `nonneg` is claimed over a negative entry.
    GramMatrix(std::size_t channels, std::vector<double> data, bool nonneg);

    static GramMatrix zeros(std::size_t channels);

    std::size_t channels() const noexcept { return channels_; }
    bool nonneg() const noexcept { return nonneg_; }
    std::span<const double> data() const noexcept { return data_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * channels_ + j]; }
    MatrixView view() const { return MatrixView(channels_, channels_, data_); }

    /// Frobenius norm.
    double norm() const;

private:
    std::size_t channels_ = 0;
    std::vector<double> data_;
    bool nonneg_ = false;
};

enum class Normalization {
    channels_squared,  ///< N = C * C
    spatial_product,   ///< N = H * W
};

struct LayerSpec {
    std::string tap;
    double weight = 1.0;
};

struct LossConfig {
    std::vector<LayerSpec> style_layers;
    std::string content_layer;
    double beta = 1.0;
    Normalization normalization = Normalization::channels_squared;

    /// Non-empty distinct style taps, non-negative weights, beta > 0.
    void validate() const;
    std::vector<std::string> style_taps() const;

    /// b1_r2, b2_r2, b3_r3, b4_r3 at unit weight, content at b3_r3.
    static LossConfig defaults();
};

/// Per-layer classic loss with its bounds and the normalized value.
struct LayerLossReport {
    std::string tap;
    double classic = 0.0;
    double sup = 0.0;
    double inf = 0.0;
    double balanced = 0.0;
};

/// Stylization tasks with per-task contribution weights.
struct TaskBatch {
    std::vector<std::pair<std::string, std::string>> tasks;  // (style id, content id)
    std::vector<double> lambdas;

    void validate() const;
    /// lambda_k = 1/B for every task, the plain batch mean.
    static TaskBatch uniform(std::vector<std::pair<std::string, std::string>> tasks);
};

GramMatrix gram(const FeatureMap& f);

double norm_constant(const FeatureMap& f, Normalization mode);

/// ||gs - gp||^2 / n.
double classic_layer_loss(const GramMatrix& gs, const GramMatrix& gp, double n);

/// (||gs||^2 + ||gp||^2) / n. Both Grams must be flagged non-negative.
double sup_bound(const GramMatrix& gs, const GramMatrix& gp, double n);

/// (||gs|| - ||gp||)^2 / n.
double inf_bound(const GramMatrix& gs, const GramMatrix& gp, double n);

/// classic / sup, in [0, 1]; 0 when both Grams vanish.
double balanced_layer_loss(const GramMatrix& gs, const GramMatrix& gp, double n);

/// All four quantities for one tap.
LayerLossReport layer_report(std::string tap, const GramMatrix& gs, const GramMatrix& gp, double n);

/// Sum of w^l * loss^l.
double style_loss_total(std::span<const std::pair<LayerSpec, double>> layers);

/// MSE between content and pastiche features.
double content_loss(const FeatureMap& fc, const FeatureMap& fp);

/// content + beta * style.
double nst_total(double content, double style, double beta);

/// Sum of lambda_k * loss_k.
double batch_aggregate(std::span<const double> losses, std::span<const double> lambdas);

/// alpha * gs + (1 - alpha) * gc.
GramMatrix interpolated_style_target(const GramMatrix& gs, const GramMatrix& gc, double alpha);

}  // namespace stylebal
