// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylebal/featnet.hpp"
#include "stylebal/gram_loss.hpp"
#include "stylebal/tensor.hpp"

namespace stylebal {

/// Partial derivatives laid out like the primal they differentiate.
struct GradientMap {
    Shape shape;
    std::vector<double> data;

    static GradientMap zeros(Shape shape) { return {shape, std::vector<double>(shape.count(), 0.0)}; }
};

/// d content_loss / d fp = 2 (fp - fc) / count.
GradientMap content_grad(const FeatureMap& fc, const FeatureMap& fp);

/// d classic_layer_loss(gram(fs), gram(fp), n) / d fp = 4 F_p (G_p - G_s) / n.
GradientMap classic_style_grad(const FeatureMap& fs, const FeatureMap& fp, double n);
/// Same, against a precomputed target Gram.
GradientMap classic_style_grad(const GramMatrix& target, const FeatureMap& fp, double n);

/// Classic gradient divided by sup_bound, the denominator held constant.
/// A vanishing supremum yields a zero map.
GradientMap balanced_style_grad(const FeatureMap& fs, const FeatureMap& fp, double n);
GradientMap balanced_style_grad(const GramMatrix& target, const FeatureMap& fp, double n);

/// Chain rule through the extractor: sum of tap gradients pulled back to pixels.
GradientMap backprop_pixels(const FeatNet& net, const Image& image,
                            const std::vector<std::pair<std::string, GradientMap>>& layer_grads);
/// Variant that reuses an existing forward cache of `image`.
GradientMap backprop_pixels(const FeatNet& net, const ForwardCache& cache,
                            const std::vector<std::pair<std::string, GradientMap>>& layer_grads);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference step used for coordinate x: eps * max(1, |x|).
double fd_step(double x, double eps);

/// Central differences of f at `point`, one coordinate at a time.
std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> point, double eps);

/// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double finite_diff_check(const ScalarFunction& f, std::span<const double> point,
                         std::span<const double> analytic, double eps = 1e-5);

}  // namespace stylebal
