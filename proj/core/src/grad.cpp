// SPDX-License-Identifier: Apache-2.0
#include "stylebal/grad.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stylebal/error.hpp"

namespace stylebal {

GradientMap content_grad(const FeatureMap& fc, const FeatureMap& fp) {
    if (fc.shape() != fp.shape())
        throw DimensionError("content features differ in shape: " + to_string(fc.shape()) + " vs " +
                             to_string(fp.shape()));
    GradientMap g = GradientMap::zeros(fp.shape());
    const auto c = fc.data();
    const auto p = fp.data();
    const double scale = 2.0 / static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) g.data[i] = scale * (p[i] - c[i]);
    return g;
}

GradientMap classic_style_grad(const GramMatrix& target, const FeatureMap& fp, double n) {
    const std::size_t c = fp.channels();
    if (target.channels() != c)
        throw DimensionError("gram channel mismatch: " + std::to_string(target.channels()) + " vs " +
                             std::to_string(c));
    if (!(n > 0.0)) throw PreconditionError("normalization constant must be positive");

    const GramMatrix gp = gram(fp);
    std::vector<double> diff(c * c);
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = gp.data()[k] - target.data()[k];

    // L = ||F^T F - G_s||^2 / n  =>  dL/dF = 4 F (G_p - G_s) / n, using symmetry of the difference.
    GradientMap g = GradientMap::zeros(fp.shape());
    const auto f = fp.data();
    const double scale = 4.0 / n;
    for (std::size_t p = 0; p < fp.shape().pixels(); ++p) {
        const double* row = f.data() + p * c;
        double* out = g.data.data() + p * c;
        for (std::size_t i = 0; i < c; ++i) {
            const double v = row[i];
            if (v == 0.0) continue;
            const double* d = diff.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) out[j] += v * d[j];
        }
        for (std::size_t j = 0; j < c; ++j) out[j] *= scale;
    }
    return g;
}

GradientMap classic_style_grad(const FeatureMap& fs, const FeatureMap& fp, double n) {
    if (fs.channels() != fp.channels())
        throw DimensionError("style and pastiche channels differ: " + std::to_string(fs.channels()) +
                             " vs " + std::to_string(fp.channels()));
    return classic_style_grad(gram(fs), fp, n);
}

GradientMap balanced_style_grad(const GramMatrix& target, const FeatureMap& fp, double n) {
    GradientMap g = classic_style_grad(target, fp, n);
    const double sup = sup_bound(target, gram(fp), n);
    if (sup == 0.0) {
        std::fill(g.data.begin(), g.data.end(), 0.0);
        return g;
    }
    for (double& v : g.data) v /= sup;
    return g;
}

GradientMap balanced_style_grad(const FeatureMap& fs, const FeatureMap& fp, double n) {
    if (fs.channels() != fp.channels())
        throw DimensionError("style and pastiche channels differ: " + std::to_string(fs.channels()) +
                             " vs " + std::to_string(fp.channels()));
    return balanced_style_grad(gram(fs), fp, n);
}

GradientMap backprop_pixels(const FeatNet& net, const ForwardCache& cache,
                            const std::vector<std::pair<std::string, GradientMap>>& layer_grads) {
    std::map<std::string, std::vector<double>> grads;
    for (const auto& [tap, g] : layer_grads) {
        const std::size_t li = net.tap_layer(tap);
        if (li + 1 >= cache.shapes.size())
            throw ConfigError("tap '" + tap + "' was not computed by the forward pass");
        if (g.shape != cache.shapes[li + 1])
            throw DimensionError("gradient for tap '" + tap + "' is " + to_string(g.shape) +
                                 " but the activation is " + to_string(cache.shapes[li + 1]));
        auto [it, fresh] = grads.try_emplace(tap, g.data);
        if (!fresh)
            for (std::size_t i = 0; i < g.data.size(); ++i) it->second[i] += g.data[i];
    }
    return {cache.shapes.front(), net.backward(cache, grads)};
}

GradientMap backprop_pixels(const FeatNet& net, const Image& image,
                            const std::vector<std::pair<std::string, GradientMap>>& layer_grads) {
    std::set<std::string> taps;
    for (const auto& [tap, g] : layer_grads) {
        net.tap_layer(tap);
        taps.insert(tap);
    }
    const ForwardCache cache = net.forward_with_cache(image, taps);
    if (layer_grads.empty()) return GradientMap::zeros(image.shape());
    return backprop_pixels(net, cache, layer_grads);
}

double fd_step(double x, double eps) { return eps * std::max(1.0, std::abs(x)); }

std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> point, double eps) {
    if (!(eps > 0.0)) throw PreconditionError("finite-difference step must be positive");
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        const double h = fd_step(x0, eps);
        const double hi = x0 + h;
        const double lo = x0 - h;
        x[i] = hi;
        const double up = f(x);
        x[i] = lo;
        const double down = f(x);
        x[i] = x0;
        // Divide by the representable spacing, not 2h.
        g[i] = (up - down) / (hi - lo);
    }
    return g;
}

double finite_diff_check(const ScalarFunction& f, std::span<const double> point,
                         std::span<const double> analytic, double eps) {
    if (point.size() != analytic.size())
        throw DimensionError("analytic gradient has " + std::to_string(analytic.size()) +
                             " entries for a point of " + std::to_string(point.size()));
    const std::vector<double> numeric = numeric_gradient(f, point, eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-12});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace stylebal
