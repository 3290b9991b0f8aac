// SPDX-License-Identifier: Apache-2.0
#include "stylebal/featnet.hpp"

#include <algorithm>
#include <cmath>

#include "stylebal/error.hpp"
#include "stylebal/io.hpp"
#include "stylebal/rng.hpp"

namespace stylebal {

void NetConfig::validate() const {
    if (layers.empty() || layers.front().kind != LayerKind::conv)
        throw ConfigError("architecture must start with a convolution");
    std::set<std::string> tags;
    std::size_t channels = layers.front().in_channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer " + std::to_string(i);
        switch (l.kind) {
            case LayerKind::conv:
                if (l.in_channels == 0 || l.out_channels == 0)
                    throw ConfigError(where + ": convolution channels must be positive");
                if (l.kernel == 0 || l.kernel % 2 == 0)
                    throw ConfigError(where + ": kernel size must be odd");
                if (l.in_channels != channels)
                    throw ConfigError(where + ": expects " + std::to_string(l.in_channels) +
                                      " input channels but receives " + std::to_string(channels));
                channels = l.out_channels;
                break;
            case LayerKind::relu:
                if (!l.tag.empty() && !tags.insert(l.tag).second)
                    throw ConfigError(where + ": duplicate tap tag '" + l.tag + "'");
                break;
            case LayerKind::avgpool:
                break;
        }
    }
}

NetConfig NetConfig::default_arch(std::uint64_t seed) {
    NetConfig cfg;
    cfg.seed = seed;
    const std::size_t widths[] = {8, 16, 32, 64};
    const std::size_t convs_per_block[] = {2, 2, 3, 3};
    std::size_t in = 3;
    for (std::size_t b = 0; b < 4; ++b) {
        for (std::size_t r = 0; r < convs_per_block[b]; ++r) {
            cfg.layers.push_back(LayerDesc::conv(in, widths[b], 3));
            cfg.layers.push_back(
                LayerDesc::relu("b" + std::to_string(b + 1) + "_r" + std::to_string(r + 1)));
            in = widths[b];
        }
        if (b + 1 < 4) cfg.layers.push_back(LayerDesc::avgpool());
    }
    return cfg;
}

std::size_t ForwardCache::element_count() const {
    std::size_t n = 0;
    for (const auto& a : activations) n += a.size();
    return n;
}

FeatNet FeatNet::build(const NetConfig& cfg) {
    cfg.validate();
    if (cfg.weights_file) return read_weights(*cfg.weights_file, cfg);

    std::vector<ConvParams> params;
    for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
        const auto& l = cfg.layers[li];
        if (l.kind != LayerKind::conv) continue;
        ConvParams p;
        p.in_channels = l.in_channels;
        p.out_channels = l.out_channels;
        p.kernel = l.kernel;
        const std::size_t area = l.kernel * l.kernel;
        const double fan_in = static_cast<double>(l.in_channels * area);
        const double fan_out = static_cast<double>(l.out_channels * area);
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        // Parameter j of layer li draws from the stream keyed by (seed, li, j).
        const std::uint64_t layer_key = derive_key(cfg.seed, li);
        p.weights.resize(l.out_channels * l.in_channels * area);
        for (std::size_t j = 0; j < p.weights.size(); ++j)
            p.weights[j] = a * (2.0 * bits_to_unit(mix64(derive_key(layer_key, j))) - 1.0);
        p.bias.assign(l.out_channels, 0.0);
        params.push_back(std::move(p));
    }
    return FeatNet(cfg, std::move(params));
}

FeatNet FeatNet::from_parameters(const NetConfig& cfg, std::vector<ConvParams> params) {
    cfg.validate();
    std::size_t ci = 0;
    for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
        const auto& l = cfg.layers[li];
        if (l.kind != LayerKind::conv) continue;
        if (ci >= params.size())
            throw ConfigError("missing parameters for conv layer " + std::to_string(ci));
        const auto& p = params[ci];
        if (p.in_channels != l.in_channels || p.out_channels != l.out_channels || p.kernel != l.kernel)
            throw ConfigError("conv layer " + std::to_string(ci) + " dimensions disagree with config");
        if (p.weights.size() != p.out_channels * p.in_channels * p.kernel * p.kernel ||
            p.bias.size() != p.out_channels)
            throw ConfigError("conv layer " + std::to_string(ci) + " parameter count is wrong");
        ++ci;
    }
    if (ci != params.size())
        throw ConfigError("config has " + std::to_string(ci) + " conv layers but " +
                          std::to_string(params.size()) + " parameter sets were given");
    return FeatNet(cfg, std::move(params));
}

FeatNet::FeatNet(NetConfig cfg, std::vector<ConvParams> params)
    : cfg_(std::move(cfg)), convs_(std::move(params)) {
    std::size_t ci = 0;
    for (std::size_t li = 0; li < cfg_.layers.size(); ++li) {
        const auto& l = cfg_.layers[li];
        Layer layer{l.kind, 0, l.tag};
        if (l.kind == LayerKind::conv) layer.conv = ci++;
        if (l.kind == LayerKind::relu && !l.tag.empty()) taps_.emplace(l.tag, li);
        layers_.push_back(std::move(layer));
    }
    for (const auto& p : convs_) {
        const std::size_t k = p.kernel;
        std::vector<double> packed(p.weights.size());
        for (std::size_t o = 0; o < p.out_channels; ++o)
            for (std::size_t i = 0; i < p.in_channels; ++i)
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx)
                        packed[((ky * k + kx) * p.in_channels + i) * p.out_channels + o] =
                            p.weights[((o * p.in_channels + i) * k + ky) * k + kx];
        packed_.push_back(std::move(packed));
    }
}

std::vector<std::string> FeatNet::tap_names() const {
    std::vector<std::pair<std::size_t, std::string>> ordered;
    for (const auto& [tag, idx] : taps_) ordered.emplace_back(idx, tag);
    std::sort(ordered.begin(), ordered.end());
    std::vector<std::string> names;
    for (auto& [idx, tag] : ordered) names.push_back(std::move(tag));
    return names;
}

std::size_t FeatNet::tap_layer(const std::string& tag) const {
    const auto it = taps_.find(tag);
    if (it == taps_.end()) throw ConfigError("unknown tap '" + tag + "'");
    return it->second;
}

Shape FeatNet::tap_shape(const std::string& tag, std::size_t height, std::size_t width) const {
    const std::size_t last = tap_layer(tag);
    Shape s{height, width, input_channels()};
    for (std::size_t li = 0; li <= last; ++li) {
        if (layers_[li].kind == LayerKind::conv) s.channels = convs_[layers_[li].conv].out_channels;
        if (layers_[li].kind == LayerKind::avgpool) s = {s.height / 2, s.width / 2, s.channels};
    }
    return s;
}

std::size_t FeatNet::deepest(const std::set<std::string>& taps) const {
    std::size_t last = 0;
    for (const auto& t : taps) last = std::max(last, tap_layer(t));
    return last;
}

namespace {

void conv_forward(const ConvParams& p, const std::vector<double>& packed, const Shape& in_shape,
                  const std::vector<double>& in, std::vector<double>& out) {
    const std::size_t h = in_shape.height, w = in_shape.width;
    const std::size_t ci = p.in_channels, co = p.out_channels, k = p.kernel;
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    out.assign(h * w * co, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double* o = out.data() + (y * w + x) * co;
            for (std::size_t c = 0; c < co; ++c) o[c] = p.bias[c];
            for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - pad;
                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                    const double* src = in.data() + (static_cast<std::size_t>(sy) * w + sx) * ci;
                    const double* wk = packed.data() + (ky * k + kx) * ci * co;
                    for (std::size_t i = 0; i < ci; ++i) {
                        const double v = src[i];
                        const double* wi = wk + i * co;
                        for (std::size_t c = 0; c < co; ++c) o[c] += v * wi[c];
                    }
                }
            }
        }
    }
}

void conv_backward(const ConvParams& p, const std::vector<double>& packed, const Shape& in_shape,
                   const std::vector<double>& grad_out, std::vector<double>& grad_in) {
    const std::size_t h = in_shape.height, w = in_shape.width;
    const std::size_t ci = p.in_channels, co = p.out_channels, k = p.kernel;
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    grad_in.assign(h * w * ci, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double* g = grad_out.data() + (y * w + x) * co;
            for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - pad;
                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                    double* dst = grad_in.data() + (static_cast<std::size_t>(sy) * w + sx) * ci;
                    const double* wk = packed.data() + (ky * k + kx) * ci * co;
                    for (std::size_t i = 0; i < ci; ++i) {
                        const double* wi = wk + i * co;
                        double acc = 0.0;
                        for (std::size_t c = 0; c < co; ++c) acc += g[c] * wi[c];
                        dst[i] += acc;
                    }
                }
            }
        }
    }
}

void pool_forward(const Shape& in_shape, const std::vector<double>& in, std::vector<double>& out) {
    const std::size_t oh = in_shape.height / 2, ow = in_shape.width / 2, c = in_shape.channels;
    out.assign(oh * ow * c, 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x)
            for (std::size_t ch = 0; ch < c; ++ch)
                out[(y * ow + x) * c + ch] = 0.25 * (in[in_shape.index(2 * y, 2 * x, ch)] +
                                                     in[in_shape.index(2 * y, 2 * x + 1, ch)] +
                                                     in[in_shape.index(2 * y + 1, 2 * x, ch)] +
                                                     in[in_shape.index(2 * y + 1, 2 * x + 1, ch)]);
}

void pool_backward(const Shape& in_shape, const std::vector<double>& grad_out, std::vector<double>& grad_in) {
    const std::size_t oh = in_shape.height / 2, ow = in_shape.width / 2, c = in_shape.channels;
    grad_in.assign(in_shape.count(), 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double g = 0.25 * grad_out[(y * ow + x) * c + ch];
                grad_in[in_shape.index(2 * y, 2 * x, ch)] += g;
                grad_in[in_shape.index(2 * y, 2 * x + 1, ch)] += g;
                grad_in[in_shape.index(2 * y + 1, 2 * x, ch)] += g;
                grad_in[in_shape.index(2 * y + 1, 2 * x + 1, ch)] += g;
            }
}

}  // namespace

void FeatNet::run(const Image& image, std::size_t last, ForwardCache& cache) const {
    if (image.channels() != input_channels())
        throw ConfigError("image has " + std::to_string(image.channels()) +
                          " channels but the net expects " + std::to_string(input_channels()));
    cache.shapes.assign(1, image.shape());
    cache.activations.assign(1, std::vector<double>(image.data().begin(), image.data().end()));
    for (std::size_t li = 0; li <= last; ++li) {
        const Shape& in_shape = cache.shapes.back();
        const std::vector<double>& in = cache.activations.back();
        std::vector<double> out;
        Shape out_shape = in_shape;
        switch (layers_[li].kind) {
            case LayerKind::conv: {
                const auto& p = convs_[layers_[li].conv];
                conv_forward(p, packed_[layers_[li].conv], in_shape, in, out);
                out_shape.channels = p.out_channels;
                break;
            }
            case LayerKind::relu:
                out.resize(in.size());
                for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
                break;
            case LayerKind::avgpool:
                if (in_shape.height < 2 || in_shape.width < 2)
                    throw ConfigError("image too small: pooling layer " + std::to_string(li) +
                                      " receives " + to_string(in_shape));
                pool_forward(in_shape, in, out);
                out_shape = {in_shape.height / 2, in_shape.width / 2, in_shape.channels};
                break;
        }
        cache.shapes.push_back(out_shape);
        cache.activations.push_back(std::move(out));
    }
}

std::map<std::string, FeatureMap> FeatNet::forward(const Image& image,
                                                   const std::set<std::string>& taps) const {
    return forward_with_cache(image, taps).features;
}

ForwardCache FeatNet::forward_with_cache(const Image& image, const std::set<std::string>& taps) const {
    ForwardCache cache;
    if (taps.empty()) {
        run(image, 0, cache);
        return cache;
    }
    run(image, deepest(taps), cache);
    for (const auto& t : taps) {
        const std::size_t li = taps_.at(t);
        cache.features.emplace(t, FeatureMap(cache.shapes[li + 1], cache.activations[li + 1], true));
    }
    return cache;
}

std::vector<double> FeatNet::backward(const ForwardCache& cache,
                                      const std::map<std::string, std::vector<double>>& tap_grads) const {
    const std::size_t computed = cache.activations.size() - 1;  // layers run
    std::size_t last = 0;
    for (const auto& [tag, g] : tap_grads) {
        const std::size_t li = tap_layer(tag);
        if (li >= computed) throw ConfigError("tap '" + tag + "' was not computed by the forward pass");
        if (g.size() != cache.shapes[li + 1].count())
            throw DimensionError("gradient for tap '" + tag + "' has " + std::to_string(g.size()) +
                                 " entries, activation " + to_string(cache.shapes[li + 1]));
        last = std::max(last, li);
    }
    if (tap_grads.empty()) return std::vector<double>(cache.shapes[0].count(), 0.0);

    std::vector<double> grad(cache.shapes[last + 1].count(), 0.0);
    std::vector<double> next;
    for (std::size_t li = last + 1; li-- > 0;) {
        const auto& layer = layers_[li];
        if (layer.kind == LayerKind::relu && !layer.tag.empty()) {
            const auto it = tap_grads.find(layer.tag);
            if (it != tap_grads.end())
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += it->second[i];
        }
        const Shape& in_shape = cache.shapes[li];
        switch (layer.kind) {
            case LayerKind::conv:
                conv_backward(convs_[layer.conv], packed_[layer.conv], in_shape, grad, next);
                grad.swap(next);
                break;
            case LayerKind::relu: {
                const auto& out = cache.activations[li + 1];
                for (std::size_t i = 0; i < grad.size(); ++i)
                    if (!(out[i] > 0.0)) grad[i] = 0.0;
                break;
            }
            case LayerKind::avgpool:
                pool_backward(in_shape, grad, next);
                grad.swap(next);
                break;
        }
    }
    return grad;
}

}  // namespace stylebal
