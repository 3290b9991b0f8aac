// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stylebal/tensor.hpp"

namespace stylebal {

enum class LayerKind { conv, relu, avgpool };

/// One entry of a network architecture. Convolutions use stride 1 and zero
/// padding (k - 1) / 2; pooling is 2x2 with stride 2.
struct LayerDesc {
    LayerKind kind = LayerKind::relu;
    std::size_t in_channels = 0;   // conv only
    std::size_t out_channels = 0;  // conv only
    std::size_t kernel = 0;        // conv only, odd
    std::string tag;               // relu only, may be empty

    static LayerDesc conv(std::size_t in, std::size_t out, std::size_t kernel) {
        return {LayerKind::conv, in, out, kernel, {}};
    }
    static LayerDesc relu(std::string tag = {}) { return {LayerKind::relu, 0, 0, 0, std::move(tag)}; }
    static LayerDesc avgpool() { return {LayerKind::avgpool, 0, 0, 0, {}}; }
};

struct NetConfig {
    std::vector<LayerDesc> layers;
    std::uint64_t seed = 0;
    /// When set, parameters come from an FNW1 file instead of seeded init.
    std::optional<std::string> weights_file;

    /// Throws ConfigError on inconsistent channels, even/zero kernels,
    /// duplicate tags or a missing leading convolution.
    void validate() const;

    /// Four blocks, 3->8->16->32->64 channels, 3x3 kernels. Every ReLU is
    /// tagged b<block>_r<index>; blocks 1-2 hold two convs, blocks 3-4 three.
    static NetConfig default_arch(std::uint64_t seed = 0);
};

/// Parameters of one convolution. weights are (out, in, ky, kx) row-major.
struct ConvParams {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Every activation of one forward pass. activations[0] is the input,
/// activations[i + 1] the output of layer i.
struct ForwardCache {
    std::vector<Shape> shapes;
    std::vector<std::vector<double>> activations;
    std::map<std::string, FeatureMap> features;

    std::size_t element_count() const;
};

/// Small convolutional extractor with named ReLU taps. Immutable after build.
class FeatNet {
public:
    /// Seeded construction, or a weight-file load when cfg.weights_file is set.
    static FeatNet build(const NetConfig& cfg);

    /// Assembles a net from explicit parameters, validated against cfg.
    static FeatNet from_parameters(const NetConfig& cfg, std::vector<ConvParams> params);

    const NetConfig& config() const noexcept { return cfg_; }
    const std::vector<ConvParams>& parameters() const noexcept { return convs_; }
    std::size_t input_channels() const noexcept { return convs_.front().in_channels; }

    bool has_tap(const std::string& tag) const { return taps_.count(tag) != 0; }
    std::vector<std::string> tap_names() const;
    /// Layer index of a tap; throws ConfigError when unknown.
    std::size_t tap_layer(const std::string& tag) const;
    /// Output shape of a tap for a given input extent.
    Shape tap_shape(const std::string& tag, std::size_t height, std::size_t width) const;

    /// Tapped activations, each flagged non-negative.
    std::map<std::string, FeatureMap> forward(const Image& image, const std::set<std::string>& taps) const;

    /// As forward, but keeps every intermediate activation for backprop.
    ForwardCache forward_with_cache(const Image& image, const std::set<std::string>& taps) const;

    /// Reverse pass: accumulates d(loss)/d(pixels) given d(loss)/d(tap output).
    /// Gradient arrays must match the tap shapes recorded in `cache`.
    std::vector<double> backward(const ForwardCache& cache,
                                 const std::map<std::string, std::vector<double>>& tap_grads) const;

private:
    struct Layer {
        LayerKind kind;
        std::size_t conv = 0;  // index into convs_/packed_
        std::string tag;
    };

    FeatNet(NetConfig cfg, std::vector<ConvParams> params);
    std::size_t deepest(const std::set<std::string>& taps) const;
    void run(const Image& image, std::size_t last, ForwardCache& cache) const;

    NetConfig cfg_;
    std::vector<ConvParams> convs_;
    std::vector<std::vector<double>> packed_;  // (ky, kx, in, out)
    std::vector<Layer> layers_;
    std::map<std::string, std::size_t> taps_;
};

}  // namespace stylebal
