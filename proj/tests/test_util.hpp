// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stylebal/gram_loss.hpp"
#include "stylebal/rng.hpp"
#include "stylebal/tensor.hpp"

namespace stylebal::testing {

inline FeatureMap random_features(Shape shape, SplitMix64& rng, double lo = 0.0, double hi = 1.0) {
    std::vector<double> data(shape.count());
    for (double& v : data) v = rng.uniform(lo, hi);
    return FeatureMap(shape, std::move(data), lo >= 0.0);
}

/// Random non-negative features with ~30% exact zeros, like ReLU output.
inline FeatureMap relu_like_features(Shape shape, SplitMix64& rng, double scale = 1.0) {
    std::vector<double> data(shape.count());
    for (double& v : data) v = rng.uniform() < 0.3 ? 0.0 : scale * rng.uniform();
    return FeatureMap(shape, std::move(data), true);
}

inline Shape random_shape(SplitMix64& rng, std::size_t max_hw, std::size_t max_c) {
    return {1 + rng.below(max_hw), 1 + rng.below(max_hw), 1 + rng.below(max_c)};
}

/// Triple loop over pixels and channel pairs; the independent Gram oracle.
inline std::vector<double> gram_oracle(const FeatureMap& f) {
    const std::size_t c = f.channels();
    std::vector<double> g(c * c, 0.0);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            for (std::size_t y = 0; y < f.height(); ++y)
                for (std::size_t x = 0; x < f.width(); ++x) g[i * c + j] += f.at(y, x, i) * f.at(y, x, j);
    return g;
}

inline double rel_diff(double a, double b) {
    const double d = std::abs(a - b);
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? d : d / m;
}

}  // namespace stylebal::testing
