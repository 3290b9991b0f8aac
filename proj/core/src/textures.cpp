// SPDX-License-Identifier: Apache-2.0
#include "stylebal/textures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "stylebal/rng.hpp"

namespace stylebal {

Image random_image(Shape shape, std::uint64_t seed, double lo, double hi) {
    SplitMix64 rng(seed);
    std::vector<double> data(shape.count());
    for (double& v : data) v = rng.uniform(lo, hi);
    return Image(shape, std::move(data));
}

Image procedural_texture(std::size_t height, std::size_t width, std::uint64_t seed) {
    SplitMix64 rng(derive_key(seed, 0x7e47));
    constexpr double two_pi = 2.0 * std::numbers::pi;

    const double mean = rng.uniform(0.05, 0.95);
    const double contrast = rng.uniform(0.02, 0.5);
    std::array<double, 3> tint{};
    for (double& t : tint) t = rng.uniform(0.3, 1.0);
    std::array<double, 3> offset{};
    for (double& o : offset) o = rng.uniform(-0.1, 0.1);

    // Pattern mixture weights: stripes, checks, blobs, noise.
    std::array<double, 4> mix{};
    for (double& m : mix) m = rng.uniform() < 0.6 ? rng.uniform(0.2, 1.0) : 0.0;
    if (std::all_of(mix.begin(), mix.end(), [](double m) { return m == 0.0; })) mix[rng.below(4)] = 1.0;

    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(1.0, 12.0);
    const double check = rng.uniform(2.0, 10.0);
    struct Blob {
        double y, x, radius, sign;
    };
    std::vector<Blob> blobs(2 + rng.below(6));
    for (auto& b : blobs)
        b = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.05, 0.3), rng.uniform() < 0.5 ? -1.0 : 1.0};

    Shape shape{height, width, 3};
    std::vector<double> data(shape.count());
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / static_cast<double>(width);
            const double v = static_cast<double>(y) / static_cast<double>(height);
            const double stripes = std::sin(two_pi * freq * (ca * u + sa * v));
            const double checks = std::sin(two_pi * check * u) * std::sin(two_pi * check * v) >= 0.0 ? 1.0 : -1.0;
            double blob = 0.0;
            for (const auto& b : blobs) {
                const double dy = v - b.y, dx = u - b.x;
                blob += b.sign * std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius));
            }
            blob = std::clamp(blob, -1.0, 1.0);
            const double noise = rng.uniform(-1.0, 1.0);
            const double pattern =
                (mix[0] * stripes + mix[1] * checks + mix[2] * blob + mix[3] * noise) /
                (mix[0] + mix[1] + mix[2] + mix[3]);
            for (std::size_t c = 0; c < 3; ++c)
                data[shape.index(y, x, c)] =
                    std::clamp(mean + offset[c] + contrast * tint[c] * pattern, 0.0, 1.0);
        }
    }
    return Image(shape, std::move(data));
}

}  // namespace stylebal
