// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include "stylebal/tensor.hpp"

namespace stylebal {

/// Uniform noise in [lo, hi].
Image random_image(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0);

/// Seeded RGB texture: a random mix of oriented stripes, checks, blobs and
/// noise with random contrast and mean brightness, so Gram magnitudes vary
/// strongly from one seed to the next.
Image procedural_texture(std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace stylebal
