// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stylebal {

/// Height x width x channels of a row-major (y, x, c) tensor.
struct Shape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    constexpr std::size_t pixels() const noexcept { return height * width; }
    constexpr std::size_t count() const noexcept { return height * width * channels; }
    constexpr std::size_t index(std::size_t y, std::size_t x, std::size_t c) const noexcept {
        return (y * width + x) * channels + c;
    }
    friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

/// "HxWxC", used in diagnostics.
std::string to_string(const Shape& shape);

/// Activations at one network layer. Immutable once built.
class FeatureMap {
public:
    FeatureMap() = default;
    /// Throws DimensionError on a length mismatch or a zero extent, and
    /// PreconditionError when `nonneg` is claimed but a value is negative.
    FeatureMap(Shape shape, std::vector<double> data, bool nonneg = false);

    static FeatureMap zeros(Shape shape);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t height() const noexcept { return shape_.height; }
    std::size_t width() const noexcept { return shape_.width; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::size_t size() const noexcept { return data_.size(); }
    bool nonneg() const noexcept { return nonneg_; }

    std::span<const double> data() const noexcept { return data_; }
    double at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
        return data_[shape_.index(y, x, c)];
    }

    /// Entrywise s * f; non-negativity survives when s >= 0.
    FeatureMap scaled(double s) const;

private:
    Shape shape_{};
    std::vector<double> data_;
    bool nonneg_ = false;
};

/// Pixel image with values in [0, 1] and 1 or 3 channels.
class Image {
public:
    Image() = default;
    Image(Shape shape, std::vector<double> data);

    static Image filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t height() const noexcept { return shape_.height; }
    std::size_t width() const noexcept { return shape_.width; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::span<const double> data() const noexcept { return data_; }
    double at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
        return data_[shape_.index(y, x, c)];
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    Shape shape_{};
    std::vector<double> data_;
};

/// Non-owning row-major rows x cols view.
class MatrixView {
public:
    MatrixView(std::size_t rows, std::size_t cols, std::span<const double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> data() const noexcept { return data_; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::span<const double> data_;
};

/// The (H*W) x C reshape of a feature map. Row y*W + x holds pixel (y, x).
/// The view borrows `f`'s storage.
MatrixView flatten_spatial(const FeatureMap& f);

double frobenius_norm(const MatrixView& m);

/// Mean of squared entrywise differences. Throws DimensionError on a shape mismatch.
double mse(const MatrixView& a, const MatrixView& b);

}  // namespace stylebal
