// SPDX-License-Identifier: Apache-2.0
#include "stylebal/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "stylebal/error.hpp"

namespace stylebal {

std::string to_string(const Shape& shape) {
    return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
           std::to_string(shape.channels);
}

namespace {

void check_extent(const Shape& shape, std::size_t length) {
    if (shape.height == 0 || shape.width == 0 || shape.channels == 0)
        throw DimensionError("tensor extents must be positive, got " + to_string(shape));
    if (length != shape.count())
        throw DimensionError("data length " + std::to_string(length) + " does not match shape " +
                             to_string(shape));
}

}  // namespace

FeatureMap::FeatureMap(Shape shape, std::vector<double> data, bool nonneg)
    : shape_(shape), data_(std::move(data)), nonneg_(nonneg) {
    check_extent(shape_, data_.size());
    if (nonneg_ && std::any_of(data_.begin(), data_.end(), [](double v) { return !(v >= 0.0); }))
        throw PreconditionError("feature map flagged non-negative holds a negative value");
}

FeatureMap FeatureMap::zeros(Shape shape) {
    return FeatureMap(shape, std::vector<double>(shape.count(), 0.0), true);
}

FeatureMap FeatureMap::scaled(double s) const {
    std::vector<double> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [s](double v) { return s * v; });
    return FeatureMap(shape_, std::move(out), nonneg_ && s >= 0.0);
}

Image::Image(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    check_extent(shape_, data_.size());
    if (shape_.channels != 1 && shape_.channels != 3)
        throw DimensionError("images have 1 or 3 channels, got " + std::to_string(shape_.channels));
    if (std::any_of(data_.begin(), data_.end(), [](double v) { return !(v >= 0.0 && v <= 1.0); }))
        throw PreconditionError("image values must lie in [0, 1]");
}

Image Image::filled(Shape shape, double value) {
    return Image(shape, std::vector<double>(shape.count(), value));
}

MatrixView::MatrixView(std::size_t rows, std::size_t cols, std::span<const double> data)
    : rows_(rows), cols_(cols), data_(data) {
    if (data_.size() != rows_ * cols_)
        throw DimensionError("matrix data length " + std::to_string(data_.size()) + " != " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
}

MatrixView flatten_spatial(const FeatureMap& f) {
    // (y, x, c) row-major storage already is the (H*W) x C matrix.
    return MatrixView(f.shape().pixels(), f.channels(), f.data());
}

double frobenius_norm(const MatrixView& m) {
    double sum = 0.0;
    for (double v : m.data()) sum += v * v;
    return std::sqrt(sum);
}

double mse(const MatrixView& a, const MatrixView& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("mse operands differ: " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    const auto da = a.data();
    const auto db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        sum += d * d;
    }
    return sum / static_cast<double>(da.size());
}

}  // namespace stylebal
