#include "pepclass/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace pepclass::nn {

std::string shape_string(const Shape& shape) {
    std::ostringstream ss;
    ss << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? ", " : "") << shape[i];
    ss << ']';
    return ss.str();
}

std::size_t shape_product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), values_(shape_product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_product(shape_))
        throw ShapeError("tensor of shape " + shape_string(shape_) + " cannot hold " +
                         std::to_string(values_.size()) + " values");
}

MatrixMap Tensor::matrix() {
    const std::size_t cols = shape_.empty() ? 1 : shape_.back();
    const std::size_t rows = cols == 0 ? 0 : values_.size() / cols;
    return MatrixMap(values_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatrixMap Tensor::matrix() const {
    const std::size_t cols = shape_.empty() ? 1 : shape_.back();
    const std::size_t rows = cols == 0 ? 0 : values_.size() / cols;
    return ConstMatrixMap(values_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), values_); }

void Tensor::fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
    for (Real v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

Parameter::Parameter(std::string n, Tensor initial)
    : name(std::move(n)), value(std::move(initial)), grad(value.shape(), 0.0) {}

void require_shape(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         " input, got shape " + shape_string(t.shape()));
}

}  // namespace pepclass::nn
