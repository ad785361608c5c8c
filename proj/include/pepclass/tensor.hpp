#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pepclass::nn {

using Real = double;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_product(const Shape& shape);

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Dense row-major tensor of Real values.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, Real fill = 0.0);
    Tensor(Shape shape, std::vector<Real> values);

    const Shape& shape() const { return shape_; }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }

    Real* data() { return values_.data(); }
    const Real* data() const { return values_.data(); }
    std::vector<Real>& values() { return values_; }
    const std::vector<Real>& values() const { return values_; }

    Real& operator[](std::size_t i) { return values_[i]; }
    Real operator[](std::size_t i) const { return values_[i]; }

    Real& at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    Real at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
    Real& at(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    Real at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// View as a matrix whose columns are the last axis.
    MatrixMap matrix();
    ConstMatrixMap matrix() const;

    Tensor reshaped(Shape shape) const;
    void fill(Real v);
    bool all_finite() const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<Real> values_;
};

/// A trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string name, Tensor initial);

    void zero_grad() { grad.fill(0.0); }
};

void require_shape(const Tensor& t, std::size_t rank, const char* what);

}  // namespace pepclass::nn
