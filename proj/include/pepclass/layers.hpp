#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pepclass/rng.hpp"
#include "pepclass/tensor.hpp"

namespace pepclass::nn {

enum class Mode { train, infer };

enum class Activation { identity, relu, sigmoid, tanh, softmax };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

/// Per-call state shared by the layers of one forward pass.
struct ForwardContext {
    Mode mode = Mode::infer;
    const Tensor* mask = nullptr;  // [batch, time], 1 on valid steps
    Rng* rng = nullptr;            // dropout draws
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string name() const = 0;
    virtual Tensor forward(const Tensor& input, const ForwardContext& ctx) = 0;
    /// Consumes dLoss/dOutput of the last forward call, accumulates parameter
    /// gradients and returns dLoss/dInput.
    virtual Tensor backward(const Tensor& grad_output) = 0;
    virtual std::vector<Parameter*> parameters() { return {}; }
};

// Elementwise (relu, sigmoid, tanh) or last-axis (softmax) activation.
Tensor activate(const Tensor& x, Activation kind);
// Gradient through an activation given its output y = activate(x).
Tensor activation_backward(const Tensor& x, const Tensor& y, const Tensor& grad_y, Activation kind);

Real sigmoid(Real x);

class ActivationLayer final : public Layer {
public:
    explicit ActivationLayer(Activation kind) : kind_(kind) {}
    std::string name() const override { return to_string(kind_); }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;

private:
    Activation kind_;
    Tensor input_, output_;
};

/// output = activation(input · W + b) over the last axis.
class Dense final : public Layer {
public:
    Dense(std::size_t in, std::size_t out, Activation activation, Rng& init_rng,
          std::string prefix = "dense");
    std::string name() const override { return "dense"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    std::size_t in_, out_;
    Activation activation_;
    Parameter weight_, bias_;
    Tensor input_, pre_, output_;
};

enum class Padding { valid, same };

/// Cross-correlation over the time axis of [batch, time, channels] inputs with
/// filters of shape [kernel, channels, n_filters] plus a per-filter bias.
class Conv1d final : public Layer {
public:
    Conv1d(std::size_t kernel, std::size_t channels, std::size_t filters, std::size_t stride,
           Padding padding, Rng& init_rng, std::string prefix = "conv1d");
    std::string name() const override { return "conv1d"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override { return {&filters_, &bias_}; }

    Parameter& filters() { return filters_; }
    Parameter& bias() { return bias_; }
    std::size_t output_length(std::size_t time) const;
    std::size_t kernel() const { return kernel_; }

private:
    std::size_t kernel_, channels_, n_filters_, stride_;
    Padding padding_;
    Parameter filters_, bias_;
    Shape input_shape_;
    std::size_t pad_left_ = 0;
    RowMatrix patches_;  // [batch * out_time, kernel * channels]
};

/// Non-overlapping max pooling over time; trailing incomplete window dropped.
class MaxPool1d final : public Layer {
public:
    explicit MaxPool1d(std::size_t pool) : pool_(pool) {}
    std::string name() const override { return "maxpool1d"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;

private:
    std::size_t pool_;
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
};

/// [batch, time, channels] -> [batch, channels], max over time.
class GlobalMaxPool1d final : public Layer {
public:
    std::string name() const override { return "global_maxpool1d"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;

private:
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
};

/// Normalizes each feature (last axis) over all leading positions.
class BatchNorm final : public Layer {
public:
    BatchNorm(std::size_t features, Real momentum = 0.99, Real eps = 1e-3,
              std::string prefix = "batchnorm");
    std::string name() const override { return "batchnorm"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override { return {&gain_, &bias_}; }

    Parameter& gain() { return gain_; }
    Parameter& bias() { return bias_; }
    Tensor& running_mean() { return running_mean_; }
    Tensor& running_var() { return running_var_; }

private:
    std::size_t features_;
    Real momentum_, eps_;
    Parameter gain_, bias_;
    Tensor running_mean_, running_var_;
    Mode last_mode_ = Mode::infer;
    Tensor normalized_;
    Eigen::RowVectorXd inv_std_;
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) in train mode.
class Dropout final : public Layer {
public:
    explicit Dropout(Real rate);
    std::string name() const override { return "dropout"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;
    Real rate() const { return rate_; }

private:
    Real rate_;
    std::vector<Real> scale_;  // empty when the last pass was an identity
};

Tensor dropout(const Tensor& input, Real rate, Mode mode, Rng& rng);

/// Glorot-uniform initializer for a [fan_in, fan_out] style tensor.
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
/// Orthogonal initializer for a 2-D [rows, cols] tensor.
Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace pepclass::nn
