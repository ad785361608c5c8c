#include "pepclass/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

namespace pepclass::nn {

Activation activation_from_string(const std::string& name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "softmax") return Activation::softmax;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

Real sigmoid(Real x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const Real e = std::exp(x);
    return e / (1.0 + e);
}

Tensor activate(const Tensor& x, Activation kind) {
    Tensor y = x;
    auto& v = y.values();
    switch (kind) {
        case Activation::identity: break;
        case Activation::relu:
            for (auto& e : v) e = e > 0 ? e : 0.0;
            break;
        case Activation::sigmoid:
            for (auto& e : v) e = sigmoid(e);
            break;
        case Activation::tanh:
            for (auto& e : v) e = std::tanh(e);
            break;
        case Activation::softmax: {
            auto m = y.matrix();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                auto row = m.row(r);
                row.array() -= row.maxCoeff();
                row = row.array().exp().matrix();
                row /= row.sum();
            }
            break;
        }
    }
    return y;
}

Tensor activation_backward(const Tensor& x, const Tensor& y, const Tensor& grad_y, Activation kind) {
    Tensor g = grad_y;
    auto& gv = g.values();
    switch (kind) {
        case Activation::identity: break;
        case Activation::relu:
            for (std::size_t i = 0; i < gv.size(); ++i)
                if (!(x[i] > 0)) gv[i] = 0.0;
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= y[i] * (1.0 - y[i]);
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= 1.0 - y[i] * y[i];
            break;
        case Activation::softmax: {
            auto gm = g.matrix();
            auto ym = y.matrix();
            for (Eigen::Index r = 0; r < gm.rows(); ++r) {
                const Real dot = gm.row(r).dot(ym.row(r));
                gm.row(r) = (ym.row(r).array() * (gm.row(r).array() - dot)).matrix();
            }
            break;
        }
    }
    return g;
}

Tensor ActivationLayer::forward(const Tensor& input, const ForwardContext&) {
    input_ = input;
    output_ = activate(input, kind_);
    return output_;
}

Tensor ActivationLayer::backward(const Tensor& grad_output) {
    return activation_backward(input_, output_, grad_output, kind_);
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor t(std::move(shape));
    const Real limit = std::sqrt(6.0 / static_cast<Real>(fan_in + fan_out));
    for (auto& v : t.values()) v = rng.uniform(-limit, limit);
    return t;
}

Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
    const auto big = static_cast<Eigen::Index>(std::max(rows, cols));
    const auto small = static_cast<Eigen::Index>(std::min(rows, cols));
    Eigen::MatrixXd a(big, small);
    for (Eigen::Index j = 0; j < small; ++j)
        for (Eigen::Index i = 0; i < big; ++i) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    // sign fix makes the factorization unique
    Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < small; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    Tensor t({rows, cols});
    auto m = t.matrix();
    if (rows >= cols)
        m = q;
    else
        m = q.transpose();
    return t;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in, std::size_t out, Activation activation, Rng& init_rng, std::string prefix)
    : in_(in),
      out_(out),
      activation_(activation),
      weight_(prefix + ".weight", glorot_uniform({in, out}, in, out, init_rng)),
      bias_(prefix + ".bias", Tensor({out}, 0.0)) {}

Tensor Dense::forward(const Tensor& input, const ForwardContext&) {
    if (input.rank() == 0 || input.shape().back() != in_)
        throw ShapeError("dense: input " + shape_string(input.shape()) +
                         " does not end in the layer width " + std::to_string(in_));
    input_ = input;
    Shape out_shape = input.shape();
    out_shape.back() = out_;
    pre_ = Tensor(out_shape);
    auto pm = pre_.matrix();
    pm.noalias() = input.matrix() * weight_.value.matrix();
    pm.rowwise() += bias_.value.matrix().row(0);
    output_ = activate(pre_, activation_);
    return output_;
}

Tensor Dense::backward(const Tensor& grad_output) {
    if (grad_output.shape() != output_.shape())
        throw ShapeError("dense: gradient " + shape_string(grad_output.shape()) +
                         " does not match output " + shape_string(output_.shape()));
    Tensor g = activation_backward(pre_, output_, grad_output, activation_);
    auto gm = g.matrix();
    weight_.grad.matrix().noalias() += input_.matrix().transpose() * gm;
    bias_.grad.matrix().row(0) += gm.colwise().sum();
    Tensor dx(input_.shape());
    dx.matrix().noalias() = gm * weight_.value.matrix().transpose();
    return dx;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t kernel, std::size_t channels, std::size_t filters, std::size_t stride,
               Padding padding, Rng& init_rng, std::string prefix)
    : kernel_(kernel),
      channels_(channels),
      n_filters_(filters),
      stride_(stride),
      padding_(padding),
      filters_(prefix + ".filters",
               glorot_uniform({kernel, channels, filters}, kernel * channels, kernel * filters, init_rng)),
      bias_(prefix + ".bias", Tensor({filters}, 0.0)) {
    if (kernel == 0 || stride == 0) throw ShapeError("conv1d: kernel and stride must be >= 1");
}

std::size_t Conv1d::output_length(std::size_t time) const {
    if (padding_ == Padding::valid) {
        if (kernel_ > time)
            throw ShapeError("conv1d: kernel " + std::to_string(kernel_) + " exceeds time length " +
                             std::to_string(time) + " with valid padding");
        return (time - kernel_) / stride_ + 1;
    }
    return (time + stride_ - 1) / stride_;
}

Tensor Conv1d::forward(const Tensor& input, const ForwardContext&) {
    require_shape(input, 3, "conv1d");
    if (input.dim(2) != channels_)
        throw ShapeError("conv1d: input has " + std::to_string(input.dim(2)) + " channels, filters expect " +
                         std::to_string(channels_));
    const std::size_t batch = input.dim(0), time = input.dim(1);
    const std::size_t out_t = output_length(time);
    pad_left_ = 0;
    if (padding_ == Padding::same) {
        const std::size_t needed = (out_t - 1) * stride_ + kernel_;
        pad_left_ = needed > time ? (needed - time) / 2 : 0;
    }
    input_shape_ = input.shape();
    const std::size_t width = kernel_ * channels_;
    patches_.setZero(static_cast<Eigen::Index>(batch * out_t), static_cast<Eigen::Index>(width));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < out_t; ++t) {
            const auto row = static_cast<Eigen::Index>(b * out_t + t);
            for (std::size_t k = 0; k < kernel_; ++k) {
                const auto src = static_cast<std::ptrdiff_t>(t * stride_ + k) - static_cast<std::ptrdiff_t>(pad_left_);
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(time)) continue;
                const Real* x = input.data() + (b * time + static_cast<std::size_t>(src)) * channels_;
                for (std::size_t c = 0; c < channels_; ++c) patches_(row, static_cast<Eigen::Index>(k * channels_ + c)) = x[c];
            }
        }
    Tensor out({batch, out_t, n_filters_});
    ConstMatrixMap w(filters_.value.data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(n_filters_));
    auto om = out.matrix();
    om.noalias() = patches_ * w;
    om.rowwise() += bias_.value.matrix().row(0);
    return out;
}

Tensor Conv1d::backward(const Tensor& grad_output) {
    const std::size_t batch = input_shape_[0], time = input_shape_[1];
    const std::size_t out_t = output_length(time);
    if (grad_output.shape() != Shape{batch, out_t, n_filters_})
        throw ShapeError("conv1d: unexpected gradient shape " + shape_string(grad_output.shape()));
    const std::size_t width = kernel_ * channels_;
    auto gm = grad_output.matrix();
    MatrixMap dw(filters_.grad.data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(n_filters_));
    dw.noalias() += patches_.transpose() * gm;
    bias_.grad.matrix().row(0) += gm.colwise().sum();
    ConstMatrixMap w(filters_.value.data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(n_filters_));
    RowMatrix dpatches = gm * w.transpose();
    Tensor dx(input_shape_);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < out_t; ++t) {
            const auto row = static_cast<Eigen::Index>(b * out_t + t);
            for (std::size_t k = 0; k < kernel_; ++k) {
                const auto src = static_cast<std::ptrdiff_t>(t * stride_ + k) - static_cast<std::ptrdiff_t>(pad_left_);
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(time)) continue;
                Real* d = dx.data() + (b * time + static_cast<std::size_t>(src)) * channels_;
                for (std::size_t c = 0; c < channels_; ++c) d[c] += dpatches(row, static_cast<Eigen::Index>(k * channels_ + c));
            }
        }
    return dx;
}

// ---------------------------------------------------------------- pooling

Tensor MaxPool1d::forward(const Tensor& input, const ForwardContext&) {
    require_shape(input, 3, "maxpool1d");
    if (pool_ == 0) throw ShapeError("maxpool1d: pool must be >= 1");
    const std::size_t batch = input.dim(0), time = input.dim(1), ch = input.dim(2);
    if (pool_ > time)
        throw ShapeError("maxpool1d: pool " + std::to_string(pool_) + " exceeds time length " + std::to_string(time));
    const std::size_t out_t = time / pool_;
    input_shape_ = input.shape();
    Tensor out({batch, out_t, ch});
    argmax_.assign(out.size(), 0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < out_t; ++t)
            for (std::size_t c = 0; c < ch; ++c) {
                std::size_t best = (b * time + t * pool_) * ch + c;
                for (std::size_t p = 1; p < pool_; ++p) {
                    const std::size_t idx = (b * time + t * pool_ + p) * ch + c;
                    if (input[idx] > input[best]) best = idx;
                }
                const std::size_t o = (b * out_t + t) * ch + c;
                out[o] = input[best];
                argmax_[o] = best;
            }
    return out;
}

Tensor MaxPool1d::backward(const Tensor& grad_output) {
    if (grad_output.size() != argmax_.size()) throw ShapeError("maxpool1d: unexpected gradient shape");
    Tensor dx(input_shape_);
    for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += grad_output[o];
    return dx;
}

Tensor GlobalMaxPool1d::forward(const Tensor& input, const ForwardContext&) {
    require_shape(input, 3, "global_maxpool1d");
    const std::size_t batch = input.dim(0), time = input.dim(1), ch = input.dim(2);
    if (time == 0) throw ShapeError("global_maxpool1d: empty time axis");
    input_shape_ = input.shape();
    Tensor out({batch, ch});
    argmax_.assign(out.size(), 0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < ch; ++c) {
            std::size_t best = b * time * ch + c;
            for (std::size_t t = 1; t < time; ++t) {
                const std::size_t idx = (b * time + t) * ch + c;
                if (input[idx] > input[best]) best = idx;
            }
            out[b * ch + c] = input[best];
            argmax_[b * ch + c] = best;
        }
    return out;
}

Tensor GlobalMaxPool1d::backward(const Tensor& grad_output) {
    if (grad_output.size() != argmax_.size()) throw ShapeError("global_maxpool1d: unexpected gradient shape");
    Tensor dx(input_shape_);
    for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += grad_output[o];
    return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t features, Real momentum, Real eps, std::string prefix)
    : features_(features),
      momentum_(momentum),
      eps_(eps),
      gain_(prefix + ".gain", Tensor({features}, 1.0)),
      bias_(prefix + ".bias", Tensor({features}, 0.0)),
      running_mean_({features}, 0.0),
      running_var_({features}, 1.0) {}

Tensor BatchNorm::forward(const Tensor& input, const ForwardContext& ctx) {
    if (input.rank() == 0 || input.shape().back() != features_)
        throw ShapeError("batchnorm: input " + shape_string(input.shape()) + " does not end in " +
                         std::to_string(features_) + " features");
    auto x = input.matrix();
    const auto rows = x.rows();
    last_mode_ = ctx.mode;
    Eigen::RowVectorXd mean, var;
    if (ctx.mode == Mode::train) {
        if (rows < 2) throw ShapeError("batchnorm: train mode needs a batch of at least 2");
        mean = x.colwise().mean();
        var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
        auto rm = running_mean_.matrix().row(0);
        auto rv = running_var_.matrix().row(0);
        rm = momentum_ * rm + (1.0 - momentum_) * mean;
        rv = momentum_ * rv + (1.0 - momentum_) * var;
    } else {
        mean = running_mean_.matrix().row(0);
        var = running_var_.matrix().row(0);
    }
    inv_std_ = (var.array() + eps_).rsqrt().matrix();
    normalized_ = Tensor(input.shape());
    auto n = normalized_.matrix();
    n = ((x.rowwise() - mean).array().rowwise() * inv_std_.array()).matrix();
    Tensor out(input.shape());
    auto om = out.matrix();
    om = (n.array().rowwise() * gain_.value.matrix().row(0).array()).matrix();
    om.rowwise() += bias_.value.matrix().row(0);
    return out;
}

Tensor BatchNorm::backward(const Tensor& grad_output) {
    auto g = grad_output.matrix();
    auto n = normalized_.matrix();
    const auto rows = static_cast<Real>(g.rows());
    bias_.grad.matrix().row(0) += g.colwise().sum();
    gain_.grad.matrix().row(0) += (g.array() * n.array()).colwise().sum().matrix();
    Tensor dx(grad_output.shape());
    auto dm = dx.matrix();
    const Eigen::RowVectorXd scale = (gain_.value.matrix().row(0).array() * inv_std_.array()).matrix();
    if (last_mode_ == Mode::infer) {
        dm = (g.array().rowwise() * scale.array()).matrix();
        return dx;
    }
    const Eigen::RowVectorXd sum_g = g.colwise().sum();
    const Eigen::RowVectorXd sum_gn = (g.array() * n.array()).colwise().sum().matrix();
    dm = ((rows * g.array()).rowwise() - sum_g.array()).matrix();
    dm.array() -= n.array().rowwise() * sum_gn.array();
    dm = ((dm.array().rowwise() * scale.array()) / rows).matrix();
    return dx;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(Real rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
}

Tensor Dropout::forward(const Tensor& input, const ForwardContext& ctx) {
    scale_.clear();
    if (ctx.mode == Mode::infer || rate_ == 0.0) return input;
    if (ctx.rng == nullptr) throw std::logic_error("dropout: train mode requires a generator");
    const Real keep_scale = 1.0 / (1.0 - rate_);
    scale_.resize(input.size());
    Tensor out = input;
    for (std::size_t i = 0; i < out.size(); ++i) {
        scale_[i] = ctx.rng->bernoulli(rate_) ? 0.0 : keep_scale;
        out[i] *= scale_[i];
    }
    return out;
}

Tensor Dropout::backward(const Tensor& grad_output) {
    if (scale_.empty()) return grad_output;
    Tensor g = grad_output;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale_[i];
    return g;
}

Tensor dropout(const Tensor& input, Real rate, Mode mode, Rng& rng) {
    Dropout layer(rate);
    ForwardContext ctx{mode, nullptr, &rng};
    return layer.forward(input, ctx);
}

}  // namespace pepclass::nn
