#include "pepclass/optim.hpp"

#include <algorithm>
#include <cmath>

namespace pepclass::nn {

LossKind loss_from_string(const std::string& name) {
    if (name == "binary_ce" || name == "binary_crossentropy") return LossKind::binary_ce;
    if (name == "categorical_ce" || name == "categorical_crossentropy") return LossKind::categorical_ce;
    throw std::invalid_argument("unknown loss '" + name + "'");
}

std::string to_string(LossKind k) { return k == LossKind::binary_ce ? "binary_ce" : "categorical_ce"; }

LossResult binary_cross_entropy(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size() || pred.size() == 0)
        throw ShapeError("binary_ce: prediction " + shape_string(pred.shape()) + " and target " +
                         shape_string(target.shape()) + " differ");
    const auto n = static_cast<Real>(pred.size());
    LossResult r{0.0, Tensor(pred.shape())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Real p = std::clamp(pred[i], kProbClamp, 1.0 - kProbClamp);
        const Real y = target[i];
        r.value -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        r.grad[i] = (-y / p + (1.0 - y) / (1.0 - p)) / n;
    }
    r.value /= n;
    return r;
}

LossResult categorical_cross_entropy(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape() || pred.rank() != 2 || pred.size() == 0)
        throw ShapeError("categorical_ce: prediction " + shape_string(pred.shape()) + " and target " +
                         shape_string(target.shape()) + " differ");
    const auto batch = static_cast<Real>(pred.dim(0));
    LossResult r{0.0, Tensor(pred.shape())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Real p = std::clamp(pred[i], kProbClamp, 1.0 - kProbClamp);
        r.value -= target[i] * std::log(p);
        r.grad[i] = -target[i] / p / batch;
    }
    r.value /= batch;
    return r;
}

LossResult compute_loss(LossKind kind, const Tensor& pred, const Tensor& target) {
    return kind == LossKind::binary_ce ? binary_cross_entropy(pred, target)
                                       : categorical_cross_entropy(pred, target);
}

Adam::Adam(Real lr, Real beta1, Real beta2, Real eps) {
    state_.lr = lr;
    state_.beta1 = beta1;
    state_.beta2 = beta2;
    state_.eps = eps;
}

void Adam::step(std::span<Parameter* const> params) {
    if (state_.m.empty()) {
        for (auto* p : params) {
            state_.m.emplace_back(p->value.shape(), 0.0);
            state_.v.emplace_back(p->value.shape(), 0.0);
        }
    }
    if (state_.m.size() != params.size())
        throw std::logic_error("adam: parameter set changed between steps");
    ++state_.t;
    const Real b1 = state_.beta1, b2 = state_.beta2;
    const Real c1 = 1.0 - std::pow(b1, static_cast<Real>(state_.t));
    const Real c2 = 1.0 - std::pow(b2, static_cast<Real>(state_.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = *params[k];
        auto& m = state_.m[k];
        auto& v = state_.v[k];
        if (m.shape() != p.value.shape()) throw ShapeError("adam: moment shape mismatch for " + p.name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const Real g = p.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const Real mhat = m[i] / c1;
            const Real vhat = v[i] / c2;
            p.value[i] -= state_.lr * mhat / (std::sqrt(vhat) + state_.eps);
        }
        p.zero_grad();
    }
}

void zero_grads(std::span<Parameter* const> params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace pepclass::nn
