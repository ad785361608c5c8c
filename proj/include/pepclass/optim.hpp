#pragma once

#include <span>
#include <string>
#include <vector>

#include "pepclass/tensor.hpp"

namespace pepclass::nn {

enum class LossKind { binary_ce, categorical_ce };

LossKind loss_from_string(const std::string& name);
std::string to_string(LossKind k);

inline constexpr Real kProbClamp = 1e-7;

struct LossResult {
    Real value = 0.0;
    Tensor grad;  // dLoss/dPred, same shape as pred
};

/// Mean over the batch of -[y log p + (1-y) log(1-p)]; pred is [B] or [B, 1].
LossResult binary_cross_entropy(const Tensor& pred, const Tensor& target);
/// Mean over the batch of -sum_k y_k log p_k; pred and one-hot target are [B, K].
LossResult categorical_cross_entropy(const Tensor& pred, const Tensor& target);
LossResult compute_loss(LossKind kind, const Tensor& pred, const Tensor& target);

struct AdamState {
    Real lr = 0.01;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real eps = 1e-8;
    long long t = 0;
    std::vector<Tensor> m, v;
};

class Adam {
public:
    explicit Adam(Real lr = 0.01, Real beta1 = 0.9, Real beta2 = 0.999, Real eps = 1e-8);

    /// One bias-corrected update of every parameter; gradients are zeroed after.
    void step(std::span<Parameter* const> params);

    const AdamState& state() const { return state_; }
    AdamState& state() { return state_; }

private:
    AdamState state_;
};

void zero_grads(std::span<Parameter* const> params);

}  // namespace pepclass::nn
