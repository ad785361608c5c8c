#pragma once

#include <functional>
#include <span>
#include <stdexcept>

#include "pepclass/tensor.hpp"

namespace pepclass::nn {

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// |a - n| / max(|a|, |n|, 1e-8)
Real relative_error(Real analytic, Real numeric);

/// Compares `analytic` against central differences (f(x+eps) - f(x-eps)) / 2eps
/// of `fn`, perturbing `x` in place (restored afterwards). When `indices` is
/// non-empty only those coordinates are checked. Returns the largest relative
/// error; throws NonFiniteError if fn or the gradient is not finite.
Real grad_check(const std::function<Real()>& fn, std::span<Real> x, std::span<const Real> analytic,
                Real eps = 1e-5, std::span<const std::size_t> indices = {});

}  // namespace pepclass::nn
