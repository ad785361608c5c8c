#include "pepclass/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pepclass::nn {

Real relative_error(Real analytic, Real numeric) {
    const Real denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

Real grad_check(const std::function<Real()>& fn, std::span<Real> x, std::span<const Real> analytic, Real eps,
                std::span<const std::size_t> indices) {
    if (x.size() != analytic.size()) throw std::invalid_argument("grad_check: value and gradient sizes differ");
    Real worst = 0.0;
    auto check_one = [&](std::size_t i) {
        if (!std::isfinite(analytic[i])) throw NonFiniteError("grad_check: non-finite analytic gradient");
        const Real saved = x[i];
        x[i] = saved + eps;
        const Real plus = fn();
        x[i] = saved - eps;
        const Real minus = fn();
        x[i] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus))
            throw NonFiniteError("grad_check: function returned a non-finite value");
        const Real numeric = (plus - minus) / (2.0 * eps);
        worst = std::max(worst, relative_error(analytic[i], numeric));
    };
    if (indices.empty()) {
        for (std::size_t i = 0; i < x.size(); ++i) check_one(i);
    } else {
        for (auto i : indices) check_one(i);
    }
    return worst;
}

}  // namespace pepclass::nn
