#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pepclass/tensor.hpp"

namespace pepclass::nn {

struct GradcheckOptions {
    std::uint64_t seed = 2024;
    std::size_t instances = 20;
    /// Entries sampled per parameter tensor in the full-architecture checks.
    std::size_t samples_per_tensor = 24;
    /// Components whose analytic gradient is deliberately corrupted, used to
    /// confirm the suite detects a broken backward pass.
    std::vector<std::string> inject_fault;
    /// Components to run; empty runs all of them.
    std::vector<std::string> only;
};

struct ComponentResult {
    std::string name;
    Real max_rel_error = 0;  // over coordinates with |gradient| >= 1e-6
    Real tolerance = 0;
    std::size_t instances = 0;
    std::size_t coordinates = 0;    // coordinates compared
    std::size_t skipped_kinks = 0;  // coordinates with a non-differentiable point within eps
    std::size_t violations = 0;     // coordinates outside tolerance
    bool passed = false;
    std::string error;  // set when the check threw
};

/// Layer, loss and architecture names in suite order.
std::vector<std::string> gradcheck_components();

/// Central-difference checks of every layer, both losses and the three
/// classifier architectures. Coordinates whose left and right slopes disagree
/// (a ReLU or max boundary within eps) are skipped and counted. A coordinate
/// fails when its relative error reaches the tolerance and its absolute
/// difference is at least 1e-10, the resolution of a central difference on an
/// O(1) loss.
std::vector<ComponentResult> run_gradcheck_suite(const GradcheckOptions& options);

}  // namespace pepclass::nn
