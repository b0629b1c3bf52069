#pragma once

#include <map>
#include <string>

#include "poac/autodiff.hpp"

namespace poac {

// Named parameter leaves, ordered by name so every traversal is deterministic.
using ParamMap = std::map<std::string, ad::NodePtr>;

// p <- p - lr * grad(p) for every parameter with a materialized gradient.
// All gradients are validated before any parameter moves; a non-finite
// gradient raises NumericError and the whole step is aborted. Gradients are
// cleared after a successful step.
void sgd_step(ParamMap& params, double lr);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    long long t = 0;
};

// Bias-corrected Adam with the same abort-before-mutation contract as
// sgd_step.
void adam_step(ParamMap& params, AdamState& state, double lr, const AdamConfig& cfg = {});

// Clears gradients without stepping.
void zero_grads(ParamMap& params);

}  // namespace poac
