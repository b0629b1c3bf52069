#include "poac/optim.hpp"

#include <cmath>

namespace poac {

namespace {

void check_grads_finite(const ParamMap& params) {
    for (const auto& [name, node] : params) {
        if (node->grad_materialized() && !node->grad.all_finite()) {
            throw NumericError("non-finite gradient for parameter '" + name + "', step aborted");
        }
    }
}

}  // namespace

void sgd_step(ParamMap& params, double lr) {
    check_grads_finite(params);
    for (auto& [name, node] : params) {
        if (!node->grad_materialized()) {
            continue;
        }
        for (size_t i = 0; i < node->value.numel(); ++i) {
            node->value.at(i) -= lr * node->grad.at(i);
        }
    }
    zero_grads(params);
}

void adam_step(ParamMap& params, AdamState& state, double lr, const AdamConfig& cfg) {
    check_grads_finite(params);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (auto& [name, node] : params) {
        if (!node->grad_materialized()) {
            continue;
        }
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor::zeros(node->value.shape())).first;
            state.v.emplace(name, Tensor::zeros(node->value.shape()));
        }
        Tensor& m = mit->second;
        Tensor& v = state.v.at(name);
        for (size_t i = 0; i < node->value.numel(); ++i) {
            const double g = node->grad.at(i);
            m.at(i) = cfg.beta1 * m.at(i) + (1.0 - cfg.beta1) * g;
            v.at(i) = cfg.beta2 * v.at(i) + (1.0 - cfg.beta2) * g * g;
            const double mhat = m.at(i) / bc1;
            const double vhat = v.at(i) / bc2;
            node->value.at(i) -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
    zero_grads(params);
}

void zero_grads(ParamMap& params) {
    for (auto& [name, node] : params) {
        node->grad = Tensor();
    }
}

}  // namespace poac
