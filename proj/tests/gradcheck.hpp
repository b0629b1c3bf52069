#pragma once

// Finite-difference oracles shared by the unit tests and the acceptance
// suite. Everything here is independent of the reverse-mode implementation:
// gradients are approximated by central differences on the forward values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <poac/autodiff.hpp>
#include <poac/optim.hpp>
#include <poac/rng.hpp>

namespace testutil {

// |a-b| / max(1, |a|, |b|): relative error with an absolute floor so that
// near-zero gradients compare sanely.
inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Max relative error between reverse-mode gradients and central finite
// differences (step h) over every entry of every parameter. `build` must
// construct a scalar graph from the current values of the leaves in
// `params`.
inline double max_grad_rel_error(const std::function<poac::ad::NodePtr()>& build,
                                 poac::ParamMap& params, double h = 1e-5) {
    using poac::Tensor;
    poac::zero_grads(params);
    poac::ad::NodePtr root = build();
    poac::ad::backward(root);
    double max_err = 0.0;
    for (auto& [name, p] : params) {
        const Tensor analytic =
            p->grad_materialized() ? p->grad : Tensor::zeros(p->value.shape());
        for (size_t i = 0; i < p->value.numel(); ++i) {
            const double orig = p->value.at(i);
            p->value.at(i) = orig + h;
            const double fp = build()->value.scalar_value();
            p->value.at(i) = orig - h;
            const double fm = build()->value.scalar_value();
            p->value.at(i) = orig;
            const double fd = (fp - fm) / (2.0 * h);
            max_err = std::max(max_err, rel_error(analytic.at(i), fd));
        }
    }
    poac::zero_grads(params);
    return max_err;
}

struct PrimitiveCheck {
    std::string name;
    double max_rel_err;
};

// Gradient-checks every autodiff primitive on random inputs for one seed.
// Non-scalar outputs are scalarized against a fixed random probe tensor so
// the full Jacobian is exercised.
inline std::vector<PrimitiveCheck> primitive_gradchecks(uint64_t seed) {
    using namespace poac;
    using ad::NodePtr;
    Rng rng(seed);

    auto randt = [&rng](std::vector<size_t> shape) {
        return Tensor::randn(std::move(shape), rng);
    };
    auto post = [&rng](std::vector<size_t> shape) {
        Tensor t = Tensor::randn(std::move(shape), rng);
        for (size_t i = 0; i < t.numel(); ++i) {
            t.at(i) = std::abs(t.at(i)) + 0.5;
        }
        return t;
    };
    std::vector<PrimitiveCheck> results;
    auto check = [&](const std::string& name, ParamMap params,
                     const std::function<NodePtr(ParamMap&)>& make_out) {
        // The probe tensor must be identical across rebuilds; draw it once.
        NodePtr first = make_out(params);
        Tensor probe = first->value.is_scalar() ? Tensor() : Tensor::randn(first->value.shape(), rng);
        auto frozen_build = [&params, &make_out, probe]() {
            NodePtr out = make_out(params);
            if (out->value.is_scalar()) {
                return out;
            }
            return ad::sum(ad::mul(out, ad::constant(probe)));
        };
        const double err = max_grad_rel_error(frozen_build, params);
        results.push_back({name, err});
    };

    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({2, 3}), "b")}};
        check("add", p, [](ParamMap& m) { return ad::add(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({3}), "b")}};
        check("add(row-bias)", p, [](ParamMap& m) { return ad::add(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({}), "b")}};
        check("add(scalar)", p, [](ParamMap& m) { return ad::add(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({2, 3}), "b")}};
        check("sub", p, [](ParamMap& m) { return ad::sub(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({}), "a")}, {"b", ad::leaf(randt({2, 3}), "b")}};
        check("sub(scalar)", p, [](ParamMap& m) { return ad::sub(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({2, 3}), "b")}};
        check("mul", p, [](ParamMap& m) { return ad::mul(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({}), "b")}};
        check("mul(scalar)", p, [](ParamMap& m) { return ad::mul(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({3, 4}), "b")}};
        check("matmul", p, [](ParamMap& m) { return ad::matmul(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({3}), "a")}, {"b", ad::leaf(randt({3, 4}), "b")}};
        check("matmul(vec,mat)", p, [](ParamMap& m) { return ad::matmul(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 3}), "a")}, {"b", ad::leaf(randt({3}), "b")}};
        check("matmul(mat,vec)", p, [](ParamMap& m) { return ad::matmul(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("sum", p, [](ParamMap& m) { return ad::sum(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({5}), "x")}};
        check("mean", p, [](ParamMap& m) { return ad::mean(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("scale", p, [](ParamMap& m) { return ad::scale(m.at("x"), 0.7); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("tanh", p, [](ParamMap& m) { return ad::tanh(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("silu", p, [](ParamMap& m) { return ad::silu(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("exp", p, [](ParamMap& m) { return ad::exp(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(post({2, 3}), "x")}};
        check("log", p, [](ParamMap& m) { return ad::log(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({5}), "x")}};
        check("softmax(1d)", p, [](ParamMap& m) { return ad::softmax(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({3, 4}), "x")}};
        check("softmax(2d)", p, [](ParamMap& m) { return ad::softmax(m.at("x")); });
    }
    {
        ParamMap p{{"t", ad::leaf(randt({6, 4}), "t")}};
        check("embedding-gather", p, [](ParamMap& m) {
            return ad::gather(m.at("t"), {0, 3, 3, 5});
        });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({3}), "a")}, {"b", ad::leaf(randt({2}), "b")}};
        check("concat(1d)", p,
              [](ParamMap& m) { return ad::concat({m.at("a"), m.at("b")}); });
    }
    {
        ParamMap p{{"a", ad::leaf(randt({2, 2}), "a")}, {"b", ad::leaf(randt({2, 3}), "b")}};
        check("concat(2d)", p,
              [](ParamMap& m) { return ad::concat({m.at("a"), m.at("b")}); });
    }
    {
        Tensor v = randt({5});
        v.at(0) += 2.0;  // keep the norm away from zero under fd perturbation
        ParamMap p{{"x", ad::leaf(v, "x")}};
        check("l2-normalize", p, [](ParamMap& m) { return ad::l2_normalize(m.at("x")); });
    }
    {
        Tensor a = randt({4});
        Tensor b = randt({4});
        a.at(0) += 2.0;
        b.at(1) += 2.0;
        ParamMap p{{"a", ad::leaf(a, "a")}, {"b", ad::leaf(b, "b")}};
        check("cosine", p, [](ParamMap& m) { return ad::cosine(m.at("a"), m.at("b")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("square", p, [](ParamMap& m) { return ad::square(m.at("x")); });
    }
    {
        ParamMap p{{"x", ad::leaf(randt({2, 3}), "x")}};
        check("transpose", p, [](ParamMap& m) { return ad::transpose(m.at("x")); });
    }
    return results;
}

}  // namespace testutil
