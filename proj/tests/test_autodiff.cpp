#include <doctest.h>

#include <cmath>

#include <poac/autodiff.hpp>
#include <poac/optim.hpp>

#include "gradcheck.hpp"

using namespace poac;

TEST_CASE("mul of two scalars") {
    auto a = ad::leaf(Tensor::scalar(3.0), "a");
    auto out = ad::mul(a, a);
    CHECK(out->value.scalar_value() == 9.0);
}

TEST_CASE("softmax of [0,0] is uniform") {
    auto x = ad::constant(Tensor::row({0.0, 0.0}));
    auto y = ad::softmax(x);
    CHECK(y->value.at(0) == 0.5);
    CHECK(y->value.at(1) == 0.5);
}

TEST_CASE("matmul matches the naive triple-loop oracle") {
    Rng rng(11);
    Tensor a = Tensor::randn({2, 3}, rng);
    Tensor b = Tensor::randn({3, 4}, rng);
    auto out = ad::matmul(ad::constant(a), ad::constant(b));
    REQUIRE(out->value.shape() == std::vector<size_t>{2, 4});
    for (size_t i = 0; i < 2; ++i) {
        for (size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (size_t p = 0; p < 3; ++p) {
                s += a.at2(i, p) * b.at2(p, j);
            }
            CHECK(out->value.at2(i, j) == s);
        }
    }
}

TEST_CASE("forward softmax and l2-normalize match naive references exactly") {
    Rng rng(23);
    Tensor x = Tensor::randn({7}, rng, 3.0);
    auto sm = ad::softmax(ad::constant(x));
    double mx = x.at(0);
    for (size_t i = 1; i < 7; ++i) {
        mx = std::max(mx, x.at(i));
    }
    double z = 0.0;
    std::vector<double> e(7);
    for (size_t i = 0; i < 7; ++i) {
        e[i] = std::exp(x.at(i) - mx);
        z += e[i];
    }
    for (size_t i = 0; i < 7; ++i) {
        CHECK(sm->value.at(i) == e[i] / z);
    }

    Tensor v = Tensor::randn({5}, rng, 2.0);
    auto nv = ad::l2_normalize(ad::constant(v));
    double r = 0.0;
    for (size_t i = 0; i < 5; ++i) {
        r += v.at(i) * v.at(i);
    }
    r = std::sqrt(r);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(nv->value.at(i) == v.at(i) / r);
    }
}

TEST_CASE("backward of x*x at x=3 gives 6") {
    auto x = ad::leaf(Tensor::scalar(3.0), "x");
    auto grads = ad::backward(ad::mul(x, x));
    CHECK(grads.at("x").scalar_value() == 6.0);
}

TEST_CASE("sum of softmax has (numerically) zero gradient") {
    Rng rng(5);
    auto v = ad::leaf(Tensor::randn({6}, rng), "v");
    auto root = ad::sum(ad::softmax(v));
    auto grads = ad::backward(root);
    for (size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(grads.at("v").at(i)) < 1e-15);
    }
}

TEST_CASE("cosine(a, W b) gradient matches finite differences") {
    Rng rng(42);
    ParamMap params{{"W", ad::leaf(Tensor::randn({4, 3}, rng), "W")}};
    const Tensor a = Tensor::randn({4}, rng);
    const Tensor b = Tensor::randn({3}, rng);
    auto build = [&]() {
        return ad::cosine(ad::constant(a), ad::matmul(params.at("W"), ad::constant(b)));
    };
    CHECK(testutil::max_grad_rel_error(build, params) < 1e-4);
}

TEST_CASE("every primitive passes the finite-difference oracle") {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        for (const auto& c : testutil::primitive_gradchecks(seed)) {
            INFO(c.name << " seed " << seed);
            CHECK(c.max_rel_err < 1e-4);
        }
    }
}

TEST_CASE("backward twice with reset in between is bitwise identical") {
    Rng rng(9);
    auto w = ad::leaf(Tensor::randn({3, 3}, rng), "w");
    auto x = ad::constant(Tensor::randn({3}, rng));
    auto build = [&]() { return ad::sum(ad::tanh(ad::matmul(w, x))); };
    auto root = build();
    ad::backward(root);
    const Tensor first = w->grad;
    ad::zero_grad(root);
    ad::backward(root);
    for (size_t i = 0; i < first.numel(); ++i) {
        CHECK(w->grad.at(i) == first.at(i));
    }
}

TEST_CASE("backward without reset accumulates") {
    auto x = ad::leaf(Tensor::scalar(3.0), "x");
    auto root = ad::mul(x, x);
    ad::backward(root);
    ad::backward(root);
    CHECK(x->grad.scalar_value() == 12.0);
}

TEST_CASE("non-scalar backward root is a ShapeError") {
    auto x = ad::leaf(Tensor::row({1.0, 2.0}), "x");
    CHECK_THROWS_AS(ad::backward(ad::square(x)), ShapeError);
}

TEST_CASE("shape and domain errors") {
    auto a = ad::constant(Tensor::row({1.0, 2.0}));
    auto b = ad::constant(Tensor::row({1.0, 2.0, 3.0}));
    CHECK_THROWS_AS(ad::add(a, b), ShapeError);
    CHECK_THROWS_AS(ad::matmul(a, b), ShapeError);
    CHECK_THROWS_AS(ad::log(ad::constant(Tensor::row({1.0, -1.0}))), DomainError);
    CHECK_THROWS_AS(ad::l2_normalize(ad::constant(Tensor::row({0.0, 0.0}))), DomainError);
    CHECK_THROWS_AS(ad::cosine(a, ad::constant(Tensor::row({0.0, 0.0}))), DomainError);
}

TEST_CASE("tensor construction rejects non-finite entries") {
    CHECK_THROWS_AS(Tensor({2}, {1.0, std::nan("")}), NumericError);
    CHECK_THROWS_AS(Tensor({1}, {INFINITY}), NumericError);
}

TEST_CASE("forward_op dispatches by name") {
    auto a = ad::constant(Tensor::scalar(2.0));
    auto b = ad::constant(Tensor::scalar(5.0));
    CHECK(ad::forward_op("add", {a, b})->value.scalar_value() == 7.0);
    CHECK(ad::forward_op("scale", {a}, {.scalar = 3.0})->value.scalar_value() == 6.0);
    auto table = ad::constant(Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
    auto g = ad::forward_op("embedding-gather", {table}, {.indices = {1}});
    CHECK(g->value.at(0) == 3.0);
    CHECK_THROWS_AS(ad::forward_op("conv2d", {a}), ShapeError);
}

TEST_CASE("sgd_step applies p -= lr*grad and zeroes gradients") {
    ParamMap params{{"p", ad::leaf(Tensor::scalar(1.0), "p")}};
    params.at("p")->materialized_grad().at(0) = 2.0;
    sgd_step(params, 0.1);
    CHECK(params.at("p")->value.scalar_value() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(!params.at("p")->grad_materialized());
}

TEST_CASE("sgd_step with lr=0 leaves parameters unchanged") {
    ParamMap params{{"p", ad::leaf(Tensor::scalar(1.5), "p")}};
    params.at("p")->materialized_grad().at(0) = 7.0;
    sgd_step(params, 0.0);
    CHECK(params.at("p")->value.scalar_value() == 1.5);
}

TEST_CASE("sgd on (p-5)^2 converges geometrically") {
    ParamMap params{{"p", ad::leaf(Tensor::scalar(0.0), "p")}};
    for (int i = 0; i < 100; ++i) {
        auto diff = ad::sub(params.at("p"), ad::constant(Tensor::scalar(5.0)));
        ad::backward(ad::square(diff));
        sgd_step(params, 0.1);
    }
    CHECK(std::abs(params.at("p")->value.scalar_value() - 5.0) < 1e-6);
}

TEST_CASE("sgd_step aborts atomically on non-finite gradients") {
    ParamMap params{{"a", ad::leaf(Tensor::scalar(1.0), "a")},
                    {"b", ad::leaf(Tensor::scalar(2.0), "b")}};
    params.at("a")->materialized_grad().at(0) = 1.0;
    params.at("b")->materialized_grad().at(0) = std::nan("");
    CHECK_THROWS_AS(sgd_step(params, 0.1), NumericError);
    CHECK(params.at("a")->value.scalar_value() == 1.0);
    CHECK(params.at("b")->value.scalar_value() == 2.0);
}

TEST_CASE("adam_step drives a quadratic toward its minimum") {
    ParamMap params{{"p", ad::leaf(Tensor::scalar(0.0), "p")}};
    AdamState state;
    for (int i = 0; i < 500; ++i) {
        auto diff = ad::sub(params.at("p"), ad::constant(Tensor::scalar(5.0)));
        ad::backward(ad::square(diff));
        adam_step(params, state, 0.05);
    }
    CHECK(std::abs(params.at("p")->value.scalar_value() - 5.0) < 1e-3);
}
