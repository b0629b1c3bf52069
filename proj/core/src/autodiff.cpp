#include "poac/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace poac::ad {

namespace {

// ----------------------------- raw kernels -----------------------------

// C[m,n] += or = A[m,k] * B[k,n], ikj order.
void mm_nn(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[m,k] = A[m,n] * B[k,n]^T
void mm_nt(const double* a, const double* b, double* c, size_t m, size_t n, size_t k) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (size_t j = 0; j < k; ++j) {
            const double* brow = b + j * n;
            double s = 0.0;
            for (size_t p = 0; p < n; ++p) {
                s += arow[p] * brow[p];
            }
            c[i * k + j] = s;
        }
    }
}

// C[k,n] = A[m,k]^T * B[m,n]
void mm_tn(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    std::fill(c, c + k * n, 0.0);
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* crow = c + p * n;
            for (size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void add_into(AdjointMap& adj, const Node* n, const Tensor& t) {
    auto it = adj.find(n);
    if (it == adj.end()) {
        adj.emplace(n, t);
        return;
    }
    std::vector<double>& dst = it->second.data();
    const std::vector<double>& src = t.data();
    for (size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

NodePtr make_node(Tensor v, std::string op, std::vector<NodePtr> parents,
                  std::function<void(const Node&, const Tensor&, AdjointMap&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->op = std::move(op);
    n->parents = std::move(parents);
    for (const NodePtr& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
        }
    }
    if (n->requires_grad) {
        n->backprop = std::move(backprop);
    }
    return n;
}

NodePtr make_unary(const NodePtr& x, const std::string& op,
                   const std::function<double(double)>& f,
                   // dx_i given (x_i, y_i, adj_i)
                   const std::function<double(double, double, double)>& df) {
    std::vector<double> out(x->value.numel());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = f(x->value.at(i));
    }
    return make_node(
        Tensor(x->value.shape(), std::move(out)), op, {x},
        [df](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
            const Node* p = self.parents[0].get();
            Tensor g = Tensor::zeros(p->value.shape());
            for (size_t i = 0; i < g.numel(); ++i) {
                g.at(i) = df(p->value.at(i), self.value.at(i), adj.at(i));
            }
            add_into(out_adj, p, g);
        });
}

enum class Broadcast { kSame, kScalarA, kScalarB, kRowA, kRowB };

Broadcast classify_broadcast(const Tensor& a, const Tensor& b, const char* op) {
    if (a.same_shape(b)) {
        return Broadcast::kSame;
    }
    if (a.is_scalar()) {
        return Broadcast::kScalarA;
    }
    if (b.is_scalar()) {
        return Broadcast::kScalarB;
    }
    if (a.rank() == 2 && b.rank() == 1 && a.shape()[1] == b.shape()[0]) {
        return Broadcast::kRowB;
    }
    if (b.rank() == 2 && a.rank() == 1 && b.shape()[1] == a.shape()[0]) {
        return Broadcast::kRowA;
    }
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
}

Tensor reduce_like_row(const Tensor& adj, size_t cols) {
    Tensor g = Tensor::zeros({cols});
    const size_t rows = adj.numel() / cols;
    for (size_t i = 0; i < rows; ++i) {
        for (size_t j = 0; j < cols; ++j) {
            g.at(j) += adj.at(i * cols + j);
        }
    }
    return g;
}

Tensor reduce_to_scalar(const Tensor& adj, const std::vector<size_t>& scalar_shape) {
    double s = 0.0;
    for (size_t i = 0; i < adj.numel(); ++i) {
        s += adj.at(i);
    }
    return Tensor(scalar_shape, {s});
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor& Node::materialized_grad() {
    if (!grad_materialized()) {
        grad = Tensor::zeros(value.shape());
    }
    return grad;
}

NodePtr leaf(Tensor v, std::string name, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->op = "leaf";
    n->name = std::move(name);
    n->requires_grad = requires_grad;
    return n;
}

NodePtr constant(Tensor v) { return leaf(std::move(v), "", false); }

NodePtr add(const NodePtr& a, const NodePtr& b) {
    const Broadcast bc = classify_broadcast(a->value, b->value, "add");
    Tensor out = Tensor::zeros(bc == Broadcast::kScalarA || bc == Broadcast::kRowA
                                   ? b->value.shape()
                                   : a->value.shape());
    const Tensor& big = (bc == Broadcast::kScalarA || bc == Broadcast::kRowA) ? b->value : a->value;
    const Tensor& small = (bc == Broadcast::kScalarA || bc == Broadcast::kRowA) ? a->value : b->value;
    switch (bc) {
        case Broadcast::kSame:
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = a->value.at(i) + b->value.at(i);
            }
            break;
        case Broadcast::kScalarA:
        case Broadcast::kScalarB: {
            const double s = small.at(0);
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = big.at(i) + s;
            }
            break;
        }
        case Broadcast::kRowA:
        case Broadcast::kRowB: {
            const size_t cols = small.numel();
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = big.at(i) + small.at(i % cols);
            }
            break;
        }
    }
    return make_node(std::move(out), "add", {a, b},
                     [](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* pa = self.parents[0].get();
                         const Node* pb = self.parents[1].get();
                         auto reduce = [&](const Node* p) {
                             if (p->value.same_shape(self.value)) {
                                 return adj;
                             }
                             if (p->value.is_scalar()) {
                                 return reduce_to_scalar(adj, p->value.shape());
                             }
                             return reduce_like_row(adj, p->value.numel());
                         };
                         if (pa->requires_grad) {
                             add_into(out_adj, pa, reduce(pa));
                         }
                         if (pb->requires_grad) {
                             add_into(out_adj, pb, reduce(pb));
                         }
                     });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    const Broadcast bc = classify_broadcast(a->value, b->value, "sub");
    Tensor out = Tensor::zeros(bc == Broadcast::kScalarA || bc == Broadcast::kRowA
                                   ? b->value.shape()
                                   : a->value.shape());
    switch (bc) {
        case Broadcast::kSame:
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = a->value.at(i) - b->value.at(i);
            }
            break;
        case Broadcast::kScalarA: {
            const double s = a->value.at(0);
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = s - b->value.at(i);
            }
            break;
        }
        case Broadcast::kScalarB: {
            const double s = b->value.at(0);
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = a->value.at(i) - s;
            }
            break;
        }
        case Broadcast::kRowA: {
            const size_t cols = a->value.numel();
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = a->value.at(i % cols) - b->value.at(i);
            }
            break;
        }
        case Broadcast::kRowB: {
            const size_t cols = b->value.numel();
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = a->value.at(i) - b->value.at(i % cols);
            }
            break;
        }
    }
    return make_node(std::move(out), "sub", {a, b},
                     [](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* pa = self.parents[0].get();
                         const Node* pb = self.parents[1].get();
                         auto reduce = [&](const Node* p) {
                             if (p->value.same_shape(self.value)) {
                                 return adj;
                             }
                             if (p->value.is_scalar()) {
                                 return reduce_to_scalar(adj, p->value.shape());
                             }
                             return reduce_like_row(adj, p->value.numel());
                         };
                         if (pa->requires_grad) {
                             add_into(out_adj, pa, reduce(pa));
                         }
                         if (pb->requires_grad) {
                             Tensor g = reduce(pb);
                             for (size_t i = 0; i < g.numel(); ++i) {
                                 g.at(i) = -g.at(i);
                             }
                             add_into(out_adj, pb, g);
                         }
                     });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    const Broadcast bc = classify_broadcast(a->value, b->value, "mul");
    if (bc == Broadcast::kRowA || bc == Broadcast::kRowB) {
        throw ShapeError("mul: row-vector broadcasting not supported, shapes " +
                         a->value.shape_str() + " and " + b->value.shape_str());
    }
    const bool a_scalar = bc == Broadcast::kScalarA && !a->value.same_shape(b->value);
    const Tensor& big = a_scalar ? b->value : a->value;
    const Tensor& small = a_scalar ? a->value : b->value;
    Tensor out = Tensor::zeros(big.shape());
    if (bc == Broadcast::kSame) {
        for (size_t i = 0; i < out.numel(); ++i) {
            out.at(i) = a->value.at(i) * b->value.at(i);
        }
    } else {
        const double s = small.at(0);
        for (size_t i = 0; i < out.numel(); ++i) {
            out.at(i) = big.at(i) * s;
        }
    }
    return make_node(std::move(out), "mul", {a, b},
                     [](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* pa = self.parents[0].get();
                         const Node* pb = self.parents[1].get();
                         auto grad_for = [&](const Node* target, const Node* other) {
                             if (target->value.same_shape(self.value)) {
                                 Tensor g = Tensor::zeros(target->value.shape());
                                 if (other->value.is_scalar() &&
                                     !other->value.same_shape(self.value)) {
                                     const double s = other->value.at(0);
                                     for (size_t i = 0; i < g.numel(); ++i) {
                                         g.at(i) = adj.at(i) * s;
                                     }
                                 } else {
                                     for (size_t i = 0; i < g.numel(); ++i) {
                                         g.at(i) = adj.at(i) * other->value.at(i);
                                     }
                                 }
                                 return g;
                             }
                             // target is the scalar side
                             double s = 0.0;
                             for (size_t i = 0; i < adj.numel(); ++i) {
                                 s += adj.at(i) * other->value.at(i);
                             }
                             return Tensor(target->value.shape(), {s});
                         };
                         if (pa->requires_grad) {
                             add_into(out_adj, pa, grad_for(pa, pb));
                         }
                         if (pb->requires_grad) {
                             add_into(out_adj, pb, grad_for(pb, pa));
                         }
                     });
}

namespace {

struct MatDims {
    size_t m, k, n;
    bool a_vec, b_vec;
};

MatDims matmul_dims(const Tensor& a, const Tensor& b) {
    MatDims d{};
    d.a_vec = a.rank() == 1;
    d.b_vec = b.rank() == 1;
    if (a.rank() > 2 || b.rank() > 2 || a.rank() == 0 || b.rank() == 0) {
        throw ShapeError("matmul: ranks must be 1 or 2, got " + a.shape_str() + " and " +
                         b.shape_str());
    }
    d.m = d.a_vec ? 1 : a.shape()[0];
    d.k = d.a_vec ? a.shape()[0] : a.shape()[1];
    const size_t bk = d.b_vec ? b.shape()[0] : b.shape()[0];
    d.n = d.b_vec ? 1 : b.shape()[1];
    if (d.k != bk) {
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " +
                         b.shape_str());
    }
    return d;
}

}  // namespace

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    const MatDims d = matmul_dims(a->value, b->value);
    std::vector<double> out(d.m * d.n);
    mm_nn(a->value.data().data(), b->value.data().data(), out.data(), d.m, d.k, d.n);
    std::vector<size_t> out_shape;
    if (!d.a_vec) {
        out_shape.push_back(d.m);
    }
    if (!d.b_vec) {
        out_shape.push_back(d.n);
    }
    return make_node(
        Tensor(std::move(out_shape), std::move(out)), "matmul", {a, b},
        [d](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
            const Node* pa = self.parents[0].get();
            const Node* pb = self.parents[1].get();
            if (pa->requires_grad) {
                // dA = adj * B^T, shapes [m,n]x[k,n]^T -> [m,k]
                Tensor g = Tensor::zeros(pa->value.shape());
                mm_nt(adj.data().data(), pb->value.data().data(), g.data().data(), d.m, d.n, d.k);
                add_into(out_adj, pa, g);
            }
            if (pb->requires_grad) {
                // dB = A^T * adj, shapes [m,k]^T x [m,n] -> [k,n]
                Tensor g = Tensor::zeros(pb->value.shape());
                mm_tn(pa->value.data().data(), adj.data().data(), g.data().data(), d.m, d.k, d.n);
                add_into(out_adj, pb, g);
            }
        });
}

NodePtr sum(const NodePtr& x) {
    double s = 0.0;
    for (size_t i = 0; i < x->value.numel(); ++i) {
        s += x->value.at(i);
    }
    return make_node(Tensor::scalar(s), "sum", {x},
                     [](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         add_into(out_adj, p, Tensor::full(p->value.shape(), adj.at(0)));
                     });
}

NodePtr mean(const NodePtr& x) {
    if (x->value.numel() == 0) {
        throw ShapeError("mean of empty tensor");
    }
    double s = 0.0;
    for (size_t i = 0; i < x->value.numel(); ++i) {
        s += x->value.at(i);
    }
    const double inv_n = 1.0 / static_cast<double>(x->value.numel());
    return make_node(Tensor::scalar(s * inv_n), "mean", {x},
                     [inv_n](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         add_into(out_adj, p, Tensor::full(p->value.shape(), adj.at(0) * inv_n));
                     });
}

NodePtr scale(const NodePtr& x, double c) {
    Tensor out = Tensor::zeros(x->value.shape());
    for (size_t i = 0; i < out.numel(); ++i) {
        out.at(i) = x->value.at(i) * c;
    }
    return make_node(std::move(out), "scale", {x},
                     [c](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         Tensor g = Tensor::zeros(p->value.shape());
                         for (size_t i = 0; i < g.numel(); ++i) {
                             g.at(i) = adj.at(i) * c;
                         }
                         add_into(out_adj, p, g);
                     });
}

NodePtr tanh(const NodePtr& x) {
    return make_unary(
        x, "tanh", [](double v) { return std::tanh(v); },
        [](double, double y, double a) { return a * (1.0 - y * y); });
}

NodePtr silu(const NodePtr& x) {
    return make_unary(
        x, "silu", [](double v) { return v * sigmoid(v); },
        [](double v, double, double a) {
            const double s = sigmoid(v);
            return a * (s + v * s * (1.0 - s));
        });
}

NodePtr exp(const NodePtr& x) {
    return make_unary(
        x, "exp", [](double v) { return std::exp(v); },
        [](double, double y, double a) { return a * y; });
}

NodePtr log(const NodePtr& x) {
    for (size_t i = 0; i < x->value.numel(); ++i) {
        if (x->value.at(i) <= 0.0) {
            throw DomainError("log of non-positive entry");
        }
    }
    return make_unary(
        x, "log", [](double v) { return std::log(v); },
        [](double v, double, double a) { return a / v; });
}

NodePtr square(const NodePtr& x) {
    return make_unary(
        x, "square", [](double v) { return v * v; },
        [](double v, double, double a) { return a * 2.0 * v; });
}

NodePtr softmax(const NodePtr& x) {
    if (x->value.rank() == 0 || x->value.rank() > 2) {
        throw ShapeError("softmax: rank must be 1 or 2, got " + x->value.shape_str());
    }
    const size_t cols = x->value.rank() == 1 ? x->value.shape()[0] : x->value.shape()[1];
    const size_t rows = x->value.numel() / cols;
    Tensor out = Tensor::zeros(x->value.shape());
    for (size_t r = 0; r < rows; ++r) {
        const size_t base = r * cols;
        double mx = x->value.at(base);
        for (size_t j = 1; j < cols; ++j) {
            mx = std::max(mx, x->value.at(base + j));
        }
        double z = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            const double e = std::exp(x->value.at(base + j) - mx);
            out.at(base + j) = e;
            z += e;
        }
        for (size_t j = 0; j < cols; ++j) {
            out.at(base + j) /= z;
        }
    }
    return make_node(std::move(out), "softmax", {x},
                     [rows, cols](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         Tensor g = Tensor::zeros(p->value.shape());
                         for (size_t r = 0; r < rows; ++r) {
                             const size_t base = r * cols;
                             double dot = 0.0;
                             for (size_t j = 0; j < cols; ++j) {
                                 dot += adj.at(base + j) * self.value.at(base + j);
                             }
                             for (size_t j = 0; j < cols; ++j) {
                                 g.at(base + j) =
                                     (adj.at(base + j) - dot) * self.value.at(base + j);
                             }
                         }
                         add_into(out_adj, p, g);
                     });
}

NodePtr gather(const NodePtr& table, const std::vector<int>& ids) {
    if (table->value.rank() != 2) {
        throw ShapeError("embedding-gather: table must be 2-D, got " + table->value.shape_str());
    }
    const size_t v = table->value.shape()[0];
    const size_t d = table->value.shape()[1];
    for (int id : ids) {
        if (id < 0 || static_cast<size_t>(id) >= v) {
            throw ShapeError("embedding-gather: index " + std::to_string(id) +
                             " out of range for table with " + std::to_string(v) + " rows");
        }
    }
    Tensor out = Tensor::zeros({ids.size(), d});
    for (size_t i = 0; i < ids.size(); ++i) {
        for (size_t j = 0; j < d; ++j) {
            out.at(i * d + j) = table->value.at(static_cast<size_t>(ids[i]) * d + j);
        }
    }
    return make_node(std::move(out), "embedding-gather", {table},
                     [ids, d](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         Tensor g = Tensor::zeros(p->value.shape());
                         for (size_t i = 0; i < ids.size(); ++i) {
                             for (size_t j = 0; j < d; ++j) {
                                 g.at(static_cast<size_t>(ids[i]) * d + j) += adj.at(i * d + j);
                             }
                         }
                         add_into(out_adj, p, g);
                         (void)self;
                     });
}

NodePtr concat(const std::vector<NodePtr>& xs) {
    if (xs.empty()) {
        throw ShapeError("concat of zero tensors");
    }
    const size_t rank = xs[0]->value.rank();
    if (rank != 1 && rank != 2) {
        throw ShapeError("concat: rank must be 1 or 2");
    }
    size_t total_cols = 0;
    const size_t rows = rank == 2 ? xs[0]->value.shape()[0] : 1;
    for (const NodePtr& x : xs) {
        if (x->value.rank() != rank || (rank == 2 && x->value.shape()[0] != rows)) {
            throw ShapeError("concat: mismatched shapes");
        }
        total_cols += rank == 2 ? x->value.shape()[1] : x->value.shape()[0];
    }
    std::vector<size_t> out_shape =
        rank == 2 ? std::vector<size_t>{rows, total_cols} : std::vector<size_t>{total_cols};
    Tensor out = Tensor::zeros(out_shape);
    std::vector<size_t> offsets(xs.size());
    size_t off = 0;
    for (size_t s = 0; s < xs.size(); ++s) {
        offsets[s] = off;
        const size_t c = rank == 2 ? xs[s]->value.shape()[1] : xs[s]->value.shape()[0];
        for (size_t r = 0; r < rows; ++r) {
            for (size_t j = 0; j < c; ++j) {
                out.at(r * total_cols + off + j) = xs[s]->value.at(r * c + j);
            }
        }
        off += c;
    }
    std::vector<NodePtr> parents = xs;
    return make_node(std::move(out), "concat", std::move(parents),
                     [offsets, total_cols, rows, rank](const Node& self, const Tensor& adj,
                                                       AdjointMap& out_adj) {
                         for (size_t s = 0; s < self.parents.size(); ++s) {
                             const Node* p = self.parents[s].get();
                             if (!p->requires_grad) {
                                 continue;
                             }
                             const size_t c =
                                 rank == 2 ? p->value.shape()[1] : p->value.shape()[0];
                             Tensor g = Tensor::zeros(p->value.shape());
                             for (size_t r = 0; r < rows; ++r) {
                                 for (size_t j = 0; j < c; ++j) {
                                     g.at(r * c + j) = adj.at(r * total_cols + offsets[s] + j);
                                 }
                             }
                             add_into(out_adj, p, g);
                         }
                     });
}

NodePtr l2_normalize(const NodePtr& x) {
    if (x->value.rank() != 1) {
        throw ShapeError("l2-normalize: expected 1-D vector, got " + x->value.shape_str());
    }
    const double r = x->value.l2_norm();
    if (r < 1e-12) {
        throw DomainError("l2-normalize of vector with norm < 1e-12");
    }
    Tensor out = Tensor::zeros(x->value.shape());
    for (size_t i = 0; i < out.numel(); ++i) {
        out.at(i) = x->value.at(i) / r;
    }
    return make_node(std::move(out), "l2-normalize", {x},
                     [r](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         double dot = 0.0;
                         for (size_t i = 0; i < adj.numel(); ++i) {
                             dot += adj.at(i) * self.value.at(i);
                         }
                         Tensor g = Tensor::zeros(p->value.shape());
                         for (size_t i = 0; i < g.numel(); ++i) {
                             g.at(i) = (adj.at(i) - self.value.at(i) * dot) / r;
                         }
                         add_into(out_adj, p, g);
                     });
}

NodePtr cosine(const NodePtr& a, const NodePtr& b) {
    if (a->value.rank() != 1 || !a->value.same_shape(b->value)) {
        throw ShapeError("cosine: expected matching 1-D vectors, got " + a->value.shape_str() +
                         " and " + b->value.shape_str());
    }
    const double ra = a->value.l2_norm();
    const double rb = b->value.l2_norm();
    if (ra < 1e-12 || rb < 1e-12) {
        throw DomainError("cosine of vector with norm < 1e-12");
    }
    double dot = 0.0;
    for (size_t i = 0; i < a->value.numel(); ++i) {
        dot += a->value.at(i) * b->value.at(i);
    }
    const double c = dot / (ra * rb);
    return make_node(Tensor::scalar(c), "cosine", {a, b},
                     [ra, rb, c](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* pa = self.parents[0].get();
                         const Node* pb = self.parents[1].get();
                         const double s = adj.at(0);
                         if (pa->requires_grad) {
                             Tensor g = Tensor::zeros(pa->value.shape());
                             for (size_t i = 0; i < g.numel(); ++i) {
                                 g.at(i) = s * (pb->value.at(i) / (ra * rb) -
                                                c * pa->value.at(i) / (ra * ra));
                             }
                             add_into(out_adj, pa, g);
                         }
                         if (pb->requires_grad) {
                             Tensor g = Tensor::zeros(pb->value.shape());
                             for (size_t i = 0; i < g.numel(); ++i) {
                                 g.at(i) = s * (pa->value.at(i) / (ra * rb) -
                                                c * pb->value.at(i) / (rb * rb));
                             }
                             add_into(out_adj, pb, g);
                         }
                     });
}

NodePtr transpose(const NodePtr& x) {
    if (x->value.rank() != 2) {
        throw ShapeError("transpose: expected 2-D tensor, got " + x->value.shape_str());
    }
    const size_t r = x->value.shape()[0];
    const size_t c = x->value.shape()[1];
    Tensor out = Tensor::zeros({c, r});
    for (size_t i = 0; i < r; ++i) {
        for (size_t j = 0; j < c; ++j) {
            out.at(j * r + i) = x->value.at(i * c + j);
        }
    }
    return make_node(std::move(out), "transpose", {x},
                     [r, c](const Node& self, const Tensor& adj, AdjointMap& out_adj) {
                         const Node* p = self.parents[0].get();
                         Tensor g = Tensor::zeros(p->value.shape());
                         for (size_t i = 0; i < r; ++i) {
                             for (size_t j = 0; j < c; ++j) {
                                 g.at(i * c + j) = adj.at(j * r + i);
                             }
                         }
                         add_into(out_adj, p, g);
                         (void)self;
                     });
}

NodePtr forward_op(const std::string& op, const std::vector<NodePtr>& inputs,
                   const OpExtras& extras) {
    auto need = [&](size_t n) {
        if (inputs.size() != n) {
            throw ShapeError("forward_op(" + op + "): expected " + std::to_string(n) +
                             " inputs, got " + std::to_string(inputs.size()));
        }
    };
    if (op == "add") {
        need(2);
        return add(inputs[0], inputs[1]);
    }
    if (op == "sub") {
        need(2);
        return sub(inputs[0], inputs[1]);
    }
    if (op == "mul") {
        need(2);
        return mul(inputs[0], inputs[1]);
    }
    if (op == "matmul") {
        need(2);
        return matmul(inputs[0], inputs[1]);
    }
    if (op == "sum") {
        need(1);
        return sum(inputs[0]);
    }
    if (op == "mean") {
        need(1);
        return mean(inputs[0]);
    }
    if (op == "scale") {
        need(1);
        return scale(inputs[0], extras.scalar);
    }
    if (op == "tanh") {
        need(1);
        return tanh(inputs[0]);
    }
    if (op == "silu") {
        need(1);
        return silu(inputs[0]);
    }
    if (op == "exp") {
        need(1);
        return exp(inputs[0]);
    }
    if (op == "log") {
        need(1);
        return log(inputs[0]);
    }
    if (op == "softmax") {
        need(1);
        return softmax(inputs[0]);
    }
    if (op == "embedding-gather") {
        need(1);
        return gather(inputs[0], extras.indices);
    }
    if (op == "concat") {
        return concat(inputs);
    }
    if (op == "l2-normalize") {
        need(1);
        return l2_normalize(inputs[0]);
    }
    if (op == "cosine") {
        need(2);
        return cosine(inputs[0], inputs[1]);
    }
    if (op == "square") {
        need(1);
        return square(inputs[0]);
    }
    if (op == "transpose") {
        need(1);
        return transpose(inputs[0]);
    }
    throw ShapeError("forward_op: unknown primitive '" + op + "'");
}

std::vector<Node*> topo_order(const NodePtr& root) {
    std::vector<Node*> order;
    std::unordered_set<const Node*> visited;
    // Iterative post-order DFS; parents land before the nodes that use them.
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

std::map<std::string, Tensor> backward(const NodePtr& root) {
    if (!root->value.is_scalar()) {
        throw ShapeError("backward: root must be scalar, got shape " + root->value.shape_str());
    }
    const std::vector<Node*> order = topo_order(root);
    AdjointMap adj;
    adj.emplace(root.get(), Tensor(root->value.shape(), {1.0}));
    // Reverse dependency order: every consumer fires before its inputs.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        auto a = adj.find(node);
        if (a == adj.end() || !node->backprop) {
            continue;
        }
        node->backprop(*node, a->second, adj);
    }
    std::map<std::string, Tensor> named;
    for (Node* node : order) {
        if (!node->requires_grad) {
            continue;
        }
        auto a = adj.find(node);
        if (a == adj.end()) {
            continue;
        }
        Tensor& g = node->materialized_grad();
        for (size_t i = 0; i < g.numel(); ++i) {
            g.at(i) += a->second.at(i);
        }
        if (!node->name.empty() && node->op == "leaf") {
            named.insert_or_assign(node->name, g);
        }
    }
    return named;
}

void zero_grad(const NodePtr& root) {
    for (Node* node : topo_order(root)) {
        node->grad = Tensor();
    }
}

}  // namespace poac::ad
